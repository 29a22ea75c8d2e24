//! Dense real linear-algebra kernels.
//!
//! Conventions shared by every module of the crate:
//!
//! - Element order is row-major (see [`Matrix`]).
//! - Precision is a type parameter: `Matrix<f32>` or `Matrix<f64>`. Tolerances
//!   quoted for double precision are multiplied by [`Real::TOL_SCALE`]
//!   (`1e6` for `f32`) so that single precision runs can reproduce error
//!   accumulation without tripping the tight checks.
//! - Randomness comes from [`RngState`]: ChaCha20 seeded from a `u64`, with
//!   standard normals drawn in `f64` and rounded to the target precision, so a
//!   seed yields the same stream in both precisions up to that rounding.

mod expm;
mod lu;
mod matrix;
mod polar;
mod qr;
mod random;

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::Float;

pub use expm::{expm, expm_skew};
pub use lu::{det, inverse, solve, Lu};
pub use matrix::Matrix;
pub use polar::{polar_factor, polar_factor_newton};
pub use qr::qr_positive;
pub use random::RngState;

/// Floating point precision of a matrix or a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Precision {
    Fp32,
    Fp64,
}

impl Precision {
    pub fn as_str(self) -> &'static str {
        match self {
            Precision::Fp32 => "fp32",
            Precision::Fp64 => "fp64",
        }
    }
}

impl std::str::FromStr for Precision {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fp32" | "f32" => Ok(Precision::Fp32),
            "fp64" | "f64" => Ok(Precision::Fp64),
            other => Err(format!(
                "unknown precision `{other}` (expected fp32 or fp64)"
            )),
        }
    }
}

/// Scalar type of the kernels: `f32` or `f64`.
pub trait Real: Float + Debug + Display + LowerExp + Default + Sum + Send + Sync + 'static {
    const PRECISION: Precision;
    /// Multiplier applied to double-precision tolerances.
    const TOL_SCALE: f64;

    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;

    /// `c = alpha * a * b + beta * c` for an `m x k` by `k x n` product.
    /// `a` and `b` are given as (data, row stride, column stride); `c` is a
    /// contiguous row-major `m x n` buffer.
    #[allow(clippy::too_many_arguments)]
    fn gemm(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: (&[Self], isize, isize),
        b: (&[Self], isize, isize),
        beta: Self,
        c: &mut [Self],
    );

    /// A double-precision tolerance rescaled for this precision.
    fn tol(tol64: f64) -> Self {
        Self::from_f64(tol64 * Self::TOL_SCALE)
    }
}

macro_rules! impl_real {
    ($t:ty, $prec:expr, $scale:expr, $gemm:path) => {
        impl Real for $t {
            const PRECISION: Precision = $prec;
            const TOL_SCALE: f64 = $scale;

            #[inline]
            fn from_f64(v: f64) -> Self {
                v as $t
            }

            #[inline]
            fn to_f64(self) -> f64 {
                self as f64
            }

            fn gemm(
                m: usize,
                k: usize,
                n: usize,
                alpha: Self,
                a: (&[Self], isize, isize),
                b: (&[Self], isize, isize),
                beta: Self,
                c: &mut [Self],
            ) {
                assert!(c.len() >= m * n);
                if m == 0 || n == 0 {
                    return;
                }
                let max_index = |rows: usize, cols: usize, rs: isize, cs: isize| {
                    if rows == 0 || cols == 0 {
                        0
                    } else {
                        ((rows - 1) as isize * rs + (cols - 1) as isize * cs) as usize
                    }
                };
                assert!(k == 0 || a.0.len() > max_index(m, k, a.1, a.2));
                assert!(k == 0 || b.0.len() > max_index(k, n, b.1, b.2));
                // SAFETY: the asserts above bound every index reached through
                // the given strides, and `c` does not alias `a` or `b`.
                unsafe {
                    $gemm(
                        m,
                        k,
                        n,
                        alpha,
                        a.0.as_ptr(),
                        a.1,
                        a.2,
                        b.0.as_ptr(),
                        b.1,
                        b.2,
                        beta,
                        c.as_mut_ptr(),
                        n as isize,
                        1,
                    );
                }
            }
        }
    };
}

impl_real!(f32, Precision::Fp32, 1e6, matrixmultiply::sgemm);
impl_real!(f64, Precision::Fp64, 1.0, matrixmultiply::dgemm);
