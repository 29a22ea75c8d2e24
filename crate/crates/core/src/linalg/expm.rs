//! Matrix exponential by scaling and squaring with a degree-13 Padé
//! approximant.
//!
//! The input is scaled by `2^-s` with `s = max(0, ceil(log2(||A||_1 / θ13)))`,
//! `θ13 = 5.371920351148152`, the [13/13] approximant `(V - U)^-1 (V + U)` is
//! evaluated with six matrix products, and the result is squared `s` times.

use super::{solve, Matrix, Real};
use crate::error::{Error, Result};

const THETA_13: f64 = 5.371_920_351_148_152;

const PADE_13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

/// Exponential of a skew-symmetric matrix.
///
/// Rejects inputs with `||A + Aᵀ|| > 1e-10 ||A||` (scaled for precision).
pub fn expm_skew<T: Real>(a: &Matrix<T>) -> Result<Matrix<T>> {
    if !a.is_square() {
        return Err(Error::Shape(format!(
            "expm needs a square matrix, got {:?}",
            a.shape()
        )));
    }
    let asym = (a + &a.transpose()).norm();
    if asym > T::tol(1e-10) * a.norm() {
        return Err(Error::NotSkew {
            asym: asym.to_f64(),
        });
    }
    expm(a)
}

/// Exponential of a general square matrix.
pub fn expm<T: Real>(a: &Matrix<T>) -> Result<Matrix<T>> {
    if !a.is_square() {
        return Err(Error::Shape(format!(
            "expm needs a square matrix, got {:?}",
            a.shape()
        )));
    }
    let n = a.rows();
    let norm = a.norm_1().to_f64();
    if norm == 0.0 {
        return Ok(Matrix::identity(n));
    }
    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as i32
    } else {
        0
    };
    let a = a.scale(T::from_f64(2f64.powi(-s)));
    let b = |i: usize| T::from_f64(PADE_13[i]);

    let a2 = a.matmul(&a);
    let a4 = a2.matmul(&a2);
    let a6 = a4.matmul(&a2);

    let mut u_inner = a6.scale(b(13));
    u_inner.axpy(b(11), &a4);
    u_inner.axpy(b(9), &a2);
    let mut u_inner = a6.matmul(&u_inner);
    u_inner.axpy(b(7), &a6);
    u_inner.axpy(b(5), &a4);
    u_inner.axpy(b(3), &a2);
    u_inner.add_diag(b(1));
    let u = a.matmul(&u_inner);

    let mut v_inner = a6.scale(b(12));
    v_inner.axpy(b(10), &a4);
    v_inner.axpy(b(8), &a2);
    let mut v = a6.matmul(&v_inner);
    v.axpy(b(6), &a6);
    v.axpy(b(4), &a4);
    v.axpy(b(2), &a2);
    v.add_diag(b(0));

    let mut r = solve(&(&v - &u), &(&v + &u))?;
    for _ in 0..s {
        r = r.matmul(&r);
    }
    Ok(r)
}
