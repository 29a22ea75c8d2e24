use crate::error::{Error, Result};
use crate::geometry::Problem;
use crate::linalg::{polar_factor, Matrix, Real, RngState};

/// Nearest point on `S_{n,p}`: `f(X) = ‖X - B‖²`, minimized by `P(B)`.
#[derive(Debug, Clone)]
pub struct StiefelProcrustes<T> {
    b: Matrix<T>,
    x_star: Matrix<T>,
}

impl<T: Real> StiefelProcrustes<T> {
    pub fn new(b: Matrix<T>) -> Result<Self> {
        if b.rows() < b.cols() {
            return Err(Error::Shape(format!(
                "target must be tall, got {:?}",
                b.shape()
            )));
        }
        let x_star = polar_factor(&b)?;
        Ok(Self { b, x_star })
    }

    /// Gaussian target with i.i.d. `N(0, 1/n)` entries.
    pub fn random(n: usize, p: usize, rng: &mut RngState) -> Result<Self> {
        let b = rng
            .gaussian::<T>(n, p)
            .scale(T::from_f64(1.0 / (n as f64).sqrt()));
        Self::new(b)
    }

    pub fn target(&self) -> &Matrix<T> {
        &self.b
    }

    pub fn optimum(&self) -> &Matrix<T> {
        &self.x_star
    }
}

impl<T: Real> Problem<T> for StiefelProcrustes<T> {
    fn value(&self, x: &Matrix<T>) -> T {
        (x - &self.b).norm_sq()
    }

    fn egrad(&self, x: &Matrix<T>) -> Matrix<T> {
        (x - &self.b).scale(T::from_f64(2.0))
    }

    fn ehess_vec(&self, _x: &Matrix<T>, e: &Matrix<T>) -> Option<Matrix<T>> {
        Some(e.scale(T::from_f64(2.0)))
    }
}
