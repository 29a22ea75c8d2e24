use crate::error::{Error, Result};
use crate::geometry::Problem;
use crate::linalg::{Matrix, Real, RngState};

/// Finite-sum problem whose per-sample relative gradients have a prescribed
/// norm at the optimum.
///
/// `f(X) = -μ⟨X*, X⟩` and `f_i(X) = f(X) + ⟨K_i X*, X⟩` with skew `K_i`,
/// `‖K_i‖ = a`, drawn in opposite pairs so that the noise averages to zero.
/// At `X*`, `ψ_i = K_i` exactly while the full relative gradient vanishes.
#[derive(Debug, Clone)]
pub struct NoisyRotation<T> {
    x_star: Matrix<T>,
    mu: T,
    noise: Vec<Matrix<T>>,
}

impl<T: Real> NoisyRotation<T> {
    /// `pairs` opposite pairs of noise directions of norm `a`.
    pub fn new(p: usize, pairs: usize, a: f64, mu: f64, rng: &mut RngState) -> Result<Self> {
        if p < 2 || pairs == 0 {
            return Err(Error::Config(format!(
                "noisy rotation needs p >= 2 and at least one pair, got p = {p}, pairs = {pairs}"
            )));
        }
        if !(a >= 0.0 && mu > 0.0) {
            return Err(Error::Config(format!(
                "need a >= 0 and mu > 0, got a = {a}, mu = {mu}"
            )));
        }
        let x_star = rng.orthogonal::<T>(p);
        let mut noise = Vec::with_capacity(2 * pairs);
        for _ in 0..pairs {
            let k = rng.skew::<T>(p, 1.0);
            let k = k.scale(T::from_f64(a) / k.norm());
            noise.push(k.matmul(&x_star));
            noise.push(k.matmul(&x_star).scale(-T::one()));
        }
        Ok(Self {
            x_star,
            mu: T::from_f64(mu),
            noise,
        })
    }

    pub fn optimum(&self) -> &Matrix<T> {
        &self.x_star
    }
}

impl<T: Real> Problem<T> for NoisyRotation<T> {
    fn value(&self, x: &Matrix<T>) -> T {
        -self.mu * self.x_star.dot(x)
    }

    fn egrad(&self, _x: &Matrix<T>) -> Matrix<T> {
        self.x_star.scale(-self.mu)
    }

    fn ehess_vec(&self, x: &Matrix<T>, _e: &Matrix<T>) -> Option<Matrix<T>> {
        Some(Matrix::zeros(x.rows(), x.cols()))
    }

    fn n_samples(&self) -> usize {
        self.noise.len()
    }

    fn stoch_egrad(&self, x: &Matrix<T>, i: usize) -> Option<Matrix<T>> {
        let mut g = self.egrad(x);
        g += self.noise.get(i)?;
        Some(g)
    }
}
