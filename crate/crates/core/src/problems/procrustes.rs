use crate::error::{Error, Result};
use crate::geometry::{relative_gradient, Problem};
use crate::linalg::{det, polar_factor, Matrix, Real, RngState};

/// Which side the coefficient matrix multiplies the unknown on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `‖XA - B‖²`
    Right,
    /// `‖AX - B‖²`
    Left,
}

/// Orthogonal Procrustes cost with its closed-form minimizer over `O_p`.
#[derive(Debug, Clone)]
pub struct Procrustes<T> {
    a: Matrix<T>,
    b: Matrix<T>,
    side: Side,
    x_star: Matrix<T>,
    f_star: T,
}

impl<T: Real> Procrustes<T> {
    /// Builds the problem and its optimum: `P(BAᵀ)` for [`Side::Right`],
    /// `P(AᵀB)` for [`Side::Left`]. Fails when that product is rank deficient
    /// or the optimum does not zero the relative gradient.
    pub fn new(a: Matrix<T>, b: Matrix<T>, side: Side) -> Result<Self> {
        if !a.is_square() || a.shape() != b.shape() {
            return Err(Error::Shape(format!(
                "procrustes needs square A and B of equal size, got {:?} and {:?}",
                a.shape(),
                b.shape()
            )));
        }
        let m = match side {
            Side::Right => b.matmul_t(&a),
            Side::Left => a.t_matmul(&b),
        };
        let x_star = polar_factor(&m)?;
        let mut problem = Self {
            a,
            b,
            side,
            x_star,
            f_star: T::zero(),
        };
        problem.f_star = problem.value(&problem.x_star);
        let psi = relative_gradient(&problem, &problem.x_star).norm();
        let scale = T::one().max(problem.egrad(&problem.x_star).norm());
        if psi > T::tol(1e-9) * scale {
            return Err(Error::NoConvergence {
                method: "procrustes optimum",
                iterations: 0,
            });
        }
        Ok(problem)
    }

    /// `A` and `B` with i.i.d. `N(0, 1/p)` entries, so the cost's curvature
    /// stays of order one as `p` grows.
    pub fn random(p: usize, side: Side, rng: &mut RngState) -> Result<Self> {
        let s = T::from_f64(1.0 / (p as f64).sqrt());
        let a = rng.gaussian::<T>(p, p).scale(s);
        let b = rng.gaussian::<T>(p, p).scale(s);
        Self::new(a, b, side)
    }

    /// `A` and `B` with i.i.d. standard normal entries.
    pub fn random_unscaled(p: usize, side: Side, rng: &mut RngState) -> Result<Self> {
        let a = rng.gaussian(p, p);
        let b = rng.gaussian(p, p);
        Self::new(a, b, side)
    }

    pub fn a(&self) -> &Matrix<T> {
        &self.a
    }

    pub fn b(&self) -> &Matrix<T> {
        &self.b
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn optimum(&self) -> &Matrix<T> {
        &self.x_star
    }

    pub fn optimal_value(&self) -> T {
        self.f_star
    }

    /// Random orthogonal point with the same determinant sign as `X*`.
    ///
    /// Landing and retraction methods never change the sign of the
    /// determinant, so only such starts can reach `X*`.
    pub fn start_point(&self, rng: &mut RngState) -> Matrix<T> {
        let p = self.a.rows();
        let mut x = rng.orthogonal::<T>(p);
        if (det(&x) > T::zero()) != (det(&self.x_star) > T::zero()) {
            for j in 0..p {
                x[(0, j)] = -x[(0, j)];
            }
        }
        x
    }

    fn misfit(&self, x: &Matrix<T>) -> Matrix<T> {
        match self.side {
            Side::Right => x.matmul(&self.a) - &self.b,
            Side::Left => self.a.matmul(x) - &self.b,
        }
    }
}

impl<T: Real> Problem<T> for Procrustes<T> {
    fn value(&self, x: &Matrix<T>) -> T {
        self.misfit(x).norm_sq()
    }

    fn egrad(&self, x: &Matrix<T>) -> Matrix<T> {
        let r = self.misfit(x);
        let two = T::from_f64(2.0);
        match self.side {
            Side::Right => r.matmul_t(&self.a).scale(two),
            Side::Left => self.a.t_matmul(&r).scale(two),
        }
    }

    fn ehess_vec(&self, _x: &Matrix<T>, e: &Matrix<T>) -> Option<Matrix<T>> {
        let two = T::from_f64(2.0);
        Some(match self.side {
            Side::Right => e.matmul(&self.a).matmul_t(&self.a).scale(two),
            Side::Left => self.a.t_matmul(&self.a.matmul(e)).scale(two),
        })
    }
}

/// `f(X) = ‖αX - B‖²` with `B = diag(1, 0)` on `2 x 2` matrices.
///
/// Along `X = diag(1, 1 + δ)` the PLAM field only moves `δ`, which makes the
/// instability of that field easy to observe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlamCounterexample {
    pub alpha: f64,
}

impl PlamCounterexample {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Config(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        Ok(Self { alpha })
    }

    fn target<T: Real>() -> Matrix<T> {
        Matrix::from_diag(&[T::one(), T::zero()])
    }

    /// `diag(1, 1 + δ)`.
    pub fn start_point<T: Real>(delta: f64) -> Matrix<T> {
        Matrix::from_diag(&[T::one(), T::from_f64(1.0 + delta)])
    }
}

impl<T: Real> Problem<T> for PlamCounterexample {
    fn value(&self, x: &Matrix<T>) -> T {
        (x.scale(T::from_f64(self.alpha)) - &Self::target()).norm_sq()
    }

    fn egrad(&self, x: &Matrix<T>) -> Matrix<T> {
        let alpha = T::from_f64(self.alpha);
        (x.scale(alpha) - &Self::target()).scale(T::from_f64(2.0) * alpha)
    }

    fn ehess_vec(&self, _x: &Matrix<T>, e: &Matrix<T>) -> Option<Matrix<T>> {
        Some(e.scale(T::from_f64(2.0 * self.alpha * self.alpha)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::skew_part;
    use crate::linalg::expm_skew;

    #[test]
    fn exact_fit_has_zero_value_and_gradient() {
        let mut rng = RngState::new(10);
        let x0 = rng.orthogonal::<f64>(6);
        let a = rng.gaussian::<f64>(6, 6);
        let p = Procrustes::new(a.clone(), x0.matmul(&a), Side::Right).unwrap();
        assert!((p.optimum() - &x0).norm() <= 1e-10);
        assert!(p.value(p.optimum()) <= 1e-20);
        assert!(p.egrad(p.optimum()).norm() <= 1e-10);
    }

    #[test]
    fn optimum_beats_random_orthogonal_points() {
        let mut rng = RngState::new(11);
        for side in [Side::Right, Side::Left] {
            let p = Procrustes::<f64>::random(8, side, &mut rng).unwrap();
            for _ in 0..100 {
                let q = rng.orthogonal(8);
                assert!(p.optimal_value() <= p.value(&q));
            }
        }
    }

    #[test]
    fn optimum_is_a_local_minimum_along_geodesics() {
        let mut rng = RngState::new(12);
        let p = Procrustes::<f64>::random(10, Side::Right, &mut rng).unwrap();
        assert!(relative_gradient(&p, p.optimum()).norm() <= 1e-9);
        for _ in 0..20 {
            let a = rng.skew::<f64>(10, 1.0);
            let a = a.scale(1e-3 / a.norm());
            let y = expm_skew(&a).unwrap().matmul(p.optimum());
            assert!(p.optimal_value() <= p.value(&y));
        }
    }

    #[test]
    fn start_point_shares_the_optimum_component() {
        let mut rng = RngState::new(13);
        for _ in 0..10 {
            let p = Procrustes::<f64>::random(5, Side::Left, &mut rng).unwrap();
            let x0 = p.start_point(&mut rng);
            assert!(det(&x0) * det(p.optimum()) > 0.0);
        }
    }

    #[test]
    fn counterexample_field_keeps_diagonal_form() {
        let f = PlamCounterexample::new(2.0).unwrap();
        let x = PlamCounterexample::start_point::<f64>(0.1);
        let g = f.egrad(&x);
        assert_eq!(skew_part(&g.matmul_t(&x)), Matrix::zeros(2, 2));
        assert_eq!(g, Matrix::from_diag(&[4.0, 8.8]));
        assert!(PlamCounterexample::new(0.0).is_err());
    }
}
