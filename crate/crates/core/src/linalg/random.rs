use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use super::{qr_positive, Matrix, Real};

/// Seeded random source for experiments: ChaCha20 keyed by a `u64` seed.
///
/// Normals are drawn in `f64` and rounded to the requested precision so both
/// precisions consume the same stream.
#[derive(Debug, Clone)]
pub struct RngState {
    seed: u64,
    rng: ChaCha20Rng,
}

impl RngState {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha20Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// An independent stream derived from this seed and a label; used to give
    /// each (method, instance) pair its own reproducible generator.
    pub fn fork(&self, label: u64) -> Self {
        let mixed = self
            .seed
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .rotate_left(17)
            ^ label.wrapping_mul(0xBF58_476D_1CE4_E5B9);
        Self::new(mixed)
    }

    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    /// Matrix with i.i.d. standard normal entries, filled in row-major order.
    pub fn gaussian<T: Real>(&mut self, rows: usize, cols: usize) -> Matrix<T> {
        Matrix::from_fn(rows, cols, |_, _| T::from_f64(self.normal()))
    }

    /// Haar-distributed orthogonal matrix: the Q factor of a Gaussian draw
    /// under the positive-diagonal QR convention.
    pub fn orthogonal<T: Real>(&mut self, p: usize) -> Matrix<T> {
        loop {
            let g = self.gaussian::<T>(p, p);
            if let Ok((q, _)) = qr_positive(&g) {
                return q;
            }
        }
    }

    /// Random `n x p` point with orthonormal columns.
    pub fn stiefel<T: Real>(&mut self, n: usize, p: usize) -> Matrix<T> {
        loop {
            let g = self.gaussian::<T>(n, p);
            if let Ok((q, _)) = qr_positive(&g) {
                return q;
            }
        }
    }

    /// Skew-symmetric matrix whose strictly lower entries are i.i.d.
    /// `N(0, scale²)`; the upper triangle is the negated mirror.
    pub fn skew<T: Real>(&mut self, p: usize, scale: f64) -> Matrix<T> {
        let mut a = Matrix::zeros(p, p);
        for i in 0..p {
            for j in 0..i {
                let v = T::from_f64(scale * self.normal());
                a[(i, j)] = v;
                a[(j, i)] = -v;
            }
        }
        a
    }

    /// Symmetric matrix with i.i.d. `N(0, scale²)` entries on and below the diagonal.
    pub fn symmetric<T: Real>(&mut self, p: usize, scale: f64) -> Matrix<T> {
        let mut s = Matrix::zeros(p, p);
        for i in 0..p {
            for j in 0..=i {
                let v = T::from_f64(scale * self.normal());
                s[(i, j)] = v;
                s[(j, i)] = v;
            }
        }
        s
    }
}
