use super::{Matrix, Real};
use crate::error::{Error, Result};

/// LU factorization with partial pivoting, `P M = L U`.
#[derive(Debug, Clone)]
pub struct Lu<T> {
    lu: Matrix<T>,
    perm: Vec<usize>,
}

impl<T: Real> Lu<T> {
    /// Factorizes a square matrix. A pivot below `1e-12 * ||M||_F` (scaled
    /// for the precision) is reported as [`Error::Singular`].
    pub fn new(m: &Matrix<T>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Shape(format!(
                "lu needs a square matrix, got {:?}",
                m.shape()
            )));
        }
        let n = m.rows();
        let threshold = T::tol(1e-12) * m.norm();
        let mut lu = m.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (pivot_row, pivot) =
                (k..n)
                    .map(|i| (i, lu[(i, k)].abs()))
                    .fold(
                        (k, -T::one()),
                        |best, cand| if cand.1 > best.1 { cand } else { best },
                    );
            if pivot <= threshold {
                return Err(Error::Singular {
                    pivot: pivot.to_f64(),
                    threshold: threshold.to_f64(),
                });
            }
            if pivot_row != k {
                perm.swap(k, pivot_row);
                let data = lu.as_mut_slice();
                for j in 0..n {
                    data.swap(k * n + j, pivot_row * n + j);
                }
            }
            let inv = T::one() / lu[(k, k)];
            for i in k + 1..n {
                let l = lu[(i, k)] * inv;
                lu[(i, k)] = l;
                if l != T::zero() {
                    for j in k + 1..n {
                        lu[(i, j)] = lu[(i, j)] - l * lu[(k, j)];
                    }
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn det(&self) -> T {
        let n = self.lu.rows();
        let mut visited = vec![false; n];
        let mut sign = T::one();
        // Each cycle of length L in the permutation contributes (-1)^(L-1).
        for start in 0..n {
            let mut len = 0;
            let mut i = start;
            while !visited[i] {
                visited[i] = true;
                i = self.perm[i];
                len += 1;
            }
            if len > 0 && len % 2 == 0 {
                sign = -sign;
            }
        }
        (0..n).fold(sign, |acc, i| acc * self.lu[(i, i)])
    }

    /// Solves `M Z = B` for every column of `B`.
    pub fn solve(&self, b: &Matrix<T>) -> Result<Matrix<T>> {
        let n = self.lu.rows();
        if b.rows() != n {
            return Err(Error::Shape(format!(
                "rhs has {} rows, system has {n}",
                b.rows()
            )));
        }
        let m = b.cols();
        let mut z = Matrix::zeros(n, m);
        for (i, &p) in self.perm.iter().enumerate() {
            for j in 0..m {
                z[(i, j)] = b[(p, j)];
            }
        }
        // Forward substitution with unit lower triangle.
        for i in 0..n {
            for k in 0..i {
                let l = self.lu[(i, k)];
                if l != T::zero() {
                    for j in 0..m {
                        z[(i, j)] = z[(i, j)] - l * z[(k, j)];
                    }
                }
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let u = self.lu[(i, k)];
                if u != T::zero() {
                    for j in 0..m {
                        z[(i, j)] = z[(i, j)] - u * z[(k, j)];
                    }
                }
            }
            let inv = T::one() / self.lu[(i, i)];
            for j in 0..m {
                z[(i, j)] = z[(i, j)] * inv;
            }
        }
        Ok(z)
    }
}

/// Solves `M Z = B` by LU with partial pivoting.
pub fn solve<T: Real>(m: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    Lu::new(m)?.solve(b)
}

/// Determinant, or 0 when the pivot test reports the matrix singular.
pub fn det<T: Real>(m: &Matrix<T>) -> T {
    Lu::new(m).map_or(T::zero(), |lu| lu.det())
}

pub fn inverse<T: Real>(m: &Matrix<T>) -> Result<Matrix<T>> {
    solve(m, &Matrix::identity(m.rows()))
}
