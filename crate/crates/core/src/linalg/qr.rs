use super::{Matrix, Real};
use crate::error::{Error, Result};

/// Thin Householder QR with the positive-diagonal convention.
///
/// For an `m x n` input with `m >= n`, returns `Q` (`m x n`, orthonormal
/// columns) and `R` (`n x n`, upper triangular, strictly positive diagonal)
/// with `M = Q R`. Under that sign convention the factorization is unique.
pub fn qr_positive<T: Real>(m: &Matrix<T>) -> Result<(Matrix<T>, Matrix<T>)> {
    let (rows, cols) = m.shape();
    if rows < cols {
        return Err(Error::Shape(format!(
            "qr needs rows >= cols, got {rows}x{cols}"
        )));
    }
    let threshold = T::tol(1e-12) * m.norm();

    // Work on the transpose so each column of `m` is a contiguous row.
    let mut a = m.transpose();
    let mut taus = vec![T::zero(); cols];

    for k in 0..cols {
        let col = &mut a.as_mut_slice()[k * rows..(k + 1) * rows];
        let x = &col[k..];
        let sigma = x[1..].iter().fold(T::zero(), |acc, &v| acc + v * v);
        let alpha = x[0];
        let norm = (alpha * alpha + sigma).sqrt();
        if norm <= threshold {
            return Err(Error::RankDeficient {
                pivot: norm.to_f64(),
                threshold: threshold.to_f64(),
            });
        }
        // Reflector v = x - beta e1 with beta = -sign(alpha) ||x||, scaled so v[0] = 1.
        let beta = if alpha >= T::zero() { -norm } else { norm };
        let v0 = alpha - beta;
        for v in col[k + 1..].iter_mut() {
            *v = *v / v0;
        }
        let tau = (beta - alpha) / beta;
        col[k] = beta;
        taus[k] = tau;

        // Apply H = I - tau v vᵀ to the remaining columns.
        let (head, tail) = a.as_mut_slice().split_at_mut((k + 1) * rows);
        let v = &head[k * rows..(k + 1) * rows];
        for other in tail.chunks_exact_mut(rows) {
            let mut s = other[k];
            for i in k + 1..rows {
                s = s + v[i] * other[i];
            }
            s = s * tau;
            other[k] = other[k] - s;
            for i in k + 1..rows {
                other[i] = other[i] - s * v[i];
            }
        }
    }

    // R from the upper triangle; Q by accumulating reflectors on the thin identity.
    let mut r = Matrix::zeros(cols, cols);
    for j in 0..cols {
        for i in 0..=j {
            r[(i, j)] = a.as_slice()[j * rows + i];
        }
    }
    let mut q_t = Matrix::<T>::eye(cols, rows);
    for k in (0..cols).rev() {
        let v = &a.as_slice()[k * rows..(k + 1) * rows];
        for qrow in q_t.as_mut_slice().chunks_exact_mut(rows) {
            let mut s = qrow[k];
            for i in k + 1..rows {
                s = s + v[i] * qrow[i];
            }
            s = s * taus[k];
            qrow[k] = qrow[k] - s;
            for i in k + 1..rows {
                qrow[i] = qrow[i] - s * v[i];
            }
        }
    }

    // Flip signs so that diag(R) > 0.
    for i in 0..cols {
        if r[(i, i)] < T::zero() {
            for j in i..cols {
                r[(i, j)] = -r[(i, j)];
            }
            for v in q_t.as_mut_slice()[i * rows..(i + 1) * rows].iter_mut() {
                *v = -*v;
            }
        }
    }
    Ok((q_t.transpose(), r))
}
