//! Cyclic Jacobi eigen-decomposition of small symmetric matrices.

use ndarray::Array2;

use crate::error::{Error, Result};

pub const OFF_DIAGONAL_TOLERANCE: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricEigen {
    /// Descending.
    pub values: Vec<f64>,
    /// Column `k` is the unit eigenvector of `values[k]`, sign-fixed so its
    /// first nonzero entry is positive.
    pub vectors: Array2<f64>,
    pub sweeps: usize,
}

fn off_diagonal_norm(a: &Array2<f64>) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[[i, j]] * a[[i, j]];
            }
        }
    }
    s.sqrt()
}

fn first_nonzero(v: ndarray::ArrayView1<f64>) -> usize {
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    v.iter().position(|x| x.abs() > 1e-10 * scale).unwrap_or(v.len())
}

/// Eigenpairs of a symmetric matrix. Iterates until the off-diagonal
/// Frobenius norm drops below `OFF_DIAGONAL_TOLERANCE` times the matrix norm.
/// Within a block of equal eigenvalues, vectors are ordered by the index of
/// their first nonzero entry.
pub fn symmetric_eigen(matrix: &Array2<f64>) -> Result<SymmetricEigen> {
    let n = matrix.nrows();
    if n != matrix.ncols() || n == 0 {
        return Err(Error::InvalidArgument(format!("expected a square matrix, got {:?}", matrix.shape())));
    }
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix for eigen-decomposition".into()));
    }
    for i in 0..n {
        for j in 0..i {
            let (a, b) = (matrix[[i, j]], matrix[[j, i]]);
            if (a - b).abs() > 1e-12 * (1.0 + a.abs().max(b.abs())) {
                return Err(Error::InvalidArgument(format!("matrix is not symmetric at ({i}, {j})")));
            }
        }
    }
    let mut a = matrix.clone();
    let mut v = Array2::<f64>::eye(n);
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut sweeps = 0;
    while off_diagonal_norm(&a) > OFF_DIAGONAL_TOLERANCE * scale {
        if sweeps == MAX_SWEEPS {
            return Err(Error::EigenNoConvergence(sweeps));
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[[p, q]];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[[k, p]], a[[k, q]]);
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[[p, k]], a[[q, k]]);
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[[k, p]], v[[k, q]]);
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }
    for k in 0..n {
        let mut col = v.column_mut(k);
        let i = first_nonzero(col.view());
        if i < n && col[i] < 0.0 {
            col.mapv_inplace(|x| -x);
        }
    }
    let diag: Vec<f64> = (0..n).map(|i| a[[i, i]]).collect();
    let tie = 1e-10 * scale.max(f64::MIN_POSITIVE);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        if (diag[i] - diag[j]).abs() <= tie {
            first_nonzero(v.column(i)).cmp(&first_nonzero(v.column(j))).then(i.cmp(&j))
        } else {
            diag[j].total_cmp(&diag[i])
        }
    });
    let values = order.iter().map(|&i| diag[i]).collect();
    let vectors = Array2::from_shape_fn((n, n), |(r, k)| v[[r, order[k]]]);
    Ok(SymmetricEigen { values, vectors, sweeps })
}
