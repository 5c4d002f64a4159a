use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vecmath;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelKind {
    /// `x . y`
    Linear,
    /// `(x . y + offset)^degree`
    Polynomial { degree: u32, offset: f64 },
    /// `exp(-|x - y|^2 / bandwidth)`, with `bandwidth = 2 sigma^2`.
    Rbf { bandwidth: f64 },
}

impl KernelKind {
    /// RBF kernel with `2 sigma^2` equal to the parameter count.
    pub fn rbf_for_dim(n_params: usize) -> Self {
        KernelKind::Rbf {
            bandwidth: n_params as f64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelKind::Linear => Ok(()),
            KernelKind::Polynomial { degree, offset } if degree >= 1 && offset.is_finite() => Ok(()),
            KernelKind::Rbf { bandwidth } if bandwidth > 0.0 && bandwidth.is_finite() => Ok(()),
            _ => Err(Error::InvalidArgument(format!("invalid kernel {self:?}"))),
        }
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            KernelKind::Linear => vecmath::dot(x, y),
            KernelKind::Polynomial { degree, offset } => (vecmath::dot(x, y) + offset).powi(degree as i32),
            KernelKind::Rbf { bandwidth } => (-vecmath::squared_distance(x, y) / bandwidth).exp(),
        }
    }
}

pub(crate) fn check_points<V: AsRef<[f64]>>(points: &[V]) -> Result<usize> {
    let dim = points.first().map(|p| p.as_ref().len()).ok_or(Error::InvalidArgument("no points".into()))?;
    for p in points {
        if p.as_ref().len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: p.as_ref().len(),
            });
        }
    }
    Ok(dim)
}

/// `K_ij = k(x_i, x_j)`, computed on the upper triangle and mirrored.
pub fn kernel_matrix<V: AsRef<[f64]> + Sync>(points: &[V], kind: KernelKind) -> Result<Array2<f64>> {
    kind.validate()?;
    check_points(points)?;
    let n = points.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (i..n).map(|j| kind.eval(points[i].as_ref(), points[j].as_ref())).collect())
        .collect();
    let mut k = Array2::zeros((n, n));
    for (i, row) in rows.into_iter().enumerate() {
        for (off, v) in row.into_iter().enumerate() {
            k[[i, i + off]] = v;
            k[[i + off, i]] = v;
        }
    }
    Ok(k)
}

/// Column means and overall mean of a square matrix.
pub(crate) fn kernel_means(k: &Array2<f64>) -> (Vec<f64>, f64) {
    let n = k.nrows() as f64;
    let cols: Vec<f64> = k.columns().into_iter().map(|c| c.sum() / n).collect();
    let total = cols.iter().sum::<f64>() / n;
    (cols, total)
}

/// `K~ = K - 1_N K - K 1_N + 1_N K 1_N`, with `1_N` the matrix of `1/N` entries.
pub fn center_kernel(k: &Array2<f64>) -> Result<Array2<f64>> {
    if k.nrows() != k.ncols() || k.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "kernel matrix must be square and nonempty, got {:?}",
            k.shape()
        )));
    }
    let n = k.nrows();
    let (cols, total) = kernel_means(k);
    let rows: Vec<f64> = k.rows().into_iter().map(|r| r.sum() / n as f64).collect();
    Ok(Array2::from_shape_fn((n, n), |(i, j)| k[[i, j]] - rows[i] - cols[j] + total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn closed_form_entries() {
        let basis = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        assert_eq!(kernel_matrix(&basis, KernelKind::Linear).unwrap(), Array2::<f64>::eye(3));
        let p = KernelKind::Polynomial { degree: 2, offset: 1.0 };
        assert_eq!(p.eval(&[1.0, 1.0], &[1.0, 1.0]), 9.0);
        let pts = vec![vec![0.3, -2.0], vec![1.0, 5.0]];
        let k = kernel_matrix(&pts, KernelKind::Rbf { bandwidth: 4.0 }).unwrap();
        assert_eq!((k[[0, 0]], k[[1, 1]]), (1.0, 1.0));
        assert_eq!(k[[0, 1]], k[[1, 0]]);
        assert!((k[[0, 1]] - (-(0.49 + 49.0) / 4.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(kernel_matrix(&[vec![1.0], vec![1.0, 2.0]], KernelKind::Linear).is_err());
        assert!(kernel_matrix(&[vec![1.0]], KernelKind::Rbf { bandwidth: 0.0 }).is_err());
        assert!(kernel_matrix(&[vec![1.0]], KernelKind::Polynomial { degree: 0, offset: 1.0 }).is_err());
        assert!(center_kernel(&Array2::zeros((2, 3))).is_err());
    }

    #[test]
    fn centering_examples() {
        let c = center_kernel(&Array2::from_elem((4, 4), 2.5)).unwrap();
        assert!(c.iter().all(|v| v.abs() < 1e-15));
        let c = center_kernel(&array![[2.0, 0.0], [0.0, 2.0]]).unwrap();
        assert_eq!(c, array![[1.0, -1.0], [-1.0, 1.0]]);
    }

    #[test]
    fn centering_zeroes_sums_and_is_idempotent() {
        let pts: Vec<Vec<f64>> = (0..7).map(|i| vec![(i as f64).sin(), (i as f64 * 0.7).cos(), i as f64]).collect();
        for kind in [
            KernelKind::Linear,
            KernelKind::Polynomial { degree: 3, offset: 1.0 },
            KernelKind::Rbf { bandwidth: 3.0 },
        ] {
            let c = center_kernel(&kernel_matrix(&pts, kind).unwrap()).unwrap();
            for r in c.rows() {
                assert!(r.sum().abs() < 1e-10);
            }
            for col in c.columns() {
                assert!(col.sum().abs() < 1e-10);
            }
            let cc = center_kernel(&c).unwrap();
            assert!((&cc - &c).iter().all(|v| v.abs() < 1e-10));
        }
    }
}
