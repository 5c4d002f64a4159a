//! Kernel PCA with explicit centering of projected points.

use ndarray::{Array1, Array2};

use super::eigen::symmetric_eigen;
use super::kernel::{center_kernel, check_points, kernel_matrix, kernel_means, KernelKind};
use crate::error::{Error, Result};

/// Eigenvalues at or below this are treated as zero.
pub const EIGENVALUE_CUTOFF: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct KpcaModel {
    kind: KernelKind,
    points: Vec<Vec<f64>>,
    /// Retained eigenvalues of the centered kernel, descending.
    eigenvalues: Vec<f64>,
    /// Column `k` is `alpha^(k) = v_k / sqrt(lambda_k)`.
    alphas: Array2<f64>,
    column_means: Vec<f64>,
    total_mean: f64,
    scores: Array2<f64>,
}

impl KpcaModel {
    pub fn fit<V: AsRef<[f64]> + Sync>(points: &[V], kind: KernelKind, n_components: usize) -> Result<Self> {
        check_points(points)?;
        if points.len() < 2 {
            return Err(Error::InvalidArgument("kernel PCA needs at least two points".into()));
        }
        let k = kernel_matrix(points, kind)?;
        let (column_means, total_mean) = kernel_means(&k);
        let centered = center_kernel(&k)?;
        let eig = symmetric_eigen(&centered)?;
        let available = eig.values.iter().take_while(|&&l| l > EIGENVALUE_CUTOFF).count();
        if n_components > available {
            return Err(Error::TooManyComponents {
                requested: n_components,
                available,
            });
        }
        let n = points.len();
        let eigenvalues: Vec<f64> = eig.values[..n_components].to_vec();
        let alphas = Array2::from_shape_fn((n, n_components), |(i, c)| eig.vectors[[i, c]] / eigenvalues[c].sqrt());
        let scores = centered.dot(&alphas);
        Ok(Self {
            kind,
            points: points.iter().map(|p| p.as_ref().to_vec()).collect(),
            eigenvalues,
            alphas,
            column_means,
            total_mean,
            scores,
        })
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn n_components(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn alphas(&self) -> &Array2<f64> {
        &self.alphas
    }

    /// Scores of the fit points, one row per point.
    pub fn fit_scores(&self) -> &Array2<f64> {
        &self.scores
    }

    /// `PC_k(x) = sum_i alpha_i^(k) k~(x, x_i)`, where `k~` is the kernel
    /// vector of `x` centered with the fit-time means.
    pub fn project(&self, x: &[f64]) -> Result<Array1<f64>> {
        let dim = self.points[0].len();
        if x.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: x.len(),
            });
        }
        let kx: Vec<f64> = self.points.iter().map(|p| self.kind.eval(x, p)).collect();
        let mean = kx.iter().sum::<f64>() / kx.len() as f64;
        let centered: Array1<f64> = kx
            .iter()
            .zip(&self.column_means)
            .map(|(k, c)| k - mean - c + self.total_mean)
            .collect();
        Ok(self.alphas.t().dot(&centered))
    }

    pub fn project_all<V: AsRef<[f64]>>(&self, xs: &[V]) -> Result<Array2<f64>> {
        let mut out = Array2::zeros((xs.len(), self.n_components()));
        for (i, x) in xs.iter().enumerate() {
            out.row_mut(i).assign(&self.project(x.as_ref())?);
        }
        Ok(out)
    }
}

/// CSV with header `set,pc1,...,pck`; `labels[i]` names the set of row `i`.
pub fn scores_csv(labels: &[&str], scores: &Array2<f64>) -> Result<String> {
    if labels.len() != scores.nrows() {
        return Err(Error::DimensionMismatch {
            expected: scores.nrows(),
            got: labels.len(),
        });
    }
    let mut s = String::from("set");
    for k in 1..=scores.ncols() {
        s.push_str(&format!(",pc{k}"));
    }
    s.push('\n');
    for (label, row) in labels.iter().zip(scores.rows()) {
        s.push_str(label);
        for v in row {
            s.push_str(&format!(",{v:e}"));
        }
        s.push('\n');
    }
    Ok(s)
}
