//! Differentiable scalar fields: the synthetic two-minimum surface, neural
//! network training/test loss, and a couple of classic test functions.

use ndarray::ArrayView2;

use crate::data::{batch_for, Dataset};
use crate::error::{Error, Result};
use crate::nn::{self, Batch, LineEvaluator, NetworkSpec};

/// A differentiable scalar field over a fixed-dimension space.
///
/// Implementations are pure: evaluating at different points from several
/// threads at once is allowed.
pub trait ScalarLandscape: Sync {
    fn dim(&self) -> usize;

    fn value(&self, point: &[f64]) -> Result<f64>;

    fn value_and_gradient(&self, point: &[f64]) -> Result<(f64, Vec<f64>)>;

    fn gradient(&self, point: &[f64]) -> Result<Vec<f64>> {
        Ok(self.value_and_gradient(point)?.1)
    }

    /// `u -> value(origin - u * direction)`. Evaluation failures and NaN map
    /// to `+inf` so line searches treat them as "too far".
    fn restrict_to_line<'a>(
        &'a self,
        origin: &'a [f64],
        direction: &'a [f64],
    ) -> Result<Box<dyn Fn(f64) -> f64 + 'a>> {
        check_dim(self.dim(), origin.len())?;
        check_dim(self.dim(), direction.len())?;
        Ok(Box::new(move |u| {
            let p: Vec<f64> = origin.iter().zip(direction).map(|(o, d)| o - u * d).collect();
            sanitize(self.value(&p).unwrap_or(f64::INFINITY))
        }))
    }

    /// Values at `points` and, when `weights` is given, the sums
    /// `sum_m weights[k][m] * gradient(points[m])` for every row `k`.
    ///
    /// Each `points[m]` equals `sum_r coeffs[m][r] * basis[r]`; implementations
    /// may exploit that structure. The default evaluates point by point and
    /// skips gradients whose weights are all zero.
    fn combination_values(
        &self,
        basis: &[&[f64]],
        coeffs: &[Vec<f64>],
        points: &[Vec<f64>],
        weights: Option<&[Vec<f64>]>,
    ) -> Result<(Vec<f64>, Option<Vec<Vec<f64>>>)> {
        pointwise_combination_values(self, basis, coeffs, points, weights)
    }
}

/// Point-by-point evaluation behind [`ScalarLandscape::combination_values`].
pub fn pointwise_combination_values<L: ScalarLandscape + ?Sized>(
    landscape: &L,
    _basis: &[&[f64]],
    _coeffs: &[Vec<f64>],
    points: &[Vec<f64>],
    weights: Option<&[Vec<f64>]>,
) -> Result<(Vec<f64>, Option<Vec<Vec<f64>>>)> {
    use rayon::prelude::*;

    if weights.is_some_and(|w| w.iter().any(|row| row.len() != points.len())) {
        return Err(Error::InvalidArgument("gradient weights do not match the points".into()));
    }
    let evaluated: Vec<(f64, Option<Vec<f64>>)> = (0..points.len())
        .into_par_iter()
        .map(|m| {
            let needed = weights.is_some_and(|w| w.iter().any(|row| row[m] != 0.0));
            if needed {
                let (v, g) = landscape.value_and_gradient(&points[m])?;
                Ok((v, Some(g)))
            } else {
                Ok((landscape.value(&points[m])?, None))
            }
        })
        .collect::<Result<_>>()?;
    let values = evaluated.iter().map(|(v, _)| *v).collect();
    let sums = weights.map(|w| {
        w.iter()
            .map(|row| {
                let mut sum = vec![0.0; landscape.dim()];
                for ((_, g), &c) in evaluated.iter().zip(row) {
                    if let (Some(g), true) = (g, c != 0.0) {
                        crate::vecmath::axpy(c, g, &mut sum);
                    }
                }
                sum
            })
            .collect()
    });
    Ok((values, sums))
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Endpoints of the two-minimum synthetic surface.
pub const SYNTHETIC_W1: [f64; 2] = [-0.62, -0.54];
pub const SYNTHETIC_W2: [f64; 2] = [0.49, -0.02];

/// Sum of Gaussian wells and bumps in the plane:
/// `f(r) = -sum_i exp(-a |r - c_i|^2) + sum_j exp(-b |r - d_j|^2) + C`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixture2D {
    pub attractors: Vec<[f64; 2]>,
    pub attractor_width: f64,
    pub repellers: Vec<[f64; 2]>,
    pub repeller_width: f64,
    pub offset: f64,
}

impl Default for GaussianMixture2D {
    fn default() -> Self {
        Self {
            attractors: vec![[-0.5, -0.5], [0.5, 0.0]],
            attractor_width: 3.0,
            repellers: vec![[-0.2, -0.4], [0.0, 0.3]],
            repeller_width: 15.0,
            offset: 1.019,
        }
    }
}

impl GaussianMixture2D {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let mut v = self.offset;
        for c in &self.attractors {
            v -= (-self.attractor_width * sq_dist(x, y, c)).exp();
        }
        for d in &self.repellers {
            v += (-self.repeller_width * sq_dist(x, y, d)).exp();
        }
        v
    }

    pub fn grad(&self, x: f64, y: f64) -> (f64, f64) {
        let (mut gx, mut gy) = (0.0, 0.0);
        for c in &self.attractors {
            let e = (-self.attractor_width * sq_dist(x, y, c)).exp();
            gx += 2.0 * self.attractor_width * (x - c[0]) * e;
            gy += 2.0 * self.attractor_width * (y - c[1]) * e;
        }
        for d in &self.repellers {
            let e = (-self.repeller_width * sq_dist(x, y, d)).exp();
            gx -= 2.0 * self.repeller_width * (x - d[0]) * e;
            gy -= 2.0 * self.repeller_width * (y - d[1]) * e;
        }
        (gx, gy)
    }
}

#[inline]
fn sq_dist(x: f64, y: f64, c: &[f64; 2]) -> f64 {
    (x - c[0]).powi(2) + (y - c[1]).powi(2)
}

pub fn synthetic_value(x: f64, y: f64) -> f64 {
    GaussianMixture2D::default().eval(x, y)
}

pub fn synthetic_grad(x: f64, y: f64) -> (f64, f64) {
    GaussianMixture2D::default().grad(x, y)
}

impl ScalarLandscape for GaussianMixture2D {
    fn dim(&self) -> usize {
        2
    }

    fn value(&self, p: &[f64]) -> Result<f64> {
        check_dim(2, p.len())?;
        Ok(self.eval(p[0], p[1]))
    }

    fn value_and_gradient(&self, p: &[f64]) -> Result<(f64, Vec<f64>)> {
        check_dim(2, p.len())?;
        let (gx, gy) = self.grad(p[0], p[1]);
        Ok((self.eval(p[0], p[1]), vec![gx, gy]))
    }
}

/// Mean network loss over a fixed set of samples.
#[derive(Debug, Clone)]
pub struct NnLandscape<'a> {
    spec: NetworkSpec,
    batch: Batch<'a>,
    label: String,
}

/// Landscape of `spec`'s loss averaged over all of `dataset`.
pub fn nn_landscape<'a>(spec: &NetworkSpec, dataset: &'a Dataset) -> Result<NnLandscape<'a>> {
    NnLandscape::new(
        spec,
        batch_for(spec.loss_kind(), dataset.images(), dataset.labels()),
        format!("{:?}[0..{}]", dataset.split(), dataset.len()).to_lowercase(),
    )
}

impl<'a> NnLandscape<'a> {
    pub fn new(spec: &NetworkSpec, batch: Batch<'a>, label: String) -> Result<Self> {
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        check_dim(spec.input_dim(), batch.inputs.ncols())?;
        Ok(Self {
            spec: spec.clone(),
            batch,
            label,
        })
    }

    /// Same landscape restricted to the first `n` samples.
    pub fn head(&self, n: usize) -> Result<NnLandscape<'a>> {
        if n == 0 || n > self.batch.len() {
            return Err(Error::InvalidArgument(format!(
                "subset of {n} from {} samples",
                self.batch.len()
            )));
        }
        let inputs: ArrayView2<'a, f64> = self.batch.inputs.slice_move(ndarray::s![..n, ..]);
        let targets = match self.batch.targets {
            nn::Targets::Labels(l) => nn::Targets::Labels(&l[..n]),
            nn::Targets::Values(v) => nn::Targets::Values(v.slice_move(ndarray::s![..n, ..])),
            nn::Targets::Reconstruction => nn::Targets::Reconstruction,
        };
        let base = self.label.split('[').next().unwrap_or("").to_string();
        Ok(NnLandscape {
            spec: self.spec.clone(),
            batch: Batch { inputs, targets },
            label: format!("{base}[0..{n}]"),
        })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn n_samples(&self) -> usize {
        self.batch.len()
    }

    /// Identifies the samples the landscape averages over, e.g. `train[0..500]`.
    pub fn label(&self) -> &str {
        &self.label
    }
}

impl ScalarLandscape for NnLandscape<'_> {
    fn dim(&self) -> usize {
        self.spec.n_params()
    }

    fn value(&self, point: &[f64]) -> Result<f64> {
        nn::loss(&self.spec, point, &self.batch)
    }

    fn value_and_gradient(&self, point: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (l, g) = nn::loss_and_grad(&self.spec, point, &self.batch)?;
        Ok((l, g.into_inner()))
    }

    fn restrict_to_line<'b>(
        &'b self,
        origin: &'b [f64],
        direction: &'b [f64],
    ) -> Result<Box<dyn Fn(f64) -> f64 + 'b>> {
        let line = LineEvaluator::new(&self.spec, origin, direction, self.batch.reborrow())?;
        Ok(Box::new(move |u| sanitize(line.loss_at(u))))
    }

    fn combination_values(
        &self,
        basis: &[&[f64]],
        coeffs: &[Vec<f64>],
        points: &[Vec<f64>],
        weights: Option<&[Vec<f64>]>,
    ) -> Result<(Vec<f64>, Option<Vec<Vec<f64>>>)> {
        nn::combination_losses(&self.spec, basis, coeffs, points, weights, &self.batch)
    }
}

/// `f(z) = 1/2 z^T A z - b^T z` with a dense symmetric `A` (row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    n: usize,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl Quadratic {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        let n = b.len();
        check_dim(n * n, a.len())?;
        Ok(Self { n, a, b })
    }

    pub fn matrix(&self) -> &[f64] {
        &self.a
    }

    fn apply(&self, z: &[f64]) -> Vec<f64> {
        self.a.chunks(self.n).map(|row| crate::vecmath::dot(row, z)).collect()
    }
}

impl ScalarLandscape for Quadratic {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, z: &[f64]) -> Result<f64> {
        check_dim(self.n, z.len())?;
        let az = self.apply(z);
        Ok(0.5 * crate::vecmath::dot(z, &az) - crate::vecmath::dot(&self.b, z))
    }

    fn value_and_gradient(&self, z: &[f64]) -> Result<(f64, Vec<f64>)> {
        check_dim(self.n, z.len())?;
        let az = self.apply(z);
        let v = 0.5 * crate::vecmath::dot(z, &az) - crate::vecmath::dot(&self.b, z);
        let g = az.iter().zip(&self.b).map(|(a, b)| a - b).collect();
        Ok((v, g))
    }
}

/// Two-dimensional Rosenbrock function `(1 - x)^2 + 100 (y - x^2)^2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Rosenbrock;

impl ScalarLandscape for Rosenbrock {
    fn dim(&self) -> usize {
        2
    }

    fn value(&self, p: &[f64]) -> Result<f64> {
        check_dim(2, p.len())?;
        Ok((1.0 - p[0]).powi(2) + 100.0 * (p[1] - p[0] * p[0]).powi(2))
    }

    fn value_and_gradient(&self, p: &[f64]) -> Result<(f64, Vec<f64>)> {
        let v = self.value(p)?;
        let (x, y) = (p[0], p[1]);
        let gx = -2.0 * (1.0 - x) - 400.0 * x * (y - x * x);
        let gy = 200.0 * (y - x * x);
        Ok((v, vec![gx, gy]))
    }
}

/// Spatially constant field; useful for isolating the path-length penalty.
#[derive(Debug, Clone, Copy)]
pub struct ConstantField {
    pub dim: usize,
    pub value: f64,
}

impl ScalarLandscape for ConstantField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, p: &[f64]) -> Result<f64> {
        check_dim(self.dim, p.len())?;
        Ok(self.value)
    }

    fn value_and_gradient(&self, p: &[f64]) -> Result<(f64, Vec<f64>)> {
        check_dim(self.dim, p.len())?;
        Ok((self.value, vec![0.0; self.dim]))
    }
}
