//! Low-loss paths between two points of a landscape.
//!
//! A path is a straight line plus a truncated sine series,
//!
//! ```text
//! w(t) = t w_i + (1 - t) w_j + sum_{n=1..N_F} b_n sin(n pi t),   t in [0, 1]
//! ```
//!
//! so `w(0) = w_j` and `w(1) = w_i` whatever the coefficients. The path is
//! sampled at `M` equally spaced `t_m` (both ends included) and scored by
//!
//! ```text
//! L = sum_m f(w(t_m)) + lambda * sum_m |w(t_{m+1}) - w(t_m)|^2
//! ```
//!
//! The coefficients are optimized with Adam on `L`; the path height
//! `H = max_m f(w(t_m))` is the barrier estimate.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::landscape::{check_dim, ScalarLandscape};
use crate::optim::adam::{AdamConfig, AdamState};
use crate::vecmath;

pub const DEFAULT_FOURIER_TERMS: usize = 10;
pub const DEFAULT_NN_POINTS: usize = 50;
pub const DEFAULT_SYNTHETIC_POINTS: usize = 100;
pub const DEFAULT_NN_LAMBDA: f64 = 1e-4;

/// `sin(n pi t)`, exactly zero at both ends of `[0, 1]`.
#[inline]
fn sine(n: usize, t: f64) -> f64 {
    if t == 0.0 || t == 1.0 {
        0.0
    } else {
        (n as f64 * PI * t).sin()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FourierPath {
    omega_i: Vec<f64>,
    omega_j: Vec<f64>,
    /// `n_fourier` blocks of `dim` entries; block `n - 1` is `b_n`.
    coefficients: Vec<f64>,
    n_fourier: usize,
    grid: Vec<f64>,
    /// `basis[n - 1][m] = sin(n pi t_m)`
    basis: Vec<Vec<f64>>,
}

impl FourierPath {
    /// Straight path (all coefficients zero) sampled at `n_points` values of `t`.
    pub fn new(omega_i: &[f64], omega_j: &[f64], n_fourier: usize, n_points: usize) -> Result<Self> {
        check_dim(omega_i.len(), omega_j.len())?;
        if omega_i.is_empty() {
            return Err(Error::InvalidArgument("path endpoints are empty".into()));
        }
        if n_points < 2 {
            return Err(Error::InvalidArgument("a path needs at least two grid points".into()));
        }
        let grid: Vec<f64> = (0..n_points).map(|m| m as f64 / (n_points - 1) as f64).collect();
        let basis = (1..=n_fourier)
            .map(|n| grid.iter().map(|&t| sine(n, t)).collect())
            .collect();
        Ok(Self {
            omega_i: omega_i.to_vec(),
            omega_j: omega_j.to_vec(),
            coefficients: vec![0.0; n_fourier * omega_i.len()],
            n_fourier,
            grid,
            basis,
        })
    }

    pub fn dim(&self) -> usize {
        self.omega_i.len()
    }

    pub fn n_fourier(&self) -> usize {
        self.n_fourier
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn omega_i(&self) -> &[f64] {
        &self.omega_i
    }

    pub fn omega_j(&self) -> &[f64] {
        &self.omega_j
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn coefficients_mut(&mut self) -> &mut [f64] {
        &mut self.coefficients
    }

    /// `b_n` for `n` in `1..=n_fourier`.
    pub fn coefficient(&self, n: usize) -> &[f64] {
        let d = self.dim();
        &self.coefficients[(n - 1) * d..n * d]
    }

    pub fn set_coefficients(&mut self, values: &[f64]) -> Result<()> {
        check_dim(self.coefficients.len(), values.len())?;
        self.coefficients.copy_from_slice(values);
        Ok(())
    }

    pub fn coefficient_norms(&self) -> Vec<f64> {
        (1..=self.n_fourier).map(|n| vecmath::norm(self.coefficient(n))).collect()
    }

    fn point_with(&self, t: f64, sines: impl Fn(usize) -> f64) -> Vec<f64> {
        let mut p: Vec<f64> = self
            .omega_i
            .iter()
            .zip(&self.omega_j)
            .map(|(wi, wj)| t * wi + (1.0 - t) * wj)
            .collect();
        for n in 1..=self.n_fourier {
            let s = sines(n);
            if s != 0.0 {
                vecmath::axpy(s, self.coefficient(n), &mut p);
            }
        }
        p
    }

    pub fn point(&self, t: f64) -> Result<Vec<f64>> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidArgument(format!("path parameter {t} outside [0, 1]")));
        }
        Ok(self.point_with(t, |n| sine(n, t)))
    }

    /// Path points at every grid value.
    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.grid.len())
            .map(|m| self.point_with(self.grid[m], |n| self.basis[n - 1][m]))
            .collect()
    }
}

/// Path point `w(t)`.
pub fn path_point(path: &FourierPath, t: f64) -> Result<Vec<f64>> {
    path.point(t)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathReport {
    /// Largest loss on the grid.
    pub height: f64,
    /// Loss at each grid point.
    pub losses: Vec<f64>,
    /// Sum of losses plus `lambda` times the squared segment lengths.
    pub total_loss: f64,
    /// `sum_m |w(t_{m+1}) - w(t_m)|^2`
    pub length_penalty: f64,
    pub lambda: f64,
    pub coefficient_norms: Vec<f64>,
}

struct Evaluation {
    report: PathReport,
    points: Vec<Vec<f64>>,
    /// `sum_m sin(n pi t_m) g_m` for each `n`.
    weighted_gradients: Option<Vec<Vec<f64>>>,
}

/// Evaluates the grid points through [`ScalarLandscape::combination_values`],
/// with each point written as a combination of the endpoints and the
/// coefficient vectors. Endpoint gradients are never needed (the sine basis
/// vanishes there), and cached endpoint losses skip the endpoints entirely.
fn evaluate<L: ScalarLandscape + ?Sized>(
    path: &FourierPath,
    landscape: &L,
    lambda: f64,
    with_gradient: bool,
    endpoint_losses: Option<(f64, f64)>,
) -> Result<Evaluation> {
    check_dim(landscape.dim(), path.dim())?;
    let points = path.points();
    let last = points.len() - 1;
    let evaluated: Vec<usize> = match endpoint_losses {
        Some(_) => (1..last).collect(),
        None => (0..=last).collect(),
    };
    let d = path.dim();
    let mut basis: Vec<&[f64]> = vec![&path.omega_i, &path.omega_j];
    basis.extend(path.coefficients.chunks_exact(d));
    let coeffs: Vec<Vec<f64>> = evaluated
        .iter()
        .map(|&m| {
            let t = path.grid[m];
            let mut c = vec![t, 1.0 - t];
            c.extend(path.basis.iter().map(|s| s[m]));
            c
        })
        .collect();
    let selected: Vec<Vec<f64>> = evaluated.iter().map(|&m| points[m].clone()).collect();
    let weights: Option<Vec<Vec<f64>>> = with_gradient
        .then(|| path.basis.iter().map(|s| evaluated.iter().map(|&m| s[m]).collect()).collect());
    let (values, weighted_gradients) =
        landscape.combination_values(&basis, &coeffs, &selected, weights.as_deref())?;

    let mut losses = vec![0.0; points.len()];
    if let Some((first, end)) = endpoint_losses {
        losses[0] = first;
        losses[last] = end;
    }
    for (&m, v) in evaluated.iter().zip(values) {
        losses[m] = v;
    }
    if let Some(m) = losses.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("path loss {} at t = {}", losses[m], path.grid[m])));
    }
    let length_penalty: f64 = points
        .windows(2)
        .map(|w| vecmath::squared_distance(&w[1], &w[0]))
        .sum();
    let sum: f64 = losses.iter().sum();
    let height = losses.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(Evaluation {
        report: PathReport {
            height,
            total_loss: sum + lambda * length_penalty,
            length_penalty,
            lambda,
            coefficient_norms: path.coefficient_norms(),
            losses,
        },
        points,
        weighted_gradients,
    })
}

/// Scores a path: per-point losses, height, total loss.
pub fn path_loss<L: ScalarLandscape + ?Sized>(path: &FourierPath, landscape: &L, lambda: f64) -> Result<PathReport> {
    Ok(evaluate(path, landscape, lambda, false, None)?.report)
}

fn coefficient_gradient(path: &FourierPath, eval: &Evaluation, lambda: f64) -> Vec<f64> {
    let d = path.dim();
    let weighted = eval.weighted_gradients.as_ref().expect("gradients requested");
    let mut out = vec![0.0; path.n_fourier * d];
    let diffs: Vec<Vec<f64>> = eval.points.windows(2).map(|w| vecmath::sub(&w[1], &w[0])).collect();
    for n in 1..=path.n_fourier {
        let basis = &path.basis[n - 1];
        let block = &mut out[(n - 1) * d..n * d];
        block.copy_from_slice(&weighted[n - 1]);
        for (m, diff) in diffs.iter().enumerate() {
            let ds = basis[m + 1] - basis[m];
            if ds != 0.0 {
                vecmath::axpy(2.0 * lambda * ds, diff, block);
            }
        }
    }
    out
}

/// Gradient of the total path loss with respect to the coefficients, laid out
/// like [`FourierPath::coefficients`]:
///
/// `dL/db_n = sum_m g_m sin(n pi t_m) + 2 lambda sum_m [w(t_{m+1}) - w(t_m)] [sin(n pi t_{m+1}) - sin(n pi t_m)]`
pub fn path_loss_grad<L: ScalarLandscape + ?Sized>(
    path: &FourierPath,
    landscape: &L,
    lambda: f64,
) -> Result<(PathReport, Vec<f64>)> {
    let eval = evaluate(path, landscape, lambda, true, None)?;
    let grad = coefficient_gradient(path, &eval, lambda);
    Ok((eval.report, grad))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PathConfig {
    pub lambda: f64,
    pub n_fourier: usize,
    pub n_points: usize,
    pub iterations: usize,
    pub adam: AdamConfig,
}

impl Default for PathConfig {
    /// Settings for network loss landscapes.
    fn default() -> Self {
        Self {
            lambda: DEFAULT_NN_LAMBDA,
            n_fourier: DEFAULT_FOURIER_TERMS,
            n_points: DEFAULT_NN_POINTS,
            iterations: 100,
            adam: AdamConfig::default(),
        }
    }
}

impl PathConfig {
    /// Settings for the two-dimensional synthetic surface.
    pub fn synthetic(lambda: f64) -> Self {
        Self {
            lambda,
            n_fourier: DEFAULT_FOURIER_TERMS,
            n_points: DEFAULT_SYNTHETIC_POINTS,
            iterations: 200,
            adam: AdamConfig {
                learning_rate: 0.05,
                ..AdamConfig::default()
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || self.n_points < 2 || !(self.adam.learning_rate >= 0.0) {
            return Err(Error::InvalidArgument(format!("invalid path config {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathTracePoint {
    pub total_loss: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum PathStatus {
    Completed,
    /// A non-finite loss stopped the optimization; the best iterate so far is kept.
    Aborted { iteration: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathOptimization {
    /// The iterate with the lowest height.
    pub path: FourierPath,
    pub report: PathReport,
    /// Index into `trace` of the reported iterate (0 = straight line).
    pub best_iteration: usize,
    /// `L` and `H` of every evaluated iterate, starting with the straight line.
    pub trace: Vec<PathTracePoint>,
    pub straight_line: PathReport,
    pub status: PathStatus,
}

/// Adam on the path loss, starting from the straight line. Runs
/// `config.iterations` updates and reports the lowest-height iterate seen
/// (including the final one).
pub fn optimize_path<L: ScalarLandscape + ?Sized>(
    omega_i: &[f64],
    omega_j: &[f64],
    landscape: &L,
    config: &PathConfig,
) -> Result<PathOptimization> {
    config.validate()?;
    let mut path = FourierPath::new(omega_i, omega_j, config.n_fourier, config.n_points)?;
    check_dim(landscape.dim(), path.dim())?;
    let ends = (landscape.value(omega_j)?, landscape.value(omega_i)?);
    let mut adam = AdamState::new(path.coefficients.len(), config.adam);

    let first = evaluate(&path, landscape, config.lambda, true, Some(ends))?;
    let straight_line = first.report.clone();
    let mut best = (0usize, path.coefficients.clone(), first.report.clone());
    let mut trace = vec![PathTracePoint {
        total_loss: first.report.total_loss,
        height: first.report.height,
    }];
    let mut current = first;
    let mut status = PathStatus::Completed;

    for k in 1..=config.iterations {
        let grad = coefficient_gradient(&path, &current, config.lambda);
        adam.step(&mut path.coefficients, &grad)?;
        let with_grad = k < config.iterations;
        current = match evaluate(&path, landscape, config.lambda, with_grad, Some(ends)) {
            Ok(e) => e,
            Err(Error::NonFinite(reason)) => {
                status = PathStatus::Aborted { iteration: k, reason };
                break;
            }
            Err(e) => return Err(e),
        };
        trace.push(PathTracePoint {
            total_loss: current.report.total_loss,
            height: current.report.height,
        });
        if current.report.height < best.2.height {
            best = (k, path.coefficients.clone(), current.report.clone());
        }
    }
    path.coefficients = best.1;
    Ok(PathOptimization {
        path,
        report: best.2,
        best_iteration: best.0,
        trace,
        straight_line,
        status,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyRecord {
    /// Member indices, `i < j`.
    pub i: usize,
    pub j: usize,
    pub report: PathReport,
    pub straight_line_height: f64,
    pub iterations: usize,
    pub best_iteration: usize,
    pub status: PathStatus,
}

/// Distinct unordered pairs `(i, j)`, `i < j`, drawn without replacement.
pub fn sample_pairs(n_members: usize, n_pairs: usize, seed: u64) -> Result<Vec<(usize, usize)>> {
    if n_members < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least two members to form pairs, got {n_members}"
        )));
    }
    let mut all: Vec<(usize, usize)> = (0..n_members)
        .flat_map(|i| (i + 1..n_members).map(move |j| (i, j)))
        .collect();
    all.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    all.truncate(n_pairs);
    Ok(all)
}

/// Optimizes a path between each sampled pair of `members`.
pub fn barrier_survey<L, V>(
    members: &[V],
    landscape: &L,
    n_pairs: usize,
    seed: u64,
    config: &PathConfig,
) -> Result<Vec<SurveyRecord>>
where
    L: ScalarLandscape + ?Sized,
    V: AsRef<[f64]> + Sync,
{
    let pairs = sample_pairs(members.len(), n_pairs, seed)?;
    pairs
        .par_iter()
        .map(|&(i, j)| {
            let opt = optimize_path(members[i].as_ref(), members[j].as_ref(), landscape, config)?;
            Ok(SurveyRecord {
                i,
                j,
                straight_line_height: opt.straight_line.height,
                iterations: opt.trace.len() - 1,
                best_iteration: opt.best_iteration,
                status: opt.status,
                report: opt.report,
            })
        })
        .collect()
}

/// Equal-width histogram of `values` over `[lo, hi]`; the last bin is closed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn new(values: &[f64], bins: usize, lo: f64, hi: f64) -> Result<Self> {
        if bins == 0 || !(hi > lo) {
            return Err(Error::InvalidArgument(format!("histogram of {bins} bins over [{lo}, {hi}]")));
        }
        let width = (hi - lo) / bins as f64;
        let edges = (0..=bins).map(|k| lo + k as f64 * width).collect();
        let mut counts = vec![0; bins];
        for &v in values {
            if v < lo || v > hi || v.is_nan() {
                continue;
            }
            let k = (((v - lo) / width) as usize).min(bins - 1);
            counts[k] += 1;
        }
        Ok(Self { edges, counts })
    }

    /// Bins spanning the data range (a unit range around a single value).
    pub fn auto(values: &[f64], bins: usize) -> Result<Self> {
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidArgument("histogram of no finite values".into()));
        }
        if hi > lo {
            Self::new(values, bins, lo, hi)
        } else {
            Self::new(values, bins, lo - 0.5, hi + 0.5)
        }
    }

    /// CSV with header `bin_lo,bin_hi,count`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("bin_lo,bin_hi,count\n");
        for (k, c) in self.counts.iter().enumerate() {
            s.push_str(&format!("{:e},{:e},{}\n", self.edges[k], self.edges[k + 1], c));
        }
        s
    }
}
