//! Limited-memory BFGS with a golden-section line search.
//!
//! The search direction `p` approximates `H^{-1} g` and is *subtracted*:
//! `w_{k+1} = w_k - u* p`, with `u*` picked by golden-section search along
//! that ray.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::landscape::ScalarLandscape;
use crate::optim::gss::{golden_section_search, GssConfig};
use crate::vecmath::{all_finite, dot, norm, sub};

pub const DEFAULT_CURVATURE_EPS: f64 = 1e-10;

/// The `m` most recent `(s, y)` pairs, oldest first.
#[derive(Debug, Clone, PartialEq)]
pub struct LbfgsHistory {
    s_list: VecDeque<Vec<f64>>,
    y_list: VecDeque<Vec<f64>>,
    rho: VecDeque<f64>,
    memory: usize,
    curvature_eps: f64,
}

impl LbfgsHistory {
    pub fn new(memory: usize) -> Self {
        Self::with_curvature_eps(memory, DEFAULT_CURVATURE_EPS)
    }

    pub fn with_curvature_eps(memory: usize, curvature_eps: f64) -> Self {
        Self {
            s_list: VecDeque::with_capacity(memory),
            y_list: VecDeque::with_capacity(memory),
            rho: VecDeque::with_capacity(memory),
            memory,
            curvature_eps,
        }
    }

    pub fn len(&self) -> usize {
        self.s_list.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s_list.is_empty()
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&[f64], &[f64])> {
        self.s_list
            .iter()
            .zip(&self.y_list)
            .map(|(s, y)| (s.as_slice(), y.as_slice()))
    }

    /// Stores the pair unless `s^T y <= eps |s| |y|`; returns whether it was kept.
    pub fn push(&mut self, s: Vec<f64>, y: Vec<f64>) -> bool {
        debug_assert_eq!(s.len(), y.len());
        let sy = dot(&s, &y);
        if !(sy > self.curvature_eps * norm(&s) * norm(&y)) || !sy.is_finite() {
            return false;
        }
        if self.memory == 0 {
            return false;
        }
        if self.s_list.len() == self.memory {
            self.s_list.pop_front();
            self.y_list.pop_front();
            self.rho.pop_front();
        }
        self.s_list.push_back(s);
        self.y_list.push_back(y);
        self.rho.push_back(1.0 / sy);
        true
    }

    /// Initial inverse-Hessian scale `s^T y / y^T y` of the newest pair.
    pub fn gamma(&self) -> f64 {
        match (self.s_list.back(), self.y_list.back()) {
            (Some(s), Some(y)) => dot(s, y) / dot(y, y),
            _ => 1.0,
        }
    }
}

/// Two-loop recursion: returns `p ~ H^{-1} grad`.
pub fn lbfgs_direction(grad: &[f64], hist: &LbfgsHistory) -> Result<Vec<f64>> {
    if !all_finite(grad) {
        return Err(Error::NonFinite("gradient passed to two-loop recursion".into()));
    }
    let k = hist.len();
    let mut q = grad.to_vec();
    let mut alpha = vec![0.0; k];
    for i in (0..k).rev() {
        let a = hist.rho[i] * dot(&hist.s_list[i], &q);
        alpha[i] = a;
        crate::vecmath::axpy(-a, &hist.y_list[i], &mut q);
    }
    let gamma = hist.gamma();
    q.iter_mut().for_each(|v| *v *= gamma);
    for i in 0..k {
        let beta = hist.rho[i] * dot(&hist.y_list[i], &q);
        crate::vecmath::axpy(alpha[i] - beta, &hist.s_list[i], &mut q);
    }
    if !all_finite(&q) {
        return Err(Error::NonFinite("two-loop recursion (corrupted history?)".into()));
    }
    Ok(q)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LbfgsGssConfig {
    pub memory: usize,
    pub max_iterations: usize,
    pub gss: GssConfig,
    /// Step taken when bracketing fails.
    pub fallback_step: f64,
    pub curvature_eps: f64,
    /// Stop early once `|g| <= gradient_tolerance`.
    pub gradient_tolerance: f64,
}

impl Default for LbfgsGssConfig {
    fn default() -> Self {
        Self {
            memory: 10,
            max_iterations: 150,
            gss: GssConfig::default(),
            fallback_step: 1e-3,
            curvature_eps: DEFAULT_CURVATURE_EPS,
            gradient_tolerance: 0.0,
        }
    }
}

/// State handed to the per-iteration observer.
#[derive(Debug, Clone, Copy)]
pub struct LbfgsIterate<'a> {
    /// 1-based iteration number.
    pub iteration: usize,
    pub point: &'a [f64],
    pub value: f64,
    pub gradient_norm: f64,
    pub step: f64,
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LbfgsOutcome {
    pub point: Vec<f64>,
    pub value: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub gradient_evaluations: usize,
    pub function_evaluations: usize,
    pub fallback_steps: usize,
    pub skipped_pairs: usize,
    /// Objective after each iteration (index 0 is the start point).
    pub values: Vec<f64>,
    pub gradient_norms: Vec<f64>,
}

/// Runs L-BFGS-GSS on `landscape` starting from `x0`.
pub fn minimize<L, F>(
    landscape: &L,
    x0: &[f64],
    config: &LbfgsGssConfig,
    mut observer: F,
) -> Result<LbfgsOutcome>
where
    L: ScalarLandscape + ?Sized,
    F: FnMut(&LbfgsIterate<'_>) -> Result<()>,
{
    crate::landscape::check_dim(landscape.dim(), x0.len())?;
    config.gss.validate()?;
    let mut hist = LbfgsHistory::with_curvature_eps(config.memory, config.curvature_eps);
    let mut x = x0.to_vec();
    let (mut fx, mut g) = landscape.value_and_gradient(&x)?;
    check_finite(fx, 0)?;
    let mut out = LbfgsOutcome {
        point: Vec::new(),
        value: fx,
        gradient_norm: norm(&g),
        iterations: 0,
        gradient_evaluations: 1,
        function_evaluations: 0,
        fallback_steps: 0,
        skipped_pairs: 0,
        values: vec![fx],
        gradient_norms: vec![norm(&g)],
    };

    for k in 1..=config.max_iterations {
        if norm(&g) <= config.gradient_tolerance {
            break;
        }
        let p = lbfgs_direction(&g, &hist)?;
        let search = {
            let line = landscape.restrict_to_line(&x, &p)?;
            golden_section_search(line, &config.gss)?
        };
        out.function_evaluations += search.evaluations;
        let fallback = search.bracket.failed;
        let step = if fallback {
            log::warn!(
                "iteration {k}: no bracket within {} probes, taking fallback step {}",
                config.gss.max_bracket_steps,
                config.fallback_step
            );
            out.fallback_steps += 1;
            config.fallback_step
        } else {
            search.step
        };
        let x_new: Vec<f64> = x.iter().zip(&p).map(|(xi, pi)| xi - step * pi).collect();
        let (f_new, g_new) = landscape.value_and_gradient(&x_new)?;
        out.gradient_evaluations += 1;
        check_finite(f_new, k)?;
        if !hist.push(sub(&x_new, &x), sub(&g_new, &g)) {
            out.skipped_pairs += 1;
        }
        x = x_new;
        fx = f_new;
        g = g_new;
        out.iterations = k;
        out.values.push(fx);
        out.gradient_norms.push(norm(&g));
        observer(&LbfgsIterate {
            iteration: k,
            point: &x,
            value: fx,
            gradient_norm: norm(&g),
            step,
            fallback,
        })?;
    }
    out.value = fx;
    out.gradient_norm = norm(&g);
    out.point = x;
    Ok(out)
}

fn check_finite(v: f64, iteration: usize) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(format!("objective {v} at iteration {iteration}")))
    }
}
