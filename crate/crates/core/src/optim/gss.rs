//! Golden Section Search line search.
//!
//! A minimum is first bracketed by probing `u = s, g s, g^2 s, ...` from the
//! origin until the function stops decreasing. The bracket is then shrunk by
//! `1/phi` per iteration; one interior evaluation is carried over, so each
//! contraction costs a single new function call.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `1/phi = (sqrt(5) - 1) / 2`.
pub const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GssConfig {
    /// First probe step of the bracketing phase.
    pub initial_step: f64,
    pub bracket_growth: f64,
    pub max_bracket_steps: usize,
    /// Stop once the bracket is narrower than this fraction of its initial width.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for GssConfig {
    fn default() -> Self {
        Self {
            initial_step: 1.0,
            bracket_growth: 2.0,
            max_bracket_steps: 40,
            tolerance: 1e-3,
            max_iterations: 50,
        }
    }
}

impl GssConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.initial_step > 0.0
            && self.bracket_growth > 1.0
            && self.max_bracket_steps > 0
            && self.tolerance > 0.0
            && self.max_iterations > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid GSS config {self:?}")))
        }
    }
}

/// `a` is strictly below `b`; NaN never is.
#[inline]
fn below(a: f64, b: f64) -> bool {
    a < b
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    /// Set when no increase was seen within the probe budget; `hi` is then the
    /// largest probed step.
    pub failed: bool,
    pub evaluations: usize,
}

/// Expands from `u = 0` until the function increases.
pub fn bracket_minimum<F: FnMut(f64) -> f64>(mut f: F, config: &GssConfig) -> Result<Bracket> {
    config.validate()?;
    let f0 = f(0.0);
    let mut evaluations = 1;
    let (mut before, mut prev, mut f_prev) = (0.0, 0.0, f0);
    let mut u = config.initial_step;
    for _ in 0..config.max_bracket_steps {
        let fu = f(u);
        evaluations += 1;
        if !below(fu, f_prev) {
            return Ok(Bracket {
                lo: before,
                hi: u,
                failed: false,
                evaluations,
            });
        }
        before = prev;
        prev = u;
        f_prev = fu;
        u *= config.bracket_growth;
    }
    Ok(Bracket {
        lo: before,
        hi: prev,
        failed: true,
        evaluations,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoldenSectionResult {
    /// Midpoint of the final bracket.
    pub minimizer: f64,
    pub lo: f64,
    pub hi: f64,
    pub iterations: usize,
    pub evaluations: usize,
    /// Bracket width after each contraction.
    pub widths: Vec<f64>,
}

/// Golden-section contraction of `[lo, hi]`.
pub fn golden_section<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    config: &GssConfig,
) -> Result<GoldenSectionResult> {
    config.validate()?;
    if !(lo < hi) {
        return Err(Error::InvalidArgument(format!("empty bracket [{lo}, {hi}]")));
    }
    let (mut a, mut b) = (lo, hi);
    let initial = b - a;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut evaluations = 2;
    let mut widths = Vec::new();
    let mut iterations = 0;
    while iterations < config.max_iterations && b - a >= config.tolerance * initial {
        if below(fc, fd) || (fc == fd) || fd.is_nan() {
            // minimum in [a, d]
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            // minimum in [c, b]
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        evaluations += 1;
        iterations += 1;
        widths.push(b - a);
    }
    Ok(GoldenSectionResult {
        minimizer: 0.5 * (a + b),
        lo: a,
        hi: b,
        iterations,
        evaluations,
        widths,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineSearch {
    pub step: f64,
    pub bracket: Bracket,
    pub evaluations: usize,
    pub iterations: usize,
}

/// Bracket then contract. On bracketing failure the largest probed step is
/// returned with `bracket.failed` set.
pub fn golden_section_search<F: FnMut(f64) -> f64>(mut f: F, config: &GssConfig) -> Result<LineSearch> {
    let bracket = bracket_minimum(&mut f, config)?;
    if bracket.failed {
        return Ok(LineSearch {
            step: bracket.hi,
            evaluations: bracket.evaluations,
            iterations: 0,
            bracket,
        });
    }
    let gs = golden_section(&mut f, bracket.lo, bracket.hi, config)?;
    Ok(LineSearch {
        step: gs.minimizer,
        evaluations: bracket.evaluations + gs.evaluations,
        iterations: gs.iterations,
        bracket,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn quadratic_vertex_on_given_bracket() {
        let cfg = GssConfig::default();
        let r = golden_section(|u| (u - 3.0).powi(2), 0.0, 10.0, &cfg).unwrap();
        assert!((r.minimizer - 3.0).abs() <= cfg.tolerance * 10.0);
    }

    #[test]
    fn widths_shrink_by_inverse_golden_ratio() {
        let cfg = GssConfig {
            tolerance: 1e-12,
            max_iterations: 20,
            ..Default::default()
        };
        let r = golden_section(|u| (u - 3.0).powi(2), 0.0, 10.0, &cfg).unwrap();
        assert_eq!(r.widths.len(), 20);
        for (k, w) in r.widths.iter().enumerate() {
            let expected = 10.0 * INV_PHI.powi(k as i32 + 1);
            assert!((w - expected).abs() <= 1e-12 * 10.0, "k={} {w} vs {expected}", k + 1);
        }
    }

    #[test]
    fn non_smooth_unimodal() {
        let cfg = GssConfig::default();
        let r = golden_section_search(|u| (u - 1.0).abs(), &cfg).unwrap();
        assert!(!r.bracket.failed);
        let width = r.bracket.hi - r.bracket.lo;
        assert!((r.step - 1.0).abs() <= cfg.tolerance * width, "{r:?}");
    }

    #[test]
    fn bracketing_doubles_until_increase() {
        let mut probes = Vec::new();
        let b = bracket_minimum(
            |u| {
                probes.push(u);
                (u - 5.0).powi(2)
            },
            &GssConfig::default(),
        )
        .unwrap();
        assert_eq!(probes, vec![0.0, 1.0, 2.0, 4.0, 8.0]);
        assert_eq!((b.lo, b.hi, b.failed), (2.0, 8.0, false));
    }

    #[test]
    fn first_probe_increasing_gives_unit_bracket() {
        let b = bracket_minimum(|u| (u - 0.1).powi(2), &GssConfig::default()).unwrap();
        assert_eq!((b.lo, b.hi), (0.0, 1.0));
    }

    #[test]
    fn monotone_function_fails_bracketing() {
        let cfg = GssConfig {
            max_bracket_steps: 5,
            ..Default::default()
        };
        let r = golden_section_search(|u| -u, &cfg).unwrap();
        assert!(r.bracket.failed);
        assert_eq!(r.step, 16.0);
    }

    #[test]
    fn nan_counts_as_increase() {
        let b = bracket_minimum(|u| if u > 3.0 { f64::NAN } else { -u }, &GssConfig::default()).unwrap();
        assert_eq!((b.lo, b.hi), (1.0, 4.0));
    }

    #[test]
    fn rejects_bad_config_and_bracket() {
        let bad = GssConfig {
            bracket_growth: 1.0,
            ..Default::default()
        };
        assert!(bracket_minimum(|u| u, &bad).is_err());
        assert!(golden_section(|u| u, 1.0, 1.0, &GssConfig::default()).is_err());
    }

    proptest! {
        #[test]
        fn bracket_keeps_a_point_below_both_ends(vertex in 0.01f64..50.0, scale in 0.1f64..10.0) {
            let f = |u: f64| scale * (u - vertex).powi(2);
            let cfg = GssConfig::default();
            let b = bracket_minimum(f, &cfg).unwrap();
            prop_assert!(!b.failed);
            prop_assert!(b.lo <= vertex && vertex <= b.hi);
            let r = golden_section(f, b.lo, b.hi, &cfg).unwrap();
            prop_assert!(r.lo <= vertex + 1e-12 && vertex <= r.hi + 1e-12);
            prop_assert!(f(r.minimizer) <= f(b.lo).max(f(b.hi)));
            prop_assert!((r.minimizer - vertex).abs() <= cfg.tolerance * (b.hi - b.lo));
        }
    }
}
