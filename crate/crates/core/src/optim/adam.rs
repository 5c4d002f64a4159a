use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Bias-corrected Adam moments for one optimized vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
    step_count: u64,
}

impl AdamState {
    pub fn new(len: usize, config: AdamConfig) -> Self {
        Self {
            config,
            first_moment: vec![0.0; len],
            second_moment: vec![0.0; len],
            step_count: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.first_moment
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.second_moment
    }

    pub fn step(&mut self, variable: &mut [f64], grad: &[f64]) -> Result<()> {
        let n = self.first_moment.len();
        if variable.len() != n || grad.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: if variable.len() != n { variable.len() } else { grad.len() },
            });
        }
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        self.step_count += 1;
        let c1 = 1.0 - beta1.powi(self.step_count as i32);
        let c2 = 1.0 - beta2.powi(self.step_count as i32);
        for i in 0..n {
            let g = grad[i];
            let m = beta1 * self.first_moment[i] + (1.0 - beta1) * g;
            let v = beta2 * self.second_moment[i] + (1.0 - beta2) * g * g;
            self.first_moment[i] = m;
            self.second_moment[i] = v;
            variable[i] -= learning_rate * (m / c1) / ((v / c2).sqrt() + epsilon);
        }
        Ok(())
    }
}

/// One Adam update of `variable` in place.
pub fn adam_step(state: &mut AdamState, variable: &mut [f64], grad: &[f64]) -> Result<()> {
    state.step(variable, grad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut s = AdamState::new(3, AdamConfig::default());
        let mut x = vec![1.0, 1.0, 1.0];
        s.step(&mut x, &[0.5, -2.0, 10.0]).unwrap();
        assert_eq!(s.step_count(), 1);
        for (xi, sign) in x.iter().zip([-1.0, 1.0, -1.0]) {
            let delta = xi - 1.0;
            assert!((delta - sign * 1e-3).abs() < 1e-10, "{delta}");
        }
    }

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        let mut s = AdamState::new(2, AdamConfig::default());
        let mut x = vec![0.3, -4.0];
        for _ in 0..100 {
            s.step(&mut x, &[0.0, 0.0]).unwrap();
        }
        assert_eq!(x, vec![0.3, -4.0]);
    }

    #[test]
    fn converges_on_one_dimensional_quadratic() {
        let cfg = AdamConfig {
            learning_rate: 0.05,
            ..Default::default()
        };
        let mut s = AdamState::new(1, cfg);
        let mut x = vec![0.0];
        for _ in 0..500 {
            let g = 2.0 * (x[0] - 3.0);
            adam_step(&mut s, &mut x, &[g]).unwrap();
        }
        assert!((x[0] - 3.0).abs() < 1e-3, "{}", x[0]);
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let mut s = AdamState::new(2, AdamConfig::default());
        assert!(s.step(&mut [0.0], &[0.0, 0.0]).is_err());
        assert!(s.step(&mut [0.0, 0.0], &[0.0]).is_err());
    }
}
