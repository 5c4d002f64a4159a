use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::landscape::ScalarLandscape;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SgdConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
}

impl Default for SgdConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            batch_size: 64,
            epochs: 30,
        }
    }
}

impl SgdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0) || self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::InvalidArgument(format!("invalid SGD config {self:?}")));
        }
        Ok(())
    }
}

/// `params <- params - lr * grad`
pub fn sgd_step(params: &mut [f64], grad: &[f64], learning_rate: f64) {
    crate::vecmath::axpy(-learning_rate, grad, params);
}

/// Plain full-batch gradient descent for `steps` iterations.
pub fn gradient_descent<L: ScalarLandscape + ?Sized>(
    landscape: &L,
    x0: &[f64],
    learning_rate: f64,
    steps: usize,
) -> Result<Vec<f64>> {
    crate::landscape::check_dim(landscape.dim(), x0.len())?;
    let mut x = x0.to_vec();
    for k in 0..steps {
        let (v, g) = landscape.value_and_gradient(&x)?;
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("loss {v} at step {k}")));
        }
        sgd_step(&mut x, &g, learning_rate);
    }
    Ok(x)
}
