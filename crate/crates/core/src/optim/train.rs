//! Network training loops that record per-epoch train/test losses and keep
//! the snapshots at the minimum training loss and at the minimum test loss
//! (early stopping).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::{minibatches, BatchPlan, Dataset};
use crate::error::{Error, Result};
use crate::landscape::{nn_landscape, ScalarLandscape};
use crate::nn::{self, NetworkSpec, ParamVector};
use crate::optim::lbfgs::{self, LbfgsGssConfig};
use crate::optim::sgd::{sgd_step, SgdConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    LbfgsGss,
}

impl OptimizerKind {
    pub fn tag(self) -> &'static str {
        match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::LbfgsGss => "bfgs",
        }
    }
}

/// Losses of one training run. Entry 0 is the initialization; entry `k` is
/// after epoch (SGD) or iteration (L-BFGS-GSS) `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingTrace {
    pub optimizer: OptimizerKind,
    pub seed: u64,
    pub train_samples: usize,
    pub test_samples: usize,
    pub train_loss: Vec<f64>,
    pub test_loss: Vec<f64>,
    pub best_train_epoch: usize,
    pub best_test_epoch: usize,
    /// Gradients over the full training set.
    pub full_gradients: u64,
    /// Gradients over a mini-batch.
    pub minibatch_gradients: u64,
    /// Loss-only evaluations made by line searches.
    pub line_search_evaluations: u64,
    pub fallback_steps: u64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub snapshot_files: BTreeMap<String, String>,
}

impl TrainingTrace {
    fn new(optimizer: OptimizerKind, seed: u64, train: &Dataset, test: &Dataset) -> Self {
        Self {
            optimizer,
            seed,
            train_samples: train.len(),
            test_samples: test.len(),
            train_loss: Vec::new(),
            test_loss: Vec::new(),
            best_train_epoch: 0,
            best_test_epoch: 0,
            full_gradients: 0,
            minibatch_gradients: 0,
            line_search_evaluations: 0,
            fallback_steps: 0,
            snapshot_files: BTreeMap::new(),
        }
    }

    pub fn final_train_loss(&self) -> f64 {
        *self.train_loss.last().expect("trace is never empty")
    }

    pub fn min_train_loss(&self) -> f64 {
        self.train_loss[self.best_train_epoch]
    }

    pub fn min_test_loss(&self) -> f64 {
        self.test_loss[self.best_test_epoch]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingRun {
    pub trace: TrainingTrace,
    pub final_params: ParamVector,
    /// Snapshot at the minimum training loss.
    pub best_train: ParamVector,
    /// Snapshot at the minimum test loss.
    pub best_test: ParamVector,
}

struct Recorder {
    trace: TrainingTrace,
    best_train: ParamVector,
    best_test: ParamVector,
}

impl Recorder {
    fn record(&mut self, params: &[f64], train_loss: f64, test_loss: f64) -> Result<()> {
        let epoch = self.trace.train_loss.len();
        if !train_loss.is_finite() || !test_loss.is_finite() {
            return Err(Error::NonFinite(format!(
                "{} epoch {epoch}: train loss {train_loss}, test loss {test_loss}",
                self.trace.optimizer.tag()
            )));
        }
        if epoch == 0 || train_loss < self.trace.min_train_loss() {
            self.trace.best_train_epoch = epoch;
            self.best_train.copy_from_slice(params);
        }
        if epoch == 0 || test_loss < self.trace.min_test_loss() {
            self.trace.best_test_epoch = epoch;
            self.best_test.copy_from_slice(params);
        }
        self.trace.train_loss.push(train_loss);
        self.trace.test_loss.push(test_loss);
        Ok(())
    }

    fn finish(self, final_params: Vec<f64>) -> TrainingRun {
        TrainingRun {
            trace: self.trace,
            final_params: ParamVector::new(final_params),
            best_train: self.best_train,
            best_test: self.best_test,
        }
    }
}

fn check_inputs(spec: &NetworkSpec, params0: &ParamVector, train: &Dataset, test: &Dataset) -> Result<()> {
    if params0.len() != spec.n_params() {
        return Err(Error::DimensionMismatch {
            expected: spec.n_params(),
            got: params0.len(),
        });
    }
    if train.is_empty() || test.is_empty() {
        return Err(Error::InvalidDataset("training and test sets must be nonempty".into()));
    }
    Ok(())
}

/// Mini-batch SGD: `w <- w - lr * g_batch` for every batch of every epoch;
/// the batch order of epoch `e` is a pure function of `(seed, e)`.
pub fn sgd_run(
    spec: &NetworkSpec,
    params0: &ParamVector,
    train: &Dataset,
    test: &Dataset,
    config: &SgdConfig,
    seed: u64,
) -> Result<TrainingRun> {
    config.validate()?;
    check_inputs(spec, params0, train, test)?;
    let train_land = nn_landscape(spec, train)?;
    let test_land = nn_landscape(spec, test)?;
    let mut rec = Recorder {
        trace: TrainingTrace::new(OptimizerKind::Sgd, seed, train, test),
        best_train: params0.clone(),
        best_test: params0.clone(),
    };
    let mut w = params0.clone().into_inner();
    rec.record(&w, train_land.value(&w)?, test_land.value(&w)?)?;
    for epoch in 1..=config.epochs {
        let plan = BatchPlan {
            batch_size: config.batch_size,
            shuffle_seed: seed,
            epoch: epoch as u64,
        };
        for batch in minibatches(train, &plan)? {
            let (l, g) = nn::loss_and_grad(spec, &w, &batch.as_batch(spec.loss_kind()))?;
            if !l.is_finite() {
                return Err(Error::NonFinite(format!("sgd mini-batch loss {l} in epoch {epoch}")));
            }
            sgd_step(&mut w, &g, config.learning_rate);
            rec.trace.minibatch_gradients += 1;
        }
        rec.record(&w, train_land.value(&w)?, test_land.value(&w)?)?;
    }
    Ok(rec.finish(w))
}

/// Full-batch L-BFGS-GSS. `seed` only labels the run; the method is deterministic.
pub fn lbfgs_gss_run(
    spec: &NetworkSpec,
    params0: &ParamVector,
    train: &Dataset,
    test: &Dataset,
    config: &LbfgsGssConfig,
    seed: u64,
) -> Result<TrainingRun> {
    if config.max_iterations == 0 {
        return Err(Error::InvalidArgument("L-BFGS-GSS needs at least one iteration".into()));
    }
    check_inputs(spec, params0, train, test)?;
    let train_land = nn_landscape(spec, train)?;
    let test_land = nn_landscape(spec, test)?;
    let mut rec = Recorder {
        trace: TrainingTrace::new(OptimizerKind::LbfgsGss, seed, train, test),
        best_train: params0.clone(),
        best_test: params0.clone(),
    };
    rec.record(params0, train_land.value(params0)?, test_land.value(params0)?)?;
    let outcome = lbfgs::minimize(&train_land, params0, config, |it| {
        rec.record(it.point, it.value, test_land.value(it.point)?)
    })?;
    rec.trace.full_gradients = outcome.gradient_evaluations as u64;
    rec.trace.line_search_evaluations = outcome.function_evaluations as u64;
    rec.trace.fallback_steps = outcome.fallback_steps as u64;
    Ok(rec.finish(outcome.point))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::SplitTag;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn toy_data(n: usize, seed: u64, split: SplitTag) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let labels: Vec<u8> = (0..n).map(|i| (i % 3) as u8).collect();
        let images = Array2::from_shape_fn((n, 6), |(i, j)| {
            let base = if j % 3 == labels[i] as usize { 0.8 } else { 0.1 };
            (base + rng.random_range(-0.1..0.1f64)).clamp(0.0, 1.0)
        });
        Dataset::new(images, labels, split).unwrap()
    }

    fn toy_spec() -> NetworkSpec {
        NetworkSpec::uniform(
            vec![6, 5, 3],
            nn::Activation::Relu,
            nn::Activation::Identity,
            false,
            nn::LossKind::CrossEntropySoftmax,
        )
        .unwrap()
    }

    #[test]
    fn zero_learning_rate_keeps_parameters() {
        let (train, test) = (toy_data(20, 1, SplitTag::Train), toy_data(10, 2, SplitTag::Test));
        let spec = toy_spec();
        let p0 = nn::init_params(&spec, 3);
        let cfg = SgdConfig {
            learning_rate: 0.0,
            batch_size: 4,
            epochs: 3,
        };
        let run = sgd_run(&spec, &p0, &train, &test, &cfg, 9).unwrap();
        assert_eq!(run.final_params, p0);
        assert_eq!(run.trace.train_loss.len(), 4);
        assert!(run.trace.train_loss.windows(2).all(|w| w[0] == w[1]));
        assert!(run.trace.test_loss.windows(2).all(|w| w[0] == w[1]));
        assert_eq!(run.trace.minibatch_gradients, 15);
    }

    #[test]
    fn sgd_trace_is_deterministic_and_tracks_minima() {
        let (train, test) = (toy_data(30, 1, SplitTag::Train), toy_data(10, 2, SplitTag::Test));
        let spec = toy_spec();
        let p0 = nn::init_params(&spec, 3);
        let cfg = SgdConfig {
            learning_rate: 0.5,
            batch_size: 8,
            epochs: 10,
        };
        let a = sgd_run(&spec, &p0, &train, &test, &cfg, 4).unwrap();
        let b = sgd_run(&spec, &p0, &train, &test, &cfg, 4).unwrap();
        assert_eq!(a, b);
        let tr = &a.trace;
        assert!(tr.final_train_loss() < tr.train_loss[0]);
        let min = tr.train_loss.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_eq!(tr.min_train_loss(), min);
        let train_land = nn_landscape(&spec, &train).unwrap();
        assert_eq!(train_land.value(&a.best_train).unwrap(), min);
        let test_land = nn_landscape(&spec, &test).unwrap();
        assert_eq!(test_land.value(&a.best_test).unwrap(), tr.min_test_loss());
    }

    #[test]
    fn lbfgs_run_reduces_loss_and_counts_work() {
        let (train, test) = (toy_data(30, 1, SplitTag::Train), toy_data(10, 2, SplitTag::Test));
        let spec = toy_spec();
        let p0 = nn::init_params(&spec, 3);
        let cfg = LbfgsGssConfig {
            max_iterations: 20,
            ..Default::default()
        };
        let run = lbfgs_gss_run(&spec, &p0, &train, &test, &cfg, 0).unwrap();
        assert_eq!(run.trace.train_loss.len(), 21);
        assert_eq!(run.trace.full_gradients, 21);
        assert!(run.trace.line_search_evaluations > 0);
        assert!(run.trace.final_train_loss() < 0.5 * run.trace.train_loss[0]);
    }

    #[test]
    fn rejects_mismatched_start() {
        let (train, test) = (toy_data(5, 1, SplitTag::Train), toy_data(5, 2, SplitTag::Test));
        let spec = toy_spec();
        let bad = ParamVector::zeros(3);
        assert!(sgd_run(&spec, &bad, &train, &test, &SgdConfig::default(), 0).is_err());
        assert!(lbfgs_gss_run(&spec, &bad, &train, &test, &LbfgsGssConfig::default(), 0).is_err());
    }
}
