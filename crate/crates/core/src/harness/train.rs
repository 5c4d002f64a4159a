use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::store::{Manifest, OutputDir, SolutionSet};
use super::{manifest_config, solution_file, with_workers, SET_NAMES};
use crate::data::{load_mnist_dir, Dataset};
use crate::error::{Error, Result};
use crate::nn::{self, ParamVector};
use crate::optim::train::{lbfgs_gss_run, sgd_run, OptimizerKind, TrainingRun, TrainingTrace};
use crate::seeds::{derive, Stream};

/// Loads the capped training set and the (capped) test set named by `cfg`.
pub fn load_data(cfg: &ExperimentConfig) -> Result<(Dataset, Dataset)> {
    let (train, test) = load_mnist_dir(&cfg.data.dir, cfg.data.train_cap, cfg.data.selection)?;
    let test = test.head(cfg.data.test_cap.min(test.len()))?;
    Ok((train, test))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcludedRun {
    pub member: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSummary {
    pub completed: usize,
    pub excluded: Vec<ExcludedRun>,
    /// Ensemble members kept, lowest training loss first.
    pub selected: Vec<usize>,
    /// Means over the selected runs.
    pub mean_final_train_loss: f64,
    pub mean_min_train_loss: f64,
    pub mean_min_test_loss: f64,
    pub full_gradients: u64,
    pub minibatch_gradients: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub network: String,
    pub n_params: usize,
    pub train_samples: usize,
    pub test_samples: usize,
    pub sgd: OptimizerSummary,
    pub bfgs: OptimizerSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SetProvenance {
    optimizer: OptimizerKind,
    /// `min_train` or `min_test`.
    snapshot: String,
    members: Vec<usize>,
    epochs: Vec<usize>,
    train_loss: Vec<f64>,
    test_loss: Vec<f64>,
}

#[derive(Serialize)]
struct TraceFile<'a> {
    member: usize,
    init_seed: u64,
    #[serde(flatten)]
    trace: &'a TrainingTrace,
}

pub struct TrainOutput {
    pub summary: TrainSummary,
    pub sets: BTreeMap<String, SolutionSet>,
    pub manifest: Manifest,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    s / n as f64
}

/// Trains the ensemble with both optimizers, keeps the `select` runs with the
/// lowest training loss per optimizer and stores, for each, the snapshot at
/// minimum training loss (`*_train`) and at minimum test loss (`*_test`).
pub fn cmd_train(cfg: &ExperimentConfig, out: &Path) -> Result<TrainOutput> {
    cfg.validate()?;
    let started = Instant::now();
    let (train, test) = load_data(cfg)?;
    with_workers(cfg.workers, || train_inner(cfg, out, &train, &test, started))?
}

fn train_inner(cfg: &ExperimentConfig, out: &Path, train: &Dataset, test: &Dataset, started: Instant) -> Result<TrainOutput> {
    let spec = cfg.spec();
    let n = cfg.ensemble.size;
    let jobs: Vec<(OptimizerKind, usize)> = [OptimizerKind::LbfgsGss, OptimizerKind::Sgd]
        .into_iter()
        .flat_map(|o| (0..n).map(move |k| (o, k)))
        .collect();
    let runs: Vec<Result<TrainingRun>> = jobs
        .par_iter()
        .map(|&(opt, k)| {
            let p0 = nn::init_params(&spec, derive(cfg.seed, Stream::Init, k as u64));
            let result = match opt {
                OptimizerKind::Sgd => sgd_run(&spec, &p0, train, test, &cfg.sgd, derive(cfg.seed, Stream::SgdShuffle, k as u64)),
                OptimizerKind::LbfgsGss => lbfgs_gss_run(&spec, &p0, train, test, &cfg.lbfgs, derive(cfg.seed, Stream::Init, k as u64)),
            };
            log::info!("{} run {k} finished", opt.tag());
            result
        })
        .collect();

    let mut dir = OutputDir::create(out)?;
    let mut seeds = BTreeMap::new();
    for k in 0..n {
        seeds.insert(format!("init/{k:03}"), derive(cfg.seed, Stream::Init, k as u64));
        seeds.insert(format!("sgd_shuffle/{k:03}"), derive(cfg.seed, Stream::SgdShuffle, k as u64));
    }

    let mut sets = BTreeMap::new();
    let mut provenance = BTreeMap::new();
    let mut summaries = BTreeMap::new();
    for (opt, chunk) in [OptimizerKind::LbfgsGss, OptimizerKind::Sgd].into_iter().zip(runs.chunks(n)) {
        let mut excluded = Vec::new();
        let mut ok: Vec<(usize, &TrainingRun)> = Vec::new();
        for (k, r) in chunk.iter().enumerate() {
            match r {
                Ok(run) => {
                    let file = TraceFile {
                        member: k,
                        init_seed: derive(cfg.seed, Stream::Init, k as u64),
                        trace: &run.trace,
                    };
                    dir.write_json(&format!("traces/{}_{k:03}.json", opt.tag()), &file)?;
                    ok.push((k, run));
                }
                Err(Error::NonFinite(reason)) => {
                    log::warn!("{} run {k} excluded: {reason}", opt.tag());
                    excluded.push(ExcludedRun {
                        member: k,
                        reason: reason.clone(),
                    });
                }
                Err(e) => return Err(Error::InvalidArgument(format!("{} run {k}: {e}", opt.tag()))),
            }
        }
        if ok.is_empty() {
            return Err(Error::NonFinite(format!("every {} run diverged", opt.tag())));
        }
        ok.sort_by(|a, b| a.1.trace.min_train_loss().total_cmp(&b.1.trace.min_train_loss()).then(a.0.cmp(&b.0)));
        if ok.len() < cfg.ensemble.select {
            log::warn!("only {} {} runs survived; selecting all", ok.len(), opt.tag());
        }
        ok.truncate(cfg.ensemble.select);
        let selected: Vec<usize> = ok.iter().map(|(k, _)| *k).collect();

        for (suffix, pick) in [("train", true), ("test", false)] {
            let name = format!("{}_{suffix}", opt.tag());
            let vectors: Vec<ParamVector> = ok
                .iter()
                .map(|(_, r)| if pick { r.best_train.clone() } else { r.best_test.clone() })
                .collect();
            let epochs: Vec<usize> = ok
                .iter()
                .map(|(_, r)| if pick { r.trace.best_train_epoch } else { r.trace.best_test_epoch })
                .collect();
            provenance.insert(
                name.clone(),
                SetProvenance {
                    optimizer: opt,
                    snapshot: format!("min_{suffix}"),
                    members: selected.clone(),
                    train_loss: ok.iter().zip(&epochs).map(|((_, r), &e)| r.trace.train_loss[e]).collect(),
                    test_loss: ok.iter().zip(&epochs).map(|((_, r), &e)| r.trace.test_loss[e]).collect(),
                    epochs,
                },
            );
            sets.insert(name, SolutionSet::new(&spec, vectors)?);
        }
        summaries.insert(
            opt,
            OptimizerSummary {
                completed: chunk.len() - excluded.len(),
                excluded,
                mean_final_train_loss: mean(ok.iter().map(|(_, r)| r.trace.final_train_loss())),
                mean_min_train_loss: mean(ok.iter().map(|(_, r)| r.trace.min_train_loss())),
                mean_min_test_loss: mean(ok.iter().map(|(_, r)| r.trace.min_test_loss())),
                full_gradients: ok.iter().map(|(_, r)| r.trace.full_gradients).sum(),
                minibatch_gradients: ok.iter().map(|(_, r)| r.trace.minibatch_gradients).sum(),
                selected,
            },
        );
    }
    for name in SET_NAMES {
        dir.write(&solution_file(name), &sets[name].to_bytes())?;
    }
    dir.write_json("solutions/sets.json", &provenance)?;
    let summary = TrainSummary {
        network: spec.descriptor(),
        n_params: spec.n_params(),
        train_samples: train.len(),
        test_samples: test.len(),
        sgd: summaries.remove(&OptimizerKind::Sgd).unwrap(),
        bfgs: summaries.remove(&OptimizerKind::LbfgsGss).unwrap(),
    };
    dir.write_json("stats/train_summary.json", &summary)?;
    let manifest = dir.finish("train", manifest_config(cfg)?, seeds, started.elapsed().as_secs_f64())?;
    Ok(TrainOutput { summary, sets, manifest })
}
