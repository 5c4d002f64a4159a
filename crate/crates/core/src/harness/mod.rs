//! Experiment runner: ensemble training, path surveys, analysis exports and
//! the synthetic-surface reproduction, all writing into one output directory.
//!
//! Output layout:
//!
//! ```text
//! manifest.json          config snapshots (minus workers), seeds, artifact checksums
//! timings.json           wall-clock seconds per command (not checksummed)
//! traces/*.json          per-run loss curves
//! solutions/*.bin        bfgs_train, bfgs_test, sgd_train, sgd_test
//! solutions/sets.json    which runs and epochs each set came from
//! paths/*.jsonl          one path record per line
//! histograms/*.csv       barrier-height histograms
//! kpca/*.csv             component scores
//! stats/*.json           summaries
//! ```

mod analyze;
pub mod config;
pub mod store;
mod survey;
mod synth;
mod train;

pub use analyze::{cmd_analyze, AnalyzeOutput, Comparison, COMPARISONS};
pub use config::{AnalysisConfig, Architecture, DataConfig, EnsembleConfig, ExperimentConfig, KernelChoice, PathSettings};
pub use store::{verify_manifest, Manifest, OutputDir, SolutionSet};
pub use survey::{cmd_pathsurvey, cmd_pathsurvey_sets, LandscapeChoice, SurveyOutput};
pub use synth::{cmd_synth, SynthOutput, SYNTHETIC_LAMBDAS};
pub use train::{cmd_train, load_data, ExcludedRun, OptimizerSummary, TrainOutput, TrainSummary};

use std::path::Path;

use crate::error::{Error, Result};

pub const SET_NAMES: [&str; 4] = ["bfgs_train", "bfgs_test", "sgd_train", "sgd_test"];

pub fn solution_file(set: &str) -> String {
    format!("solutions/{set}.bin")
}

/// Runs `f` on a pool of `workers` threads (0 = one per core).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(f))
}

/// Config snapshot for the manifest. The worker count does not change any
/// output, so it is left out.
fn manifest_config(cfg: &ExperimentConfig) -> Result<serde_json::Value> {
    let mut v = serde_json::to_value(cfg)?;
    if let Some(map) = v.as_object_mut() {
        map.remove("workers");
    }
    Ok(v)
}

/// Reads the named solution sets and checks they belong to `cfg`'s architecture.
pub fn load_sets(cfg: &ExperimentConfig, root: &Path, names: &[&str]) -> Result<Vec<SolutionSet>> {
    let spec = cfg.spec();
    names
        .iter()
        .map(|name| {
            let set = SolutionSet::read(&root.join(solution_file(name)))?;
            if !set.matches(&spec) {
                return Err(Error::SolutionFile(format!(
                    "{name} was written for a different architecture than {}",
                    spec.descriptor()
                )));
            }
            if set.is_empty() {
                return Err(Error::SolutionFile(format!("{name} is empty")));
            }
            Ok(set)
        })
        .collect()
}
