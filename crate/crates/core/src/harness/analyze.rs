use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use super::config::ExperimentConfig;
use super::store::{Manifest, OutputDir};
use super::{manifest_config, load_sets, with_workers, SET_NAMES};
use crate::analysis::{component_stats, distances_csv, scores_csv, shell_stats, ComponentStats, KpcaModel, ShellStats};
use crate::error::Result;
use crate::nn::ParamVector;

/// Set pairs compared by kPCA and the centroid shells.
pub const COMPARISONS: [(&str, &str); 2] = [("bfgs_train", "sgd_test"), ("bfgs_test", "sgd_test")];

pub struct Comparison {
    pub a: String,
    pub b: String,
    /// One row per vector, `a` first.
    pub scores: ndarray::Array2<f64>,
    pub eigenvalues: Vec<f64>,
    pub shell: ShellStats,
}

pub struct AnalyzeOutput {
    pub comparisons: Vec<Comparison>,
    pub components: BTreeMap<String, ComponentStats>,
    pub manifest: Manifest,
}

#[derive(Serialize)]
struct KpcaSummary<'a> {
    kernel: crate::analysis::KernelKind,
    eigenvalues: &'a [f64],
}

pub fn cmd_analyze(cfg: &ExperimentConfig, out: &Path) -> Result<AnalyzeOutput> {
    cfg.validate()?;
    let started = Instant::now();
    let sets = load_sets(cfg, out, &SET_NAMES)?;
    let by_name: BTreeMap<&str, &Vec<ParamVector>> = SET_NAMES.iter().copied().zip(sets.iter().map(|s| &s.vectors)).collect();
    let kernel = cfg.analysis.kernel_kind(cfg.spec().n_params());

    with_workers(cfg.workers, || {
        let mut dir = OutputDir::create(out)?;
        let mut comparisons = Vec::new();
        for (a, b) in COMPARISONS {
            let (va, vb) = (by_name[a], by_name[b]);
            let points: Vec<&ParamVector> = va.iter().chain(vb.iter()).collect();
            let labels: Vec<&str> = va.iter().map(|_| a).chain(vb.iter().map(|_| b)).collect();
            let points: Vec<&[f64]> = points.into_iter().map(|p| p.as_slice()).collect();
            let model = KpcaModel::fit(&points, kernel, cfg.analysis.components)?;
            let stem = format!("{a}_vs_{b}");
            dir.write(&format!("kpca/{stem}.csv"), scores_csv(&labels, model.fit_scores())?.as_bytes())?;
            dir.write_json(
                &format!("kpca/{stem}.json"),
                &KpcaSummary {
                    kernel,
                    eigenvalues: model.eigenvalues(),
                },
            )?;
            let shell = shell_stats(va, vb)?;
            dir.write_json(&format!("stats/shell_{stem}.json"), &shell)?;
            dir.write(&format!("stats/distances_{stem}.csv"), distances_csv(a, b, &shell).as_bytes())?;
            comparisons.push(Comparison {
                a: a.into(),
                b: b.into(),
                scores: model.fit_scores().clone(),
                eigenvalues: model.eigenvalues().to_vec(),
                shell,
            });
        }
        let mut components = BTreeMap::new();
        for name in SET_NAMES {
            components.insert(name.to_string(), component_stats(by_name[name])?);
        }
        dir.write_json("stats/components.json", &components)?;
        let manifest = dir.finish("analyze", manifest_config(cfg)?, BTreeMap::new(), started.elapsed().as_secs_f64())?;
        Ok(AnalyzeOutput {
            comparisons,
            components,
            manifest,
        })
    })?
}
