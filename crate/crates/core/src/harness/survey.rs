use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::store::{Manifest, OutputDir};
use super::{manifest_config, load_sets, load_data, with_workers, SET_NAMES};
use crate::analysis::GroupSummary;
use crate::error::{Error, Result};
use crate::landscape::nn_landscape;
use crate::path::{barrier_survey, Histogram, SurveyRecord};
use crate::seeds::{derive, Stream};

pub const HISTOGRAM_BINS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LandscapeChoice {
    Train,
    Test,
}

impl LandscapeChoice {
    pub fn tag(self) -> &'static str {
        match self {
            LandscapeChoice::Train => "train",
            LandscapeChoice::Test => "test",
        }
    }

    /// Sets surveyed on this landscape: all four on the training landscape,
    /// the early-stopped ones on the test landscape.
    pub fn sets(self) -> &'static [&'static str] {
        match self {
            LandscapeChoice::Train => &SET_NAMES,
            LandscapeChoice::Test => &["bfgs_test", "sgd_test"],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct HeightSummary {
    landscape: String,
    sets: BTreeMap<String, GroupSummary>,
}

pub struct SurveyOutput {
    pub landscape: String,
    pub records: BTreeMap<String, Vec<SurveyRecord>>,
    pub summaries: BTreeMap<String, GroupSummary>,
    pub manifest: Manifest,
}

impl SurveyOutput {
    pub fn median_height(&self, set: &str) -> f64 {
        self.summaries[set].median
    }
}

/// Barrier-height survey of each solution set on the chosen landscape.
pub fn cmd_pathsurvey(cfg: &ExperimentConfig, out: &Path, choice: LandscapeChoice) -> Result<SurveyOutput> {
    cmd_pathsurvey_sets(cfg, out, choice, choice.sets())
}

/// [`cmd_pathsurvey`] restricted to some of the landscape's sets.
pub fn cmd_pathsurvey_sets(
    cfg: &ExperimentConfig,
    out: &Path,
    choice: LandscapeChoice,
    names: &[&str],
) -> Result<SurveyOutput> {
    cfg.validate()?;
    let started = Instant::now();
    if names.is_empty() {
        return Err(Error::InvalidArgument("no solution sets to survey".into()));
    }
    if let Some(bad) = names.iter().find(|n| !choice.sets().contains(n)) {
        return Err(Error::InvalidArgument(format!(
            "{bad} is not surveyed on the {} landscape",
            choice.tag()
        )));
    }
    let sets = load_sets(cfg, out, names)?;
    let (train, test) = load_data(cfg)?;
    let data = match choice {
        LandscapeChoice::Train => train,
        LandscapeChoice::Test => test,
    };
    let data = match cfg.path.landscape_samples {
        0 => data,
        n => data.head(n.min(data.len()))?,
    };
    let spec = cfg.spec();
    let landscape = nn_landscape(&spec, &data)?;
    let path_cfg = cfg.path.path_config();

    with_workers(cfg.workers, || {
        let mut records = BTreeMap::new();
        let mut seeds = BTreeMap::new();
        for (name, set) in names.iter().zip(&sets) {
            let index = SET_NAMES.iter().position(|s| s == name).unwrap() as u64;
            let seed = derive(cfg.seed, Stream::PairSampling, index);
            seeds.insert(format!("pairs/{name}"), seed);
            log::info!("surveying {name} on {}", landscape.label());
            let recs = barrier_survey(&set.vectors, &landscape, cfg.path.n_pairs, seed, &path_cfg)?;
            records.insert(name.to_string(), recs);
        }

        let mut dir = OutputDir::create(out)?;
        let tag = choice.tag();
        let heights: BTreeMap<&String, Vec<f64>> =
            records.iter().map(|(k, v)| (k, v.iter().map(|r| r.report.height).collect())).collect();
        let all: Vec<f64> = heights.values().flatten().copied().collect();
        let mut summaries = BTreeMap::new();
        for (name, recs) in &records {
            let mut jsonl = String::new();
            for r in recs {
                jsonl.push_str(&serde_json::to_string(r)?);
                jsonl.push('\n');
            }
            dir.write(&format!("paths/{tag}_{name}.jsonl"), jsonl.as_bytes())?;
            let h = Histogram::auto(&all, HISTOGRAM_BINS)?;
            let h = Histogram::new(&heights[name], HISTOGRAM_BINS, h.edges[0], *h.edges.last().unwrap())?;
            dir.write(&format!("histograms/{tag}_{name}.csv"), h.to_csv().as_bytes())?;
            summaries.insert(name.clone(), GroupSummary::of(&heights[name])?);
        }
        let landscape_label = landscape.label().to_string();
        dir.write_json(
            &format!("stats/heights_{tag}.json"),
            &HeightSummary {
                landscape: landscape_label.clone(),
                sets: summaries.clone(),
            },
        )?;
        let manifest = dir.finish(
            &format!("pathsurvey_{tag}"),
            manifest_config(cfg)?,
            seeds,
            started.elapsed().as_secs_f64(),
        )?;
        Ok(SurveyOutput {
            landscape: landscape_label,
            records,
            summaries,
            manifest,
        })
    })?
}
