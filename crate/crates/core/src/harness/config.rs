//! Experiment configuration, stored as versioned TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::KernelKind;
use crate::data::TrainSelection;
use crate::error::{Error, Result};
use crate::nn::NetworkSpec;
use crate::optim::adam::AdamConfig;
use crate::optim::lbfgs::LbfgsGssConfig;
use crate::optim::sgd::SgdConfig;
use crate::path::PathConfig;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    Fcp,
    Autoencoder,
}

impl Architecture {
    pub fn spec(self) -> NetworkSpec {
        match self {
            Architecture::Fcp => NetworkSpec::fcp(),
            Architecture::Autoencoder => NetworkSpec::autoencoder(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Directory holding the four decompressed MNIST IDX files.
    pub dir: PathBuf,
    pub train_cap: usize,
    pub test_cap: usize,
    pub selection: TrainSelection,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("data/mnist"),
            train_cap: 5_000,
            test_cap: 10_000,
            selection: TrainSelection::First,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleConfig {
    /// Random initializations per optimizer.
    pub size: usize,
    /// Lowest-training-loss runs kept per optimizer.
    pub select: usize,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self { size: 12, select: 8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathSettings {
    pub lambda: f64,
    pub n_fourier: usize,
    pub n_points: usize,
    pub iterations: usize,
    pub learning_rate: f64,
    /// Pairs surveyed per solution set.
    pub n_pairs: usize,
    /// Samples of the landscape dataset used for path losses (0 = all).
    pub landscape_samples: usize,
}

impl Default for PathSettings {
    fn default() -> Self {
        let p = PathConfig::default();
        Self {
            lambda: p.lambda,
            n_fourier: p.n_fourier,
            n_points: p.n_points,
            iterations: p.iterations,
            learning_rate: p.adam.learning_rate,
            n_pairs: 10,
            landscape_samples: 500,
        }
    }
}

impl PathSettings {
    pub fn path_config(&self) -> PathConfig {
        PathConfig {
            lambda: self.lambda,
            n_fourier: self.n_fourier,
            n_points: self.n_points,
            iterations: self.iterations,
            adam: AdamConfig {
                learning_rate: self.learning_rate,
                ..AdamConfig::default()
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelChoice {
    Linear,
    Polynomial,
    Rbf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub kernel: KernelChoice,
    /// RBF `2 sigma^2`; defaults to the parameter count.
    pub bandwidth: Option<f64>,
    pub degree: u32,
    pub offset: f64,
    pub components: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            kernel: KernelChoice::Rbf,
            bandwidth: None,
            degree: 2,
            offset: 1.0,
            components: 2,
        }
    }
}

impl AnalysisConfig {
    pub fn kernel_kind(&self, n_params: usize) -> KernelKind {
        match self.kernel {
            KernelChoice::Linear => KernelKind::Linear,
            KernelChoice::Polynomial => KernelKind::Polynomial {
                degree: self.degree,
                offset: self.offset,
            },
            KernelChoice::Rbf => KernelKind::Rbf {
                bandwidth: self.bandwidth.unwrap_or(n_params as f64),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub architecture: Architecture,
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    pub workers: usize,
    pub data: DataConfig,
    pub ensemble: EnsembleConfig,
    pub sgd: SgdConfig,
    pub lbfgs: LbfgsGssConfig,
    pub path: PathSettings,
    pub analysis: AnalysisConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            architecture: Architecture::Fcp,
            seed: 1,
            workers: 0,
            data: DataConfig::default(),
            ensemble: EnsembleConfig::default(),
            sgd: SgdConfig::default(),
            lbfgs: LbfgsGssConfig::default(),
            path: PathSettings::default(),
            analysis: AnalysisConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn spec(&self) -> NetworkSpec {
        self.architecture.spec()
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.version != CONFIG_VERSION {
            return fail(format!("unsupported config version {} (expected {CONFIG_VERSION})", self.version));
        }
        if self.ensemble.size == 0 {
            return fail("ensemble size must be positive".into());
        }
        if self.ensemble.select == 0 || self.ensemble.select > self.ensemble.size {
            return fail(format!(
                "selection count {} must be between 1 and the ensemble size {}",
                self.ensemble.select, self.ensemble.size
            ));
        }
        if self.data.train_cap == 0 || self.data.test_cap == 0 {
            return fail("train_cap and test_cap must be positive".into());
        }
        if self.analysis.components == 0 {
            return fail("analysis needs at least one component".into());
        }
        self.sgd.validate()?;
        self.lbfgs.gss.validate()?;
        if self.lbfgs.memory == 0 || self.lbfgs.max_iterations == 0 {
            return fail("L-BFGS memory and iteration budget must be positive".into());
        }
        self.path.path_config().validate()?;
        self.analysis.kernel_kind(self.spec().n_params()).validate()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_through_toml() {
        let cfg = ExperimentConfig::default();
        let text = cfg.to_toml().unwrap();
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn partial_files_use_defaults() {
        let cfg = ExperimentConfig::from_toml("version = 1\nseed = 7\n[ensemble]\nsize = 4\nselect = 2\n").unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.ensemble, EnsembleConfig { size: 4, select: 2 });
        assert_eq!(cfg.sgd, SgdConfig::default());
    }

    #[test]
    fn rejects_invalid_files() {
        assert!(matches!(
            ExperimentConfig::from_toml("version = 1\n[ensemble]\nsize = 4\nselect = 5\n"),
            Err(Error::Config(_))
        ));
        assert!(ExperimentConfig::from_toml("version = 2\n").is_err());
        assert!(ExperimentConfig::from_toml("version = 1\nbogus = 3\n").is_err());
        assert!(ExperimentConfig::from_toml("version = 1\n[path]\nlambda = -1.0\n").is_err());
    }

    #[test]
    fn rbf_bandwidth_defaults_to_parameter_count() {
        let a = AnalysisConfig::default();
        assert_eq!(a.kernel_kind(42_200), KernelKind::Rbf { bandwidth: 42_200.0 });
    }
}
