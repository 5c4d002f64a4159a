//! Parameter-update engines: mini-batch SGD, L-BFGS with golden-section line
//! search, and Adam.

pub mod adam;
pub mod gss;
pub mod lbfgs;
pub mod sgd;
pub mod train;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use gss::{golden_section, golden_section_search, GssConfig};
pub use lbfgs::{lbfgs_direction, LbfgsGssConfig, LbfgsHistory};
pub use sgd::{sgd_step, SgdConfig};
pub use train::{lbfgs_gss_run, sgd_run, OptimizerKind, TrainingRun, TrainingTrace};
