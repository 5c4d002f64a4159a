//! Geometry of solution sets: kernel PCA, centroid shells, component statistics.

pub mod eigen;
pub mod kernel;
pub mod kpca;
pub mod stats;

pub use eigen::{symmetric_eigen, SymmetricEigen};
pub use kernel::{center_kernel, kernel_matrix, KernelKind};
pub use kpca::{scores_csv, KpcaModel};
pub use stats::{component_stats, distances_csv, shell_stats, ComponentStats, GroupSummary, ShellStats};
