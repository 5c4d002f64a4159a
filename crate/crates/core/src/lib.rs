pub mod analysis;
pub mod data;
pub mod error;
pub mod harness;
pub mod landscape;
pub mod nn;
pub mod optim;
pub mod path;
pub mod seeds;
pub mod vecmath;

pub use error::{Error, Result};
