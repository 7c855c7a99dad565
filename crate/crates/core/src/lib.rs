//! Targeted cross-validation: selecting among candidate regression procedures
//! under a weighted squared-error loss.

pub mod config;
pub mod cv;
pub mod data;
pub mod dgp;
pub mod error;
pub mod estimators;
pub mod exec;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod report;
pub mod rng;
pub mod weights;

pub use data::{ColumnRef, Dataset, Region, Split};
pub use error::{Error, Result};
pub use exec::Execution;
pub use rng::{Purpose, RngSpec};
