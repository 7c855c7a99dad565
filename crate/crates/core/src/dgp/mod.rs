//! Seeded data-generating processes with known regression functions.

mod fourier;
mod rate_toy;
mod sims;

pub use fourier::{beta, beta_schedule, tail_bound, zero_set, zeroed_intervals, FourierDgpConfig};
pub use rate_toy::{rate_toy_losses, RateToyConfig};
pub use sims::{Sim1Config, Sim2Config, Sim3Config};

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::Result;
use crate::rng::RngSpec;

/// Any of the generators, tagged by `kind` in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DgpConfig {
    Sim1(Sim1Config),
    Sim2(Sim2Config),
    Sim3(Sim3Config),
    Fourier(FourierDgpConfig),
    RateToy(RateToyConfig),
}

impl DgpConfig {
    /// `n` i.i.d. rows.
    pub fn generate(&self, n: usize, rng: &RngSpec) -> Result<Dataset> {
        match self {
            DgpConfig::Sim1(c) => c.generate(n, rng),
            DgpConfig::Sim2(c) => c.generate(n, rng),
            DgpConfig::Sim3(c) => c.generate(n, rng),
            DgpConfig::Fourier(c) => c.generate(n, rng),
            DgpConfig::RateToy(c) => c.generate(n, rng),
        }
    }

    /// Noiseless regression function at a predictor row.
    pub fn mean(&self, x: &[f64]) -> f64 {
        match self {
            DgpConfig::Sim1(c) => c.mean(x),
            DgpConfig::Sim2(c) => c.mean(x),
            DgpConfig::Sim3(c) => c.mean(x),
            DgpConfig::Fourier(c) => c.mean(x),
            DgpConfig::RateToy(c) => c.mean(x),
        }
    }

    pub fn column_names(&self) -> Vec<String> {
        match self {
            DgpConfig::Sim1(c) => c.column_names(),
            DgpConfig::Sim2(_) | DgpConfig::Fourier(_) | DgpConfig::RateToy(_) => vec!["X".into()],
            DgpConfig::Sim3(c) => c.column_names(),
        }
    }

    /// Sample size the generator is normally run at.
    pub fn default_n(&self) -> usize {
        match self {
            DgpConfig::Sim1(c) => c.n,
            DgpConfig::Sim2(c) => c.n,
            DgpConfig::Sim3(c) => c.n,
            DgpConfig::Fourier(c) => c.n,
            DgpConfig::RateToy(c) => c.n,
        }
    }
}

pub(crate) fn named(n: usize, p: usize, x: Vec<f64>, y: Vec<f64>, names: Vec<String>) -> Result<Dataset> {
    debug_assert_eq!(x.len(), n * p);
    Dataset::new(x, p, y, Some(names))
}
