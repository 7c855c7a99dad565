use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::named;
use crate::data::Dataset;
use crate::error::Result;
use crate::rng::RngSpec;

fn d10000() -> usize {
    10_000
}
fn d1() -> f64 {
    1.0
}

/// `y = x^2 + sigma e`, `x ~ U(0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateToyConfig {
    #[serde(default = "d10000")]
    pub n: usize,
    #[serde(default = "d1")]
    pub sigma: f64,
}

impl Default for RateToyConfig {
    fn default() -> Self {
        RateToyConfig { n: 10_000, sigma: 1.0 }
    }
}

impl RateToyConfig {
    pub fn mean(&self, x: &[f64]) -> f64 {
        x[0] * x[0]
    }

    /// Right end of the weight window, `n^(-1/8)`.
    pub fn window(n: usize) -> f64 {
        (n as f64).powf(-0.125)
    }

    pub fn generate(&self, n: usize, rng: &RngSpec) -> Result<Dataset> {
        let mut r = rng.rng();
        let mut x = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let v: f64 = r.gen();
            let e: f64 = r.sample(StandardNormal);
            y.push(v * v + self.sigma * e);
            x.push(v);
        }
        named(n, 1, x, y, vec!["X".into()])
    }
}

/// Exact window-weighted losses of the two toy models.
///
/// Model 1 is `x^2 + eps_bar`, so its loss is `eps_bar^2`. Model 2 is
/// identically zero: `int_0^a x^4 / a dx = a^4 / 5` with `a = n^(-1/8)`.
pub fn rate_toy_losses(n: usize, n1: usize, eps_bar: f64) -> (f64, f64) {
    assert!(n >= 1 && n1 >= 1, "sample sizes must be positive");
    (eps_bar * eps_bar, (n as f64).powf(-0.5) / 5.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        assert!((rate_toy_losses(10_000, 1000, 0.3).1 - 0.002).abs() < 1e-15);
        assert_eq!(rate_toy_losses(10_000, 1000, 0.0).0, 0.0);
        assert!((rate_toy_losses(1, 1, 0.5).1 - 0.2).abs() < 1e-15);
        assert_eq!(rate_toy_losses(1, 1, 0.5).0, 0.25);
    }

    #[test]
    fn model_two_loss_matches_quadrature() {
        let n = 10_000;
        let a = RateToyConfig::window(n);
        let m = 100_000;
        let h = a / m as f64;
        let integral: f64 = (0..m)
            .map(|i| {
                let x = (i as f64 + 0.5) * h;
                x.powi(4) / a * h
            })
            .sum();
        assert!((integral - rate_toy_losses(n, 1000, 0.0).1).abs() < 1e-9);
    }
}
