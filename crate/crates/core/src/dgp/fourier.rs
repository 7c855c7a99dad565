use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::named;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::estimators::fourier::phi;
use crate::rng::RngSpec;

/// Closed intervals of zeroed coefficients, `[2^(3^(q-1)), 2^(3^q)]` for odd
/// `q`, listed while the left endpoint fits in a `u64`.
pub fn zeroed_intervals() -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    let mut q = 1u32;
    loop {
        let lo_exp = 3u64.pow(q - 1);
        if lo_exp >= 64 {
            break;
        }
        let hi_exp = 3u64.pow(q);
        let hi = if hi_exp >= 64 { u64::MAX } else { 1u64 << hi_exp };
        out.push((1u64 << lo_exp, hi));
        q += 2;
    }
    out
}

/// `0` inside a zeroed interval, `1/j^2` otherwise.
pub fn beta(j: u64) -> f64 {
    assert!(j >= 1, "coefficients start at j = 1");
    for (lo, hi) in zeroed_intervals() {
        if lo > j {
            break;
        }
        if j <= hi {
            return 0.0;
        }
    }
    1.0 / (j as f64 * j as f64)
}

/// `beta_1..=beta_j_max`.
pub fn beta_schedule(j_max: usize) -> Vec<f64> {
    (1..=j_max as u64).map(beta).collect()
}

/// Indices `j <= j_max` whose coefficient is zero.
pub fn zero_set(j_max: usize) -> Vec<u64> {
    (1..=j_max as u64).filter(|&j| beta(j) == 0.0).collect()
}

/// Upper bound on the squared-coefficient tail beyond `j_max`.
pub fn tail_bound(j_max: usize) -> f64 {
    (j_max as f64).powi(-3) / 3.0
}

fn d4096() -> usize {
    4096
}
fn d64() -> usize {
    64
}
fn d1() -> f64 {
    1.0
}

/// `y = sum_{j <= j_max} beta_j phi_j(x) + e`, `x ~ U(0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierDgpConfig {
    #[serde(default = "d4096")]
    pub n: usize,
    #[serde(default = "d64")]
    pub j_max: usize,
    #[serde(default = "d1")]
    pub noise_sd: f64,
}

impl Default for FourierDgpConfig {
    fn default() -> Self {
        FourierDgpConfig {
            n: 4096,
            j_max: 64,
            noise_sd: 1.0,
        }
    }
}

impl FourierDgpConfig {
    pub fn mean(&self, x: &[f64]) -> f64 {
        (1..=self.j_max as u64)
            .map(|j| {
                let b = beta(j);
                if b == 0.0 {
                    0.0
                } else {
                    b * phi(j as u32, x[0])
                }
            })
            .sum()
    }

    pub fn generate(&self, n: usize, rng: &RngSpec) -> Result<Dataset> {
        if self.j_max == 0 || self.j_max > u32::MAX as usize {
            return Err(Error::InvalidConfig("fourier j_max must be positive".into()));
        }
        let mut r = rng.rng();
        let mut x = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let v: f64 = r.gen();
            let e: f64 = r.sample(StandardNormal);
            y.push(self.mean(&[v]) + self.noise_sd * e);
            x.push(v);
        }
        named(n, 1, x, y, vec!["X".into()])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_examples() {
        assert_eq!(zeroed_intervals()[0], (2, 8));
        assert_eq!(zeroed_intervals()[1], (512, 1 << 27));
        assert_eq!(beta(1), 1.0);
        assert_eq!(beta(9), 1.0 / 81.0);
        assert_eq!(zero_set(511), (2..=8).collect::<Vec<_>>());
        assert_eq!(beta(512), 0.0);
        assert_eq!(beta((1 << 27) + 1), 1.0 / ((1u64 << 27) as f64 + 1.0).powi(2));
        assert!((tail_bound(64) - 1.2716e-6).abs() < 1e-9);
    }

    #[test]
    fn tail_bound_dominates_truncated_mass() {
        for j_max in [8usize, 16, 64, 200] {
            let tail: f64 = (j_max as u64 + 1..200_000).map(|j| beta(j).powi(2)).sum();
            assert!(tail <= tail_bound(j_max), "{j_max}");
        }
    }

    #[test]
    fn zero_at_origin_and_second_moment() {
        let cfg = FourierDgpConfig::default();
        assert_eq!(cfg.mean(&[0.0]), 0.0);
        let d = cfg.generate(100_000, &RngSpec::new(11)).unwrap();
        let m2 = d.y().iter().map(|v| v * v).sum::<f64>() / d.n() as f64;
        let target: f64 = beta_schedule(64).iter().map(|b| b * b).sum::<f64>() + 1.0;
        assert!((m2 - target).abs() < 0.03, "{m2} vs {target}");
    }
}
