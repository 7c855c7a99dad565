use rand::distributions::Open01;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::named;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::RngSpec;

fn d800() -> usize {
    800
}
fn d100() -> usize {
    100
}
fn d20() -> f64 {
    20.0
}
fn d01() -> f64 {
    0.1
}
fn d5000() -> usize {
    5000
}

/// `Y = X0 + (1 - I)(X1 + ... + Xp) + e`, with `X0` independent of the
/// equicorrelated block `X1..Xp` and `I ~ Bernoulli(bernoulli_p)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sim1Config {
    #[serde(default = "d800")]
    pub n: usize,
    pub sigma: f64,
    #[serde(default = "d100")]
    pub p_extra: usize,
    #[serde(default = "d20")]
    pub var_x0: f64,
    /// Diagonal of the extra block.
    #[serde(default = "d01")]
    pub var_extra: f64,
    /// Off-diagonal of the extra block.
    #[serde(default = "d01")]
    pub cov_extra: f64,
    #[serde(default = "d01")]
    pub bernoulli_p: f64,
    #[serde(default = "d5000")]
    pub eval_n: usize,
}

impl Sim1Config {
    pub fn with_sigma(sigma: f64) -> Self {
        Sim1Config {
            n: 800,
            sigma,
            p_extra: 100,
            var_x0: 20.0,
            var_extra: 0.1,
            cov_extra: 0.1,
            bernoulli_p: 0.1,
            eval_n: 5000,
        }
    }

    pub fn column_names(&self) -> Vec<String> {
        (0..=self.p_extra)
            .map(|k| format!("X{k}"))
            .chain(std::iter::once("I".to_string()))
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0
            && self.var_x0 >= 0.0
            && self.cov_extra >= 0.0
            && self.var_extra >= self.cov_extra
            && (0.0..=1.0).contains(&self.bernoulli_p))
        {
            return Err(Error::InvalidConfig(
                "sim1 needs sigma, var_x0 >= 0, var_extra >= cov_extra >= 0, p in [0,1]".into(),
            ));
        }
        Ok(())
    }

    pub fn generate(&self, n: usize, rng: &RngSpec) -> Result<Dataset> {
        self.validate()?;
        let p = self.p_extra + 2;
        let mut r = rng.rng();
        let sd0 = self.var_x0.sqrt();
        let shared = self.cov_extra.sqrt();
        let own = (self.var_extra - self.cov_extra).sqrt();
        let mut x = Vec::with_capacity(n * p);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let x0 = sd0 * r.sample::<f64, _>(StandardNormal);
            let z: f64 = r.sample(StandardNormal);
            x.push(x0);
            let mut block = 0.0;
            for _ in 0..self.p_extra {
                let mut v = shared * z;
                if own > 0.0 {
                    v += own * r.sample::<f64, _>(StandardNormal);
                }
                block += v;
                x.push(v);
            }
            let i = (r.gen::<f64>() < self.bernoulli_p) as u8 as f64;
            x.push(i);
            let e: f64 = r.sample(StandardNormal);
            y.push(x0 + (1.0 - i) * block + self.sigma * e);
        }
        named(n, p, x, y, self.column_names())
    }

    pub fn mean(&self, x: &[f64]) -> f64 {
        let i = x[self.p_extra + 1];
        x[0] + (1.0 - i) * x[1..=self.p_extra].iter().sum::<f64>()
    }
}

fn d200() -> usize {
    200
}
fn d250() -> f64 {
    250.0
}
fn d1() -> f64 {
    1.0
}

/// Quadratic `a (x + b)^2` on `(0, b]`, linear `s x` on `(b, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sim2Config {
    #[serde(default = "d200")]
    pub n: usize,
    #[serde(default = "d01")]
    pub break_point: f64,
    #[serde(default = "d250")]
    pub quad_scale: f64,
    #[serde(default = "d100f")]
    pub slope: f64,
    #[serde(default = "d1")]
    pub noise_sd: f64,
    #[serde(default = "d5000")]
    pub eval_n: usize,
}

fn d100f() -> f64 {
    100.0
}

impl Default for Sim2Config {
    fn default() -> Self {
        Sim2Config {
            n: 200,
            break_point: 0.1,
            quad_scale: 250.0,
            slope: 100.0,
            noise_sd: 1.0,
            eval_n: 5000,
        }
    }
}

impl Sim2Config {
    pub fn mean(&self, x: &[f64]) -> f64 {
        let v = x[0];
        if v <= self.break_point {
            self.quad_scale * (v + self.break_point).powi(2)
        } else {
            self.slope * v
        }
    }

    pub fn generate(&self, n: usize, rng: &RngSpec) -> Result<Dataset> {
        let mut r = rng.rng();
        let mut x = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let v: f64 = r.sample(Open01);
            let e: f64 = r.sample(StandardNormal);
            y.push(self.mean(&[v]) + self.noise_sd * e);
            x.push(v);
        }
        named(n, 1, x, y, vec!["X".into()])
    }
}

fn d1000() -> usize {
    1000
}

/// `Y = 2 exp(-5 x1^2) + 2 x1 + x2 + 0.5 x3 + 0.1 x4 + e` with AR(1)
/// predictors, `corr(Xi, Xj) = rho^|i-j|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sim3Config {
    #[serde(default = "d200")]
    pub n: usize,
    #[serde(default = "d1000")]
    pub p: usize,
    #[serde(default = "d01")]
    pub rho: f64,
    #[serde(default = "d1")]
    pub noise_sd: f64,
    #[serde(default = "d5000")]
    pub eval_n: usize,
}

impl Default for Sim3Config {
    fn default() -> Self {
        Sim3Config {
            n: 200,
            p: 1000,
            rho: 0.1,
            noise_sd: 1.0,
            eval_n: 5000,
        }
    }
}

impl Sim3Config {
    pub fn column_names(&self) -> Vec<String> {
        (1..=self.p).map(|k| format!("X{k}")).collect()
    }

    pub fn mean(&self, x: &[f64]) -> f64 {
        2.0 * (-5.0 * x[0] * x[0]).exp() + 2.0 * x[0] + x[1] + 0.5 * x[2] + 0.1 * x[3]
    }

    pub fn generate(&self, n: usize, rng: &RngSpec) -> Result<Dataset> {
        if self.p < 4 || !(self.rho.abs() < 1.0) {
            return Err(Error::InvalidConfig("sim3 needs p >= 4 and |rho| < 1".into()));
        }
        let mut r = rng.rng();
        let innov = (1.0 - self.rho * self.rho).sqrt();
        let mut x = Vec::with_capacity(n * self.p);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let start = x.len();
            let mut prev: f64 = r.sample(StandardNormal);
            x.push(prev);
            for _ in 1..self.p {
                prev = self.rho * prev + innov * r.sample::<f64, _>(StandardNormal);
                x.push(prev);
            }
            let e: f64 = r.sample(StandardNormal);
            y.push(self.mean(&x[start..]) + self.noise_sd * e);
        }
        named(n, self.p, x, y, self.column_names())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moments(d: &Dataset, a: usize, b: usize) -> (f64, f64, f64) {
        let n = d.n() as f64;
        let ma = (0..d.n()).map(|i| d.value(i, a)).sum::<f64>() / n;
        let mb = (0..d.n()).map(|i| d.value(i, b)).sum::<f64>() / n;
        let mut saa = 0.0;
        let mut sbb = 0.0;
        let mut sab = 0.0;
        for i in 0..d.n() {
            let u = d.value(i, a) - ma;
            let v = d.value(i, b) - mb;
            saa += u * u;
            sbb += v * v;
            sab += u * v;
        }
        (saa / (n - 1.0), sbb / (n - 1.0), sab / (n - 1.0))
    }

    #[test]
    fn sim1_covariance_and_indicator() {
        let cfg = Sim1Config::with_sigma(25.0);
        let d = cfg.generate(100_000, &RngSpec::new(1)).unwrap();
        assert_eq!(d.p(), 102);
        let (v0, v1, c01) = moments(&d, 0, 1);
        assert!((v0 - 20.0).abs() < 0.5, "{v0}");
        assert!((v1 - 0.1).abs() < 0.02);
        assert!(c01.abs() < 0.02);
        let (_, v2, c12) = moments(&d, 1, 2);
        assert!((v2 - 0.1).abs() < 0.02 && (c12 - 0.1).abs() < 0.02);
        let (_, _, c02) = moments(&d, 0, 2);
        assert!(c02.abs() < 0.02);
        let frac = (0..d.n()).map(|i| d.value(i, 101)).sum::<f64>() / d.n() as f64;
        assert!((frac - 0.1).abs() < 0.01);
    }

    #[test]
    fn sim1_local_noise() {
        let cfg = Sim1Config::with_sigma(3.0);
        let d = cfg.generate(100_000, &RngSpec::new(2)).unwrap();
        let r: Vec<f64> = (0..d.n())
            .filter(|&i| d.value(i, 101) == 1.0)
            .map(|i| d.y()[i] - d.value(i, 0))
            .collect();
        let m = r.iter().sum::<f64>() / r.len() as f64;
        let v = r.iter().map(|e| (e - m) * (e - m)).sum::<f64>() / (r.len() - 1) as f64;
        assert!(m.abs() < 0.1);
        assert!((v - 9.0).abs() < 0.4);
        assert_eq!(cfg.mean(d.row(0)), d.row(0)[0] + (1.0 - d.row(0)[101]) * d.row(0)[1..101].iter().sum::<f64>());
    }

    #[test]
    fn sim2_branches() {
        let c = Sim2Config::default();
        assert!((c.mean(&[0.1]) - 10.0).abs() < 1e-12);
        assert!((c.mean(&[0.1 + 1e-12]) - 10.0).abs() < 1e-9);
        assert!((c.mean(&[0.5]) - 50.0).abs() < 1e-12);
        let d = c.generate(10_000, &RngSpec::new(3)).unwrap();
        assert!(d.column(0).iter().all(|&x| x > 0.0 && x < 1.0));
    }

    #[test]
    fn sim3_correlations() {
        let cfg = Sim3Config {
            p: 10,
            ..Sim3Config::default()
        };
        let d = cfg.generate(100_000, &RngSpec::new(4)).unwrap();
        let (a, b, c) = moments(&d, 0, 1);
        assert!((c / (a * b).sqrt() - 0.1).abs() < 0.01);
        let (a, b, c) = moments(&d, 0, 2);
        assert!((c / (a * b).sqrt() - 0.01).abs() < 0.01);
        assert!((a - 1.0).abs() < 0.02);
        assert_eq!(cfg.mean(&[0.0; 10]), 2.0);
    }

    #[test]
    fn generators_reproducible() {
        let a = Sim2Config::default().generate(50, &RngSpec::new(5)).unwrap();
        let b = Sim2Config::default().generate(50, &RngSpec::new(5)).unwrap();
        assert_eq!(a, b);
        let c = Sim2Config::default().generate(50, &RngSpec::new(6)).unwrap();
        assert_ne!(a, c);
    }
}
