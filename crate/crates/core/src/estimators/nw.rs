//! Nadaraya-Watson regression with a Gaussian kernel; bandwidth by
//! leave-one-out least-squares cross-validation over a log-spaced grid.

use serde::{Deserialize, Serialize};

use super::{FitSummary, Regressor};
use crate::data::{ColumnRef, Dataset};
use crate::error::{Error, Result};

fn default_column() -> ColumnRef {
    ColumnRef::Index(0)
}
fn default_grid_points() -> usize {
    30
}
fn default_lo() -> f64 {
    0.05
}
fn default_hi() -> f64 {
    20.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NwConfig {
    #[serde(default = "default_column")]
    pub column: ColumnRef,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    /// Grid lower end as a multiple of the Silverman pilot bandwidth.
    #[serde(default = "default_lo")]
    pub lo_factor: f64,
    #[serde(default = "default_hi")]
    pub hi_factor: f64,
}

impl Default for NwConfig {
    fn default() -> Self {
        NwConfig {
            column: default_column(),
            grid_points: default_grid_points(),
            lo_factor: default_lo(),
            hi_factor: default_hi(),
        }
    }
}

/// `1.06 * sd(x) * n^(-1/5)` with the sample (n-1) standard deviation.
pub fn silverman_bandwidth(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    1.06 * var.sqrt() * n.powf(-0.2)
}

pub fn bandwidth_grid(pilot: f64, cfg: &NwConfig) -> Vec<f64> {
    let g = cfg.grid_points;
    if g == 1 {
        return vec![pilot * cfg.lo_factor];
    }
    let ratio = cfg.hi_factor / cfg.lo_factor;
    (0..g)
        .map(|k| pilot * cfg.lo_factor * ratio.powf(k as f64 / (g - 1) as f64))
        .collect()
}

/// Kernel average at `x`, falling back to the nearest training response when
/// every kernel weight underflows. `skip` excludes one training point.
fn kernel_average(xs: &[f64], ys: &[f64], x: f64, h: f64, skip: Option<usize>) -> f64 {
    let inv = -0.5 / (h * h);
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, (&xi, &yi)) in xs.iter().zip(ys).enumerate() {
        if Some(i) == skip {
            continue;
        }
        let d = x - xi;
        let k = (d * d * inv).exp();
        num += k * yi;
        den += k;
    }
    if den >= f64::MIN_POSITIVE {
        num / den
    } else {
        let mut best = f64::INFINITY;
        let mut val = 0.0;
        for (i, (&xi, &yi)) in xs.iter().zip(ys).enumerate() {
            if Some(i) == skip {
                continue;
            }
            let d = (x - xi).abs();
            if d < best {
                best = d;
                val = yi;
            }
        }
        val
    }
}

/// `sum_i (y_i - f_{-i}(x_i))^2`.
pub fn loo_score(xs: &[f64], ys: &[f64], h: f64) -> f64 {
    (0..xs.len())
        .map(|i| {
            let r = ys[i] - kernel_average(xs, ys, xs[i], h, Some(i));
            r * r
        })
        .sum()
}

#[derive(Debug, Clone)]
pub struct NwModel {
    column: usize,
    xs: Vec<f64>,
    ys: Vec<f64>,
    bandwidth: f64,
    pilot: f64,
}

impl NwModel {
    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }
}

impl Regressor for NwModel {
    fn predict(&self, x: &[f64]) -> f64 {
        kernel_average(&self.xs, &self.ys, x[self.column], self.bandwidth, None)
    }

    fn summary(&self) -> FitSummary {
        FitSummary::Kernel {
            bandwidth: self.bandwidth,
            pilot: self.pilot,
        }
    }
}

/// Fits with a caller-chosen bandwidth.
pub fn fit_nw_fixed(column: usize, data: &Dataset, rows: &[usize], h: f64) -> NwModel {
    let xs: Vec<f64> = rows.iter().map(|&i| data.value(i, column)).collect();
    let ys: Vec<f64> = rows.iter().map(|&i| data.y()[i]).collect();
    NwModel {
        column,
        xs,
        ys,
        bandwidth: h,
        pilot: h,
    }
}

pub fn fit_nw(cfg: &NwConfig, data: &Dataset, rows: &[usize]) -> Result<NwModel> {
    if cfg.grid_points == 0 || !(cfg.lo_factor > 0.0 && cfg.hi_factor >= cfg.lo_factor) {
        return Err(Error::InvalidConfig("bad bandwidth grid".into()));
    }
    let column = data.column_index(&cfg.column)?;
    let xs: Vec<f64> = rows.iter().map(|&i| data.value(i, column)).collect();
    let ys: Vec<f64> = rows.iter().map(|&i| data.y()[i]).collect();
    let first = xs[0];
    if xs.len() < 2 || xs.iter().all(|&x| x == first) {
        return Err(Error::DegenerateDesign(
            "kernel regression needs at least two distinct x values".into(),
        ));
    }
    let pilot = silverman_bandwidth(&xs);
    let n = xs.len();
    let mut d2 = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = xs[i] - xs[j];
            d2[i * n + j] = d * d;
            d2[j * n + i] = d * d;
        }
    }
    let mut best = (f64::INFINITY, pilot);
    let mut k = vec![0.0; n * n];
    for h in bandwidth_grid(pilot, cfg) {
        let inv = -0.5 / (h * h);
        for i in 0..n {
            for j in i + 1..n {
                let v = (d2[i * n + j] * inv).exp();
                k[i * n + j] = v;
                k[j * n + i] = v;
            }
        }
        let mut score = 0.0;
        for i in 0..n {
            let row = &k[i * n..(i + 1) * n];
            let mut num = 0.0;
            let mut den = 0.0;
            for j in 0..n {
                if j != i {
                    num += row[j] * ys[j];
                    den += row[j];
                }
            }
            let fit = if den >= f64::MIN_POSITIVE {
                num / den
            } else {
                kernel_average(&xs, &ys, xs[i], h, Some(i))
            };
            score += (ys[i] - fit) * (ys[i] - fit);
        }
        if score < best.0 {
            best = (score, h);
        }
    }
    Ok(NwModel {
        column,
        xs,
        ys,
        bandwidth: best.1,
        pilot,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(xs: &[f64], ys: &[f64]) -> Dataset {
        let rows: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        Dataset::from_rows(&rows, ys.to_vec()).unwrap()
    }

    #[test]
    fn constant_response_any_bandwidth() {
        let xs = [0.1, 0.2, 0.5, 0.9, 0.95];
        let d = data(&xs, &[3.0; 5]);
        let all: Vec<usize> = (0..5).collect();
        for h in [1e-4, 0.01, 0.3, 50.0] {
            let m = fit_nw_fixed(0, &d, &all, h);
            for x in [0.0, 0.33, 2.0] {
                assert!((m.predict(&[x]) - 3.0).abs() < 1e-12);
            }
        }
        let m = fit_nw(&NwConfig::default(), &d, &all).unwrap();
        assert!((m.predict(&[0.7]) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn huge_bandwidth_gives_mean() {
        let xs = [0.0, 0.3, 0.4, 0.8];
        let ys = [1.0, 5.0, -2.0, 4.0];
        let d = data(&xs, &ys);
        let m = fit_nw_fixed(0, &d, &[0, 1, 2, 3], 1e6);
        assert!((m.predict(&[0.3]) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn underflow_falls_back_to_nearest() {
        let xs = [0.0, 1.0];
        let d = data(&xs, &[10.0, 20.0]);
        let m = fit_nw_fixed(0, &d, &[0, 1], 1e-6);
        assert_eq!(m.predict(&[0.4]), 10.0);
        assert_eq!(m.predict(&[0.6]), 20.0);
    }

    #[test]
    fn loo_matches_brute_force() {
        let xs: [f64; 5] = [0.05, 0.21, 0.4, 0.62, 0.9];
        let ys: [f64; 5] = [1.0, 2.5, 1.7, 3.3, 0.4];
        // Hand-rolled leave-one-out: refit without point i each time.
        let brute = |h: f64| -> f64 {
            (0..5)
                .map(|i| {
                    let mut num = 0.0;
                    let mut den = 0.0;
                    for j in 0..5 {
                        if j == i {
                            continue;
                        }
                        let w = (-(xs[i] - xs[j]).powi(2) / (2.0 * h * h)).exp();
                        num += w * ys[j];
                        den += w;
                    }
                    (ys[i] - num / den).powi(2)
                })
                .sum()
        };
        let cfg = NwConfig::default();
        let pilot = silverman_bandwidth(&xs);
        for h in bandwidth_grid(pilot, &cfg).into_iter().filter(|h| *h > 0.02) {
            let ours = loo_score(&xs, &ys, h);
            assert!((ours - brute(h)).abs() < 1e-10 * brute(h).max(1.0), "h={h}");
        }
        // And the fitted bandwidth is the grid argmin of that score.
        let d = data(&xs, &ys);
        let m = fit_nw(&cfg, &d, &[0, 1, 2, 3, 4]).unwrap();
        let grid = bandwidth_grid(pilot, &cfg);
        let best = grid
            .iter()
            .copied()
            .min_by(|a, b| loo_score(&xs, &ys, *a).partial_cmp(&loo_score(&xs, &ys, *b)).unwrap())
            .unwrap();
        assert_eq!(m.bandwidth(), best);
    }

    #[test]
    fn grid_spans_factors() {
        let g = bandwidth_grid(2.0, &NwConfig::default());
        assert_eq!(g.len(), 30);
        assert!((g[0] - 0.1).abs() < 1e-12);
        assert!((g[29] - 40.0).abs() < 1e-9);
    }

    #[test]
    fn identical_x_is_degenerate() {
        let d = data(&[0.5, 0.5, 0.5], &[1.0, 2.0, 3.0]);
        assert!(matches!(
            fit_nw(&NwConfig::default(), &d, &[0, 1, 2]),
            Err(Error::DegenerateDesign(_))
        ));
    }
}
