//! Projection estimator on the dyadic sine basis `phi_j(x) = sqrt(2) sin(4^j pi x)`.

use serde::{Deserialize, Serialize};

use super::{FitSummary, Regressor};
use crate::data::{ColumnRef, Dataset};
use crate::error::{Error, Result};

/// `phi_j(x) = sqrt(2) * sin(4^j * pi * x)`.
///
/// `x * 4^j` is an exact power-of-two scaling and `% 2.0` is exact, so the
/// phase is reduced without rounding before the sine is taken.
pub fn phi(j: u32, x: f64) -> f64 {
    let scaled = x * 4f64.powi(j as i32);
    let phase = scaled % 2.0;
    std::f64::consts::SQRT_2 * (std::f64::consts::PI * phase).sin()
}

/// How many basis terms to keep for `n1` training points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    /// `floor(n1^(1/4)) - 1`
    P1,
    /// `floor(n1^(1/4))`
    P2,
}

/// `floor(n^(1/4))` in exact integer arithmetic.
pub fn fourth_root_floor(n: usize) -> usize {
    let mut r = ((n as f64).powf(0.25)) as usize;
    while (r + 1).pow(4) <= n {
        r += 1;
    }
    while r > 0 && r.pow(4) > n {
        r -= 1;
    }
    r
}

impl Truncation {
    pub fn terms(self, n1: usize) -> usize {
        let r = fourth_root_floor(n1);
        match self {
            Truncation::P1 => r.saturating_sub(1),
            Truncation::P2 => r,
        }
    }
}

fn default_column() -> ColumnRef {
    ColumnRef::Index(0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierConfig {
    pub truncation: Truncation,
    #[serde(default = "default_column")]
    pub column: ColumnRef,
}

impl FourierConfig {
    pub fn new(truncation: Truncation) -> Self {
        FourierConfig {
            truncation,
            column: default_column(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FourierModel {
    column: usize,
    coef: Vec<f64>,
}

impl FourierModel {
    pub fn coefficients(&self) -> &[f64] {
        &self.coef
    }
}

impl Regressor for FourierModel {
    fn predict(&self, x: &[f64]) -> f64 {
        let t = x[self.column];
        self.coef
            .iter()
            .enumerate()
            .map(|(k, b)| b * phi(k as u32 + 1, t))
            .sum()
    }

    fn summary(&self) -> FitSummary {
        FitSummary::Fourier {
            coefficients: self.coef.clone(),
        }
    }
}

/// `beta_j = (1/n1) * sum_i y_i phi_j(x_i)` for `j = 1..=p(n1)`.
pub fn fit_fourier(cfg: &FourierConfig, data: &Dataset, rows: &[usize]) -> Result<FourierModel> {
    let n1 = rows.len();
    if n1 < 16 {
        return Err(Error::InvalidConfig(format!(
            "Fourier truncation needs n1 >= 16, got {n1}"
        )));
    }
    let column = data.column_index(&cfg.column)?;
    for &i in rows {
        let v = data.value(i, column);
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Domain {
                value: v,
                lo: 0.0,
                hi: 1.0,
            });
        }
    }
    let terms = cfg.truncation.terms(n1);
    let coef = (1..=terms as u32)
        .map(|j| {
            rows.iter()
                .map(|&i| data.y()[i] * phi(j, data.value(i, column)))
                .sum::<f64>()
                / n1 as f64
        })
        .collect();
    Ok(FourierModel { column, coef })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngSpec;
    use proptest::prelude::*;
    use rand::Rng;

    fn uniform_rows(n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = RngSpec::new(seed).rng();
        (0..n).map(|_| vec![rng.gen::<f64>()]).collect()
    }

    #[test]
    fn truncation_at_sixteen() {
        assert_eq!(Truncation::P1.terms(16), 1);
        assert_eq!(Truncation::P2.terms(16), 2);
        assert_eq!(Truncation::P2.terms(1024), 5);
        assert_eq!(Truncation::P2.terms(80), 2);
        assert_eq!(Truncation::P2.terms(81), 3);
        assert_eq!(fourth_root_floor(4096), 8);
    }

    #[test]
    fn phi_matches_direct_formula_for_small_j() {
        for &x in &[0.0, 0.1, 0.3333, 0.77, 1.0] {
            for j in 1..6u32 {
                let direct = 2f64.sqrt() * (4f64.powi(j as i32) * std::f64::consts::PI * x).sin();
                assert!((phi(j, x) - direct).abs() < 1e-9, "j={j} x={x}");
            }
        }
        assert_eq!(phi(3, 0.0), 0.0);
    }

    #[test]
    fn zero_response_zero_fit() {
        let rows = uniform_rows(32, 1);
        let d = Dataset::from_rows(&rows, vec![0.0; 32]).unwrap();
        let all: Vec<usize> = (0..32).collect();
        let m = fit_fourier(&FourierConfig::new(Truncation::P2), &d, &all).unwrap();
        assert!(m.coefficients().iter().all(|&b| b == 0.0));
        assert_eq!(m.predict(&[0.42]), 0.0);
    }

    #[test]
    fn recovers_first_coefficient() {
        let n = 100_000;
        let rows = uniform_rows(n, 2);
        let y: Vec<f64> = rows.iter().map(|r| phi(1, r[0])).collect();
        let d = Dataset::from_rows(&rows, y).unwrap();
        let all: Vec<usize> = (0..n).collect();
        let m = fit_fourier(&FourierConfig::new(Truncation::P1), &d, &all).unwrap();
        assert!((m.coefficients()[0] - 1.0).abs() < 0.02);
    }

    #[test]
    fn domain_and_size_errors() {
        let mut rows = uniform_rows(20, 3);
        let d = Dataset::from_rows(&rows, vec![1.0; 20]).unwrap();
        let small: Vec<usize> = (0..10).collect();
        assert!(fit_fourier(&FourierConfig::new(Truncation::P1), &d, &small).is_err());
        rows[4][0] = 1.5;
        let d = Dataset::from_rows(&rows, vec![1.0; 20]).unwrap();
        let all: Vec<usize> = (0..20).collect();
        assert!(matches!(
            fit_fourier(&FourierConfig::new(Truncation::P1), &d, &all),
            Err(Error::Domain { .. })
        ));
    }

    proptest! {
        #[test]
        fn linear_in_response(seed in any::<u64>()) {
            let n = 64;
            let rows = uniform_rows(n, seed);
            let mut rng = RngSpec::new(seed ^ 1).rng();
            let y1: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let y2: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let ysum: Vec<f64> = y1.iter().zip(&y2).map(|(a, b)| a + b).collect();
            let all: Vec<usize> = (0..n).collect();
            let cfg = FourierConfig::new(Truncation::P2);
            let f1 = fit_fourier(&cfg, &Dataset::from_rows(&rows, y1).unwrap(), &all).unwrap();
            let f2 = fit_fourier(&cfg, &Dataset::from_rows(&rows, y2).unwrap(), &all).unwrap();
            let fs = fit_fourier(&cfg, &Dataset::from_rows(&rows, ysum).unwrap(), &all).unwrap();
            for k in 0..50 {
                let x = [k as f64 / 49.0];
                prop_assert!((fs.predict(&x) - f1.predict(&x) - f2.predict(&x)).abs() < 1e-10);
            }
        }
    }
}
