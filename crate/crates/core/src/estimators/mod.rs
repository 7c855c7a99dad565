//! Candidate regression procedures.
//!
//! A [`CandidateProcedure`] is a named configuration plus a data scope. Fitting
//! it on a set of training rows yields a [`Predictor`].

pub mod forest;
pub mod fourier;
pub mod lasso;
pub mod nw;
pub mod ols;
pub mod spline;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Region};
use crate::error::{Error, Result};
use crate::rng::RngSpec;

pub use forest::ForestConfig;
pub use fourier::{FourierConfig, Truncation};
pub use lasso::{LambdaChoice, LassoConfig};
pub use nw::NwConfig;
pub use ols::{OlsConfig, Term};
pub use spline::AdditiveSplineConfig;

/// A fitted regression function.
pub trait Regressor: Send + Sync + fmt::Debug {
    fn predict(&self, x: &[f64]) -> f64;
    fn summary(&self) -> FitSummary;
}

/// Audit record of a fit, exposed in reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FitSummary {
    Linear {
        terms: Vec<String>,
        coefficients: Vec<f64>,
        rank: usize,
        dropped: Vec<String>,
    },
    Fourier {
        coefficients: Vec<f64>,
    },
    Kernel {
        bandwidth: f64,
        pilot: f64,
    },
    Lasso {
        lambda: f64,
        intercept: f64,
        nonzero: usize,
    },
    Forest {
        trees: usize,
        mtry: usize,
        mean_leaves: f64,
    },
}

#[derive(Clone)]
pub struct Predictor {
    candidate: usize,
    n_train: usize,
    model: Arc<dyn Regressor>,
}

impl fmt::Debug for Predictor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Predictor")
            .field("candidate", &self.candidate)
            .field("n_train", &self.n_train)
            .field("model", &self.model)
            .finish()
    }
}

impl Predictor {
    pub fn new(candidate: usize, n_train: usize, model: Arc<dyn Regressor>) -> Self {
        Predictor {
            candidate,
            n_train,
            model,
        }
    }

    #[inline]
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.model.predict(x)
    }

    pub fn predict_rows(&self, data: &Dataset, rows: &[usize]) -> Vec<f64> {
        rows.iter().map(|&i| self.predict(data.row(i))).collect()
    }

    pub fn candidate(&self) -> usize {
        self.candidate
    }

    /// Rows the model was actually fit on (after any region filtering).
    pub fn n_train(&self) -> usize {
        self.n_train
    }

    pub fn summary(&self) -> FitSummary {
        self.model.summary()
    }
}

/// Estimator settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FitConfig {
    Ols(OlsConfig),
    Fourier(FourierConfig),
    NadarayaWatson(NwConfig),
    Lasso(LassoConfig),
    Forest(ForestConfig),
    AdditiveSpline(AdditiveSplineConfig),
}

impl FitConfig {
    /// Fits on `rows` of `data`. `rows` is already region-filtered.
    pub fn fit(&self, data: &Dataset, rows: &[usize], rng: &RngSpec) -> Result<Arc<dyn Regressor>> {
        if rows.is_empty() {
            return Err(Error::InvalidData("no training rows".into()));
        }
        Ok(match self {
            FitConfig::Ols(c) => Arc::new(ols::fit_ols(c, data, rows)?),
            FitConfig::Fourier(c) => Arc::new(fourier::fit_fourier(c, data, rows)?),
            FitConfig::NadarayaWatson(c) => Arc::new(nw::fit_nw(c, data, rows)?),
            FitConfig::Lasso(c) => Arc::new(lasso::fit_lasso(c, data, rows, rng)?),
            FitConfig::Forest(c) => Arc::new(forest::fit_forest(c, data, rows, rng)?),
            FitConfig::AdditiveSpline(c) => Arc::new(spline::fit_additive_spline(c, data, rows)?),
        })
    }
}

pub const DEFAULT_MIN_LOCAL_ROWS: usize = 10;

fn default_min_rows() -> usize {
    DEFAULT_MIN_LOCAL_ROWS
}

/// Which training rows a candidate sees.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataScope {
    #[default]
    Global,
    /// Only training rows inside `region`; fewer than `min_rows` is an error.
    Local {
        region: Region,
        #[serde(default = "default_min_rows")]
        min_rows: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateProcedure {
    pub id: usize,
    pub name: String,
    pub method: FitConfig,
    #[serde(default)]
    pub scope: DataScope,
}

impl CandidateProcedure {
    pub fn global(id: usize, name: &str, method: FitConfig) -> Self {
        CandidateProcedure {
            id,
            name: name.to_string(),
            method,
            scope: DataScope::Global,
        }
    }

    pub fn local(id: usize, name: &str, method: FitConfig, region: Region, min_rows: usize) -> Self {
        CandidateProcedure {
            id,
            name: name.to_string(),
            method,
            scope: DataScope::Local { region, min_rows },
        }
    }
}

/// Fits `proc` on the training rows, restricted to its region when local.
pub fn fit(proc: &CandidateProcedure, data: &Dataset, train: &[usize], rng: &RngSpec) -> Result<Predictor> {
    if let Some(&bad) = train.iter().find(|&&i| i >= data.n()) {
        return Err(Error::InvalidPlan(format!(
            "training index {bad} out of range for n={}",
            data.n()
        )));
    }
    let rows: Vec<usize> = match &proc.scope {
        DataScope::Global => train.to_vec(),
        DataScope::Local { region, min_rows } => {
            let region = region.compile_for(data)?;
            let rows = region.filter(data, train);
            if rows.len() < *min_rows || rows.is_empty() {
                return Err(Error::InsufficientLocalData {
                    found: rows.len(),
                    required: (*min_rows).max(1),
                });
            }
            rows
        }
    };
    let model = proc.method.fit(data, &rows, rng)?;
    Ok(Predictor::new(proc.id, rows.len(), model))
}

/// Ids must be `0..m` in order.
pub fn validate_roster(roster: &[CandidateProcedure]) -> Result<()> {
    if roster.is_empty() {
        return Err(Error::InvalidConfig("empty roster".into()));
    }
    for (i, c) in roster.iter().enumerate() {
        if c.id != i {
            return Err(Error::InvalidConfig(format!(
                "candidate '{}' has id {} but position {i}; ids must be 0..m",
                c.name, c.id
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ColumnRef;
    use crate::rng::Purpose;

    fn linear_data(n: usize) -> Dataset {
        let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64, (i % 3) as f64]).collect();
        let y = rows.iter().map(|r| 1.0 + 2.0 * r[0] - r[1]).collect();
        Dataset::from_rows(&rows, y).unwrap()
    }

    fn ols_all() -> FitConfig {
        FitConfig::Ols(OlsConfig::new(vec![
            Term::Intercept,
            Term::Column { column: ColumnRef::Index(0) },
            Term::Column { column: ColumnRef::Index(1) },
        ]))
    }

    #[test]
    fn interpolates_p_plus_one_points() {
        let rows = vec![vec![0.0, 1.0], vec![1.0, 0.5], vec![2.0, -1.0]];
        let y = vec![3.0, -1.0, 4.0];
        let d = Dataset::from_rows(&rows, y.clone()).unwrap();
        let proc = CandidateProcedure::global(0, "ols", ols_all());
        let p = fit(&proc, &d, &[0, 1, 2], &RngSpec::new(0)).unwrap();
        for i in 0..3 {
            assert!((p.predict(d.row(i)) - y[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn local_scope_without_rows_errors() {
        let d = linear_data(30);
        let region = Region::Below {
            column: 0.into(),
            threshold: -1.0,
        };
        let proc = CandidateProcedure::local(0, "local", ols_all(), region, 10);
        let train: Vec<usize> = (0..30).collect();
        let err = fit(&proc, &d, &train, &RngSpec::new(0)).unwrap_err();
        assert_eq!(
            err,
            Error::InsufficientLocalData {
                found: 0,
                required: 10
            }
        );
    }

    #[test]
    fn local_below_floor_errors() {
        let d = linear_data(30);
        let region = Region::Below {
            column: 0.into(),
            threshold: 5.0,
        };
        let proc = CandidateProcedure::local(0, "local", ols_all(), region, 10);
        let train: Vec<usize> = (0..30).collect();
        assert!(matches!(
            fit(&proc, &d, &train, &RngSpec::new(0)),
            Err(Error::InsufficientLocalData { found: 5, .. })
        ));
    }

    #[test]
    fn local_equals_global_when_all_rows_inside() {
        let d = linear_data(40);
        let region = Region::Below {
            column: 0.into(),
            threshold: 1e9,
        };
        let g = CandidateProcedure::global(0, "g", ols_all());
        let l = CandidateProcedure::local(1, "l", ols_all(), region, 10);
        let train: Vec<usize> = (0..40).step_by(2).collect();
        let rng = RngSpec::new(1).purpose(Purpose::Fit);
        let pg = fit(&g, &d, &train, &rng).unwrap();
        let pl = fit(&l, &d, &train, &rng).unwrap();
        for i in 0..40 {
            assert_eq!(pg.predict(d.row(i)), pl.predict(d.row(i)));
        }
    }

    #[test]
    fn fit_is_deterministic() {
        let d = linear_data(60);
        let proc = CandidateProcedure::global(
            0,
            "rf",
            FitConfig::Forest(ForestConfig {
                n_trees: 10,
                mtry: 1,
                ..ForestConfig::default()
            }),
        );
        let train: Vec<usize> = (0..60).collect();
        let rng = RngSpec::new(5).purpose(Purpose::Fit);
        let a = fit(&proc, &d, &train, &rng).unwrap();
        let b = fit(&proc, &d, &train, &rng).unwrap();
        for i in 0..60 {
            assert_eq!(a.predict(d.row(i)), b.predict(d.row(i)));
        }
    }

    #[test]
    fn roster_ids_checked() {
        let a = CandidateProcedure::global(0, "a", ols_all());
        let b = CandidateProcedure::global(2, "b", ols_all());
        assert!(validate_roster(std::slice::from_ref(&a)).is_ok());
        assert!(validate_roster(&[a, b]).is_err());
        assert!(validate_roster(&[]).is_err());
    }

    #[test]
    fn candidate_json_round_trip() {
        let c = CandidateProcedure::local(
            0,
            "lasso_local",
            FitConfig::Lasso(LassoConfig::default()),
            Region::Box {
                columns: vec![0.into(), 1.into()],
                lo: -0.5,
                hi: 0.5,
            },
            5,
        );
        let s = serde_json::to_string(&c).unwrap();
        let back: CandidateProcedure = serde_json::from_str(&s).unwrap();
        assert_eq!(c, back);
    }
}
