//! Ordinary least squares on an explicit design.

use log::warn;
use serde::{Deserialize, Serialize};

use super::{FitSummary, Regressor};
use crate::data::{ColumnRef, Dataset};
use crate::error::{Error, Result};
use crate::linalg::{lstsq, RANK_TOL};

/// One column of the design matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "term", rename_all = "snake_case", deny_unknown_fields)]
pub enum Term {
    Intercept,
    Column { column: ColumnRef },
    Log { column: ColumnRef },
    Square { column: ColumnRef },
    Product { left: ColumnRef, right: ColumnRef },
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OlsConfig {
    pub terms: Vec<Term>,
    /// Drop linearly dependent columns instead of failing.
    #[serde(default = "default_true")]
    pub rank_fallback: bool,
}

impl OlsConfig {
    pub fn new(terms: Vec<Term>) -> Self {
        OlsConfig {
            terms,
            rank_fallback: true,
        }
    }

    /// Raw columns, optionally with an intercept.
    pub fn columns<I, C>(intercept: bool, cols: I) -> Self
    where
        I: IntoIterator<Item = C>,
        C: Into<ColumnRef>,
    {
        let mut terms = Vec::new();
        if intercept {
            terms.push(Term::Intercept);
        }
        terms.extend(cols.into_iter().map(|c| Term::Column { column: c.into() }));
        OlsConfig::new(terms)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Resolved {
    Intercept,
    Col(usize),
    Log(usize),
    Square(usize),
    Product(usize, usize),
}

impl Resolved {
    #[inline]
    fn eval(self, x: &[f64]) -> f64 {
        match self {
            Resolved::Intercept => 1.0,
            Resolved::Col(j) => x[j],
            Resolved::Log(j) => x[j].ln(),
            Resolved::Square(j) => x[j] * x[j],
            Resolved::Product(a, b) => x[a] * x[b],
        }
    }

    fn label(self, names: Option<&[String]>) -> String {
        let n = |j: usize| match names {
            Some(ns) => ns[j].clone(),
            None => format!("x{j}"),
        };
        match self {
            Resolved::Intercept => "(intercept)".into(),
            Resolved::Col(j) => n(j),
            Resolved::Log(j) => format!("log({})", n(j)),
            Resolved::Square(j) => format!("{}^2", n(j)),
            Resolved::Product(a, b) => format!("{}*{}", n(a), n(b)),
        }
    }
}

fn resolve(terms: &[Term], data: &Dataset) -> Result<Vec<Resolved>> {
    terms
        .iter()
        .map(|t| {
            Ok(match t {
                Term::Intercept => Resolved::Intercept,
                Term::Column { column } => Resolved::Col(data.column_index(column)?),
                Term::Log { column } => Resolved::Log(data.column_index(column)?),
                Term::Square { column } => Resolved::Square(data.column_index(column)?),
                Term::Product { left, right } => {
                    Resolved::Product(data.column_index(left)?, data.column_index(right)?)
                }
            })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct OlsModel {
    terms: Vec<Resolved>,
    labels: Vec<String>,
    coef: Vec<f64>,
    rank: usize,
    dropped: Vec<usize>,
}

impl OlsModel {
    pub fn coefficients(&self) -> &[f64] {
        &self.coef
    }

    pub fn rank(&self) -> usize {
        self.rank
    }
}

impl Regressor for OlsModel {
    fn predict(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .zip(&self.coef)
            .filter(|(_, c)| **c != 0.0)
            .map(|(t, c)| c * t.eval(x))
            .sum()
    }

    fn summary(&self) -> FitSummary {
        FitSummary::Linear {
            terms: self.labels.clone(),
            coefficients: self.coef.clone(),
            rank: self.rank,
            dropped: self.dropped.iter().map(|&j| self.labels[j].clone()).collect(),
        }
    }
}

/// Column-major design for `rows`.
pub(crate) fn design_matrix<F>(rows: &[usize], q: usize, data: &Dataset, mut cell: F) -> Result<Vec<f64>>
where
    F: FnMut(&[f64], usize) -> f64,
{
    let m = rows.len();
    let mut a = vec![0.0; m * q];
    for (r, &i) in rows.iter().enumerate() {
        let x = data.row(i);
        for j in 0..q {
            let v = cell(x, j);
            if !v.is_finite() {
                return Err(Error::Domain {
                    value: v,
                    lo: f64::MIN,
                    hi: f64::MAX,
                });
            }
            a[j * m + r] = v;
        }
    }
    Ok(a)
}

pub fn fit_ols(cfg: &OlsConfig, data: &Dataset, rows: &[usize]) -> Result<OlsModel> {
    if cfg.terms.is_empty() {
        return Err(Error::InvalidConfig("OLS design has no terms".into()));
    }
    let terms = resolve(&cfg.terms, data)?;
    let q = terms.len();
    let a = design_matrix(rows, q, data, |x, j| terms[j].eval(x))?;
    let y: Vec<f64> = rows.iter().map(|&i| data.y()[i]).collect();
    let ls = lstsq(&a, rows.len(), q, &y, RANK_TOL);
    let labels: Vec<String> = terms.iter().map(|t| t.label(data.column_names())).collect();
    if ls.rank < q {
        if !cfg.rank_fallback {
            return Err(Error::SingularDesign {
                rank: ls.rank,
                columns: q,
            });
        }
        warn!(
            "OLS design rank {} < {} columns; dropped {:?}",
            ls.rank,
            q,
            ls.dropped.iter().map(|&j| labels[j].as_str()).collect::<Vec<_>>()
        );
    }
    Ok(OlsModel {
        terms,
        labels,
        coef: ls.coef,
        rank: ls.rank,
        dropped: ls.dropped,
    })
}
