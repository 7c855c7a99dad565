//! Additive model with natural cubic regression splines, fit by one joint
//! least-squares solve.

use serde::{Deserialize, Serialize};

use super::ols::design_matrix;
use super::{FitSummary, Regressor};
use crate::data::{ColumnRef, Dataset};
use crate::error::{Error, Result};
use crate::linalg::{lstsq, RANK_TOL};

fn d_df() -> usize {
    3
}
fn d_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdditiveSplineConfig {
    /// Columns that get a spline term.
    pub smooth: Vec<ColumnRef>,
    /// Columns entered linearly (e.g. binary indicators).
    #[serde(default)]
    pub linear: Vec<ColumnRef>,
    /// Basis columns per spline term; `df - 1` interior knots.
    #[serde(default = "d_df")]
    pub df: usize,
    #[serde(default = "d_true")]
    pub intercept: bool,
}

/// Natural cubic spline basis for one column, without the constant.
#[derive(Debug, Clone)]
struct NaturalSpline {
    column: usize,
    lo: f64,
    width: f64,
    /// Knots on the rescaled [0, 1] axis, ascending, boundary knots included.
    knots: Vec<f64>,
}

impl NaturalSpline {
    fn dk(&self, t: f64, k: usize) -> f64 {
        let last = *self.knots.last().unwrap();
        let cube = |v: f64| if v > 0.0 { v * v * v } else { 0.0 };
        (cube(t - self.knots[k]) - cube(t - last)) / (last - self.knots[k])
    }

    /// Basis value `j` in `0..df`: the linear term, then `d_k - d_{K-1}`.
    fn eval(&self, x: &[f64], j: usize) -> f64 {
        let t = (x[self.column] - self.lo) / self.width;
        if j == 0 {
            return t;
        }
        let kk = self.knots.len();
        self.dk(t, j - 1) - self.dk(t, kk - 2)
    }
}

/// Type-7 sample quantile of sorted values.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn place_knots(values: &mut [f64], df: usize) -> Option<Vec<f64>> {
    values.sort_unstable_by(|a, b| a.total_cmp(b));
    let probs: Vec<f64> = (0..=df).map(|k| k as f64 / df as f64).collect();
    let knots: Vec<f64> = probs.iter().map(|&p| quantile(values, p)).collect();
    if knots.windows(2).all(|w| w[0] < w[1]) {
        return Some(knots);
    }
    // Ties at the quantiles: fall back to quantiles of the distinct values.
    let mut distinct = values.to_vec();
    distinct.dedup();
    let knots: Vec<f64> = probs.iter().map(|&p| quantile(&distinct, p)).collect();
    knots.windows(2).all(|w| w[0] < w[1]).then_some(knots)
}

#[derive(Debug, Clone)]
enum Column {
    Intercept,
    Linear(usize),
    Spline(usize, usize),
}

#[derive(Debug, Clone)]
pub struct AdditiveSplineModel {
    splines: Vec<NaturalSpline>,
    columns: Vec<Column>,
    coef: Vec<f64>,
}

impl AdditiveSplineModel {
    fn cell(&self, x: &[f64], j: usize) -> f64 {
        match self.columns[j] {
            Column::Intercept => 1.0,
            Column::Linear(c) => x[c],
            Column::Spline(s, b) => self.splines[s].eval(x, b),
        }
    }

    /// Basis columns contributed by each spline term.
    pub fn term_widths(&self) -> Vec<usize> {
        (0..self.splines.len())
            .map(|s| {
                self.columns
                    .iter()
                    .filter(|c| matches!(c, Column::Spline(t, _) if *t == s))
                    .count()
            })
            .collect()
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }
}

impl Regressor for AdditiveSplineModel {
    fn predict(&self, x: &[f64]) -> f64 {
        (0..self.coef.len()).map(|j| self.coef[j] * self.cell(x, j)).sum()
    }

    fn summary(&self) -> FitSummary {
        let terms = self
            .columns
            .iter()
            .map(|c| match *c {
                Column::Intercept => "(intercept)".to_string(),
                Column::Linear(c) => format!("x{c}"),
                Column::Spline(s, b) => format!("s(x{})[{b}]", self.splines[s].column),
            })
            .collect();
        FitSummary::Linear {
            terms,
            coefficients: self.coef.clone(),
            rank: self.coef.len(),
            dropped: Vec::new(),
        }
    }
}

pub fn fit_additive_spline(
    cfg: &AdditiveSplineConfig,
    data: &Dataset,
    rows: &[usize],
) -> Result<AdditiveSplineModel> {
    if cfg.df < 1 {
        return Err(Error::InvalidConfig("spline df must be >= 1".into()));
    }
    let mut splines = Vec::new();
    let mut columns = Vec::new();
    if cfg.intercept {
        columns.push(Column::Intercept);
    }
    for c in &cfg.smooth {
        let col = data.column_index(c)?;
        let mut vals: Vec<f64> = rows.iter().map(|&i| data.value(i, col)).collect();
        let knots = place_knots(&mut vals, cfg.df).ok_or_else(|| {
            Error::DegenerateDesign(format!(
                "column {c} has fewer than {} distinct training values",
                cfg.df + 1
            ))
        })?;
        let lo = knots[0];
        let width = knots[cfg.df] - lo;
        let s = splines.len();
        splines.push(NaturalSpline {
            column: col,
            lo,
            width,
            knots: knots.iter().map(|k| (k - lo) / width).collect(),
        });
        columns.extend((0..cfg.df).map(|b| Column::Spline(s, b)));
    }
    for c in &cfg.linear {
        columns.push(Column::Linear(data.column_index(c)?));
    }
    if columns.is_empty() {
        return Err(Error::InvalidConfig("additive model has no terms".into()));
    }
    let mut model = AdditiveSplineModel {
        splines,
        columns,
        coef: Vec::new(),
    };
    let q = model.columns.len();
    let a = design_matrix(rows, q, data, |x, j| model.cell(x, j))?;
    let y: Vec<f64> = rows.iter().map(|&i| data.y()[i]).collect();
    let ls = lstsq(&a, rows.len(), q, &y, RANK_TOL);
    if ls.rank < q {
        return Err(Error::SingularDesign {
            rank: ls.rank,
            columns: q,
        });
    }
    model.coef = ls.coef;
    Ok(model)
}
