//! Lasso by cyclic coordinate descent with warm starts along a geometric
//! lambda path; lambda chosen by K-fold cross-validation.
//!
//! Objective on centered (and by default unit-variance) columns:
//! `(1/2n) ||y - X b||^2 + lambda ||b||_1`, intercept unpenalized.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{FitSummary, Regressor};
use crate::data::{ColumnRef, Dataset};
use crate::error::{Error, Result};
use crate::rng::RngSpec;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum LambdaChoice {
    #[default]
    CrossValidated,
    Fixed {
        value: f64,
    },
}

fn d_path_len() -> usize {
    100
}
fn d_folds() -> usize {
    10
}
fn d_tol() -> f64 {
    1e-7
}
fn d_max_sweeps() -> usize {
    100_000
}
fn d_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LassoConfig {
    #[serde(default)]
    pub lambda: LambdaChoice,
    #[serde(default = "d_path_len")]
    pub path_len: usize,
    /// Path spans `lambda_max * 10^-decades ..= lambda_max`. Defaults to 2
    /// when there are fewer rows than predictors, else 4.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decades: Option<f64>,
    #[serde(default = "d_folds")]
    pub folds: usize,
    /// A sweep has converged when every `d_j * (change in b_j)^2` is at most
    /// `tol` times the null deviance per row.
    #[serde(default = "d_tol")]
    pub tol: f64,
    #[serde(default = "d_max_sweeps")]
    pub max_sweeps: usize,
    #[serde(default = "d_true")]
    pub standardize: bool,
    /// End the path once 99.9% of the deviance is explained or the explained
    /// fraction stops moving (relative change below 1e-5).
    #[serde(default = "d_true")]
    pub early_stop: bool,
    /// Predictor columns to use; all when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub columns: Option<Vec<ColumnRef>>,
}

impl Default for LassoConfig {
    fn default() -> Self {
        LassoConfig {
            lambda: LambdaChoice::default(),
            path_len: d_path_len(),
            decades: None,
            folds: d_folds(),
            tol: d_tol(),
            max_sweeps: d_max_sweeps(),
            standardize: true,
            early_stop: true,
            columns: None,
        }
    }
}

impl LassoConfig {
    pub fn fixed(lambda: f64) -> Self {
        LassoConfig {
            lambda: LambdaChoice::Fixed { value: lambda },
            ..Default::default()
        }
    }
}

/// Training columns after centering and scaling.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub n: usize,
    pub cols: Vec<Vec<f64>>,
    /// `||x_j||^2 / n`; zero marks a constant column that is never updated.
    pub denom: Vec<f64>,
    center: Vec<f64>,
    scale: Vec<f64>,
    pub y: Vec<f64>,
    y_mean: f64,
    /// `||y - mean(y)||^2 / n`
    pub null_dev: f64,
}

impl Prepared {
    pub fn new(data: &Dataset, rows: &[usize], features: &[usize], standardize: bool) -> Prepared {
        let n = rows.len();
        let nf = n as f64;
        let y_raw: Vec<f64> = rows.iter().map(|&i| data.y()[i]).collect();
        let y_mean = y_raw.iter().sum::<f64>() / nf;
        let y: Vec<f64> = y_raw.iter().map(|v| v - y_mean).collect();
        let null_dev = dot(&y, &y) / nf;
        let mut cols = Vec::with_capacity(features.len());
        let mut denom = Vec::with_capacity(features.len());
        let mut center = Vec::with_capacity(features.len());
        let mut scale = Vec::with_capacity(features.len());
        for &f in features {
            let raw: Vec<f64> = rows.iter().map(|&i| data.value(i, f)).collect();
            let mean = raw.iter().sum::<f64>() / nf;
            let var = raw.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / nf;
            let sd = var.sqrt();
            let (s, col) = if var <= 1e-24 * (1.0 + mean * mean) {
                (0.0, vec![0.0; n])
            } else if standardize {
                (sd, raw.iter().map(|v| (v - mean) / sd).collect())
            } else {
                (1.0, raw.iter().map(|v| v - mean).collect())
            };
            let d = if s == 0.0 {
                0.0
            } else {
                col.iter().map(|v: &f64| v * v).sum::<f64>() / nf
            };
            cols.push(col);
            denom.push(d);
            center.push(mean);
            scale.push(s);
        }
        Prepared {
            n,
            cols,
            denom,
            center,
            scale,
            y,
            y_mean,
            null_dev,
        }
    }

    /// Smallest lambda at which every slope is zero.
    pub fn lambda_max(&self) -> f64 {
        let nf = self.n as f64;
        self.cols
            .iter()
            .zip(&self.denom)
            .filter(|(_, d)| **d > 0.0)
            .map(|(c, _)| dot(c, &self.y).abs() / nf)
            .fold(0.0, f64::max)
    }

    /// Slopes and intercept on the original column scale.
    fn unstandardize(&self, beta: &[f64]) -> (f64, Vec<(usize, f64)>) {
        let mut intercept = self.y_mean;
        let mut coefs = Vec::new();
        for (j, &b) in beta.iter().enumerate() {
            if b != 0.0 && self.scale[j] > 0.0 {
                let c = b / self.scale[j];
                intercept -= c * self.center[j];
                coefs.push((j, c));
            }
        }
        (intercept, coefs)
    }
}

/// Four independent accumulators so the loop vectorizes.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
fn soft_threshold(z: f64, g: f64) -> f64 {
    if z > g {
        z - g
    } else if z < -g {
        z + g
    } else {
        0.0
    }
}

/// `(1/2n) ||r||^2 + lambda ||beta||_1`.
pub fn objective(resid: &[f64], beta: &[f64], lambda: f64) -> f64 {
    let n = resid.len() as f64;
    dot(resid, resid) / (2.0 * n) + lambda * beta.iter().map(|b| b.abs()).sum::<f64>()
}

/// Primal objective minus the dual objective at the rescaled residual.
pub fn duality_gap(prep: &Prepared, resid: &[f64], beta: &[f64], lambda: f64) -> f64 {
    let nf = prep.n as f64;
    let max_corr = prep
        .cols
        .iter()
        .map(|c| dot(c, resid).abs() / nf)
        .fold(0.0, f64::max);
    let s = if max_corr > lambda && max_corr > 0.0 {
        lambda / max_corr
    } else {
        1.0
    };
    // dual point theta = s * r / n
    let yy = dot(&prep.y, &prep.y);
    let mut dist = 0.0;
    for (yi, ri) in prep.y.iter().zip(resid) {
        let d = s * ri / nf - yi / nf;
        dist += d * d;
    }
    let dual = yy / (2.0 * nf) - nf / 2.0 * dist;
    objective(resid, beta, lambda) - dual
}

fn sweep(prep: &Prepared, lambda: f64, beta: &mut [f64], resid: &mut [f64], set: Option<&[usize]>) -> f64 {
    let nf = prep.n as f64;
    let mut max_change: f64 = 0.0;
    let mut update = |j: usize, beta: &mut [f64], resid: &mut [f64]| {
        let d = prep.denom[j];
        if d == 0.0 {
            return;
        }
        let col = &prep.cols[j];
        let old = beta[j];
        let z = dot(col, resid) / nf + d * old;
        let new = soft_threshold(z, lambda) / d;
        if new != old {
            let delta = new - old;
            for (r, x) in resid.iter_mut().zip(col) {
                *r -= x * delta;
            }
            beta[j] = new;
            max_change = max_change.max(delta * delta * d);
        }
    };
    match set {
        Some(idx) => {
            for &j in idx {
                update(j, beta, resid);
            }
        }
        None => {
            for j in 0..beta.len() {
                update(j, beta, resid);
            }
        }
    }
    max_change
}

/// Runs coordinate descent from the given warm start until a full sweep
/// passes the `tol` test of [`LassoConfig::tol`]. Between full sweeps it iterates
/// on the current nonzero set only. When `trace` is given, the objective after
/// every sweep is appended to it. Returns the number of sweeps.
pub fn coordinate_descent(
    prep: &Prepared,
    lambda: f64,
    beta: &mut [f64],
    resid: &mut [f64],
    tol: f64,
    max_sweeps: usize,
    trace: Option<&mut Vec<f64>>,
) -> Result<usize> {
    descend(prep, lambda, beta, resid, None, tol, max_sweeps, trace)
}

/// Coordinate descent restricted to `set` (all coordinates when `None`).
#[allow(clippy::too_many_arguments)]
fn descend(
    prep: &Prepared,
    lambda: f64,
    beta: &mut [f64],
    resid: &mut [f64],
    set: Option<&[usize]>,
    tol: f64,
    max_sweeps: usize,
    mut trace: Option<&mut Vec<f64>>,
) -> Result<usize> {
    let thresh = tol * prep.null_dev;
    let mut sweeps = 0;
    let record = |beta: &[f64], resid: &[f64], trace: &mut Option<&mut Vec<f64>>| {
        if let Some(t) = trace.as_deref_mut() {
            t.push(objective(resid, beta, lambda));
        }
    };
    let fail = |sweeps, beta: &[f64], resid: &[f64]| Error::Convergence {
        iterations: sweeps,
        duality_gap: duality_gap(prep, resid, beta, lambda),
    };
    loop {
        let change = sweep(prep, lambda, beta, resid, set);
        sweeps += 1;
        record(beta, resid, &mut trace);
        if change <= thresh {
            return Ok(sweeps);
        }
        let active: Vec<usize> = match set {
            Some(s) => s.iter().copied().filter(|&j| beta[j] != 0.0).collect(),
            None => (0..beta.len()).filter(|&j| beta[j] != 0.0).collect(),
        };
        loop {
            if sweeps >= max_sweeps {
                return Err(fail(sweeps, beta, resid));
            }
            let change = sweep(prep, lambda, beta, resid, Some(&active));
            sweeps += 1;
            record(beta, resid, &mut trace);
            if change <= thresh {
                break;
            }
        }
        if sweeps >= max_sweeps {
            return Err(fail(sweeps, beta, resid));
        }
    }
}

/// Warm-started path solver using the sequential strong rule: coordinates
/// with `|x_j'r|/n < 2 lambda - lambda_prev` are held at zero, then the KKT
/// conditions are checked on all of them and violators are added back.
struct PathSolver<'a> {
    prep: &'a Prepared,
    cfg: &'a LassoConfig,
    beta: Vec<f64>,
    resid: Vec<f64>,
    corr: Vec<f64>,
    lambda_prev: f64,
    tss: f64,
    dev_prev: f64,
    stopped: bool,
}

impl<'a> PathSolver<'a> {
    fn new(prep: &'a Prepared, cfg: &'a LassoConfig) -> Self {
        let resid = prep.y.clone();
        let tss = dot(&resid, &resid);
        let mut s = PathSolver {
            prep,
            cfg,
            beta: vec![0.0; prep.cols.len()],
            resid,
            corr: vec![0.0; prep.cols.len()],
            lambda_prev: f64::INFINITY,
            tss,
            dev_prev: 0.0,
            stopped: false,
        };
        s.refresh_corr();
        s
    }

    fn refresh_corr(&mut self) {
        let nf = self.prep.n as f64;
        for (j, c) in self.prep.cols.iter().enumerate() {
            self.corr[j] = if self.prep.denom[j] > 0.0 {
                dot(c, &self.resid).abs() / nf
            } else {
                0.0
            };
        }
    }

    /// Moves the solution to `lambda`. Once the path has saturated the
    /// previous solution is kept.
    fn advance(&mut self, lambda: f64) -> Result<()> {
        if self.stopped {
            return Ok(());
        }
        let thresh = if self.lambda_prev.is_finite() {
            2.0 * lambda - self.lambda_prev
        } else {
            lambda
        };
        let p = self.beta.len();
        let mut in_set = vec![false; p];
        for j in 0..p {
            in_set[j] = self.beta[j] != 0.0 || (self.prep.denom[j] > 0.0 && self.corr[j] >= thresh);
        }
        loop {
            let set: Vec<usize> = (0..p).filter(|&j| in_set[j]).collect();
            if !set.is_empty() {
                descend(
                    self.prep,
                    lambda,
                    &mut self.beta,
                    &mut self.resid,
                    Some(&set),
                    self.cfg.tol,
                    self.cfg.max_sweeps,
                    None,
                )?;
            }
            self.refresh_corr();
            let mut violated = false;
            for j in 0..p {
                if !in_set[j] && self.prep.denom[j] > 0.0 && self.corr[j] > lambda {
                    in_set[j] = true;
                    violated = true;
                }
            }
            if !violated {
                break;
            }
        }
        self.lambda_prev = lambda;
        if self.cfg.early_stop && self.tss > 0.0 {
            let dev = 1.0 - dot(&self.resid, &self.resid) / self.tss;
            if dev >= 0.999 || (dev > 0.0 && (dev - self.dev_prev) < 1e-5 * dev) {
                self.stopped = true;
            }
            self.dev_prev = dev;
        }
        Ok(())
    }
}

/// `lambda_max * 10^(-decades * k / (len - 1))`, `k = 0..len`.
pub fn lambda_path(lambda_max: f64, len: usize, decades: f64) -> Vec<f64> {
    if len <= 1 {
        return vec![lambda_max];
    }
    (0..len)
        .map(|k| lambda_max * 10f64.powf(-decades * k as f64 / (len - 1) as f64))
        .collect()
}

#[derive(Debug, Clone)]
pub struct LassoModel {
    features: Vec<usize>,
    intercept: f64,
    /// (position in `features`, coefficient) for nonzero slopes.
    coefs: Vec<(usize, f64)>,
    lambda: f64,
}

impl LassoModel {
    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Dense slopes over the model's feature list.
    pub fn slopes(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.features.len()];
        for &(j, c) in &self.coefs {
            out[j] = c;
        }
        out
    }
}

impl Regressor for LassoModel {
    fn predict(&self, x: &[f64]) -> f64 {
        self.intercept
            + self
                .coefs
                .iter()
                .map(|&(j, c)| c * x[self.features[j]])
                .sum::<f64>()
    }

    fn summary(&self) -> FitSummary {
        FitSummary::Lasso {
            lambda: self.lambda,
            intercept: self.intercept,
            nonzero: self.coefs.len(),
        }
    }
}

fn solve_path(prep: &Prepared, lambdas: &[f64], cfg: &LassoConfig) -> Result<Vec<f64>> {
    let mut solver = PathSolver::new(prep, cfg);
    for &lam in lambdas {
        solver.advance(lam)?;
    }
    Ok(solver.beta)
}

fn model_from(prep: &Prepared, features: Vec<usize>, beta: &[f64], lambda: f64) -> LassoModel {
    let (intercept, coefs) = prep.unstandardize(beta);
    LassoModel {
        features,
        intercept,
        coefs,
        lambda,
    }
}

/// Held-out squared error per path position, summed over folds.
fn cv_errors(
    data: &Dataset,
    rows: &[usize],
    features: &[usize],
    lambdas: &[f64],
    cfg: &LassoConfig,
    rng: &RngSpec,
) -> Result<Vec<f64>> {
    let n = rows.len();
    let k = cfg.folds.min(n);
    let mut order: Vec<usize> = rows.to_vec();
    order.shuffle(&mut rng.rng());
    let mut errs = vec![0.0; lambdas.len()];
    for fold in 0..k {
        let (mut train, mut test) = (Vec::new(), Vec::new());
        for (pos, &i) in order.iter().enumerate() {
            if pos % k == fold {
                test.push(i);
            } else {
                train.push(i);
            }
        }
        let prep = Prepared::new(data, &train, features, cfg.standardize);
        let mut solver = PathSolver::new(&prep, cfg);
        for (l, &lam) in lambdas.iter().enumerate() {
            solver.advance(lam)?;
            let (b0, coefs) = prep.unstandardize(&solver.beta);
            for &i in &test {
                let x = data.row(i);
                let pred = b0 + coefs.iter().map(|&(j, c)| c * x[features[j]]).sum::<f64>();
                let r = data.y()[i] - pred;
                errs[l] += r * r;
            }
        }
    }
    Ok(errs)
}

pub fn fit_lasso(cfg: &LassoConfig, data: &Dataset, rows: &[usize], rng: &RngSpec) -> Result<LassoModel> {
    if !(cfg.tol > 0.0) || cfg.path_len == 0 || cfg.folds < 2 {
        return Err(Error::InvalidConfig(
            "lasso needs tol > 0, a nonempty path and at least 2 folds".into(),
        ));
    }
    let features: Vec<usize> = match &cfg.columns {
        Some(cols) => cols
            .iter()
            .map(|c| data.column_index(c))
            .collect::<Result<_>>()?,
        None => (0..data.p()).collect(),
    };
    if features.is_empty() {
        return Err(Error::InvalidConfig("lasso needs at least one predictor".into()));
    }
    let prep = Prepared::new(data, rows, &features, cfg.standardize);
    let lambda_max = prep.lambda_max();
    let decades = cfg
        .decades
        .unwrap_or(if rows.len() < features.len() { 2.0 } else { 4.0 });

    match cfg.lambda {
        LambdaChoice::Fixed { value } => {
            if !(value >= 0.0) {
                return Err(Error::InvalidConfig(format!("lambda {value} must be >= 0")));
            }
            let mut path: Vec<f64> = lambda_path(lambda_max, cfg.path_len, decades)
                .into_iter()
                .filter(|&l| l > value)
                .collect();
            path.push(value);
            // The requested lambda is always reached exactly.
            let exact = LassoConfig {
                early_stop: false,
                ..cfg.clone()
            };
            let beta = solve_path(&prep, &path, &exact)?;
            Ok(model_from(&prep, features, &beta, value))
        }
        LambdaChoice::CrossValidated => {
            if lambda_max == 0.0 {
                let beta = vec![0.0; features.len()];
                return Ok(model_from(&prep, features, &beta, 0.0));
            }
            if rows.len() < 2 {
                return Err(Error::InvalidData(
                    "cross-validated lasso needs at least two rows".into(),
                ));
            }
            let lambdas = lambda_path(lambda_max, cfg.path_len, decades);
            let errs = cv_errors(data, rows, &features, &lambdas, cfg, rng)?;
            let mut best = 0;
            for (l, e) in errs.iter().enumerate() {
                if *e < errs[best] {
                    best = l;
                }
            }
            let beta = solve_path(&prep, &lambdas[..=best], cfg)?;
            Ok(model_from(&prep, features, &beta, lambdas[best]))
        }
    }
}
