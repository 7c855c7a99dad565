//! The targeted CV criterion and split-aggregated selection.

use serde::{Deserialize, Serialize};

use crate::data::{make_split, Dataset, Region, Split};
use crate::error::{Error, Result};
use crate::estimators::{fit, validate_roster, CandidateProcedure, Predictor};
use crate::exec::Execution;
use crate::report::{sig6, Table};
use crate::rng::{Purpose, RngSpec};
use crate::weights::{constant_weight, WeightFunction};

/// `sum_test (y - f(x))^2 * W(x)`, unnormalized.
pub fn tcv_score(pred: &Predictor, data: &Dataset, test: &[usize], w: &WeightFunction) -> Result<f64> {
    let wv = w.eval_rows(data, test, data.n())?;
    Ok(weighted_sse(pred, data, test, &wv))
}

fn weighted_sse(pred: &Predictor, data: &Dataset, test: &[usize], wv: &[f64]) -> f64 {
    test.iter()
        .zip(wv)
        .map(|(&i, &wi)| {
            let r = data.y()[i] - pred.predict(data.row(i));
            r * r * wi
        })
        .sum()
}

/// Index of the smallest value; ties go to the lowest index.
pub fn argmin(xs: &[f64]) -> usize {
    let mut best = 0;
    for (j, &x) in xs.iter().enumerate() {
        if x < xs[best] {
            best = j;
        }
    }
    best
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (j, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = j;
        }
    }
    best
}

fn fit_roster(roster: &[CandidateProcedure], data: &Dataset, train: &[usize], rng: &RngSpec) -> Result<Vec<Predictor>> {
    roster
        .iter()
        .map(|c| fit(c, data, train, &rng.child(c.id as u64)).map_err(|e| Error::candidate(c.id, &c.name, e)))
        .collect()
}

/// Scores of one split under several weights, from a single set of fits.
/// `None` marks a weight with zero total test weight.
pub fn score_split(
    roster: &[CandidateProcedure],
    data: &Dataset,
    split: &Split,
    weights: &[WeightFunction],
    rng: &RngSpec,
) -> Result<Vec<Option<Vec<f64>>>> {
    let preds = fit_roster(roster, data, &split.train, rng)?;
    weights
        .iter()
        .map(|w| {
            let wv = w.eval_rows(data, &split.test, data.n())?;
            if wv.iter().sum::<f64>() <= 0.0 {
                return Ok(None);
            }
            Ok(Some(
                preds.iter().map(|p| weighted_sse(p, data, &split.test, &wv)).collect(),
            ))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleSplitResult {
    pub winner: usize,
    pub scores: Vec<f64>,
}

/// Fits every candidate on `split.train` and picks the smallest TCV score on
/// `split.test`.
pub fn select_single_split(
    roster: &[CandidateProcedure],
    data: &Dataset,
    split: &Split,
    w: &WeightFunction,
    rng: &RngSpec,
) -> Result<SingleSplitResult> {
    validate_roster(roster)?;
    split.validate(data.n())?;
    match score_split(roster, data, split, std::slice::from_ref(w), rng)?.remove(0) {
        Some(scores) => Ok(SingleSplitResult {
            winner: argmin(&scores),
            scores,
        }),
        None => Err(Error::ZeroWeightSplit),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregator {
    #[default]
    Average,
    Vote,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroWeightPolicy {
    Error,
    #[default]
    SkipSplit,
}

/// Training-set size: a row count or a fraction of n (floored).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TrainSize {
    Count(usize),
    Fraction(f64),
}

impl TrainSize {
    pub fn resolve(self, n: usize) -> Result<usize> {
        let n1 = match self {
            TrainSize::Count(c) => c,
            TrainSize::Fraction(f) => {
                if !(f > 0.0 && f < 1.0) {
                    return Err(Error::InvalidPlan(format!("training fraction {f} not in (0,1)")));
                }
                (f * n as f64).floor() as usize
            }
        };
        if n1 < 1 || n1 >= n {
            return Err(Error::InvalidPlan(format!("need 1 <= n1 < n, got n1={n1}, n={n}")));
        }
        Ok(n1)
    }
}

fn default_half() -> TrainSize {
    TrainSize::Fraction(0.5)
}
fn default_k() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MtcvPlan {
    #[serde(default = "default_half")]
    pub n1: TrainSize,
    /// Number of Monte-Carlo splits K.
    #[serde(default = "default_k")]
    pub splits: usize,
    #[serde(default)]
    pub aggregator: Aggregator,
    /// Keep this region's share of the training set proportional.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stratify: Option<Region>,
    #[serde(default)]
    pub zero_weight_policy: ZeroWeightPolicy,
    #[serde(default)]
    pub execution: Execution,
}

impl Default for MtcvPlan {
    fn default() -> Self {
        MtcvPlan {
            n1: default_half(),
            splits: default_k(),
            aggregator: Aggregator::default(),
            stratify: None,
            zero_weight_policy: ZeroWeightPolicy::default(),
            execution: Execution::default(),
        }
    }
}

impl MtcvPlan {
    pub fn validate(&self) -> Result<()> {
        if self.splits == 0 {
            return Err(Error::InvalidPlan("number of splits K must be >= 1".into()));
        }
        if let TrainSize::Fraction(f) = self.n1 {
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::InvalidPlan(format!("training fraction {f} not in (0,1)")));
            }
        }
        Ok(())
    }

    /// The k-th split of `data`, reproducible from `rng` alone.
    pub fn split(&self, data: &Dataset, k: usize, rng: &RngSpec) -> Result<Split> {
        let n = data.n();
        let n1 = self.n1.resolve(n)?;
        let mask = match &self.stratify {
            Some(r) => Some(r.compile_for(data)?.mask(data)),
            None => None,
        };
        make_split(n, n1, mask.as_deref(), &rng.split(k as u64).purpose(Purpose::Split))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub candidates: Vec<String>,
    pub aggregator: Aggregator,
    /// Indices of the splits that were scored.
    pub split_ids: Vec<usize>,
    /// One row per scored split, one column per candidate.
    pub scores: Vec<Vec<f64>>,
    pub split_winners: Vec<usize>,
    pub mean_scores: Vec<f64>,
    pub vote_shares: Vec<f64>,
    /// `mean_scores` or `vote_shares`, per `aggregator`.
    pub aggregate: Vec<f64>,
    pub winner: usize,
    pub skipped_splits: usize,
}

impl SelectionReport {
    fn build(
        roster: &[CandidateProcedure],
        aggregator: Aggregator,
        rows: Vec<(usize, Vec<f64>)>,
        skipped: usize,
    ) -> Self {
        let m = roster.len();
        let kept = rows.len() as f64;
        let mut mean_scores = vec![0.0; m];
        let mut wins = vec![0usize; m];
        let mut split_ids = Vec::with_capacity(rows.len());
        let mut split_winners = Vec::with_capacity(rows.len());
        let mut scores = Vec::with_capacity(rows.len());
        for (k, s) in rows {
            for (acc, v) in mean_scores.iter_mut().zip(&s) {
                *acc += v;
            }
            let w = argmin(&s);
            wins[w] += 1;
            split_ids.push(k);
            split_winners.push(w);
            scores.push(s);
        }
        mean_scores.iter_mut().for_each(|v| *v /= kept);
        let vote_shares: Vec<f64> = wins.iter().map(|&c| c as f64 / kept).collect();
        let (aggregate, winner) = match aggregator {
            Aggregator::Average => (mean_scores.clone(), argmin(&mean_scores)),
            Aggregator::Vote => (vote_shares.clone(), argmax(&vote_shares)),
        };
        SelectionReport {
            candidates: roster.iter().map(|c| c.name.clone()).collect(),
            aggregator,
            split_ids,
            scores,
            split_winners,
            mean_scores,
            vote_shares,
            aggregate,
            winner,
            skipped_splits: skipped,
        }
    }

    /// Winner under either aggregator (both are always computed).
    pub fn winner_by(&self, aggregator: Aggregator) -> usize {
        match aggregator {
            Aggregator::Average => argmin(&self.mean_scores),
            Aggregator::Vote => argmax(&self.vote_shares),
        }
    }

    /// Per-split scores, one row per scored split.
    pub fn scores_table(&self) -> Table {
        let mut t = Table::new(
            std::iter::once("split".to_string())
                .chain(self.candidates.iter().cloned())
                .chain(std::iter::once("winner".to_string())),
        );
        for ((k, s), w) in self.split_ids.iter().zip(&self.scores).zip(&self.split_winners) {
            let mut row = vec![k.to_string()];
            row.extend(s.iter().map(|v| sig6(*v)));
            row.push(self.candidates[*w].clone());
            t.push(row);
        }
        t
    }

    /// Aggregates, one row per candidate.
    pub fn summary_table(&self) -> Table {
        let mut t = Table::new(["id", "candidate", "mean_score", "vote_share", "selected"]);
        for (j, name) in self.candidates.iter().enumerate() {
            t.push(vec![
                j.to_string(),
                name.clone(),
                sig6(self.mean_scores[j]),
                sig6(self.vote_shares[j]),
                (j == self.winner).to_string(),
            ]);
        }
        t
    }
}

/// Split-aggregated selection under several weights at once. All weights see
/// the same splits and the same fits, so their reports are directly
/// comparable split for split.
pub fn select_mtcv_multi(
    roster: &[CandidateProcedure],
    data: &Dataset,
    plan: &MtcvPlan,
    weights: &[WeightFunction],
    rng: &RngSpec,
) -> Result<Vec<SelectionReport>> {
    validate_roster(roster)?;
    plan.validate()?;
    let k = plan.splits;
    let per_split = plan.execution.try_map(k, |s| {
        let split = plan.split(data, s, rng)?;
        score_split(roster, data, &split, weights, &rng.split(s as u64).purpose(Purpose::Fit))
    })?;
    let mut reports = Vec::with_capacity(weights.len());
    for wi in 0..weights.len() {
        let mut rows = Vec::with_capacity(k);
        let mut skipped = 0;
        for (s, per_weight) in per_split.iter().enumerate() {
            match &per_weight[wi] {
                Some(scores) => rows.push((s, scores.clone())),
                None => match plan.zero_weight_policy {
                    ZeroWeightPolicy::Error => return Err(Error::ZeroWeightSplit),
                    ZeroWeightPolicy::SkipSplit => skipped += 1,
                },
            }
        }
        if 2 * skipped > k || rows.is_empty() {
            return Err(Error::ExcessiveSkips { skipped, total: k });
        }
        reports.push(SelectionReport::build(roster, plan.aggregator, rows, skipped));
    }
    Ok(reports)
}

pub fn select_mtcv(
    roster: &[CandidateProcedure],
    data: &Dataset,
    plan: &MtcvPlan,
    w: &WeightFunction,
    rng: &RngSpec,
) -> Result<SelectionReport> {
    Ok(select_mtcv_multi(roster, data, plan, std::slice::from_ref(w), rng)?.remove(0))
}

/// Regular CV: the same procedure with `W = 1`.
pub fn regular_cv(roster: &[CandidateProcedure], data: &Dataset, plan: &MtcvPlan, rng: &RngSpec) -> Result<SelectionReport> {
    select_mtcv(roster, data, plan, &constant_weight(1.0)?, rng)
}
