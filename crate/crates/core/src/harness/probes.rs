//! Truth-based diagnostics on generated data.

use serde::{Deserialize, Serialize};

use super::{aggregator_name, mean_se};
use crate::cv::{argmin, select_mtcv_multi, Aggregator, MtcvPlan};
use crate::data::Dataset;
use crate::dgp::{rate_toy_losses, DgpConfig, RateToyConfig};
use crate::error::{Error, Result};
use crate::estimators::{fit, validate_roster, CandidateProcedure, Predictor};
use crate::exec::Execution;
use crate::report::{sig6, Table};
use crate::rng::{Purpose, RngSpec};
use crate::weights::WeightSpec;

fn d200() -> usize {
    200
}
fn d_probe() -> usize {
    100_000
}
fn uniform() -> WeightSpec {
    WeightSpec::uniform()
}

/// Monte-Carlo integration points with truth values and weights.
struct ProbeSample {
    data: Dataset,
    truth: Vec<f64>,
    w: Vec<f64>,
}

impl ProbeSample {
    fn new(dgp: &DgpConfig, weight: &WeightSpec, probe_n: usize, n: usize, rng: &RngSpec) -> Result<Self> {
        if probe_n == 0 {
            return Err(Error::InvalidConfig("probe_n must be positive".into()));
        }
        let data = dgp.generate(probe_n, &rng.purpose(Purpose::Probe))?;
        let truth = (0..data.n()).map(|i| dgp.mean(data.row(i))).collect();
        let w = weight.build_for(&data)?.eval_all(&data, n)?;
        if !(w.iter().sum::<f64>() > 0.0) {
            return Err(Error::InvalidWeight("probe sample has zero total weight".into()));
        }
        Ok(ProbeSample { data, truth, w })
    }

    fn deviations(&self, pred: &Predictor) -> Vec<f64> {
        (0..self.data.n())
            .map(|i| pred.predict(self.data.row(i)) - self.truth[i])
            .collect()
    }

    /// `sum w d^2 / sum w` and its ratio-estimator standard error.
    fn loss(&self, pred: &Predictor) -> (f64, f64) {
        let d = self.deviations(pred);
        let sw: f64 = self.w.iter().sum();
        let l = d.iter().zip(&self.w).map(|(d, w)| w * d * d).sum::<f64>() / sw;
        let ss: f64 = d
            .iter()
            .zip(&self.w)
            .map(|(d, w)| (w * (d * d - l)).powi(2))
            .sum();
        (l, ss.sqrt() / sw)
    }
}

fn fit_all(
    roster: &[CandidateProcedure],
    data: &Dataset,
    rng: &RngSpec,
) -> Result<Vec<Predictor>> {
    let rows: Vec<usize> = (0..data.n()).collect();
    roster
        .iter()
        .map(|c| {
            fit(c, data, &rows, &rng.purpose(Purpose::Fit).child(c.id as u64))
                .map_err(|e| Error::candidate(c.id, &c.name, e))
        })
        .collect()
}

fn binomial_se(p: f64, reps: usize) -> f64 {
    (p * (1.0 - p) / reps as f64).sqrt()
}

/// The margin `c` as a function of the training size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum CSequence {
    Constant { value: f64 },
    /// `scale * n1^exponent`
    Power { scale: f64, exponent: f64 },
}

impl CSequence {
    pub fn at(&self, n1: usize) -> f64 {
        match *self {
            CSequence::Constant { value } => value,
            CSequence::Power { scale, exponent } => scale * (n1 as f64).powf(exponent),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridPoint {
    pub n: usize,
    pub n1: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RankingProbeConfig {
    pub dgp: DgpConfig,
    pub roster: Vec<CandidateProcedure>,
    /// Candidate expected to win.
    pub good: usize,
    pub bad: usize,
    pub grid: Vec<GridPoint>,
    pub c: CSequence,
    /// Smallest admissible training size.
    pub min_n1: usize,
    #[serde(default = "d200")]
    pub reps: usize,
    #[serde(default = "d_probe")]
    pub probe_n: usize,
    #[serde(default = "uniform")]
    pub weight: WeightSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub execution: Execution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingRow {
    pub n: usize,
    pub n1: usize,
    pub c: f64,
    /// Share of reps with `||f - f_bad|| >= (1 + c) ||f - f_good||`.
    pub p_hat: f64,
    pub se: f64,
    pub mean_loss_good: f64,
    pub mean_loss_bad: f64,
    /// Largest Monte-Carlo standard error of a single loss estimate.
    pub probe_se: f64,
    pub reps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingProbeResult {
    pub rows: Vec<RankingRow>,
}

impl RankingProbeResult {
    pub fn table(&self) -> Table {
        let mut t = Table::new([
            "n", "n1", "c", "p_hat", "se", "mean_loss_good", "mean_loss_bad", "probe_se", "reps",
        ]);
        for r in &self.rows {
            t.push(vec![
                r.n.to_string(),
                r.n1.to_string(),
                sig6(r.c),
                sig6(r.p_hat),
                sig6(r.se),
                sig6(r.mean_loss_good),
                sig6(r.mean_loss_bad),
                sig6(r.probe_se),
                r.reps.to_string(),
            ]);
        }
        t
    }
}

pub fn ranking_probe(cfg: &RankingProbeConfig) -> Result<RankingProbeResult> {
    validate_roster(&cfg.roster)?;
    let m = cfg.roster.len();
    if cfg.good >= m || cfg.bad >= m || cfg.reps == 0 {
        return Err(Error::InvalidConfig("ranking probe needs valid candidate ids and reps >= 1".into()));
    }
    let pair = [cfg.roster[cfg.good].clone(), cfg.roster[cfg.bad].clone()];
    let pair: Vec<CandidateProcedure> = pair
        .into_iter()
        .enumerate()
        .map(|(i, mut c)| {
            c.id = i;
            c
        })
        .collect();
    let mut rows = Vec::new();
    for (g, pt) in cfg.grid.iter().enumerate() {
        if !(cfg.min_n1 <= pt.n1 && pt.n1 < pt.n) {
            return Err(Error::InvalidConfig(format!(
                "grid point (n={}, n1={}) violates min_n1={} <= n1 < n",
                pt.n, pt.n1, cfg.min_n1
            )));
        }
        let base = RngSpec::new(cfg.seed).split(g as u64);
        let probe = ProbeSample::new(&cfg.dgp, &cfg.weight, cfg.probe_n, pt.n, &base)?;
        let c = cfg.c.at(pt.n1);
        let per_rep = cfg.execution.try_map(cfg.reps, |r| {
            let rng = base.replication(r as u64);
            let train = cfg.dgp.generate(pt.n1, &rng.purpose(Purpose::Data))?;
            let preds = fit_all(&pair, &train, &rng)?;
            let (lg, sg) = probe.loss(&preds[0]);
            let (lb, sb) = probe.loss(&preds[1]);
            Ok::<_, Error>((lg, lb, sg.max(sb)))
        })?;
        let hits = per_rep
            .iter()
            .filter(|(lg, lb, _)| lb.sqrt() >= (1.0 + c) * lg.sqrt())
            .count();
        let p_hat = hits as f64 / cfg.reps as f64;
        rows.push(RankingRow {
            n: pt.n,
            n1: pt.n1,
            c,
            p_hat,
            se: binomial_se(p_hat, cfg.reps),
            mean_loss_good: per_rep.iter().map(|t| t.0).sum::<f64>() / cfg.reps as f64,
            mean_loss_bad: per_rep.iter().map(|t| t.1).sum::<f64>() / cfg.reps as f64,
            probe_se: per_rep.iter().map(|t| t.2).fold(0.0, f64::max),
            reps: cfg.reps,
        });
    }
    Ok(RankingProbeResult { rows })
}

fn d10000() -> usize {
    10_000
}
fn d1000() -> usize {
    1000
}
fn d1f() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateToyProbeConfig {
    #[serde(default = "d10000")]
    pub n: usize,
    #[serde(default = "d1000")]
    pub n1: usize,
    #[serde(default = "d1f")]
    pub sigma: f64,
    #[serde(default = "d10000")]
    pub reps: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub execution: Execution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateToyProbeResult {
    pub n: usize,
    pub n1: usize,
    pub sigma: f64,
    pub loss2: f64,
    pub mean_loss1: f64,
    pub se_loss1: f64,
    /// `sigma^2 / n1`
    pub expected_loss1: f64,
    /// Share of reps with `loss1 < loss2`.
    pub model1_better: f64,
    pub se_model1_better: f64,
    pub reps: usize,
}

impl RateToyProbeResult {
    pub fn table(&self) -> Table {
        let mut t = Table::new([
            "n", "n1", "sigma", "loss2", "mean_loss1", "se_loss1", "expected_loss1", "model1_better",
            "se_model1_better", "reps",
        ]);
        t.push(vec![
            self.n.to_string(),
            self.n1.to_string(),
            sig6(self.sigma),
            sig6(self.loss2),
            sig6(self.mean_loss1),
            sig6(self.se_loss1),
            sig6(self.expected_loss1),
            sig6(self.model1_better),
            sig6(self.se_model1_better),
            self.reps.to_string(),
        ]);
        t
    }
}

/// Model 1 is the truth shifted by the mean training residual; model 2 is
/// zero. Both losses are exact under the window weight.
pub fn rate_toy_probe(cfg: &RateToyProbeConfig) -> Result<RateToyProbeResult> {
    if cfg.n1 == 0 || cfg.n == 0 || cfg.reps == 0 {
        return Err(Error::InvalidConfig("rate toy probe needs n, n1, reps >= 1".into()));
    }
    let gen = RateToyConfig {
        n: cfg.n,
        sigma: cfg.sigma,
    };
    let losses = cfg.execution.try_map(cfg.reps, |r| {
        let rng = RngSpec::new(cfg.seed).replication(r as u64).purpose(Purpose::Data);
        let d = gen.generate(cfg.n1, &rng)?;
        let eps_bar = (0..d.n())
            .map(|i| d.y()[i] - gen.mean(d.row(i)))
            .sum::<f64>()
            / d.n() as f64;
        Ok::<_, Error>(rate_toy_losses(cfg.n, cfg.n1, eps_bar))
    })?;
    let loss2 = rate_toy_losses(cfg.n, cfg.n1, 0.0).1;
    let l1: Vec<f64> = losses.iter().map(|l| l.0).collect();
    let (mean_loss1, se_loss1) = mean_se(&l1);
    let better = l1.iter().filter(|&&v| v < loss2).count() as f64 / cfg.reps as f64;
    Ok(RateToyProbeResult {
        n: cfg.n,
        n1: cfg.n1,
        sigma: cfg.sigma,
        loss2,
        mean_loss1,
        se_loss1,
        expected_loss1: cfg.sigma * cfg.sigma / cfg.n1 as f64,
        model1_better: better,
        se_model1_better: binomial_se(better, cfg.reps),
        reps: cfg.reps,
    })
}

/// `||d||_{4,w} / ||d||_{2,w}` under the empirical measure `w / sum w`.
pub fn lp_ratio(d: &[f64], w: &[f64]) -> f64 {
    let sw: f64 = w.iter().sum();
    let m2 = d.iter().zip(w).map(|(d, w)| w * d * d).sum::<f64>() / sw;
    let m4 = d.iter().zip(w).map(|(d, w)| w * d.powi(4)).sum::<f64>() / sw;
    m4.powf(0.25) / m2.sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct L4L2Config {
    pub dgp: DgpConfig,
    pub candidate: CandidateProcedure,
    pub n: usize,
    pub n1: usize,
    #[serde(default = "uniform")]
    pub weight: WeightSpec,
    #[serde(default = "d_probe")]
    pub probe_n: usize,
    #[serde(default = "d200")]
    pub reps: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub execution: Execution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L4L2Result {
    pub mean_ratio: f64,
    pub se_ratio: f64,
    pub max_ratio: f64,
    pub ratios: Vec<f64>,
}

impl L4L2Result {
    pub fn table(&self) -> Table {
        let mut t = Table::new(["mean_ratio", "se_ratio", "max_ratio", "reps"]);
        t.push(vec![
            sig6(self.mean_ratio),
            sig6(self.se_ratio),
            sig6(self.max_ratio),
            self.ratios.len().to_string(),
        ]);
        t
    }
}

pub fn l4_l2_ratio_probe(cfg: &L4L2Config) -> Result<L4L2Result> {
    if cfg.reps == 0 || cfg.n1 == 0 {
        return Err(Error::InvalidConfig("l4/l2 probe needs n1, reps >= 1".into()));
    }
    let mut cand = cfg.candidate.clone();
    cand.id = 0;
    let base = RngSpec::new(cfg.seed);
    let probe = ProbeSample::new(&cfg.dgp, &cfg.weight, cfg.probe_n, cfg.n, &base)?;
    let ratios = cfg.execution.try_map(cfg.reps, |r| {
        let rng = base.replication(r as u64);
        let train = cfg.dgp.generate(cfg.n1, &rng.purpose(Purpose::Data))?;
        let pred = fit_all(std::slice::from_ref(&cand), &train, &rng)?.remove(0);
        Ok::<_, Error>(lp_ratio(&probe.deviations(&pred), &probe.w))
    })?;
    let (mean_ratio, se_ratio) = mean_se(&ratios);
    Ok(L4L2Result {
        mean_ratio,
        se_ratio,
        max_ratio: ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        ratios,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConsistencyConfig {
    pub dgp: DgpConfig,
    pub roster: Vec<CandidateProcedure>,
    pub weight: WeightSpec,
    pub n_grid: Vec<usize>,
    #[serde(default)]
    pub plan: MtcvPlan,
    #[serde(default = "d200")]
    pub reps: usize,
    #[serde(default = "d_probe")]
    pub probe_n: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub execution: Execution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyRow {
    pub n: usize,
    pub aggregator: Aggregator,
    /// Share of reps where the selector picked that rep's truth-best candidate.
    pub p_correct: f64,
    pub se_correct: f64,
    /// Selection frequency per candidate.
    pub frequency: Vec<f64>,
    pub se_frequency: Vec<f64>,
    /// Mean truth-based weighted loss per candidate.
    pub mean_loss: Vec<f64>,
    pub best_by_mean_loss: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyResult {
    pub candidates: Vec<String>,
    pub rows: Vec<ConsistencyRow>,
}

impl ConsistencyResult {
    pub fn row(&self, n: usize, agg: Aggregator) -> Option<&ConsistencyRow> {
        self.rows.iter().find(|r| r.n == n && r.aggregator == agg)
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new([
            "n", "aggregator", "candidate", "frequency", "se", "mean_loss", "best_by_mean_loss",
            "p_correct", "se_correct",
        ]);
        for r in &self.rows {
            for (c, name) in self.candidates.iter().enumerate() {
                t.push(vec![
                    r.n.to_string(),
                    aggregator_name(r.aggregator).into(),
                    name.clone(),
                    sig6(r.frequency[c]),
                    sig6(r.se_frequency[c]),
                    sig6(r.mean_loss[c]),
                    (r.best_by_mean_loss == c).to_string(),
                    sig6(r.p_correct),
                    sig6(r.se_correct),
                ]);
            }
        }
        t
    }
}

/// Selection frequencies against sample size, with the truth-best candidate
/// determined per replication from Monte-Carlo losses.
pub fn consistency_curve(cfg: &ConsistencyConfig) -> Result<ConsistencyResult> {
    validate_roster(&cfg.roster)?;
    cfg.plan.validate()?;
    if cfg.reps == 0 || cfg.n_grid.is_empty() {
        return Err(Error::InvalidConfig("consistency curve needs reps >= 1 and a grid".into()));
    }
    let m = cfg.roster.len();
    let mut rows = Vec::new();
    for (g, &n) in cfg.n_grid.iter().enumerate() {
        let base = RngSpec::new(cfg.seed).split(g as u64);
        let probe = ProbeSample::new(&cfg.dgp, &cfg.weight, cfg.probe_n, n, &base)?;
        let per_rep = cfg.execution.try_map(cfg.reps, |r| {
            let rng = RngSpec::new(cfg.seed)
                .replication(((g as u64) << 32) | r as u64);
            let data = cfg.dgp.generate(n, &rng.purpose(Purpose::Data))?;
            let w = cfg.weight.build_for(&data)?;
            let rep = select_mtcv_multi(&cfg.roster, &data, &cfg.plan, std::slice::from_ref(&w), &rng)?
                .remove(0);
            let losses: Vec<f64> = fit_all(&cfg.roster, &data, &rng)?
                .iter()
                .map(|p| probe.loss(p).0)
                .collect();
            Ok::<_, Error>((
                rep.winner_by(Aggregator::Average),
                rep.winner_by(Aggregator::Vote),
                losses,
            ))
        })?;
        let mean_loss: Vec<f64> = (0..m)
            .map(|c| per_rep.iter().map(|t| t.2[c]).sum::<f64>() / cfg.reps as f64)
            .collect();
        let best_by_mean_loss = argmin(&mean_loss);
        for agg in [Aggregator::Average, Aggregator::Vote] {
            let pick = |t: &(usize, usize, Vec<f64>)| match agg {
                Aggregator::Average => t.0,
                Aggregator::Vote => t.1,
            };
            let mut frequency = vec![0.0; m];
            let mut correct = 0usize;
            for t in &per_rep {
                frequency[pick(t)] += 1.0;
                if pick(t) == argmin(&t.2) {
                    correct += 1;
                }
            }
            frequency.iter_mut().for_each(|f| *f /= cfg.reps as f64);
            let p_correct = correct as f64 / cfg.reps as f64;
            rows.push(ConsistencyRow {
                n,
                aggregator: agg,
                p_correct,
                se_correct: binomial_se(p_correct, cfg.reps),
                se_frequency: frequency.iter().map(|&f| binomial_se(f, cfg.reps)).collect(),
                frequency,
                mean_loss: mean_loss.clone(),
                best_by_mean_loss,
            });
        }
    }
    Ok(ConsistencyResult {
        candidates: cfg.roster.iter().map(|c| c.name.clone()).collect(),
        rows,
    })
}

/// Any probe, tagged by `probe` in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "probe", rename_all = "snake_case")]
pub enum ProbeSpec {
    Ranking(RankingProbeConfig),
    RateToy(RateToyProbeConfig),
    L4L2(L4L2Config),
    Consistency(ConsistencyConfig),
}

impl ProbeSpec {
    pub fn seed(&self) -> u64 {
        match self {
            ProbeSpec::Ranking(c) => c.seed,
            ProbeSpec::RateToy(c) => c.seed,
            ProbeSpec::L4L2(c) => c.seed,
            ProbeSpec::Consistency(c) => c.seed,
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        match self {
            ProbeSpec::Ranking(c) => c.seed = seed,
            ProbeSpec::RateToy(c) => c.seed = seed,
            ProbeSpec::L4L2(c) => c.seed = seed,
            ProbeSpec::Consistency(c) => c.seed = seed,
        }
    }

    pub fn set_execution(&mut self, e: Execution) {
        match self {
            ProbeSpec::Ranking(c) => c.execution = e,
            ProbeSpec::RateToy(c) => c.execution = e,
            ProbeSpec::L4L2(c) => c.execution = e,
            ProbeSpec::Consistency(c) => c.execution = e,
        }
    }

    /// Output tables and a JSON copy of the result.
    pub fn run(&self) -> Result<(Vec<(String, Table)>, serde_json::Value)> {
        Ok(match self {
            ProbeSpec::Ranking(c) => {
                let r = ranking_probe(c)?;
                (vec![("ranking".into(), r.table())], json(&r))
            }
            ProbeSpec::RateToy(c) => {
                let r = rate_toy_probe(c)?;
                (vec![("rate_toy".into(), r.table())], json(&r))
            }
            ProbeSpec::L4L2(c) => {
                let r = l4_l2_ratio_probe(c)?;
                (vec![("l4_l2".into(), r.table())], json(&r))
            }
            ProbeSpec::Consistency(c) => {
                let r = consistency_curve(c)?;
                (vec![("consistency".into(), r.table())], json(&r))
            }
        })
    }
}

fn json<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("probe result serializes")
}
