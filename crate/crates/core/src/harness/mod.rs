//! Replication driver: repeated selection experiments, summaries and probes.

mod probes;

pub use probes::{
    consistency_curve, l4_l2_ratio_probe, lp_ratio, ranking_probe, rate_toy_probe, CSequence,
    ConsistencyConfig, ConsistencyResult, GridPoint, L4L2Config, L4L2Result, ProbeSpec,
    RankingProbeConfig, RankingProbeResult, RateToyProbeConfig, RateToyProbeResult,
};

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::cv::{select_mtcv_multi, Aggregator, MtcvPlan};
use crate::data::{make_split, Dataset, Region};
use crate::dgp::DgpConfig;
use crate::error::{Error, Result};
use crate::estimators::{fit, validate_roster, CandidateProcedure, Predictor};
use crate::exec::Execution;
use crate::report::{sig6, Table};
use crate::rng::{Purpose, RngSpec};
use crate::weights::{WeightFunction, WeightSpec};

/// `sum w e^2 / sum w` over the evaluation rows.
pub fn weighted_mse(pred: &Predictor, eval: &Dataset, w: &WeightFunction, n: usize) -> Result<f64> {
    let wv = w.eval_all(eval, n)?;
    let (num, den) = weighted_sums(pred, eval, &wv);
    if !(den > 0.0) {
        return Err(Error::InvalidWeight("evaluation set has zero total weight".into()));
    }
    Ok(num / den)
}

fn weighted_sums(pred: &Predictor, eval: &Dataset, wv: &[f64]) -> (f64, f64) {
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, &wi) in wv.iter().enumerate() {
        if wi != 0.0 {
            let r = eval.y()[i] - pred.predict(eval.row(i));
            num += wi * r * r;
        }
        den += wi;
    }
    (num, den)
}

/// Denominator of a reported error metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricNorm {
    /// `sum w e^2 / sum w`
    #[default]
    WeightSum,
    /// `sum w e^2 / n_eval`; with 0/1 weights, region contributions add up
    /// to the overall MSE.
    PerObservation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSpec {
    pub name: String,
    pub weight: WeightSpec,
    #[serde(default)]
    pub norm: MetricNorm,
}

/// A named selection criterion: TCV under `weight`, or regular CV when the
/// weight is constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectorSpec {
    pub name: String,
    pub weight: WeightSpec,
}

fn d02() -> f64 {
    0.2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    /// Fresh selection and evaluation samples every replication.
    Generated {
        dgp: DgpConfig,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<usize>,
        eval_n: usize,
    },
    /// Housing table; each replication holds out `eval_fraction` of rows.
    Housing {
        path: PathBuf,
        #[serde(default = "d02")]
        eval_fraction: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        stratify: Option<Region>,
    },
    /// Generic numeric CSV with a named response column.
    Csv {
        path: PathBuf,
        response: String,
        #[serde(default = "d02")]
        eval_fraction: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        stratify: Option<Region>,
    },
}

fn d1() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    pub source: DataSource,
    pub roster: Vec<CandidateProcedure>,
    pub selectors: Vec<SelectorSpec>,
    #[serde(default)]
    pub plan: MtcvPlan,
    pub metrics: Vec<MetricSpec>,
    #[serde(default = "d1")]
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    /// Scheduling of replications.
    #[serde(default)]
    pub execution: Execution,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        validate_roster(&self.roster)?;
        self.plan.validate()?;
        if self.replications == 0 {
            return Err(Error::InvalidConfig("replications must be >= 1".into()));
        }
        if self.selectors.is_empty() || self.metrics.is_empty() {
            return Err(Error::InvalidConfig("need at least one selector and one metric".into()));
        }
        let mut names: Vec<&str> = self.roster.iter().map(|c| c.name.as_str()).collect();
        names.extend(self.selectors.iter().map(|s| s.name.as_str()));
        let mut sorted = names.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != names.len() {
            return Err(Error::InvalidConfig("candidate and selector names must be unique".into()));
        }
        match &self.source {
            DataSource::Generated { eval_n, n, .. } => {
                if *eval_n == 0 || *n == Some(0) {
                    return Err(Error::InvalidConfig("sample sizes must be positive".into()));
                }
            }
            DataSource::Housing { eval_fraction, .. } | DataSource::Csv { eval_fraction, .. } => {
                if !(*eval_fraction > 0.0 && *eval_fraction < 1.0) {
                    return Err(Error::InvalidConfig(format!(
                        "eval_fraction {eval_fraction} not in (0,1)"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Winners of one selector in one replication.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Winners {
    pub average: usize,
    pub vote: usize,
}

impl Winners {
    pub fn by(&self, a: Aggregator) -> usize {
        match a {
            Aggregator::Average => self.average,
            Aggregator::Vote => self.vote,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub replication: usize,
    /// `[candidate][metric]`
    pub candidate_metrics: Vec<Vec<f64>>,
    /// One entry per selector.
    pub winners: Vec<Winners>,
}

impl ReplicationRecord {
    /// Metrics of the candidate a selector picked.
    pub fn selector_metric(&self, selector: usize, agg: Aggregator, metric: usize) -> f64 {
        self.candidate_metrics[self.winners[selector].by(agg)][metric]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub name: String,
    pub is_selector: bool,
    /// Per metric.
    pub mean: Vec<f64>,
    pub se: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionFrequency {
    pub selector: String,
    pub aggregator: Aggregator,
    /// Per candidate; sums to 1.
    pub frequency: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationSummary {
    pub experiment: String,
    pub candidates: Vec<String>,
    pub selectors: Vec<String>,
    pub metrics: Vec<String>,
    pub aggregator: Aggregator,
    pub methods: Vec<MethodSummary>,
    pub frequencies: Vec<SelectionFrequency>,
    pub n_replications: usize,
    pub records: Vec<ReplicationRecord>,
}

/// Mean and `sd / sqrt(R)` with the (R-1) sample standard deviation.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let r = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / r;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (r - 1.0);
    (mean, (var / r).sqrt())
}

impl ReplicationSummary {
    fn build(spec: &ExperimentSpec, records: Vec<ReplicationRecord>) -> Self {
        let agg = spec.plan.aggregator;
        let nm = spec.metrics.len();
        let mut methods = Vec::new();
        let column = |f: &dyn Fn(&ReplicationRecord) -> f64| -> Vec<f64> { records.iter().map(f).collect() };
        for (c, cand) in spec.roster.iter().enumerate() {
            let (mean, se) = (0..nm).map(|m| mean_se(&column(&|r| r.candidate_metrics[c][m]))).unzip();
            methods.push(MethodSummary {
                name: cand.name.clone(),
                is_selector: false,
                mean,
                se,
            });
        }
        for (s, sel) in spec.selectors.iter().enumerate() {
            let (mean, se) = (0..nm)
                .map(|m| mean_se(&column(&|r| r.selector_metric(s, agg, m))))
                .unzip();
            methods.push(MethodSummary {
                name: sel.name.clone(),
                is_selector: true,
                mean,
                se,
            });
        }
        let mut frequencies = Vec::new();
        for (s, sel) in spec.selectors.iter().enumerate() {
            for a in [Aggregator::Average, Aggregator::Vote] {
                let mut f = vec![0.0; spec.roster.len()];
                for r in &records {
                    f[r.winners[s].by(a)] += 1.0;
                }
                f.iter_mut().for_each(|v| *v /= records.len() as f64);
                frequencies.push(SelectionFrequency {
                    selector: sel.name.clone(),
                    aggregator: a,
                    frequency: f,
                });
            }
        }
        ReplicationSummary {
            experiment: spec.name.clone(),
            candidates: spec.roster.iter().map(|c| c.name.clone()).collect(),
            selectors: spec.selectors.iter().map(|s| s.name.clone()).collect(),
            metrics: spec.metrics.iter().map(|m| m.name.clone()).collect(),
            aggregator: agg,
            methods,
            frequencies,
            n_replications: records.len(),
            records,
        }
    }

    pub fn method(&self, name: &str) -> Option<&MethodSummary> {
        self.methods.iter().find(|m| m.name == name)
    }

    pub fn metric_index(&self, name: &str) -> Option<usize> {
        self.metrics.iter().position(|m| m == name)
    }

    /// Mean and SE of `method` under `metric`.
    pub fn value(&self, method: &str, metric: &str) -> Option<(f64, f64)> {
        let m = self.metric_index(metric)?;
        self.method(method).map(|s| (s.mean[m], s.se[m]))
    }

    pub fn frequency(&self, selector: &str, agg: Aggregator) -> Option<&[f64]> {
        self.frequencies
            .iter()
            .find(|f| f.selector == selector && f.aggregator == agg)
            .map(|f| f.frequency.as_slice())
    }

    /// One row per method and metric.
    pub fn summary_table(&self) -> Table {
        let mut t = Table::new(["method", "kind", "metric", "mean", "se", "replications"]);
        for m in &self.methods {
            for (j, metric) in self.metrics.iter().enumerate() {
                t.push(vec![
                    m.name.clone(),
                    if m.is_selector { "selector" } else { "candidate" }.into(),
                    metric.clone(),
                    sig6(m.mean[j]),
                    sig6(m.se[j]),
                    self.n_replications.to_string(),
                ]);
            }
        }
        t
    }

    /// Metrics as rows, methods as columns, `mean (se)` cells.
    pub fn wide_table(&self) -> Table {
        let mut header = vec!["metric".to_string()];
        header.extend(self.methods.iter().map(|m| m.name.clone()));
        let mut t = Table::new(header);
        for (j, metric) in self.metrics.iter().enumerate() {
            let mut row = vec![metric.clone()];
            row.extend(
                self.methods
                    .iter()
                    .map(|m| format!("{} ({})", sig6(m.mean[j]), sig6(m.se[j]))),
            );
            t.push(row);
        }
        t
    }

    pub fn selection_table(&self) -> Table {
        let mut t = Table::new(["selector", "aggregator", "candidate", "frequency"]);
        for f in &self.frequencies {
            for (c, v) in f.frequency.iter().enumerate() {
                t.push(vec![
                    f.selector.clone(),
                    aggregator_name(f.aggregator).into(),
                    self.candidates[c].clone(),
                    sig6(*v),
                ]);
            }
        }
        t
    }

    pub fn replications_table(&self) -> Table {
        let mut header = vec!["replication".to_string(), "method".to_string()];
        header.extend(self.metrics.iter().cloned());
        let mut t = Table::new(header);
        for r in &self.records {
            for (c, name) in self.candidates.iter().enumerate() {
                let mut row = vec![r.replication.to_string(), name.clone()];
                row.extend(r.candidate_metrics[c].iter().map(|v| sig6(*v)));
                t.push(row);
            }
            for (s, name) in self.selectors.iter().enumerate() {
                let mut row = vec![r.replication.to_string(), name.clone()];
                row.extend((0..self.metrics.len()).map(|m| sig6(r.selector_metric(s, self.aggregator, m))));
                t.push(row);
            }
        }
        t
    }

    pub fn winners_table(&self) -> Table {
        let mut t = Table::new(["replication", "selector", "average", "vote"]);
        for r in &self.records {
            for (s, name) in self.selectors.iter().enumerate() {
                t.push(vec![
                    r.replication.to_string(),
                    name.clone(),
                    self.candidates[r.winners[s].average].clone(),
                    self.candidates[r.winners[s].vote].clone(),
                ]);
            }
        }
        t
    }

    pub fn tables(&self) -> Vec<(String, Table)> {
        vec![
            ("summary".into(), self.summary_table()),
            ("table".into(), self.wide_table()),
            ("selection".into(), self.selection_table()),
            ("replications".into(), self.replications_table()),
            ("winners".into(), self.winners_table()),
        ]
    }
}

pub fn aggregator_name(a: Aggregator) -> &'static str {
    match a {
        Aggregator::Average => "average",
        Aggregator::Vote => "vote",
    }
}

enum Loaded {
    Generated {
        dgp: DgpConfig,
        n: usize,
        eval_n: usize,
    },
    Table {
        data: Dataset,
        n_eval: usize,
        mask: Option<Vec<bool>>,
    },
}

impl Loaded {
    fn from_source(src: &DataSource) -> Result<Self> {
        let table = |data: Dataset, frac: f64, stratify: &Option<Region>| -> Result<Loaded> {
            let n_eval = ((data.n() as f64) * frac).round() as usize;
            if n_eval == 0 || n_eval >= data.n() {
                return Err(Error::InvalidConfig(format!(
                    "eval fraction {frac} leaves no rows on one side of {} rows",
                    data.n()
                )));
            }
            let mask = match stratify {
                Some(r) => Some(r.compile_for(&data)?.mask(&data)),
                None => None,
            };
            Ok(Loaded::Table { data, n_eval, mask })
        };
        match src {
            DataSource::Generated { dgp, n, eval_n } => Ok(Loaded::Generated {
                dgp: dgp.clone(),
                n: n.unwrap_or_else(|| dgp.default_n()),
                eval_n: *eval_n,
            }),
            DataSource::Housing {
                path,
                eval_fraction,
                stratify,
            } => table(crate::io::load_housing(path)?, *eval_fraction, stratify),
            DataSource::Csv {
                path,
                response,
                eval_fraction,
                stratify,
            } => table(crate::io::load_csv(path, response)?, *eval_fraction, stratify),
        }
    }

    /// (selection data, evaluation data) for replication `r`.
    fn draw(&self, rng: &RngSpec) -> Result<(Dataset, Dataset)> {
        match self {
            Loaded::Generated { dgp, n, eval_n } => Ok((
                dgp.generate(*n, &rng.purpose(Purpose::Data))?,
                dgp.generate(*eval_n, &rng.purpose(Purpose::EvalData))?,
            )),
            Loaded::Table { data, n_eval, mask } => {
                let outer = make_split(
                    data.n(),
                    data.n() - n_eval,
                    mask.as_deref(),
                    &rng.purpose(Purpose::Outer),
                )?;
                Ok((data.subset(&outer.train), data.subset(&outer.test)))
            }
        }
    }
}

fn run_one(
    spec: &ExperimentSpec,
    source: &Loaded,
    r: usize,
) -> Result<ReplicationRecord> {
    let rng = RngSpec::new(spec.seed).replication(r as u64);
    let (sel, eval) = source.draw(&rng)?;
    let sel_weights = spec
        .selectors
        .iter()
        .map(|s| s.weight.build_for(&sel))
        .collect::<Result<Vec<_>>>()?;
    let reports = select_mtcv_multi(&spec.roster, &sel, &spec.plan, &sel_weights, &rng)?;
    let winners = reports
        .iter()
        .map(|rep| Winners {
            average: rep.winner_by(Aggregator::Average),
            vote: rep.winner_by(Aggregator::Vote),
        })
        .collect();

    let full_fit = rng.purpose(Purpose::Fit).split(u64::MAX);
    let preds = spec
        .roster
        .iter()
        .map(|c| {
            fit(c, &sel, &(0..sel.n()).collect::<Vec<_>>(), &full_fit.child(c.id as u64))
                .map_err(|e| Error::candidate(c.id, &c.name, e))
        })
        .collect::<Result<Vec<_>>>()?;
    let metric_w = spec
        .metrics
        .iter()
        .map(|m| Ok((m.weight.build_for(&eval)?.eval_all(&eval, sel.n())?, m.norm)))
        .collect::<Result<Vec<_>>>()?;
    let candidate_metrics = preds
        .iter()
        .map(|p| {
            metric_w
                .iter()
                .map(|(wv, norm)| {
                    let (num, den) = weighted_sums(p, &eval, wv);
                    match norm {
                        MetricNorm::PerObservation => Ok(num / eval.n() as f64),
                        MetricNorm::WeightSum if den > 0.0 => Ok(num / den),
                        MetricNorm::WeightSum => Err(Error::InvalidWeight(
                            "evaluation set has zero total weight".into(),
                        )),
                    }
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ReplicationRecord {
        replication: r,
        candidate_metrics,
        winners,
    })
}

/// Runs every replication and summarizes. Replication `r` draws all of its
/// randomness from `RngSpec::new(seed).replication(r)`, so results do not
/// depend on scheduling.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ReplicationSummary> {
    spec.validate()?;
    let source = Loaded::from_source(&spec.source)?;
    let records = spec.execution.try_map(spec.replications, |r| {
        run_one(spec, &source, r).map_err(|e| Error::Replication {
            index: r,
            source: Box::new(e),
        })
    })?;
    Ok(ReplicationSummary::build(spec, records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgp::Sim2Config;
    use crate::estimators::{FitConfig, NwConfig, OlsConfig, Term};
    use crate::weights::constant_weight;

    #[derive(Debug)]
    struct Shift(f64);
    impl crate::estimators::Regressor for Shift {
        fn predict(&self, x: &[f64]) -> f64 {
            x[0] + self.0
        }
        fn summary(&self) -> crate::estimators::FitSummary {
            crate::estimators::FitSummary::Fourier { coefficients: vec![] }
        }
    }

    fn line(n: usize) -> Dataset {
        let x: Vec<f64> = (0..n).map(|i| i as f64).collect();
        Dataset::new(x.clone(), 1, x, None).unwrap()
    }

    #[test]
    fn weighted_mse_cases() {
        let d = line(4);
        let perfect = Predictor::new(0, 1, std::sync::Arc::new(Shift(0.0)));
        let off = Predictor::new(0, 1, std::sync::Arc::new(Shift(2.0)));
        let one = constant_weight(1.0).unwrap();
        assert_eq!(weighted_mse(&off, &d, &one, 4).unwrap(), 4.0);
        assert_eq!(weighted_mse(&perfect, &d, &one, 4).unwrap(), 0.0);
        let half = WeightSpec::Region {
            region: Region::Below { column: 0.into(), threshold: 2.0 },
            prob: None,
        }
        .build_for(&d)
        .unwrap();
        assert_eq!(weighted_mse(&perfect, &d, &half, 4).unwrap(), 0.0);
        let none = WeightSpec::Region {
            region: Region::Below { column: 0.into(), threshold: -1.0 },
            prob: None,
        }
        .build_for(&d)
        .unwrap();
        assert!(weighted_mse(&off, &d, &none, 4).is_err());
    }

    #[test]
    fn weighted_mse_hand_case() {
        // residuals 1, 3, 2 with weights 1, 0, 2
        let d = Dataset::new(vec![0.0, 1.0, 2.0], 1, vec![1.0, 4.0, 4.0], None).unwrap();
        let p = Predictor::new(0, 1, std::sync::Arc::new(Shift(0.0)));
        let w = WeightSpec::Piecewise {
            region: Region::Below { column: 0.into(), threshold: 0.5 },
            inside: 1.0,
            outside: 2.0,
        };
        let wf = w.build_for(&d).unwrap();
        // weights (1, 2, 2), squared errors (1, 9, 4)
        assert!((weighted_mse(&p, &d, &wf, 3).unwrap() - (1.0 + 18.0 + 8.0) / 5.0).abs() < 1e-15);
        let (num, den) = weighted_sums(&p, &d, &[1.0, 0.0, 2.0]);
        assert_eq!(num / den, 3.0);
    }

    #[test]
    fn mean_se_matches_definition() {
        let (m, se) = mean_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_se(&[7.0]), (7.0, 0.0));
    }

    fn small_sim2(reps: usize) -> ExperimentSpec {
        let local = Region::Below { column: 0.into(), threshold: 0.1 };
        ExperimentSpec {
            name: "sim2-small".into(),
            source: DataSource::Generated {
                dgp: DgpConfig::Sim2(Sim2Config::default()),
                n: Some(60),
                eval_n: 200,
            },
            roster: vec![
                CandidateProcedure::global(
                    0,
                    "NW",
                    FitConfig::NadarayaWatson(NwConfig { grid_points: 8, ..NwConfig::default() }),
                ),
                CandidateProcedure::global(
                    1,
                    "Linear",
                    FitConfig::Ols(OlsConfig::new(vec![Term::Intercept, Term::Column { column: 0.into() }])),
                ),
            ],
            selectors: vec![
                SelectorSpec {
                    name: "TCV_1".into(),
                    weight: WeightSpec::Piecewise { region: local.clone(), inside: 1.0, outside: 0.0 },
                },
                SelectorSpec { name: "CV".into(), weight: WeightSpec::uniform() },
            ],
            plan: MtcvPlan { splits: 5, ..MtcvPlan::default() },
            metrics: vec![
                MetricSpec {
                    name: "local".into(),
                    weight: WeightSpec::Region { region: local.clone(), prob: None },
                    norm: MetricNorm::PerObservation,
                },
                MetricSpec {
                    name: "outside".into(),
                    weight: WeightSpec::Region { region: local.complement(), prob: None },
                    norm: MetricNorm::PerObservation,
                },
                MetricSpec { name: "overall".into(), weight: WeightSpec::uniform(), norm: MetricNorm::WeightSum },
            ],
            replications: reps,
            seed: 3,
            execution: Execution::Sequential,
        }
    }

    #[test]
    fn summary_bookkeeping() {
        let s = run_experiment(&small_sim2(4)).unwrap();
        assert_eq!(s.n_replications, 4);
        assert_eq!(s.methods.len(), 4);
        for f in &s.frequencies {
            assert!((f.frequency.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        for r in &s.records {
            for c in &r.candidate_metrics {
                assert!((c[0] + c[1] - c[2]).abs() < 1e-9 * c[2].max(1.0));
            }
        }
        let (m, _) = s.value("CV", "overall").unwrap();
        let direct = s.records.iter().map(|r| r.selector_metric(1, Aggregator::Average, 2)).sum::<f64>() / 4.0;
        assert!((m - direct).abs() < 1e-12);
    }

    #[test]
    fn schedule_independent() {
        let mut a = small_sim2(3);
        let s1 = run_experiment(&a).unwrap();
        a.execution = Execution::Parallel;
        a.plan.execution = Execution::Parallel;
        let s2 = run_experiment(&a).unwrap();
        assert_eq!(s1, s2);
    }

    #[test]
    fn degenerate_single_perfect_candidate() {
        let mut spec = small_sim2(1);
        // break below the support: a noiseless line the linear fit recovers
        spec.source = DataSource::Generated {
            dgp: DgpConfig::Sim2(Sim2Config {
                noise_sd: 0.0,
                break_point: -1.0,
                ..Sim2Config::default()
            }),
            n: Some(40),
            eval_n: 50,
        };
        spec.roster.remove(0);
        spec.roster[0].id = 0;
        spec.metrics.truncate(1);
        spec.metrics[0].weight = WeightSpec::uniform();
        let s = run_experiment(&spec).unwrap();
        for m in &s.methods {
            assert!(m.mean[0] < 1e-20, "{}", m.mean[0]);
            assert_eq!(m.se[0], 0.0);
        }
        assert_eq!(s.frequency("TCV_1", Aggregator::Vote).unwrap(), &[1.0]);
    }

    #[test]
    fn rejects_bad_specs() {
        let mut s = small_sim2(1);
        s.plan.splits = 0;
        assert!(matches!(run_experiment(&s), Err(Error::InvalidPlan(_))));
        let mut s = small_sim2(1);
        s.replications = 0;
        assert!(run_experiment(&s).is_err());
        let mut s = small_sim2(1);
        s.selectors[1].name = "NW".into();
        assert!(run_experiment(&s).is_err());
    }
}
