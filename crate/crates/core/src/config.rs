//! Experiment configuration files and built-in presets.
//!
//! A config is a JSON object with a `kind`, an optional output directory and
//! exactly one of `experiment` or `probe`. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cv::MtcvPlan;
use crate::data::{ColumnRef, Region};
use crate::dgp::{DgpConfig, FourierDgpConfig, Sim1Config, Sim2Config, Sim3Config};
use crate::error::{Error, Result};
use crate::estimators::{
    AdditiveSplineConfig, CandidateProcedure, FitConfig, ForestConfig, FourierConfig, LassoConfig,
    NwConfig, OlsConfig, Term, Truncation,
};
use crate::exec::Execution;
use crate::harness::{
    CSequence, ConsistencyConfig, DataSource, ExperimentSpec, GridPoint, L4L2Config, MetricNorm,
    MetricSpec, ProbeSpec, RankingProbeConfig, RateToyProbeConfig, SelectorSpec,
};
use crate::io::HOUSING_COLUMNS;
use crate::weights::WeightSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Sim1,
    Sim2,
    Sim3,
    Boston,
    RateToy,
    FourierProbe,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<ProbeSpec>,
}

/// The workload a config describes.
pub enum Body<'a> {
    Experiment(&'a ExperimentSpec),
    Probe(&'a ProbeSpec),
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Canonical pretty JSON; parsing it back gives an equal config.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }

    pub fn body(&self) -> Result<Body<'_>> {
        match (&self.experiment, &self.probe) {
            (Some(e), None) => Ok(Body::Experiment(e)),
            (None, Some(p)) => Ok(Body::Probe(p)),
            _ => Err(Error::InvalidConfig(
                "config needs exactly one of 'experiment' or 'probe'".into(),
            )),
        }
    }

    /// Schema checks that do not touch data.
    pub fn validate(&self) -> Result<()> {
        match self.body()? {
            Body::Experiment(e) => {
                if matches!(self.kind, ExperimentKind::RateToy | ExperimentKind::FourierProbe) {
                    return Err(Error::InvalidConfig(format!("{:?} configs carry a probe", self.kind)));
                }
                e.validate()
            }
            Body::Probe(_) => match self.kind {
                ExperimentKind::RateToy | ExperimentKind::FourierProbe | ExperimentKind::Custom => Ok(()),
                k => Err(Error::InvalidConfig(format!("{k:?} configs carry an experiment"))),
            },
        }
    }

    pub fn seed(&self) -> u64 {
        match (&self.experiment, &self.probe) {
            (Some(e), _) => e.seed,
            (_, Some(p)) => p.seed(),
            _ => 0,
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        if let Some(e) = &mut self.experiment {
            e.seed = seed;
        }
        if let Some(p) = &mut self.probe {
            p.set_seed(seed);
        }
    }

    /// Sets replication-level scheduling.
    pub fn set_execution(&mut self, ex: Execution) {
        if let Some(e) = &mut self.experiment {
            e.execution = ex;
        }
        if let Some(p) = &mut self.probe {
            p.set_execution(ex);
        }
    }
}

/// Replication counts and sizes: reduced for a workstation, or full.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Desk,
    Paper,
}

impl Scale {
    fn pick<T>(self, desk: T, paper: T) -> T {
        match self {
            Scale::Desk => desk,
            Scale::Paper => paper,
        }
    }
}

pub const PRESETS: [&str; 10] = [
    "sim1", "sim1_s3", "sim2", "sim3", "boston", "rate_toy", "fourier_probe", "fourier_l4l2",
    "sim2_consistency", "sim2_small",
];

const DEFAULT_SEED: u64 = 20240917;

/// A built-in config by name. `housing` locates the housing CSV.
pub fn preset(name: &str, scale: Scale, housing: &Path) -> Result<ExperimentConfig> {
    let exp = |kind, spec| ExperimentConfig {
        kind,
        out: None,
        experiment: Some(spec),
        probe: None,
    };
    let probe = |kind, spec| ExperimentConfig {
        kind,
        out: None,
        experiment: None,
        probe: Some(spec),
    };
    Ok(match name {
        "sim1" | "sim1_s25" => exp(ExperimentKind::Sim1, sim1(25.0, scale)),
        "sim1_s3" => exp(ExperimentKind::Sim1, sim1(3.0, scale)),
        "sim2" => exp(ExperimentKind::Sim2, sim2(scale)),
        "sim2_small" => {
            let mut s = sim2(Scale::Desk);
            s.name = "sim2_small".into();
            s.replications = 5;
            s.plan.splits = 10;
            if let DataSource::Generated { eval_n, .. } = &mut s.source {
                *eval_n = 1000;
            }
            exp(ExperimentKind::Custom, s)
        }
        "sim3" => exp(ExperimentKind::Sim3, sim3(scale)),
        "boston" => exp(ExperimentKind::Boston, boston(scale, housing)),
        "rate_toy" => probe(ExperimentKind::RateToy, ProbeSpec::RateToy(rate_toy())),
        "fourier_probe" => probe(ExperimentKind::FourierProbe, ProbeSpec::Ranking(fourier_ranking())),
        "fourier_l4l2" => probe(ExperimentKind::Custom, ProbeSpec::L4L2(fourier_l4l2())),
        "sim2_consistency" => probe(ExperimentKind::Custom, ProbeSpec::Consistency(sim2_consistency(scale))),
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown preset '{other}' (known: {})",
                PRESETS.join(", ")
            )))
        }
    })
}

fn col(name: &str) -> ColumnRef {
    ColumnRef::Name(name.into())
}

fn indicator(region: Region) -> WeightSpec {
    WeightSpec::Region { region, prob: None }
}

fn metric(name: &str, weight: WeightSpec, norm: MetricNorm) -> MetricSpec {
    MetricSpec {
        name: name.into(),
        weight,
        norm,
    }
}

fn selector(name: &str, weight: WeightSpec) -> SelectorSpec {
    SelectorSpec {
        name: name.into(),
        weight,
    }
}

pub fn sim1(sigma: f64, scale: Scale) -> ExperimentSpec {
    let dgp = Sim1Config::with_sigma(sigma);
    let local = Region::Equals {
        column: col("I"),
        value: 1.0,
    };
    let x0 = || Term::Column { column: col("X0") };
    let mut full = vec![x0()];
    full.extend((1..=dgp.p_extra).map(|k| Term::Column {
        column: col(&format!("X{k}")),
    }));
    full.extend((1..=dgp.p_extra).map(|k| Term::Product {
        left: col("I"),
        right: col(&format!("X{k}")),
    }));
    let roster = vec![
        CandidateProcedure::global(0, "delta1", FitConfig::Ols(OlsConfig::new(vec![x0()]))),
        CandidateProcedure::global(1, "delta2", FitConfig::Ols(OlsConfig::new(full))),
        CandidateProcedure::local(
            2,
            "delta3",
            FitConfig::Ols(OlsConfig::new(vec![x0()])),
            local.clone(),
            10,
        ),
    ];
    ExperimentSpec {
        name: format!("sim1_sigma{sigma}"),
        source: DataSource::Generated {
            n: Some(dgp.n),
            eval_n: dgp.eval_n,
            dgp: DgpConfig::Sim1(dgp),
        },
        roster,
        selectors: vec![
            selector("TCV", indicator(local.clone())),
            selector("CV", WeightSpec::uniform()),
        ],
        plan: MtcvPlan::default(),
        metrics: vec![
            metric("local", indicator(local), MetricNorm::PerObservation),
            metric("overall", WeightSpec::uniform(), MetricNorm::PerObservation),
        ],
        replications: scale.pick(200, 500),
        seed: DEFAULT_SEED,
        execution: Execution::Parallel,
    }
}

fn linear_x() -> FitConfig {
    FitConfig::Ols(OlsConfig::columns(true, [0usize]))
}

pub fn sim2(scale: Scale) -> ExperimentSpec {
    let dgp = Sim2Config::default();
    let local = Region::Below {
        column: col("X"),
        threshold: dgp.break_point,
    };
    let tcv = |a: f64| {
        selector(
            &format!("TCV_{a}"),
            WeightSpec::Piecewise {
                region: local.clone(),
                inside: a,
                outside: 1.0 - a,
            },
        )
    };
    ExperimentSpec {
        name: "sim2".into(),
        source: DataSource::Generated {
            n: Some(dgp.n),
            eval_n: dgp.eval_n,
            dgp: DgpConfig::Sim2(dgp),
        },
        roster: vec![
            CandidateProcedure::global(0, "NW", FitConfig::NadarayaWatson(NwConfig::default())),
            CandidateProcedure::global(1, "Linear", linear_x()),
        ],
        selectors: vec![tcv(0.5), tcv(0.8), tcv(0.9), tcv(1.0)],
        plan: MtcvPlan::default(),
        metrics: vec![
            metric("local", indicator(local.clone()), MetricNorm::PerObservation),
            metric("outside", indicator(local.complement()), MetricNorm::PerObservation),
            metric("overall", WeightSpec::uniform(), MetricNorm::PerObservation),
        ],
        replications: scale.pick(200, 500),
        seed: DEFAULT_SEED,
        execution: Execution::Parallel,
    }
}

pub fn sim3(scale: Scale) -> ExperimentSpec {
    let dgp = Sim3Config::default();
    let local = Region::Box {
        columns: vec![col("X1"), col("X2")],
        lo: -0.5,
        hi: 0.5,
    };
    let lasso = || FitConfig::Lasso(LassoConfig::default());
    let forest = || {
        FitConfig::Forest(ForestConfig {
            n_trees: scale.pick(200, 500),
            mtry: 32,
            execution: Execution::Sequential,
            ..ForestConfig::default()
        })
    };
    ExperimentSpec {
        name: "sim3".into(),
        source: DataSource::Generated {
            n: Some(dgp.n),
            eval_n: dgp.eval_n,
            dgp: DgpConfig::Sim3(dgp),
        },
        roster: vec![
            CandidateProcedure::global(0, "lasso", lasso()),
            CandidateProcedure::global(1, "RF", forest()),
            CandidateProcedure::local(2, "lasso_local", lasso(), local.clone(), 5),
            CandidateProcedure::local(3, "RF_local", forest(), local.clone(), 5),
        ],
        selectors: vec![
            selector("TCV", indicator(local.clone())),
            selector("CV", WeightSpec::uniform()),
        ],
        plan: MtcvPlan {
            stratify: Some(local.clone()),
            ..MtcvPlan::default()
        },
        metrics: vec![
            metric("local", indicator(local), MetricNorm::WeightSum),
            metric("overall", WeightSpec::uniform(), MetricNorm::WeightSum),
        ],
        replications: scale.pick(50, 100),
        seed: DEFAULT_SEED,
        execution: Execution::Parallel,
    }
}

pub fn boston(scale: Scale, housing: &Path) -> ExperimentSpec {
    let local = Region::Below {
        column: col("AGE"),
        threshold: 50.0,
    };
    let hedonic = || FitConfig::Ols(OlsConfig::columns(true, HOUSING_COLUMNS.iter().map(|c| col(c))));
    let spline = FitConfig::AdditiveSpline(AdditiveSplineConfig {
        smooth: HOUSING_COLUMNS
            .iter()
            .filter(|&&c| c != "CHAS")
            .map(|c| col(c))
            .collect(),
        linear: vec![col("CHAS")],
        df: 3,
        intercept: true,
    });
    ExperimentSpec {
        name: "boston".into(),
        source: DataSource::Housing {
            path: housing.to_path_buf(),
            eval_fraction: 0.2,
            stratify: Some(local.clone()),
        },
        roster: vec![
            CandidateProcedure::global(0, "delta1", hedonic()),
            CandidateProcedure::global(1, "delta2", spline),
            CandidateProcedure::local(2, "delta3", hedonic(), local.clone(), 20),
        ],
        selectors: vec![
            selector("TCV", indicator(local.clone())),
            selector("CV", WeightSpec::uniform()),
        ],
        plan: MtcvPlan {
            stratify: Some(local.clone()),
            ..MtcvPlan::default()
        },
        metrics: vec![
            metric("local", indicator(local), MetricNorm::PerObservation),
            metric("overall", WeightSpec::uniform(), MetricNorm::PerObservation),
        ],
        replications: scale.pick(100, 500),
        seed: DEFAULT_SEED,
        execution: Execution::Parallel,
    }
}

pub fn rate_toy() -> RateToyProbeConfig {
    RateToyProbeConfig {
        n: 10_000,
        n1: 1000,
        sigma: 1.0,
        reps: 10_000,
        seed: DEFAULT_SEED,
        execution: Execution::Parallel,
    }
}

fn fourier_roster() -> Vec<CandidateProcedure> {
    vec![
        CandidateProcedure::global(0, "model1", FitConfig::Fourier(FourierConfig::new(Truncation::P1))),
        CandidateProcedure::global(1, "model2", FitConfig::Fourier(FourierConfig::new(Truncation::P2))),
    ]
}

pub fn fourier_ranking() -> RankingProbeConfig {
    RankingProbeConfig {
        dgp: DgpConfig::Fourier(FourierDgpConfig::default()),
        roster: fourier_roster(),
        good: 0,
        bad: 1,
        grid: vec![GridPoint { n: 4096, n1: 1024 }],
        c: CSequence::Power {
            scale: 1.0 / 3.0,
            exponent: -1.0 / 3.0,
        },
        min_n1: 1024,
        reps: 200,
        probe_n: 100_000,
        weight: WeightSpec::uniform(),
        seed: DEFAULT_SEED,
        execution: Execution::Parallel,
    }
}

pub fn fourier_l4l2() -> L4L2Config {
    L4L2Config {
        dgp: DgpConfig::Fourier(FourierDgpConfig::default()),
        candidate: fourier_roster().remove(1),
        n: 4096,
        n1: 1024,
        weight: WeightSpec::uniform(),
        probe_n: 100_000,
        reps: 200,
        seed: DEFAULT_SEED,
        execution: Execution::Parallel,
    }
}

pub fn sim2_consistency(scale: Scale) -> ConsistencyConfig {
    let s = sim2(scale);
    ConsistencyConfig {
        dgp: DgpConfig::Sim2(Sim2Config::default()),
        roster: s.roster,
        weight: indicator(Region::Below {
            column: col("X"),
            threshold: 0.1,
        }),
        n_grid: vec![100, 200, 400],
        plan: MtcvPlan {
            splits: scale.pick(20, 100),
            ..MtcvPlan::default()
        },
        reps: scale.pick(100, 500),
        probe_n: 20_000,
        seed: DEFAULT_SEED,
        execution: Execution::Parallel,
    }
}

/// Where `select` reads its data from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TableSource {
    Housing { path: PathBuf },
    Csv { path: PathBuf, response: String },
}

impl TableSource {
    pub fn load(&self) -> Result<crate::data::Dataset> {
        match self {
            TableSource::Housing { path } => crate::io::load_housing(path),
            TableSource::Csv { path, response } => crate::io::load_csv(path, response),
        }
    }

    pub fn set_path(&mut self, p: PathBuf) {
        match self {
            TableSource::Housing { path } | TableSource::Csv { path, .. } => *path = p,
        }
    }
}

/// One-shot selection on a fixed table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectConfig {
    pub data: TableSource,
    pub roster: Vec<CandidateProcedure>,
    pub weight: WeightSpec,
    #[serde(default)]
    pub plan: MtcvPlan,
    #[serde(default)]
    pub seed: u64,
}

impl SelectConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: SelectConfig =
            serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        crate::estimators::validate_roster(&cfg.roster)?;
        cfg.plan.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }
}

pub const SELECT_PRESETS: [&str; 2] = ["boston", "boston_cv"];

/// Selection on the whole housing table: `boston` targets AGE < 50,
/// `boston_cv` is regular CV.
pub fn select_preset(name: &str, housing: &Path) -> Result<SelectConfig> {
    let spec = boston(Scale::Desk, housing);
    let weight = match name {
        "boston" => spec.selectors[0].weight.clone(),
        "boston_cv" => WeightSpec::uniform(),
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown select preset '{other}' (known: {})",
                SELECT_PRESETS.join(", ")
            )))
        }
    };
    Ok(SelectConfig {
        data: TableSource::Housing {
            path: housing.to_path_buf(),
        },
        roster: spec.roster,
        weight,
        plan: spec.plan,
        seed: DEFAULT_SEED,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_presets() -> Vec<ExperimentConfig> {
        PRESETS
            .iter()
            .flat_map(|p| {
                [Scale::Desk, Scale::Paper].map(|s| preset(p, s, Path::new("data/boston.csv")).unwrap())
            })
            .collect()
    }

    #[test]
    fn presets_validate_and_round_trip() {
        for cfg in all_presets() {
            cfg.validate().unwrap();
            let text = cfg.to_json();
            let back = ExperimentConfig::parse(&text).unwrap();
            assert_eq!(back, cfg);
            assert_eq!(back.to_json(), text);
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut v: serde_json::Value = serde_json::from_str(&preset("sim2", Scale::Desk, Path::new("x")).unwrap().to_json()).unwrap();
        v["bogus"] = serde_json::json!(1);
        assert!(ExperimentConfig::parse(&v.to_string()).is_err());
        let mut v: serde_json::Value = serde_json::from_str(&preset("sim2", Scale::Desk, Path::new("x")).unwrap().to_json()).unwrap();
        v["experiment"]["plan"]["bogus"] = serde_json::json!(1);
        assert!(ExperimentConfig::parse(&v.to_string()).is_err());
    }

    #[test]
    fn zero_splits_is_schema_error() {
        let mut v: serde_json::Value = serde_json::from_str(&preset("sim2", Scale::Desk, Path::new("x")).unwrap().to_json()).unwrap();
        v["experiment"]["plan"]["splits"] = serde_json::json!(0);
        assert!(matches!(ExperimentConfig::parse(&v.to_string()), Err(Error::InvalidPlan(_))));
    }

    #[test]
    fn body_must_be_unique() {
        let mut c = preset("sim2", Scale::Desk, Path::new("x")).unwrap();
        c.probe = Some(ProbeSpec::RateToy(rate_toy()));
        assert!(c.validate().is_err());
        let c = preset("rate_toy", Scale::Desk, Path::new("x")).unwrap();
        let mut bad = c.clone();
        bad.kind = ExperimentKind::Sim2;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn seed_override() {
        for mut c in all_presets() {
            c.set_seed(99);
            assert_eq!(c.seed(), 99);
        }
    }

    #[test]
    fn select_presets_round_trip() {
        for name in SELECT_PRESETS {
            let c = select_preset(name, Path::new("data/boston.csv")).unwrap();
            assert_eq!(SelectConfig::parse(&c.to_json()).unwrap(), c);
        }
        assert!(select_preset("nope", Path::new("x")).is_err());
    }

    #[test]
    fn sim1_roster_shape() {
        let s = sim1(25.0, Scale::Desk);
        match &s.roster[1].method {
            FitConfig::Ols(o) => assert_eq!(o.terms.len(), 201),
            _ => panic!(),
        }
        assert_eq!(s.replications, 200);
        assert_eq!(sim1(25.0, Scale::Paper).replications, 500);
    }
}
