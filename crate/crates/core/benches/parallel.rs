use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use tcv_core::config::{sim2, Scale};
use tcv_core::cv::{select_mtcv, MtcvPlan};
use tcv_core::dgp::{DgpConfig, Sim2Config, Sim3Config};
use tcv_core::estimators::forest::ForestConfig;
use tcv_core::estimators::FitConfig;
use tcv_core::weights::WeightSpec;
use tcv_core::{Execution, RngSpec};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn mtcv_sim2(c: &mut Criterion) {
    let spec = sim2(Scale::Desk);
    let data = DgpConfig::Sim2(Sim2Config::default())
        .generate(200, &RngSpec::new(1))
        .unwrap();
    let w = spec.selectors[2].weight.build_for(&data).unwrap();
    let mut g = c.benchmark_group("mtcv_sim2_k100");
    for (name, exec) in MODES {
        let plan = MtcvPlan {
            execution: exec,
            ..MtcvPlan::default()
        };
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| select_mtcv(&spec.roster, &data, &plan, &w, &RngSpec::new(7)).unwrap())
        });
    }
    g.finish();
}

fn forest_sim3(c: &mut Criterion) {
    let data = DgpConfig::Sim3(Sim3Config::default())
        .generate(200, &RngSpec::new(2))
        .unwrap();
    let rows: Vec<usize> = (0..data.n()).collect();
    let mut g = c.benchmark_group("forest_sim3_100_trees");
    g.sample_size(10);
    for (name, exec) in MODES {
        let cfg = FitConfig::Forest(ForestConfig {
            n_trees: 100,
            mtry: 32,
            execution: exec,
            ..ForestConfig::default()
        });
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| cfg.fit(&data, &rows, &RngSpec::new(3)).unwrap())
        });
    }
    g.finish();
}

fn uniform_cv(c: &mut Criterion) {
    let spec = sim2(Scale::Desk);
    let data = DgpConfig::Sim2(Sim2Config::default())
        .generate(800, &RngSpec::new(4))
        .unwrap();
    let w = WeightSpec::uniform().build_for(&data).unwrap();
    let mut g = c.benchmark_group("mtcv_sim2_n800_k20");
    g.sample_size(10);
    for (name, exec) in MODES {
        let plan = MtcvPlan {
            splits: 20,
            execution: exec,
            ..MtcvPlan::default()
        };
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| select_mtcv(&spec.roster, &data, &plan, &w, &RngSpec::new(5)).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, mtcv_sim2, forest_sim3, uniform_cv);
criterion_main!(benches);
