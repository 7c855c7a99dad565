use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use tcv_core::config::{
    preset, select_preset, Body, ExperimentConfig, Scale, SelectConfig, PRESETS, SELECT_PRESETS,
};
use tcv_core::cv::select_mtcv;
use tcv_core::dgp::DgpConfig;
use tcv_core::harness::{run_experiment, DataSource, ProbeSpec};
use tcv_core::report::{config_hash, write_artifacts, Manifest, Provenance, Table};
use tcv_core::{Execution, RngSpec};

#[derive(Parser)]
#[command(name = "tcv", version, about = "Targeted cross-validation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Config file path or preset name.
    #[arg(long)]
    config: String,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 1 runs sequentially.
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory (or file for dump-dgp).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Use the full replication counts for presets.
    #[arg(long)]
    paper_scale: bool,
    /// Housing CSV used by presets.
    #[arg(long, default_value = "data/boston.csv")]
    housing: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run a replicated experiment and write summary tables.
    Run(Common),
    /// One-shot selection on a table.
    Select {
        #[command(flatten)]
        common: Common,
        /// Replace the data path in the config.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Run a ranking, consistency, l4/l2 or rate-toy probe.
    Probe(Common),
    /// Write one generated dataset as CSV.
    DumpDgp {
        #[command(flatten)]
        common: Common,
        /// Rows to generate (default: the generator's sample size).
        #[arg(long)]
        n: Option<usize>,
    },
    /// Print a preset as a config file.
    Preset {
        name: String,
        #[arg(long)]
        paper_scale: bool,
        #[arg(long, default_value = "data/boston.csv")]
        housing: PathBuf,
    },
}

fn scale(c: &Common) -> Scale {
    if c.paper_scale {
        Scale::Paper
    } else {
        Scale::Desk
    }
}

fn load_config(c: &Common) -> Result<ExperimentConfig> {
    let path = Path::new(&c.config);
    let mut cfg = if path.exists() {
        ExperimentConfig::load(path)?
    } else if PRESETS.contains(&c.config.as_str()) || c.config == "sim1_s25" {
        preset(&c.config, scale(c), &c.housing)?
    } else {
        bail!(
            "'{}' is neither a file nor a preset (presets: {})",
            c.config,
            PRESETS.join(", ")
        );
    };
    if let Some(s) = c.seed {
        cfg.set_seed(s);
    }
    if let Some(t) = c.threads {
        cfg.set_execution(execution(t));
    }
    Ok(cfg)
}

fn execution(threads: usize) -> Execution {
    if threads <= 1 {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

fn setup_threads(c: &Common) -> Result<usize> {
    #[cfg(feature = "parallel")]
    {
        if let Some(t) = c.threads {
            rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build_global()
                .context("configuring thread pool")?;
        }
        Ok(rayon::current_num_threads())
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = c;
        Ok(1)
    }
}

fn manifest(kind: &str, hash: &str, seed: u64, start: Instant, threads: usize, details: serde_json::Value) -> Manifest {
    Manifest {
        kind: kind.into(),
        config_hash: hash.into(),
        seed,
        runtime_secs: start.elapsed().as_secs_f64(),
        threads,
        parallel: cfg!(feature = "parallel") && threads > 1,
        files: Vec::new(),
        version: env!("CARGO_PKG_VERSION").into(),
        details: Some(details),
    }
}

fn out_dir(c: &Common, cfg_out: Option<&PathBuf>, name: &str) -> PathBuf {
    c.out
        .clone()
        .or_else(|| cfg_out.cloned())
        .unwrap_or_else(|| PathBuf::from("out").join(name))
}

fn finish(dir: &Path, tables: &[(String, Table)], prov: &Provenance, m: Manifest) -> Result<()> {
    let written = write_artifacts(dir, tables, prov, m)?;
    for p in written {
        log::info!("wrote {}", p.display());
    }
    eprintln!("artifacts in {}", dir.display());
    Ok(())
}

fn cmd_run(c: &Common) -> Result<()> {
    let threads = setup_threads(c)?;
    let cfg = load_config(c)?;
    let Body::Experiment(spec) = cfg.body()? else {
        bail!("config describes a probe; use `tcv probe`");
    };
    let start = Instant::now();
    let hash = config_hash(&cfg);
    let summary = run_experiment(spec)?;
    print!("{}", summary.wide_table().render());
    println!();
    print!("{}", summary.selection_table().render());
    let prov = Provenance {
        config_hash: hash.clone(),
        seed: spec.seed,
    };
    let details = serde_json::json!({
        "experiment": summary.experiment,
        "replications": summary.n_replications,
        "config": cfg,
    });
    let dir = out_dir(c, cfg.out.as_ref(), &spec.name);
    finish(&dir, &summary.tables(), &prov, manifest("run", &hash, spec.seed, start, threads, details))
}

fn cmd_probe(c: &Common) -> Result<()> {
    let threads = setup_threads(c)?;
    let cfg = load_config(c)?;
    let Body::Probe(spec) = cfg.body()? else {
        bail!("config describes an experiment; use `tcv run`");
    };
    let start = Instant::now();
    let hash = config_hash(&cfg);
    let (tables, result) = spec.run()?;
    for (_, t) in &tables {
        print!("{}", t.render());
    }
    let prov = Provenance {
        config_hash: hash.clone(),
        seed: spec.seed(),
    };
    let name = match spec {
        ProbeSpec::Ranking(_) => "ranking",
        ProbeSpec::RateToy(_) => "rate_toy",
        ProbeSpec::L4L2(_) => "l4_l2",
        ProbeSpec::Consistency(_) => "consistency",
    };
    let details = serde_json::json!({ "result": result, "config": cfg });
    let dir = out_dir(c, cfg.out.as_ref(), name);
    finish(&dir, &tables, &prov, manifest("probe", &hash, spec.seed(), start, threads, details))
}

fn cmd_select(c: &Common, data: Option<&PathBuf>) -> Result<()> {
    let threads = setup_threads(c)?;
    let path = Path::new(&c.config);
    let mut cfg = if path.exists() {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        SelectConfig::parse(&text)?
    } else if SELECT_PRESETS.contains(&c.config.as_str()) {
        select_preset(&c.config, &c.housing)?
    } else {
        bail!(
            "'{}' is neither a file nor a select preset (presets: {})",
            c.config,
            SELECT_PRESETS.join(", ")
        );
    };
    if let Some(p) = data {
        cfg.data.set_path(p.clone());
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(t) = c.threads {
        cfg.plan.execution = execution(t);
    }
    let start = Instant::now();
    let hash = config_hash(&cfg);
    let table = cfg.data.load()?;
    let w = cfg.weight.build_for(&table)?;
    let report = select_mtcv(&cfg.roster, &table, &cfg.plan, &w, &RngSpec::new(cfg.seed))?;
    print!("{}", report.summary_table().render());
    println!("winner: {}", report.candidates[report.winner]);
    if let Some(dir) = &c.out {
        let prov = Provenance {
            config_hash: hash.clone(),
            seed: cfg.seed,
        };
        let details = serde_json::json!({
            "winner": report.candidates[report.winner],
            "skipped_splits": report.skipped_splits,
            "config": cfg,
        });
        let tables = vec![
            ("selection".to_string(), report.summary_table()),
            ("scores".to_string(), report.scores_table()),
        ];
        finish(dir, &tables, &prov, manifest("select", &hash, cfg.seed, start, threads, details))?;
    }
    Ok(())
}

fn cmd_dump(c: &Common, n: Option<usize>) -> Result<()> {
    let cfg = load_config(c)?;
    let dgp: DgpConfig = match cfg.body()? {
        Body::Experiment(e) => match &e.source {
            DataSource::Generated { dgp, .. } => dgp.clone(),
            _ => bail!("experiment does not use a generator"),
        },
        Body::Probe(p) => match p {
            ProbeSpec::Ranking(r) => r.dgp.clone(),
            ProbeSpec::L4L2(r) => r.dgp.clone(),
            ProbeSpec::Consistency(r) => r.dgp.clone(),
            ProbeSpec::RateToy(r) => DgpConfig::RateToy(tcv_core::dgp::RateToyConfig { n: r.n, sigma: r.sigma }),
        },
    };
    let n = n.unwrap_or_else(|| dgp.default_n());
    let data = dgp.generate(n, &RngSpec::new(cfg.seed()))?;
    match &c.out {
        Some(p) => {
            if let Some(parent) = p.parent() {
                std::fs::create_dir_all(parent)?;
            }
            data.write_csv(std::io::BufWriter::new(std::fs::File::create(p)?))?;
            eprintln!("wrote {n} rows to {}", p.display());
        }
        None => data.write_csv(std::io::stdout().lock())?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(c) => cmd_run(&c),
        Command::Probe(c) => cmd_probe(&c),
        Command::Select { common, data } => cmd_select(&common, data.as_ref()),
        Command::DumpDgp { common, n } => cmd_dump(&common, n),
        Command::Preset {
            name,
            paper_scale,
            housing,
        } => {
            let s = if paper_scale { Scale::Paper } else { Scale::Desk };
            match preset(&name, s, &housing) {
                Ok(cfg) => print!("{}", cfg.to_json()),
                Err(_) => print!(
                    "{}",
                    select_preset(&name, &housing)
                        .map_err(|_| anyhow!("unknown preset '{name}'"))?
                        .to_json()
                ),
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn,tcv_core::estimators=error")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind = match e.downcast_ref::<tcv_core::Error>() {
                Some(tcv_core::Error::InvalidConfig(_)) | Some(tcv_core::Error::InvalidPlan(_)) => "config",
                Some(tcv_core::Error::Ingestion(_)) => "ingestion",
                Some(_) => "runtime",
                None => "usage",
            };
            let msg = serde_json::json!({ "error": kind, "message": format!("{e:#}") });
            eprintln!("{msg}");
            ExitCode::from(2)
        }
    }
}
