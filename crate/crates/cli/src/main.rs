//! `airgnn`: dataset generation, training, evaluation and experiment sweeps.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error
//! (unreadable or malformed files, missing checkpoints, failed checks).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use airgnn::checkpoint::{load_model, save_model};
use airgnn::config::RunConfig;
use airgnn::evalmetrics::{format_percent, Scheme};
use airgnn::experiments::{fit, run_experiment, Checkpoints, ExperimentId, ExperimentSpec, WMMSE_ITERATIONS};
use airgnn::gnn::PolicyKind;
use airgnn::netgen::{ChannelParams, Dataset};
use airgnn::oracle::{self, OracleScale};
use airgnn::train::{evaluate, Policy};
use airgnn::{Error, PolicyModelF64};

#[derive(Parser, Debug)]
#[command(name = "airgnn", version, about = "GNN power allocation with over-the-air message passing")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// TOML run configuration; every key is optional.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set train.iterations=500`.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE", global = true)]
    overrides: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a dataset file from the channel configuration.
    GenData {
        /// `train` or `test` picks the layout count and seed from `[data]`.
        #[arg(long, default_value = "train")]
        split: Split,
        #[arg(long)]
        layouts: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one policy kind and save its checkpoint.
    Train {
        #[arg(long)]
        kind: PolicyKind,
        /// Training dataset; generated from the configuration when omitted.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Learning-curve CSV (iteration, validation sum-rate, learning rate).
        #[arg(long)]
        curve: Option<PathBuf>,
    },
    /// Mean overhead-discounted sum-rate of a scheme on a test set.
    Eval {
        /// epa, wmmse or air-wmmse; GNN schemes take their kind from `--checkpoint`.
        #[arg(long)]
        scheme: Option<Scheme>,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Test dataset; generated from the configuration when omitted.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Per-layout CSV (layout, sum_rate).
        #[arg(long)]
        per_layout: Option<PathBuf>,
    },
    /// Run one experiment sweep and write its CSV.
    Experiment {
        id: ExperimentId,
        /// Directory of `<kind>.ckpt` files; fig5-curve writes them.
        #[arg(long, default_value = "checkpoints")]
        checkpoints: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Test layouts per grid point.
        #[arg(long)]
        layouts: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated pair counts replacing the default grid.
        #[arg(long, value_delimiter = ',')]
        pairs: Vec<usize>,
    },
    /// Print the structure and normalization of a checkpoint.
    InspectCheckpoint { path: PathBuf },
    /// Run the property and oracle suite.
    Oracle {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "small")]
        scale: OracleScale,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Print the resolved configuration.
    ShowConfig,
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
enum Split {
    Train,
    Test,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::Usage(_) | Error::Config(_) | Error::Parse { .. }) => 1,
        _ => 2,
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = match &cli.common.config {
        Some(path) => RunConfig::load(path, &cli.common.overrides),
        None => RunConfig::parse("", &cli.common.overrides),
    }?;
    match cli.command {
        Command::GenData { split, layouts, seed, out } => {
            let (count, default_seed) = match split {
                Split::Train => (cfg.data.train_layouts, cfg.data.train_seed),
                Split::Test => (cfg.data.test_layouts, cfg.data.test_seed),
            };
            let data = Dataset::generate(&cfg.channel, layouts.unwrap_or(count), seed.unwrap_or(default_seed))?;
            data.save(&out)?;
            println!("wrote {} layouts of {} pairs to {}", data.len(), data.header.pairs, out.display());
        }
        Command::Train { kind, data, out, curve } => {
            let data = dataset(data.as_deref(), &cfg.channel, cfg.data.train_layouts, cfg.data.train_seed)?;
            let outcome = fit(&cfg, kind, &data.episodes)?;
            save_model(&outcome.model, &out)?;
            if let Some(path) = curve {
                let mut csv = String::from("iteration,validation_sum_rate,learning_rate\n");
                for p in outcome.curve.iter().filter(|p| !p.validation.is_nan()) {
                    let _ = writeln!(csv, "{},{:.6},{}", p.iteration, p.validation, p.learning_rate);
                }
                write(&path, &csv)?;
            }
            let last = outcome.curve.iter().rev().find(|p| !p.validation.is_nan());
            match last {
                Some(p) => println!("trained {kind}; validation sum-rate {:.4} bps/Hz; saved {}", p.validation, out.display()),
                None => println!("trained {kind}; saved {}", out.display()),
            }
        }
        Command::Eval { scheme, checkpoint, data, per_layout } => {
            let model = checkpoint.as_deref().map(load_model::<f64>).transpose()?;
            let policy = policy(scheme, model.as_ref())?;
            let data = dataset(data.as_deref(), &cfg.channel, cfg.data.test_layouts, cfg.data.test_seed)?;
            let report = evaluate(policy, &data.episodes, cfg.budget(), &cfg.overhead, &cfg.eval)?;
            println!(
                "{} K={} overhead={} ({}) mean sum-rate {:.4} bps/Hz over {} layouts",
                report.scheme,
                report.pairs,
                report.overhead_symbols,
                format_percent(report.overhead_ratio),
                report.mean_sum_rate,
                report.per_layout.len()
            );
            if let Some(path) = per_layout {
                let mut csv = String::from("layout,sum_rate\n");
                for (n, r) in report.per_layout.iter().enumerate() {
                    let _ = writeln!(csv, "{n},{r:.6}");
                }
                write(&path, &csv)?;
            }
        }
        Command::Experiment { id, checkpoints, out, layouts, seed, pairs } => {
            let mut spec = ExperimentSpec::defaults(id, &cfg);
            if let Some(n) = layouts {
                spec.test_layouts = n;
            }
            if let Some(s) = seed {
                spec.seed = s;
            }
            if !pairs.is_empty() {
                spec.pairs = pairs;
            }
            let output = run_experiment(&spec, &cfg, &Checkpoints::new(checkpoints))?;
            write(&out, &output.to_csv())?;
            println!("wrote {id} to {}", out.display());
        }
        Command::InspectCheckpoint { path } => {
            let model: PolicyModelF64 = load_model(&path)?;
            println!("kind        {}", model.kind());
            println!("layers      {}", model.layers());
            println!("aggregation {:?}", model.aggregation);
            println!("parameters  {}", model.param_count());
            let n = &model.norm;
            println!("norm        {:?} floor={:e}", n.scale, n.floor);
            println!("  direct    mean={} std={}", n.direct_mean, n.direct_std);
            println!("  cross     mean={} std={}", n.cross_mean, n.cross_std);
            for (name, mlp) in model.mlps() {
                println!("{name:<11} {:?} -> {:?} ({} parameters)", mlp.dims(), mlp.output_activation(), mlp.param_count());
            }
        }
        Command::Oracle { seed, scale, csv } => {
            let reports = oracle::run_all(seed, scale);
            print!("{}", oracle::to_text(&reports));
            if let Some(path) = csv {
                write(&path, &oracle::to_csv(&reports))?;
            }
            let failed = reports.iter().filter(|r| !r.passed).count();
            if failed > 0 {
                return Err(Error::Data(format!("{failed} oracle checks failed")).into());
            }
        }
        Command::ShowConfig => print!("{}", cfg.to_toml()),
    }
    Ok(())
}

fn dataset(path: Option<&Path>, channel: &ChannelParams, count: usize, seed: u64) -> Result<Dataset> {
    match path {
        Some(p) => Dataset::load(p).with_context(|| format!("reading dataset {}", p.display())),
        None => Ok(Dataset::generate(channel, count, seed)?),
    }
}

fn policy<'a>(scheme: Option<Scheme>, model: Option<&'a PolicyModelF64>) -> Result<Policy<'a, f64>> {
    let p = match (scheme, model) {
        (Some(Scheme::Epa), None) => Policy::Epa,
        (Some(Scheme::Wmmse), None) => Policy::Wmmse { iterations: WMMSE_ITERATIONS },
        (Some(Scheme::AirWmmse), None) => Policy::AirWmmse,
        (Some(s), Some(m)) if s != m.kind().scheme() => {
            return Err(Error::Usage(format!("--scheme {s} does not match the checkpoint's kind {}", m.kind())).into())
        }
        (_, Some(m)) => Policy::Gnn(m),
        (Some(s), None) => return Err(Error::Usage(format!("{s} needs --checkpoint")).into()),
        (None, None) => return Err(Error::Usage("give --scheme or --checkpoint".into()).into()),
    };
    Ok(p)
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(Error::from)?;
    }
    std::fs::write(path, text).map_err(Error::from)?;
    Ok(())
}
