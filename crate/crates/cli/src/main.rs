//! `xltwin` command line: dataset construction, training, closed-loop
//! simulation, evaluation and the interferer-count sweep.
//!
//! Failures print one JSON object `{"error":{"code":..,"message":..}}` on
//! stderr and exit nonzero.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use xltwin::harness::{pipeline, ExperimentConfig, SchemeId};
use xltwin::par::Execution;

#[derive(Parser, Debug)]
#[command(name = "xltwin", version, about = "Proactive interference management simulator for hybrid near/far-field XL-MIMO")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Experiment config (TOML); built-in defaults when omitted.
    #[arg(long, short = 'c', global = true)]
    config: Option<PathBuf>,
    /// Seeds, as a list `0,3,7` or a half-open range `0..20`.
    #[arg(long, global = true)]
    seeds: Option<String>,
    /// Comma-separated scheme names.
    #[arg(long, global = true)]
    schemes: Option<String>,
    /// Output directory.
    #[arg(long, short = 'o', global = true)]
    output: Option<PathBuf>,
    /// Model directory.
    #[arg(long, global = true)]
    models: Option<PathBuf>,
    /// More logging; at -v and above `simulate`/`sweep` also write optimizer traces.
    #[arg(short = 'v', long = "verbose", action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    /// Errors only.
    #[arg(short = 'q', long, global = true)]
    quiet: bool,
    /// Disable the thread pool.
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the closed loop and write one trace per (scheme, K, seed).
    Simulate {
        /// Interferer counts (comma-separated); the config's `interferers` when omitted.
        #[arg(long, short = 'k')]
        interferers: Option<String>,
    },
    /// Build the training dataset(s) and manifest(s).
    Dataset {
        #[arg(long, short = 'k')]
        interferers: Option<String>,
    },
    /// Train the generative predictor from a dataset.
    Train {
        #[arg(long, short = 'k')]
        interferers: Option<String>,
        /// Directory holding `dataset_k{K}.bin`; defaults to the output directory.
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Continue from the existing model file.
        #[arg(long)]
        resume: bool,
        /// Epochs to run (overrides the config).
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Compute metric reports and figure tables from persisted traces.
    Evaluate {
        /// Directory containing `traces/`; defaults to the output directory.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Simulate every K of the configured range, then evaluate.
    Sweep,
}

fn parse_seeds(s: &str) -> anyhow::Result<Vec<u64>> {
    if let Some((a, b)) = s.split_once("..") {
        let (a, b): (u64, u64) = (a.trim().parse()?, b.trim().parse()?);
        if a >= b {
            bail!("empty seed range {s:?}");
        }
        return Ok((a..b).collect());
    }
    s.split(',').map(|x| x.trim().parse().with_context(|| format!("bad seed {x:?}"))).collect()
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> anyhow::Result<Vec<T>>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    let v: Vec<T> = s
        .split(',')
        .map(|x| x.trim().parse::<T>().with_context(|| format!("bad {what} {x:?}")))
        .collect::<anyhow::Result<_>>()?;
    if v.is_empty() {
        bail!("empty {what} list");
    }
    Ok(v)
}

fn load_config(c: &Common) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = &c.seeds {
        cfg.seeds = parse_seeds(s).map_err(|e| xltwin::Error::InvalidArgument(e.to_string()))?;
    }
    if let Some(s) = &c.schemes {
        cfg.schemes = parse_list::<SchemeId>(s, "scheme")?;
    }
    if let Some(o) = &c.output {
        cfg.output_dir = o.clone();
    }
    if let Some(m) = &c.models {
        cfg.model_dir = m.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn ks(arg: &Option<String>, cfg: &ExperimentConfig) -> anyhow::Result<Vec<usize>> {
    match arg {
        Some(s) => parse_list(s, "interferer count").map_err(|e| xltwin::Error::InvalidArgument(e.to_string()).into()),
        None => Ok(vec![cfg.interferers]),
    }
}

fn report(lines: &[String]) {
    for l in lines {
        println!("{l}");
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = load_config(&cli.common)?;
    let exec = if cli.common.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let verbose = cli.common.verbose > 0;
    let out: &Path = &cfg.output_dir;
    match &cli.command {
        Command::Simulate { interferers } => {
            let ks = ks(interferers, &cfg)?;
            let traces = pipeline::run_simulate(&cfg, &cfg.schemes, &ks, out, verbose, exec)?;
            report(&[format!("wrote {} trace files to {}", traces.len(), out.join(pipeline::TRACE_DIR).display())]);
        }
        Command::Dataset { interferers } => {
            let ks = ks(interferers, &cfg)?;
            let ms = pipeline::run_dataset(&cfg, &ks, out, exec)?;
            report(
                &ms.iter()
                    .map(|m| format!("dataset K={}: {} samples, hash {}", m.interferers, m.samples, m.config_hash))
                    .collect::<Vec<_>>(),
            );
        }
        Command::Train {
            interferers,
            dataset,
            resume,
            epochs,
        } => {
            let data_dir = dataset.clone().unwrap_or_else(|| cfg.output_dir.clone());
            for k in ks(interferers, &cfg)? {
                let o = pipeline::run_train(&cfg, k, &data_dir, out, *resume, *epochs)?;
                let last = o.log.epochs.last().map(|e| e.validation_pred).unwrap_or(f64::NAN);
                report(&[format!(
                    "model K={k}: epoch {}, validation loss {last:.4} -> {}",
                    o.model.epochs_trained,
                    o.model_path.display()
                )]);
            }
        }
        Command::Evaluate { input } => {
            let input = input.clone().unwrap_or_else(|| cfg.output_dir.clone());
            let files = pipeline::run_evaluate(&input, out)?;
            report(&[format!("wrote {} evaluation files to {}", files.len(), out.display())]);
        }
        Command::Sweep => {
            let files = pipeline::run_sweep(&cfg, &cfg.schemes, out, verbose, exec)?;
            report(&[format!("wrote {} evaluation files to {}", files.len(), out.display())]);
        }
    }
    Ok(())
}

fn error_code(e: &anyhow::Error) -> (&'static str, u8) {
    match e.downcast_ref::<xltwin::Error>() {
        Some(x) => {
            let code = x.code();
            let status = match x {
                xltwin::Error::Config(_) | xltwin::Error::TomlDe(_) | xltwin::Error::InvalidArgument(_) => 3,
                xltwin::Error::MissingArtifact(_) => 4,
                xltwin::Error::HashMismatch { .. } => 5,
                _ => 1,
            };
            (code, status)
        }
        None => ("invalid_argument", 3),
    }
}

fn emit_error(code: &str, message: &str) {
    let v = serde_json::json!({ "error": { "code": code, "message": message } });
    eprintln!("{v}");
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            emit_error("usage", e.to_string().trim());
            return ExitCode::from(2);
        }
    };
    let level = if cli.common.quiet {
        log::LevelFilter::Error
    } else {
        match cli.common.verbose {
            0 => log::LevelFilter::Warn,
            1 => log::LevelFilter::Info,
            2 => log::LevelFilter::Debug,
            _ => log::LevelFilter::Trace,
        }
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (code, status) = error_code(&e);
            emit_error(code, &format!("{e:#}"));
            ExitCode::from(status)
        }
    }
}
