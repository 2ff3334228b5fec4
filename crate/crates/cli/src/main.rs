//! `vsrkit` command-line front end.
//!
//! Exit status: 0 on success, 1 on usage or configuration errors, 2 on runtime failures.

mod commands;
mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use config::{usage, RunConfig, UsageError};

#[derive(Debug, Parser)]
#[command(name = "vsrkit", version, about = "Degradation synthesis, loading benchmarks, refinement and NIQE scoring")]
struct Cli {
    /// Versioned TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Print one machine-readable record per line instead of tables.
    #[arg(long, global = true)]
    records: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Degrade HR frame sequences into LR sequences.
    Degrade {
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long = "out")]
        output: Option<PathBuf>,
    },
    /// Write aligned HR/LR training pairs.
    Pairs {
        #[arg(long)]
        hr: Option<PathBuf>,
        #[arg(long = "out")]
        output: Option<PathBuf>,
    },
    /// Benchmark the conventional and stochastic loading schemes.
    Loadbench {
        #[arg(long)]
        scheme: Option<String>,
        #[arg(long = "L")]
        length: Option<usize>,
        #[arg(long)]
        iters: Option<usize>,
        /// Sleep before each file read, in milliseconds.
        #[arg(long = "inject-latency")]
        inject_latency: Option<f64>,
        /// Corpus of sequence directories; synthesized when omitted.
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// Repeatedly clean images until successive outputs settle.
    Refine {
        #[arg(long, value_parser = ["identity", "median", "gaussian", "box", "cnn"])]
        cleaner: Option<String>,
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long = "max-iters")]
        max_iters: Option<usize>,
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long = "out")]
        output: Option<PathBuf>,
    },
    /// Score images with a NIQE model, optionally fitting it first.
    Niqe {
        #[arg(long)]
        model: PathBuf,
        #[arg(long = "in")]
        input: Option<PathBuf>,
        /// Fit the model from this pristine corpus and save it to --model.
        #[arg(long)]
        fit: Option<PathBuf>,
        #[arg(long = "patch-size")]
        patch_size: Option<usize>,
    },
    /// List batch-size / sequence-length splits of a frame budget.
    Plan {
        #[arg(long)]
        budget: usize,
    },
}

fn required(value: Option<PathBuf>, fallback: &Option<PathBuf>, flag: &str) -> Result<PathBuf> {
    value.or_else(|| fallback.clone()).ok_or_else(|| usage(format!("{flag} is required")))
}

fn run(cli: Cli, out: &mut impl Write) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    match cli.command {
        Command::Degrade { input, output } => {
            let input = required(input, &cfg.paths.input, "--in")?;
            let output = required(output, &cfg.paths.output, "--out")?;
            commands::degrade(&cfg, &input, &output, out)
        }
        Command::Pairs { hr, output } => {
            let hr = required(hr, &cfg.paths.input, "--hr")?;
            let output = required(output, &cfg.paths.output, "--out")?;
            commands::pairs(&cfg, &hr, &output, out)
        }
        Command::Loadbench { scheme, length, iters, inject_latency, corpus } => {
            if let Some(s) = scheme {
                cfg.loader.scheme = s;
            }
            cfg.loader.length = length.unwrap_or(cfg.loader.length);
            cfg.loader.iterations = iters.unwrap_or(cfg.loader.iterations);
            cfg.loader.latency_ms = inject_latency.unwrap_or(cfg.loader.latency_ms);
            cfg.validate()?;
            let corpus = corpus.or_else(|| cfg.paths.input.clone());
            commands::loadbench(&cfg, corpus.as_deref(), cli.records, out)
        }
        Command::Refine { cleaner, weights, theta, max_iters, input, output } => {
            if let Some(c) = cleaner {
                cfg.refine.cleaner = c;
            }
            if weights.is_some() {
                cfg.refine.weights = weights;
            }
            cfg.refine.theta = theta.unwrap_or(cfg.refine.theta);
            cfg.refine.max_iters = max_iters.unwrap_or(cfg.refine.max_iters);
            let input = required(input, &cfg.paths.input, "--in")?;
            let output = required(output, &cfg.paths.output, "--out")?;
            commands::refine(&cfg, &input, &output, out)
        }
        Command::Niqe { model, input, fit, patch_size } => {
            commands::niqe(&model, input.as_deref(), fit.as_deref(), patch_size, out)
        }
        Command::Plan { budget } => commands::plan(budget, cli.records, out),
    }
}

/// Error chain on one line; library errors often embed their source already.
fn describe(e: &anyhow::Error) -> String {
    let mut msg = e.to_string();
    for cause in e.chain().skip(1) {
        let c = cause.to_string();
        if !msg.contains(&c) {
            msg.push_str(": ");
            msg.push_str(&c);
        }
    }
    msg
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match run(cli, &mut out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.downcast_ref::<std::io::Error>().is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe) => {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
