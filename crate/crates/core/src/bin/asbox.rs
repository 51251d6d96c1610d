use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use asbox::data_io::{encode_labels, read_libsvm};
use asbox::harness::experiment::obtain_reference;
use asbox::harness::{bound_report, run_experiment, ExperimentConfig, MethodKind};

#[derive(Parser)]
#[command(name = "asbox", version, about = "Box-constrained stochastic optimization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured methods and write one trace CSV per (method, seed).
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Run only this method (asbox, psgm or sipm).
        #[arg(long)]
        method: Option<String>,
        /// Run only this seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute (or verify the cached) reference solution.
    Reference {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the expected-iteration bound next to observed iterations.
    Bound {
        #[arg(long)]
        config: PathBuf,
    },
    /// Parse a LIBSVM file and print its statistics.
    ParseCheck {
        #[arg(long)]
        data: PathBuf,
    },
}

fn load(path: &PathBuf) -> anyhow::Result<ExperimentConfig> {
    ExperimentConfig::load(path).with_context(|| format!("loading config {}", path.display()))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run {
            config,
            method,
            seed,
            out,
        } => {
            let cfg = load(&config)?;
            let methods = match method {
                Some(m) => vec![MethodKind::parse(&m)?],
                None => cfg.methods.clone(),
            };
            let seeds = seed.map_or_else(|| cfg.seed_list(), |s| vec![s]);
            let out = out.unwrap_or_else(|| cfg.out.clone());
            for path in run_experiment(&cfg, &methods, &seeds, &out)? {
                println!("{}", path.display());
            }
        }
        Command::Reference { config } => {
            let cfg = load(&config)?;
            let problem = cfg.build_problem()?;
            let path = cfg
                .reference
                .clone()
                .context("config has no `reference` path")?;
            let x = obtain_reference(&cfg, &problem)?.expect("reference path is set");
            let (f, d) = asbox::driver::full_metrics(problem.as_dyn(), &x)?;
            println!("reference {}  f = {f:e}  |d| = {d:e}", path.display());
        }
        Command::Bound { config } => {
            let cfg = load(&config)?;
            let report = bound_report(&cfg)?;
            println!("{report}");
            report.check()?;
        }
        Command::ParseCheck { data } => {
            let d = read_libsvm(&data).with_context(|| format!("parsing {}", data.display()))?;
            let (_, map) = encode_labels(d.labels())?;
            let s = d.stats();
            println!("samples   {}", s.samples);
            println!("features  {}", s.features);
            println!("nonzeros  {}", s.nonzeros);
            println!("labels    {} -> -1, {} -> +1", map.negative, map.positive);
        }
    }
    Ok(())
}
