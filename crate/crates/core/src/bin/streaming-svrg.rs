use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use streaming_svrg::config::ExperimentConfig;
use streaming_svrg::runner::{self, exit_code};
use streaming_svrg::Error;

#[derive(Parser)]
#[command(version, about = "Streaming SVRG experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML experiment config
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file; stdout when absent
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// One streaming run, trace CSV
    Simulate,
    /// Streaming against ERM over the N grid
    Compare,
    /// Inequality, gradient and schedule checks
    Check,
    /// Excess-risk rate table over the N grid
    Sweep,
}

fn load(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(threads) = cli.threads {
        cfg.threads = threads;
    }
    if let Some(out) = &cli.out {
        cfg.out = Some(out.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli, cfg: &ExperimentConfig) -> anyhow::Result<bool> {
    let mut out: Box<dyn Write> = match &cfg.out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).map_err(Error::from).with_context(|| format!("creating {}", path.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    };
    let mut log = io::stderr().lock();
    let passed = match cli.command {
        Command::Simulate => runner::simulate(cfg, &mut out, &mut log).map(|_| true)?,
        Command::Compare => runner::compare(cfg, &mut out, &mut log).map(|_| true)?,
        Command::Sweep => runner::sweep(cfg, &mut out, &mut log).map(|_| true)?,
        Command::Check => {
            let report = runner::check(cfg, &mut log)?;
            if cfg.out.is_some() {
                report.write_csv(&mut out)?;
            }
            if !report.passed() {
                writeln!(log, "failed suites: {}", report.failures().join(", "))?;
            }
            report.passed()
        }
    };
    out.flush()?;
    Ok(passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run(&cli, &cfg) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<Error>().map_or(1, exit_code);
            ExitCode::from(code as u8)
        }
    }
}
