//! `noisy-qpe` command-line driver.
//!
//! Exit codes: 0 success, 1 configuration error, 2 infeasible model,
//! 3 internal assertion.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use noisy_qpe::harness::{
    render, run_sweep, validate_config, write_results, ExperimentKind, OutputFormat, ResultRow, SweepConfig,
};
use noisy_qpe::Error;

#[derive(Parser, Debug)]
#[command(name = "noisy-qpe", version, about = "Noise-robust phase estimation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Sweep configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Trials per grid point; overrides the config.
    #[arg(long, global = true)]
    trials: Option<u64>,
    /// Output file; stdout when absent. A `.meta.json` sidecar is written next to it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Estimator {
    Msqpe,
    Rpe,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// RPE vs MSQPE cost ratio grid.
    Benchmark,
    /// Error-vs-cost curve of one estimator.
    Curve {
        #[arg(long, value_enum)]
        estimator: Option<Estimator>,
    },
    /// Consistency, normality and overhead of the unbiased MLE.
    Eumle,
    /// Error correction vs mitigation depth map.
    Crossover,
    /// Qubit vs runtime trade-off curves.
    Resources,
    /// Standard fault-tolerance reference points.
    StandardFt,
    /// Check a config and print its normalized form.
    Validate,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) | Error::InvalidInput(_) | Error::Io(_) => 1,
            Error::Infeasible(_) => 2,
            Error::Internal(_) | Error::NonConvergence { .. } => 3,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn config_error(message: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        message: message.into(),
    }
}

fn wanted_kind(command: &Command, from_file: Option<ExperimentKind>) -> Option<ExperimentKind> {
    Some(match command {
        Command::Benchmark => ExperimentKind::BenchmarkPair,
        Command::Curve { estimator } => match (estimator, from_file) {
            (Some(Estimator::Msqpe), _) => ExperimentKind::MsqpeCurve,
            (Some(Estimator::Rpe), _) => ExperimentKind::RpeCurve,
            (None, Some(k @ (ExperimentKind::MsqpeCurve | ExperimentKind::RpeCurve))) => k,
            (None, _) => ExperimentKind::MsqpeCurve,
        },
        Command::Eumle => ExperimentKind::EumleStudy,
        Command::Crossover => ExperimentKind::CrossoverMap,
        Command::Resources => ExperimentKind::ResourceTradeoff,
        Command::StandardFt => ExperimentKind::StandardFt,
        Command::Validate => return None,
    })
}

fn build_config(cli: &Cli) -> Result<SweepConfig, Failure> {
    let c = &cli.common;
    let from_file = match &c.config {
        Some(path) => Some(validate_config(path).map_err(|e| config_error(e.to_string()))?),
        None => None,
    };
    let kind = wanted_kind(&cli.command, from_file.as_ref().map(|f| f.experiment));
    let mut config = match (from_file, kind) {
        (Some(f), Some(k)) if f.experiment != k => {
            return Err(config_error(format!(
                "config describes {} but the subcommand runs {k}",
                f.experiment
            )))
        }
        (Some(f), _) => f,
        (None, Some(k)) => match c.seed {
            Some(seed) => SweepConfig::defaults(k, seed),
            None => return Err(config_error("seed required (pass --seed or set it in --config)")),
        },
        (None, None) => return Err(config_error("validate needs --config")),
    };
    if let Some(s) = c.seed {
        config.seed = s;
    }
    if let Some(t) = c.trials {
        config.trials = t;
    }
    if let Some(o) = &c.out {
        config.output = Some(o.clone());
    }
    if let Some(f) = c.format {
        config.format = match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        };
    }
    config.check().map_err(|e| config_error(e.to_string()))?;
    Ok(config)
}

fn all_infeasible(rows: &[ResultRow]) -> bool {
    let data: Vec<&ResultRow> = rows.iter().filter(|r| r.warning.is_none()).collect();
    !data.is_empty()
        && data
            .iter()
            .all(|r| r.error.as_deref().is_some_and(|e| e.starts_with("infeasible")))
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let config = build_config(cli)?;
    if matches!(cli.command, Command::Validate) {
        let text = serde_json::to_string_pretty(&config).map_err(|e| Failure {
            code: 3,
            message: e.to_string(),
        })?;
        println!("{text}");
        return Ok(());
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.common.threads {
        if n == 0 {
            return Err(config_error("--threads must be >= 1"));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Failure {
        code: 3,
        message: e.to_string(),
    })?;
    let rows = pool.install(|| run_sweep(&config))?;
    match &config.output {
        Some(path) => {
            let (out, meta) = write_results(&rows, &config, path)?;
            eprintln!("wrote {} rows to {} ({})", rows.len(), out.display(), meta.display());
        }
        None => {
            let body = render(&rows, config.format)?;
            std::io::stdout()
                .write_all(body.as_bytes())
                .map_err(|e| Failure::from(Error::from(e)))?;
        }
    }
    if all_infeasible(&rows) {
        return Err(Failure {
            code: 2,
            message: "every grid point is infeasible".into(),
        });
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
