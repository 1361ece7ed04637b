//! `medsel`: exact Bayesian variable selection from the command line.

mod analyze;
mod commands;
mod error;
mod settings;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analyze::AnalyzeConfig;
use crate::commands::CollectiveArgs;
use crate::error::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "medsel", version, about = "Median probability, highest posterior and risk-optimal model selection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate all submodels of a CSV dataset and report MPM, HPM and the risk-optimal model.
    Analyze {
        /// CSV file with a header row.
        #[arg(long, required_unless_present = "config")]
        data: Option<PathBuf>,
        /// Name of the response column; every other column is a covariate.
        #[arg(long, required_unless_present = "config")]
        response: Option<String>,
        /// g for the g-prior: a positive number or `auto` (g = n).
        #[arg(long, default_value = "auto")]
        g: String,
        /// gprior | indep[:TAU] | spikeslab:V0,V1
        #[arg(long, default_value = "gprior")]
        coef_prior: String,
        /// uniform | sizes | bernoulli:T | betabinom:A,B | dilution:T1,K
        #[arg(long, default_value = "uniform")]
        model_prior: String,
        /// known:S2 | jeffreys
        #[arg(long, default_value = "jeffreys")]
        sigma: String,
        /// Size of the leading block; the remaining covariates form a collective.
        #[arg(long)]
        block: Option<usize>,
        /// Keep covariates as given instead of centering and scaling to unit norm.
        #[arg(long)]
        no_standardize: bool,
        /// Re-run the configuration embedded in an earlier report.
        #[arg(long, conflicts_with_all = ["data", "response", "block", "no_standardize"])]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Two-covariate geometry for a correlation triple.
    Geometry {
        #[arg(long, allow_hyphen_values = true)]
        r12: f64,
        #[arg(long, allow_hyphen_values = true)]
        r1y: f64,
        #[arg(long, allow_hyphen_values = true)]
        r2y: f64,
        /// Posterior probabilities p00,p10,p01,p11.
        #[arg(long, value_delimiter = ',')]
        probs: Option<Vec<f64>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Regenerate the two-covariate numerical study.
    Study {
        /// full | onevar | null
        #[arg(long)]
        scenario: String,
        /// Comma-separated sample sizes.
        #[arg(long, default_value = "10,50,100")]
        n: String,
        #[arg(long, value_enum, default_value = "csv")]
        out_format: OutFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Prior masses, odds and the inclusion threshold of a duplicate collective.
    Collective {
        /// Number of covariates outside the duplicate block.
        #[arg(long)]
        p: usize,
        /// Number of duplicate copies.
        #[arg(long)]
        k: usize,
        #[arg(long, default_value = "uniform")]
        model_prior: String,
        /// Size of gamma1, the active part of the leading block.
        #[arg(long, default_value_t = 0)]
        gamma1_size: usize,
        /// Inner product x'y of the unit-norm duplicated covariate.
        #[arg(long, allow_hyphen_values = true)]
        z: Option<f64>,
        /// Sample size (g = n).
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 1.0)]
        sigma2: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit(text: &str, out: Option<&PathBuf>) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::data(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn json<T: Serialize>(value: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn configure_threads() -> CliResult<()> {
    if let Ok(v) = std::env::var("MEDSEL_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::usage(format!("MEDSEL_THREADS must be a positive integer, got '{v}'")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::usage(format!("cannot configure {n} threads: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    match cli.command {
        Command::Analyze { data, response, g, coef_prior, model_prior, sigma, block, no_standardize, config, out } => {
            let (cfg, hash) = match config {
                Some(path) => analyze::load_config(&path)?,
                None => (
                    AnalyzeConfig {
                        data: data.expect("required by clap"),
                        response: response.expect("required by clap"),
                        g,
                        coef_prior,
                        model_prior,
                        sigma,
                        block,
                        standardize: !no_standardize,
                    },
                    None,
                ),
            };
            let report = analyze::run(&cfg, hash.as_deref())?;
            emit(&json(&report)?, out.as_ref())
        }
        Command::Geometry { r12, r1y, r2y, probs, out } => {
            let report = commands::geometry(r12, r1y, r2y, probs.as_deref())?;
            emit(&json(&report)?, out.as_ref())
        }
        Command::Study { scenario, n, out_format, out } => {
            let table = commands::study(&scenario, settings::parse_sizes(&n)?)?;
            let text = match out_format {
                OutFormat::Csv => table.to_csv(),
                OutFormat::Json => json(&table)?,
            };
            emit(&text, out.as_ref())
        }
        Command::Collective { p, k, model_prior, gamma1_size, z, n, sigma2, out } => {
            let prior = settings::parse_model_prior(&model_prior, p + k)?;
            let report = commands::collective(CollectiveArgs { p, k, prior, gamma1_size, z, n, sigma2 })?;
            emit(&json(&report)?, out.as_ref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            eprintln!("{}", CliError::usage(first).to_json());
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.kind.exit_code() as u8)
        }
    }
}
