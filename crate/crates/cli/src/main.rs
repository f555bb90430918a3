mod chat;
mod commands;
mod config;

use clap::{Parser, Subcommand};
use commands::PredictorKind;
use config::{CommonFlags, ConfigError, RunConfig};
use resat_core::pipeline::Driver;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "resat", version, about = "Build structure-aware issue-resolution datasets and score localization")]
struct Cli {
    #[command(flatten)]
    common: CommonFlags,
    /// Log progress to standard error (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum DriverArg {
    Agentless,
    RagSwe,
}

impl From<DriverArg> for Driver {
    fn from(d: DriverArg) -> Self {
        match d {
            DriverArg::Agentless => Driver::Agentless,
            DriverArg::RagSwe => Driver::RagSwe,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Filter cached candidate repositories into a CSV.
    Select {
        /// One `owner/name` per line; replaces the built-in denylist.
        #[arg(long, value_name = "FILE")]
        denylist: Option<PathBuf>,
    },
    /// Fetch repository metadata, pull requests and issues into the cache.
    Scrape {
        #[arg(long, value_name = "FILE")]
        denylist: Option<PathBuf>,
        /// Also clone each selected repository for snapshot checkout.
        #[arg(long)]
        clone: bool,
    },
    /// Build the training dataset as JSONL.
    Build {
        /// Run report destination; printed to standard output when absent.
        #[arg(long, value_name = "FILE")]
        report: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        denylist: Option<PathBuf>,
    },
    /// Run an evaluation driver and report hit rates.
    Eval {
        #[arg(long, value_enum, default_value = "agentless")]
        driver: DriverArg,
        #[arg(long, value_enum, default_value = "oracle")]
        predictor: PredictorKind,
        /// Completion endpoint for `--predictor http`.
        #[arg(long)]
        endpoint: Option<String>,
        /// Per-request timeout for the completion endpoint, in seconds.
        #[arg(long, default_value_t = 300)]
        endpoint_timeout: u64,
        /// Extra attempts after a failed endpoint request.
        #[arg(long, default_value_t = 3)]
        endpoint_retries: u32,
        #[arg(long, value_name = "FILE")]
        report: Option<PathBuf>,
    },
    /// Apply a Search/Replace edit script to a source tree.
    Apply {
        #[arg(long, value_name = "FILE")]
        edits: PathBuf,
        #[arg(long, value_name = "DIR")]
        root: PathBuf,
        /// Print a unified diff instead of writing files.
        #[arg(long)]
        emit_diff: bool,
    },
    /// Rank a source tree's files against a query with BM25.
    Retrieve {
        #[arg(long, value_name = "DIR")]
        root: PathBuf,
        #[arg(long)]
        query: Option<String>,
        #[arg(long, value_name = "FILE")]
        query_file: Option<PathBuf>,
    },
    /// Summarize a dataset by kind and token count.
    Stats {
        #[arg(long, value_name = "FILE")]
        dataset: PathBuf,
    },
}

fn run(cli: Cli) -> anyhow::Result<(commands::Outcome, bool)> {
    let cfg = RunConfig::resolve(&cli.common)?;
    let outcome = match cli.command {
        Cmd::Select { denylist } => commands::select(&cfg, denylist.as_deref()),
        Cmd::Scrape { denylist, clone } => commands::scrape(&cfg, denylist.as_deref(), clone),
        Cmd::Build { report, denylist } => commands::build(&cfg, report.as_deref(), denylist.as_deref()),
        Cmd::Eval { driver, predictor, endpoint, endpoint_timeout, endpoint_retries, report } => {
            let endpoint = commands::Endpoint { url: endpoint, timeout_secs: endpoint_timeout, retries: endpoint_retries };
            commands::eval(&cfg, driver.into(), predictor, &endpoint, report.as_deref())
        }
        Cmd::Apply { edits, root, emit_diff } => commands::apply(&edits, &root, emit_diff),
        Cmd::Retrieve { root, query, query_file } => {
            let q = commands::read_query(query, query_file)?;
            commands::retrieve(&cfg, &root, &q)
        }
        Cmd::Stats { dataset } => commands::stats(&cfg, &dataset),
    }?;
    Ok((outcome, cfg.strict))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match run(cli) {
        Ok((outcome, _)) if outcome.task_errors.is_empty() => ExitCode::SUCCESS,
        Ok((outcome, strict)) => {
            for e in &outcome.task_errors {
                eprintln!("task error: {e}");
            }
            if strict {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) if e.downcast_ref::<ConfigError>().is_some() => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
