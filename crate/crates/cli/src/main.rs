#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod signal_io;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::json;

use commands::{CliError, CliResult, Outcome};

#[derive(Parser)]
#[command(name = "warpco", version, about = "Warped time-frequency analysis: coverings, transforms, norms and embedding checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON configuration for the command
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for the JSON report and CSV/binary outputs; without it the report goes to stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for randomized probes and generated signals
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Neighbor counts, measures, tightness, growth and Besov/α diagnostics of an induced covering
    CoveringReport,
    /// Embedding or equality verdict between two space descriptors
    EmbedCheck,
    /// Warped voice transform coefficients with Parseval and round-trip defects
    Transform,
    /// Parseval defects over a sequence of lattice steps
    Parseval,
    /// α-covering verification of the induced covering of the α family
    AlphaVerify,
    /// Besov vs ln-warped coorbit comparison or the full identification table
    BesovCompare,
    /// Coorbit/decomposition norm ratio bands over a seeded signal family
    NormProbe,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::CoveringReport => "covering-report",
            Command::EmbedCheck => "embed-check",
            Command::Transform => "transform",
            Command::Parseval => "parseval",
            Command::AlphaVerify => "alpha-verify",
            Command::BesovCompare => "besov-compare",
            Command::NormProbe => "norm-probe",
        }
    }
}

fn load<T: DeserializeOwned>(path: Option<&Path>, fallback: Option<&str>) -> CliResult<T> {
    let text = match (path, fallback) {
        (Some(p), _) => fs::read_to_string(p).map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?,
        (None, Some(f)) => f.to_string(),
        (None, None) => return Err(CliError::Config("this command needs --config".into())),
    };
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("invalid configuration: {e}")))
}

fn run<T: DeserializeOwned + Serialize>(
    cli: &Cli,
    fallback: Option<&str>,
    body: impl FnOnce(&T) -> CliResult<Outcome>,
) -> CliResult<(serde_json::Value, Outcome)> {
    let cfg: T = load(cli.config.as_deref(), fallback)?;
    let resolved = serde_json::to_value(&cfg).expect("configs serialize");
    Ok((resolved, body(&cfg)?))
}

fn execute(cli: &Cli) -> CliResult<bool> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let base = cli
        .config
        .as_deref()
        .and_then(Path::parent)
        .map(Path::to_path_buf)
        .unwrap_or_default();
    let seed = cli.seed;
    let (resolved, outcome) = match cli.command {
        Command::CoveringReport => run(cli, None, commands::covering_report)?,
        Command::EmbedCheck => run(cli, None, commands::embed)?,
        Command::Transform => run(cli, None, |c| commands::transform(c, seed, &base))?,
        Command::Parseval => run(cli, Some(r#"{"map": "identity"}"#), |c| commands::parseval(c, seed, &base))?,
        Command::AlphaVerify => run(cli, None, commands::alpha)?,
        Command::BesovCompare => run(cli, Some(r#"{"table": true}"#), commands::besov)?,
        Command::NormProbe => run(cli, Some("{}"), |c| commands::norm_probe(c, seed))?,
    };
    let report = json!({
        "command": cli.command.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "seed": seed,
        "threads": cli.threads,
        "config": resolved,
        "pass": outcome.pass,
        "result": outcome.result,
    });
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    match &cli.out {
        Some(dir) => {
            let io = |e: std::io::Error| CliError::Config(format!("cannot write to {}: {e}", dir.display()));
            fs::create_dir_all(dir).map_err(io)?;
            fs::write(dir.join(format!("{}.json", cli.command.name())), &text).map_err(io)?;
            for (name, body) in &outcome.csv {
                fs::write(dir.join(name), body).map_err(io)?;
            }
            for (name, signal) in &outcome.signals {
                signal_io::write_signal(&dir.join(name), signal).map_err(io)?;
            }
            eprintln!("{}: {} -> {}", cli.command.name(), if outcome.pass { "pass" } else { "fail" }, dir.display());
        }
        None => println!("{text}"),
    }
    Ok(outcome.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("{}: verification failed", cli.command.name());
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code() as u8)
        }
    }
}
