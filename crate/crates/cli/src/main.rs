mod args;
mod commands;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use args::Cli;
use commands::{Format, Output};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] cocycle_core::Error),
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_validation() => 2,
            CliError::Core(_) => 3,
            CliError::Usage(_) => 2,
            CliError::Io { .. } => 1,
        }
    }
}

#[derive(Serialize)]
struct RunManifest<'a> {
    command: &'a str,
    config_hash: String,
    version: &'a str,
    seed: u64,
    workers: usize,
    wall_time_s: f64,
    grid_sizes: &'a [usize],
    dropped: &'a [usize],
    output: Option<String>,
    format: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    summary: Option<&'a Value>,
}

fn command_name(cli: &Cli) -> &'static str {
    use args::Command::*;
    match cli.command {
        Cf(_) => "cf",
        Analytic(_) => "analytic",
        Lyapunov(_) => "lyapunov",
        Holder(_) => "holder",
        Ldt(_) => "ldt",
        Birkhoff(_) => "birkhoff",
        Ap(_) => "ap",
    }
}

/// SHA-256 of the command arguments, the seed and the model text. Worker
/// count and output path are excluded.
fn config_hash(cli: &Cli, model_text: Option<&str>) -> String {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(&cli.command).expect("arguments serialise"));
    h.update(cli.seed.to_le_bytes());
    if let Some(t) = model_text {
        h.update(t.as_bytes());
    }
    hex::encode(h.finalize())
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn write_file(path: &Path, body: &str) -> Result<(), CliError> {
    fs::write(path, body).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

fn emit(cli: &Cli, out: &Output, started: Instant) -> Result<(), CliError> {
    let manifest = RunManifest {
        command: command_name(cli),
        config_hash: config_hash(cli, out.model_text.as_deref()),
        version: env!("CARGO_PKG_VERSION"),
        seed: cli.seed,
        workers: rayon::current_num_threads(),
        wall_time_s: started.elapsed().as_secs_f64(),
        grid_sizes: &out.grid_sizes,
        dropped: &out.dropped,
        output: cli.out.as_ref().map(|p| p.display().to_string()),
        format: match out.format {
            Format::Json => "json",
            Format::Csv => "csv",
        },
        summary: out.summary.as_ref(),
    };
    let mut manifest_text = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
    manifest_text.push('\n');
    match &cli.out {
        Some(path) => {
            write_file(path, &out.body)?;
            write_file(&manifest_path(path), &manifest_text)?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(out.body.as_bytes())
                .and_then(|_| lock.flush())
                .map_err(|source| CliError::Io {
                    path: PathBuf::from("<stdout>"),
                    source,
                })?;
            eprint!("{manifest_text}");
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let started = Instant::now();
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(CliError::Usage("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot start {n} workers: {e}")))?;
    }
    let out = commands::run(&cli.command, cli.seed)?;
    emit(cli, &out, started)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
