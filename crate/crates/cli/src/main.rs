//! `spinlab`: reproducible experiments on hardcore and Ising models.

mod commands;
mod error;
mod model;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Map, Value};

use commands::Report;
use error::{bad, CliError, CliResult};

#[derive(Parser)]
#[command(name = "spinlab", version, about = "Hardcore and Ising experiments near the uniqueness threshold")]
struct Cli {
    /// JSON object whose keys override the subcommand's flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Where to write the run manifest.
    #[arg(long, global = true, default_value = "manifest.json")]
    manifest: PathBuf,
    /// Worker threads (outputs do not depend on this).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a graph file.
    Gen(commands::GenArgs),
    /// Exact enumeration: log Z, marginals, λ_max of the influence matrix.
    Exact(commands::ExactArgs),
    /// Run a Markov chain and record samples.
    Sample(commands::SampleArgs),
    /// Spectral gap and TV curve of an exact chain kernel.
    Mix(commands::MixArgs),
    /// Coupling-independence estimate or rank-one bound.
    Spectral(commands::SpectralArgs),
    /// Percolation hitting-time pmf on the d-ary tree.
    Percolate(commands::PercolateArgs),
    /// Deterministic partition-function approximation.
    Count(commands::CountArgs),
    /// Generating-polynomial tables and their diagnostics.
    Lowerbound(commands::LowerboundArgs),
}

/// Applies `overrides` on top of the serialized flags; unknown keys are rejected.
fn merge<T: Serialize + DeserializeOwned>(args: &T, overrides: &Map<String, Value>) -> CliResult<T> {
    let mut value = serde_json::to_value(args).expect("argument structs serialize");
    let obj = value.as_object_mut().expect("argument structs are objects");
    for (key, v) in overrides {
        let key = key.replace('-', "_");
        if !obj.contains_key(&key) {
            return bad(format!("unknown config key `{key}`"));
        }
        obj.insert(key, v.clone());
    }
    serde_json::from_value(value).map_err(|e| CliError::Param(format!("config: {e}")))
}

fn run_merged<T: Serialize + DeserializeOwned>(
    args: &T,
    overrides: &Map<String, Value>,
    config: &mut Value,
    body: fn(&T) -> CliResult<Report>,
) -> CliResult<Report> {
    let merged = merge(args, overrides)?;
    *config = serde_json::to_value(&merged).expect("argument structs serialize");
    body(&merged)
}

fn load_config(path: &Option<PathBuf>) -> CliResult<Map<String, Value>> {
    let Some(path) = path else {
        return Ok(Map::new());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Param(format!("cannot read config {}: {e}", path.display())))?;
    match serde_json::from_str(&text) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => bad("config must be a JSON object"),
        Err(e) => bad(format!("config: {e}")),
    }
}

fn dispatch(command: &Command, overrides: &Map<String, Value>, config: &mut Value) -> CliResult<Report> {
    match command {
        Command::Gen(a) => run_merged(a, overrides, config, commands::gen),
        Command::Exact(a) => run_merged(a, overrides, config, commands::exact),
        Command::Sample(a) => run_merged(a, overrides, config, commands::sample),
        Command::Mix(a) => run_merged(a, overrides, config, commands::mix),
        Command::Spectral(a) => run_merged(a, overrides, config, commands::spectral),
        Command::Percolate(a) => run_merged(a, overrides, config, commands::percolate),
        Command::Count(a) => run_merged(a, overrides, config, commands::count),
        Command::Lowerbound(a) => run_merged(a, overrides, config, commands::lowerbound),
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Gen(_) => "gen",
        Command::Exact(_) => "exact",
        Command::Sample(_) => "sample",
        Command::Mix(_) => "mix",
        Command::Spectral(_) => "spectral",
        Command::Percolate(_) => "percolate",
        Command::Count(_) => "count",
        Command::Lowerbound(_) => "lowerbound",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
    let clock = Instant::now();
    let mut config = Value::Null;

    let result = (|| {
        if let Some(t) = cli.threads {
            if t == 0 {
                return bad("--threads must be at least 1");
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build_global()
                .map_err(|e| CliError::Param(format!("thread pool: {e}")))?;
        }
        let overrides = load_config(&cli.config)?;
        dispatch(&cli.command, &overrides, &mut config)
    })();

    let wall_time = clock.elapsed().as_secs_f64();
    let mut manifest = json!({
        "command": command_name(&cli.command),
        "argv": std::env::args().collect::<Vec<_>>(),
        "config_file": cli.config,
        "config": config,
        "version": env!("CARGO_PKG_VERSION"),
        "threads": rayon::current_num_threads(),
        "budget_states": std::env::var("SPINLAB_BUDGET_STATES").ok(),
        "started_unix": output::num(started),
        "wall_time": output::num(wall_time),
    });
    let code = match &result {
        Ok(report) => {
            manifest["status"] = json!("ok");
            manifest["resolved"] = report.resolved.clone();
            manifest["outputs"] = json!(report.outputs);
            0
        }
        Err(e) => {
            manifest["status"] = json!("error");
            manifest["error"] = json!(e.to_string());
            e.exit_code()
        }
    };
    if let Err(e) = output::write_json(&cli.manifest, &manifest) {
        eprintln!("spinlab: cannot write manifest {}: {e}", cli.manifest.display());
        return ExitCode::from(1);
    }
    match result {
        Ok(report) => {
            print!("{}", report.stdout);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("spinlab: {e}");
            ExitCode::from(code as u8)
        }
    }
}
