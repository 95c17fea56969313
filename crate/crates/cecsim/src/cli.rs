//! Command-line interface: `simulate`, `threshold`, `sweep`,
//! `dump-circuit`, and `verify` subcommands over a JSON run config.
//!
//! Exit codes: 0 success, 1 validation failure, 2 usage error,
//! 3 numerical failure.

use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};

use crate::circuit::dump_circuit;
use crate::codes::Code;
use crate::error::{Error, Result};
use crate::threshold::{diagonal_csv, find_threshold, simulate_point, sweep, sweep_csv, RunConfig};
use crate::verify::run_verify;

#[derive(Debug, Parser)]
#[command(name = "cecsim", version, about = "Measurement-free error correction simulator")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
struct CommonArgs {
    /// Code to simulate (bf, bs, steane); overrides the config's code.
    #[arg(long)]
    code: Option<String>,
    /// JSON config: a file path, or an inline document starting with '{'.
    #[arg(long)]
    config: Option<String>,
    /// RNG seed; overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; the CECSIM_WORKERS environment variable overrides this.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate one (p_gate, p_mem) operating point; emits result JSON.
    Simulate(CommonArgs),
    /// Locate the fixed point p_log(p_gate) = p_gate; emits threshold JSON.
    Threshold(CommonArgs),
    /// Evaluate the logical rate over a gate-rate grid; emits CSV.
    Sweep(CommonArgs),
    /// Emit the scheduled correction cycle as JSON.
    DumpCircuit(CommonArgs),
    /// Run the structural and single-fault verification suites.
    Verify(CommonArgs),
}

impl Command {
    fn common(&self) -> &CommonArgs {
        match self {
            Command::Simulate(c)
            | Command::Threshold(c)
            | Command::Sweep(c)
            | Command::DumpCircuit(c)
            | Command::Verify(c) => c,
        }
    }
}

/// Parse `argv` and run; returns the process exit code.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version with success-typed "errors".
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: &Command) -> Result<i32> {
    let common = command.common();
    let config = load_config(common)?;
    let workers = resolve_workers(common, &config)?;

    with_worker_pool(workers, || match command {
        Command::Simulate(args) => {
            let result = simulate_point(&config)?;
            write_output(args.out.as_deref(), &to_json(&result)?)?;
            Ok(0)
        }
        Command::Threshold(args) => {
            let result = find_threshold(&config)?;
            write_output(args.out.as_deref(), &to_json(&result)?)?;
            Ok(0)
        }
        Command::Sweep(args) => {
            let rows = sweep(&config)?;
            write_output(args.out.as_deref(), &sweep_csv(&rows))?;
            if let Some(out) = &args.out {
                let diagonal = diagonal_path(out);
                write_output(Some(&diagonal), &diagonal_csv(&rows))?;
            }
            Ok(0)
        }
        Command::DumpCircuit(args) => {
            let circuit = config.build_circuit()?;
            let dump = dump_circuit(&circuit);
            write_output(args.out.as_deref(), &to_json(&dump)?)?;
            Ok(0)
        }
        Command::Verify(args) => {
            let codes: Vec<Code> = match config.code {
                Some(code) => vec![code],
                None => Code::ALL.to_vec(),
            };
            let report = run_verify(&codes, config.circuit_options());
            let mut text = String::new();
            for check in &report.checks {
                let status = if check.passed { "PASS" } else { "FAIL" };
                text.push_str(&format!("{status} {} — {}\n", check.name, check.detail));
            }
            write_output(args.out.as_deref(), &text)?;
            Ok(if report.all_passed() { 0 } else { 1 })
        }
    })
}

fn load_config(common: &CommonArgs) -> Result<RunConfig> {
    let mut config = match &common.config {
        None => RunConfig::default(),
        Some(raw) if raw.trim_start().starts_with('{') => RunConfig::from_json(raw)?,
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.clone(), e))?;
            RunConfig::from_json(&text)?
        }
    };
    if let Some(code) = &common.code {
        config.code = Some(code.parse()?);
    }
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    config.validate()?;
    Ok(config)
}

/// CECSIM_WORKERS overrides --workers, which overrides the config.
fn resolve_workers(common: &CommonArgs, config: &RunConfig) -> Result<Option<usize>> {
    if let Ok(env) = std::env::var("CECSIM_WORKERS") {
        let parsed = env
            .parse::<usize>()
            .map_err(|_| Error::usage(format!("CECSIM_WORKERS must be an integer, got '{env}'")))?;
        return Ok(Some(parsed));
    }
    Ok(common.workers.or(config.workers))
}

/// Run `f` inside a dedicated rayon pool when a worker count is pinned;
/// results are deterministic either way, this only bounds parallelism.
pub fn with_worker_pool<T>(workers: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T>
where
    T: Send,
{
    match workers {
        None => f(),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::usage(format!("cannot build worker pool: {e}")))?;
            pool.install(f)
        }
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

fn write_output(path: Option<&Path>, content: &str) -> Result<()> {
    match path {
        None => {
            print!("{content}");
            Ok(())
        }
        Some(path) => std::fs::write(path, content)
            .map_err(|e| Error::io(path.display().to_string(), e)),
    }
}

fn diagonal_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("sweep");
    let dir = out.parent().unwrap_or_else(|| Path::new(""));
    dir.join(format!("{stem}_diagonal.csv"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_subcommand_is_usage_error() {
        assert_eq!(run(["cecsim", "frobnicate"]), 2);
    }

    #[test]
    fn bad_config_is_usage_error() {
        assert_eq!(
            run(["cecsim", "simulate", "--code", "bf", "--config", r#"{"p_gate":0.9}"#]),
            2
        );
    }

    #[test]
    fn simulate_zero_noise_succeeds() {
        assert_eq!(
            run(["cecsim", "simulate", "--code", "bf", "--config", r#"{"p_gate":0.0,"p_mem":0}"#]),
            0
        );
    }

    #[test]
    fn diagonal_path_derivation() {
        assert_eq!(
            diagonal_path(Path::new("/tmp/curves.csv")),
            PathBuf::from("/tmp/curves_diagonal.csv")
        );
    }
}
