use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gauss_lucas::config::{parse_config, Mode, ScenarioConfig};
use gauss_lucas::scenario::{run_scenario, RunOptions, EXIT_ERROR};

/// Numerical checks of hull containment for zeros and critical points.
#[derive(Parser)]
#[command(name = "glcheck", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run any scenario.
    Run(RunArgs),
    /// Run a `rearrange` scenario.
    Rearrange(RunArgs),
    /// Run a `sep-hull` scenario.
    SepHull(RunArgs),
    /// Run a `stability` or `corollary` scenario.
    Stability(RunArgs),
    /// Print a stored report and exit with its code.
    Report {
        /// Output directory of an earlier run.
        dir: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file.
    #[arg(short, long)]
    config: PathBuf,
    /// Output directory (overrides `[output] dir` and GLCHECK_OUT).
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Overrides `numeric.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Do not print the report.
    #[arg(short, long)]
    quiet: bool,
}

fn load(path: &Path) -> Result<ScenarioConfig, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_config(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn run(args: RunArgs, allowed: &[Mode]) -> i32 {
    let cfg = match load(&args.config) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("glcheck: {msg}");
            return EXIT_ERROR;
        }
    };
    if !allowed.is_empty() && !allowed.contains(&cfg.mode) {
        let names: Vec<&str> = allowed.iter().map(|m| m.as_str()).collect();
        eprintln!("glcheck: scenario mode `{}` does not fit this subcommand (expected {})", cfg.mode, names.join(" or "));
        return EXIT_ERROR;
    }
    let out = args
        .out
        .or_else(|| cfg.output_dir.clone())
        .or_else(|| std::env::var_os("GLCHECK_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("glcheck-out"));
    let outcome = run_scenario(&cfg, &out, &RunOptions { seed: args.seed, timestamp: None });
    if let Some(err) = &outcome.error {
        eprintln!("glcheck: {err}");
    }
    if !args.quiet {
        if let Ok(text) = fs::read_to_string(out.join("report.txt")) {
            print!("{text}");
        }
    }
    outcome.exit_code
}

fn report(dir: &Path) -> i32 {
    let text = match fs::read_to_string(dir.join("report.txt")) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("glcheck: {}: {e}", dir.join("report.txt").display());
            return EXIT_ERROR;
        }
    };
    print!("{text}");
    text.lines()
        .find_map(|l| l.strip_prefix("exit_code: "))
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or_else(|| {
            eprintln!("glcheck: report has no exit_code line");
            EXIT_ERROR
        })
}

fn main() -> ExitCode {
    // clap's own usage errors would exit with 2, which means "uncertain" here
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR as u8 } else { 0 });
        }
    };
    let code = match cli.command {
        Command::Run(a) => run(a, &[]),
        Command::Rearrange(a) => run(a, &[Mode::Rearrange]),
        Command::SepHull(a) => run(a, &[Mode::SepHull]),
        Command::Stability(a) => run(a, &[Mode::Stability, Mode::Corollary]),
        Command::Report { dir } => report(&dir),
    };
    ExitCode::from(code as u8)
}
