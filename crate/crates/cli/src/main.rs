use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qkdn_core::sim_harness::{emit_report, invariant_suite, parse_scenario, run_scenario, Format, Scenario};

const OK: u8 = 0;
const ABORT: u8 = 1;
const CONFIG: u8 = 2;

#[derive(Parser)]
#[command(name = "qkdn", version, about = "Simulate QKD-network key relaying and classify what each node learns")]
struct Cli {
    /// Overrides the scenario seed and QKDN_SEED.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// json or text.
    #[arg(long, global = true, default_value = "json")]
    format: String,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and print its report.
    Run { file: PathBuf },
    /// Run a scenario and analyse the given coalitions.
    Analyze {
        file: PathBuf,
        /// Comma-separated members; repeat for several coalitions.
        #[arg(long, required = true)]
        coalition: Vec<String>,
    },
    /// Run the built-in invariant suite.
    Check {
        #[arg(long, default_value_t = 100)]
        runs: u64,
    },
}

struct Failure(u8, String);

fn config(msg: impl ToString) -> Failure {
    Failure(CONFIG, msg.to_string())
}

fn env_seed() -> Result<Option<u64>, Failure> {
    match std::env::var("QKDN_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| config(format!("QKDN_SEED must be an unsigned integer, got {v:?}"))),
        Err(_) => Ok(None),
    }
}

fn load(path: &Path, flag: Option<u64>) -> Result<Scenario, Failure> {
    let text = fs::read_to_string(path).map_err(|e| config(format!("{}: {e}", path.display())))?;
    let mut sc = parse_scenario(&text).map_err(|e| config(format!("{}: {e}", path.display())))?;
    if let Some(seed) = flag.or(env_seed()?) {
        sc.seed = seed;
    }
    Ok(sc)
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| config(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn report(sc: &Scenario, format: Format, out: Option<&Path>) -> Result<u8, Failure> {
    let r = run_scenario(sc).map_err(config)?;
    emit(out, &emit_report(&r, format))?;
    Ok(if r.error.is_some() { ABORT } else { OK })
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let format: Format = cli.format.parse().map_err(config)?;
    let out = cli.out.as_deref();
    match cli.command {
        Command::Run { file } => report(&load(&file, cli.seed)?, format, out),
        Command::Analyze { file, coalition } => {
            let mut sc = load(&file, cli.seed)?;
            sc.coalitions = coalition
                .iter()
                .map(|c| c.split(',').map(|m| m.trim().to_string()).filter(|m| !m.is_empty()).collect())
                .collect();
            report(&sc, format, out)
        }
        Command::Check { runs } => {
            let results = invariant_suite(runs);
            let mut text = String::new();
            for c in &results {
                let mark = if c.passed { "PASS" } else { "FAIL" };
                text.push_str(&format!("{mark}  {:<14} {}\n", c.name, c.detail));
            }
            emit(out, &text)?;
            Ok(if results.iter().all(|c| c.passed) { OK } else { ABORT })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { CONFIG } else { OK });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, msg)) => {
            eprintln!("qkdn: {msg}");
            ExitCode::from(code)
        }
    }
}
