use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pes_harness::acceptance;
use pes_harness::{emit_csv, parse_spec, run_experiment, RunOptions, RunStatus};

/// PES stochastic min-max experiments.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (solver, seed) pair of a spec and write CSV outputs.
    Run {
        spec: PathBuf,
        /// Output directory (overrides the spec's `output_dir`).
        #[arg(long, env = "PES_OUT_DIR")]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
        /// Per-run oracle-call budget (overrides the spec).
        #[arg(long)]
        budget: Option<u64>,
    },
    /// Parse and validate a spec without running it.
    Check { spec: PathBuf },
    /// Run the built-in acceptance suite.
    Regress {
        /// Run only these criteria (repeatable).
        #[arg(long)]
        only: Vec<u32>,
    },
}

const SPEC_ERROR: u8 = 2;

fn load(path: &PathBuf) -> Result<pes_harness::ExperimentSpec, ExitCode> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        eprintln!("{}: {e}", path.display());
        ExitCode::from(SPEC_ERROR)
    })?;
    parse_spec(&text).map_err(|e| {
        eprintln!("{}: {e}", path.display());
        ExitCode::from(SPEC_ERROR)
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Check { spec } => match load(&spec) {
            Ok(s) => {
                println!(
                    "ok: {} solver(s) x {} seed(s)",
                    s.solvers.len(),
                    s.seeds.len()
                );
                ExitCode::SUCCESS
            }
            Err(code) => code,
        },
        Command::Run {
            spec,
            out,
            workers,
            budget,
        } => {
            let s = match load(&spec) {
                Ok(s) => s,
                Err(code) => return code,
            };
            let dir = out
                .or_else(|| s.output_dir.clone())
                .unwrap_or_else(|| PathBuf::from("pes-out"));
            let records = match run_experiment(&s, &RunOptions { workers, budget }) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::FAILURE;
                }
            };
            if let Err(e) = emit_csv(&records, &dir) {
                eprintln!("error: {e}");
                return ExitCode::FAILURE;
            }
            let mut failed = false;
            for r in &records {
                match &r.status {
                    RunStatus::Failed(msg) => {
                        failed = true;
                        eprintln!("{} seed {}: FAILED: {msg}", r.solver, r.seed);
                    }
                    RunStatus::EarlyStopped => {
                        eprintln!("{} seed {}: budget exhausted", r.solver, r.seed)
                    }
                    RunStatus::Completed => {}
                }
            }
            println!("{} run(s) written to {}", records.len(), dir.display());
            if failed {
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            }
        }
        Command::Regress { only } => {
            let mut results = Vec::new();
            for c in acceptance::CRITERIA.iter() {
                if only.is_empty() || only.contains(&c.id) {
                    let r = c.run();
                    println!("{}", r.line());
                    results.push(r);
                }
            }
            if results.iter().all(|r| r.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
