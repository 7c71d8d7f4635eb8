//! Executes every (solver, seed) pair of a spec.

use std::time::Instant;

use pes_core::solvers::{pes_solve_with, stoc_agda_with, Clock, SolveOptions};
use pes_core::{OracleMeter, PrimalDualPoint};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::setup::{build_problem, plan_solver, BuiltProblem, SetupError, SolverPlan};
use crate::spec::{ExperimentSpec, SolverSpec};

/// One trace line.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub epoch: usize,
    pub eta: Option<f64>,
    /// Steps taken in this row's block.
    pub t: u64,
    pub oracle_calls: u64,
    pub objective_gap: Option<f64>,
    pub gap_k: Option<f64>,
    pub delta_k: Option<f64>,
    pub elapsed_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub final_objective_gap: Option<f64>,
    pub final_gap_k: Option<f64>,
    pub total_oracle_calls: u64,
    pub wall_seconds: Option<f64>,
    pub holdout_auc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Completed,
    /// The oracle budget ran out; the trace is partial.
    EarlyStopped,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub solver: String,
    pub seed: u64,
    /// Seed of the run's random stream.
    pub stream_seed: u64,
    pub rows: Vec<TraceRow>,
    pub summary: RunSummary,
    pub status: RunStatus,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses all cores.
    pub workers: Option<usize>,
    /// Replaces the spec's budget.
    pub budget: Option<u64>,
}

/// First 8 bytes (little endian) of
/// `sha256(spec_seed ‖ solver_name ‖ run_seed)`, integers little endian.
pub fn derive_seed(spec_seed: u64, solver: &str, run_seed: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(spec_seed.to_le_bytes());
    h.update(solver.as_bytes());
    h.update(run_seed.to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

struct WallClock(Instant);

impl Clock for WallClock {
    fn now_secs(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

/// Runs the whole grid. Only problem construction can fail the call; a
/// solver that cannot be built or run yields a `Failed` record.
pub fn run_experiment(
    spec: &ExperimentSpec,
    options: &RunOptions,
) -> Result<Vec<RunRecord>, SetupError> {
    let problem = build_problem(&spec.problem)?;
    let budget = options.budget.or(spec.budget);
    let jobs: Vec<(&SolverSpec, u64)> = spec
        .solvers
        .iter()
        .flat_map(|s| spec.seeds.iter().map(move |seed| (s, *seed)))
        .collect();
    let work = || {
        jobs.par_iter()
            .map(|(solver, seed)| run_one(spec, &problem, solver, *seed, budget))
            .collect::<Vec<_>>()
    };
    let records = match options.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| SetupError::Config(e.to_string()))?
            .install(work),
        None => work(),
    };
    Ok(records)
}

fn run_one(
    spec: &ExperimentSpec,
    problem: &BuiltProblem,
    solver: &SolverSpec,
    seed: u64,
    budget: Option<u64>,
) -> RunRecord {
    let stream_seed = derive_seed(spec.seed, &solver.name, seed);
    let started = Instant::now();
    let result = plan_solver(solver, problem, budget).and_then(|plan| match plan {
        SolverPlan::Pes(config) => {
            run_pes(problem, config, stream_seed, budget, spec.record_timing)
        }
        SolverPlan::StocAgda(params) => {
            let mut rng = ChaCha8Rng::seed_from_u64(stream_seed);
            let mut meter = budget.map_or_else(OracleMeter::unlimited, OracleMeter::with_budget);
            let run = stoc_agda_with(
                problem.as_dyn(),
                &problem.start(),
                &params,
                &mut rng,
                &mut meter,
            )?;
            let mut previous = 0;
            let rows = run
                .samples
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    let row = TraceRow {
                        epoch: i + 1,
                        eta: Some(
                            params.tau2 / (params.lambda + s.iteration.saturating_sub(1) as f64),
                        ),
                        t: s.iteration - previous,
                        oracle_calls: s.oracle_calls,
                        objective_gap: s.objective_gap,
                        gap_k: None,
                        delta_k: None,
                        elapsed_s: None,
                    };
                    previous = s.iteration;
                    row
                })
                .collect();
            Ok((rows, run.final_point, run.truncated))
        }
    });
    let wall_seconds = spec.record_timing.then(|| started.elapsed().as_secs_f64());
    match result {
        Ok((rows, point, early)) => {
            let last = rows.last();
            let summary = RunSummary {
                final_objective_gap: last.and_then(|r: &TraceRow| r.objective_gap),
                final_gap_k: last.and_then(|r| r.gap_k),
                total_oracle_calls: last.map_or(0, |r| r.oracle_calls),
                wall_seconds,
                holdout_auc: problem.holdout_auc(&point.x),
            };
            RunRecord {
                solver: solver.name.clone(),
                seed,
                stream_seed,
                rows,
                summary,
                status: if early {
                    RunStatus::EarlyStopped
                } else {
                    RunStatus::Completed
                },
            }
        }
        Err(e) => {
            log::error!("run {}/{seed} failed: {e}", solver.name);
            RunRecord {
                solver: solver.name.clone(),
                seed,
                stream_seed,
                rows: Vec::new(),
                summary: RunSummary {
                    final_objective_gap: None,
                    final_gap_k: None,
                    total_oracle_calls: 0,
                    wall_seconds,
                    holdout_auc: None,
                },
                status: RunStatus::Failed(e.to_string()),
            }
        }
    }
}

fn run_pes(
    problem: &BuiltProblem,
    mut config: pes_core::PesConfig,
    stream_seed: u64,
    budget: Option<u64>,
    record_timing: bool,
) -> Result<(Vec<TraceRow>, PrimalDualPoint, bool), SetupError> {
    config.seed = stream_seed;
    let clock = WallClock(Instant::now());
    let options = SolveOptions {
        budget,
        clock: record_timing.then_some(&clock as &dyn Clock),
        skip_metrics: false,
    };
    let run = pes_solve_with(problem.as_dyn(), &config, &problem.start(), &options)?;
    let rows = run
        .traces
        .iter()
        .map(|t| TraceRow {
            epoch: t.epoch,
            eta: Some(t.eta),
            t: t.length,
            oracle_calls: t.oracle_calls,
            objective_gap: t.objective_gap,
            gap_k: t.gap_k,
            delta_k: t.delta_k,
            elapsed_s: t.elapsed,
        })
        .collect();
    Ok((rows, run.final_point, run.budget_exhausted))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_depends_on_every_part() {
        let base = derive_seed(1, "a", 2);
        assert_eq!(base, derive_seed(1, "a", 2));
        assert_ne!(base, derive_seed(0, "a", 2));
        assert_ne!(base, derive_seed(1, "b", 2));
        assert_ne!(base, derive_seed(1, "a", 3));
    }

    #[test]
    fn seed_matches_digest_prefix() {
        // independent byte assembly
        let mut bytes = 7u64.to_le_bytes().to_vec();
        bytes.extend_from_slice(b"pes-ogda");
        bytes.extend_from_slice(&42u64.to_le_bytes());
        let digest = Sha256::digest(&bytes);
        let mut prefix = [0u8; 8];
        prefix.copy_from_slice(&digest[..8]);
        assert_eq!(derive_seed(7, "pes-ogda", 42), u64::from_le_bytes(prefix));
    }
}
