use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::SolverError;
use crate::geometry::PrimalDualPoint;
use crate::metrics::{self, Regime};
use crate::problems::{RegularizedProblem, SaddleProblem};

use super::epoch::{
    adagrad_epoch_metered, ogda_epoch_metered, sgda_epoch_metered, AdaGradEpoch, EpochOutcome,
};
use super::{Clock, OracleMeter, PesConfig, UpdateVariant};

/// One row per epoch.
///
/// `objective_gap` is `P(x_k) − P*` at the epoch's output, `gap_k` the
/// duality gap of that output on the epoch's own `f_k`, and `delta_k` the
/// Lyapunov value at the output, i.e. at the next epoch's start (with
/// `Gap` taken on the `f_{k+1}` anchored there).
#[derive(Debug, Clone, PartialEq)]
pub struct EpochTrace {
    pub epoch: usize,
    pub eta: f64,
    /// Steps actually taken.
    pub length: u64,
    /// Cumulative stochastic gradient calls.
    pub oracle_calls: u64,
    pub objective_gap: Option<f64>,
    pub gap_k: Option<f64>,
    pub delta_k: Option<f64>,
    pub elapsed: Option<f64>,
    /// The oracle budget ended this epoch early.
    pub truncated: bool,
    /// AdaGrad only: the step cap fired before the stopping rule.
    pub hit_cap: bool,
}

/// Metrics at the initial point.
#[derive(Debug, Clone, PartialEq)]
pub struct StartMetrics {
    pub objective_gap: Option<f64>,
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PesRun {
    pub traces: Vec<EpochTrace>,
    pub start: StartMetrics,
    pub final_point: PrimalDualPoint,
    pub regime: Regime,
    /// The run stopped before its last planned epoch.
    pub budget_exhausted: bool,
}

#[derive(Default)]
pub struct SolveOptions<'a> {
    /// Maximum stochastic gradient calls.
    pub budget: Option<u64>,
    pub clock: Option<&'a dyn Clock>,
    /// Skip the per-epoch gap evaluation.
    pub skip_metrics: bool,
}

/// Algorithm-1 outer loop with default options.
pub fn pes_solve<P: SaddleProblem + ?Sized>(
    prob: &P,
    config: &PesConfig,
    start: &PrimalDualPoint,
) -> Result<PesRun, SolverError> {
    pes_solve_with(prob, config, start, &SolveOptions::default())
}

/// Runs `config.schedule.epochs` epochs, restarting each from the previous
/// epoch's average. OGDA and AdaGrad see the regularized `f_k`; SGDA sees
/// `f` and applies `γ` inside its proximal step.
pub fn pes_solve_with<P: SaddleProblem + ?Sized>(
    prob: &P,
    config: &PesConfig,
    start: &PrimalDualPoint,
    options: &SolveOptions<'_>,
) -> Result<PesRun, SolverError> {
    config.validate()?;
    let (d, dp) = prob.dims();
    if start.dims() != (d, dp) {
        return Err(crate::error::CoreError::DimensionMismatch {
            expected: d + dp,
            found: start.x.len() + start.y.len(),
        }
        .into());
    }
    let schedule = &config.schedule;
    let gamma = schedule.gamma;
    let regime = schedule.regime;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut meter = match options.budget {
        Some(b) => OracleMeter::with_budget(b),
        None => OracleMeter::unlimited(),
    };
    let t_origin = options.clock.map(|c| c.now_secs());

    let start_metrics = if options.skip_metrics {
        StartMetrics {
            objective_gap: None,
            delta: None,
        }
    } else {
        let r = metrics::gap_report(prob, start, &start.x, gamma, regime);
        StartMetrics {
            objective_gap: r.primal_gap,
            delta: r.delta_k,
        }
    };

    let mut traces = Vec::with_capacity(schedule.epochs);
    let mut z = start.clone();
    let mut budget_exhausted = false;
    for k in 1..=schedule.epochs {
        if meter.exhausted() {
            budget_exhausted = true;
            break;
        }
        let eta = schedule.eta(k);
        let anchor = z.x.clone();
        let outcome = match config.variant {
            UpdateVariant::Ogda => {
                let prob_k = RegularizedProblem::new(prob, anchor.clone(), gamma);
                ogda_epoch_metered(
                    &prob_k,
                    &z,
                    eta,
                    schedule.length(k),
                    config.batch_size,
                    &mut rng,
                    &mut meter,
                )?
            }
            UpdateVariant::Sgda => sgda_epoch_metered(
                prob,
                &z,
                eta,
                schedule.length(k),
                gamma,
                config.batch_size,
                &mut rng,
                &mut meter,
            )?,
            UpdateVariant::AdaGrad => {
                let params = config
                    .adagrad
                    .as_ref()
                    .ok_or_else(|| SolverError::InvalidConfig("missing adagrad block".into()))?;
                let big_m = schedule.stopping_scale(k).ok_or_else(|| {
                    SolverError::InvalidConfig("adagrad needs a stopping-rule schedule".into())
                })?;
                let cap = params
                    .cap_t
                    .unwrap_or_else(|| (libm::ceil(100.0 * big_m) as u64).max(1));
                let epoch = AdaGradEpoch {
                    delta: params.delta,
                    m: params.m_for((d, dp)),
                    big_m,
                    cap,
                };
                let prob_k = RegularizedProblem::new(prob, anchor.clone(), gamma);
                adagrad_epoch_metered(
                    &prob_k,
                    &z,
                    eta,
                    &epoch,
                    config.batch_size,
                    &mut rng,
                    &mut meter,
                )?
                .0
            }
        };
        let EpochOutcome {
            point,
            steps,
            truncated,
            hit_cap,
        } = outcome;
        if steps == 0 {
            budget_exhausted = true;
            break;
        }

        let (objective_gap, gap_k, delta_k) = if options.skip_metrics {
            (None, None, None)
        } else {
            let own = metrics::gap_k(prob, &point, &anchor, gamma).ok();
            let next = metrics::gap_report(prob, &point, &point.x, gamma, regime);
            (next.primal_gap, own, next.delta_k)
        };
        traces.push(EpochTrace {
            epoch: k,
            eta,
            length: steps,
            oracle_calls: meter.calls(),
            objective_gap,
            gap_k,
            delta_k,
            elapsed: match (options.clock, t_origin) {
                (Some(c), Some(t0)) => Some(c.now_secs() - t0),
                _ => None,
            },
            truncated,
            hit_cap,
        });
        z = point;
        if truncated {
            budget_exhausted = true;
            break;
        }
    }
    Ok(PesRun {
        traces,
        start: start_metrics,
        final_point: z,
        regime,
        budget_exhausted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Vector;
    use crate::problems::QuadraticGame;
    use crate::solvers::{ogda_epoch, Schedule};

    fn start() -> PrimalDualPoint {
        PrimalDualPoint::new(Vector::from([1.0]), Vector::from([0.5]))
    }

    #[test]
    fn single_epoch_equals_subroutine() {
        let p = QuadraticGame::scalar_example().with_noise(0.3);
        let sched = Schedule::manual(1.0, 0.05, 0.5, 20, 2.0, 1).unwrap();
        let cfg = PesConfig::new(UpdateVariant::Ogda, sched, 11);
        let run = pes_solve(&p, &cfg, &start()).unwrap();

        let reg = RegularizedProblem::new(&p, start().x, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let direct = ogda_epoch(&reg, &start(), 0.05, 20, &mut rng).unwrap();
        assert_eq!(run.final_point, direct);
        assert_eq!(run.traces.len(), 1);
        assert_eq!(run.traces[0].oracle_calls, 21);
    }

    #[test]
    fn deterministic_given_seed() {
        let p = QuadraticGame::scalar_example().with_noise(1.0);
        let sched = Schedule::manual(1.0, 0.05, 0.5, 10, 2.0, 4).unwrap();
        let cfg = PesConfig::new(UpdateVariant::Sgda, sched, 3);
        let a = pes_solve(&p, &cfg, &start()).unwrap();
        let b = pes_solve(&p, &cfg, &start()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn adagrad_requires_params() {
        let p = QuadraticGame::scalar_example();
        let sched = Schedule::manual(1.0, 0.05, 0.5, 10, 2.0, 2).unwrap();
        let cfg = PesConfig::new(UpdateVariant::AdaGrad, sched, 3);
        assert!(matches!(
            pes_solve(&p, &cfg, &start()),
            Err(SolverError::InvalidConfig(_))
        ));
    }

    #[test]
    fn budget_of_one_stops_in_first_epoch() {
        let p = QuadraticGame::scalar_example();
        let sched = Schedule::manual(1.0, 0.05, 0.5, 10, 2.0, 5).unwrap();
        let cfg = PesConfig::new(UpdateVariant::Sgda, sched, 3);
        let opts = SolveOptions {
            budget: Some(1),
            ..Default::default()
        };
        let run = pes_solve_with(&p, &cfg, &start(), &opts).unwrap();
        assert!(run.budget_exhausted);
        assert_eq!(run.traces.len(), 1);
        assert!(run.traces[0].truncated);
        assert_eq!(run.traces[0].oracle_calls, 1);
    }
}
