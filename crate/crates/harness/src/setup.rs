//! Turns spec blocks into problems and solver configurations.

use pes_core::metrics::{gap_k, primal_gap};
use pes_core::solvers::{
    schedule_adagrad, schedule_from_theorem1_for, schedule_from_theorem2_for, StocAgdaParams,
};
use pes_core::{
    AdaGradParams, AucDataset, AucLinearProblem, FeasibleSet, PesConfig, PrimalDualPoint,
    QuadraticGame, SaddleProblem, Schedule, SyntheticImbalancedDataset, UpdateVariant, Vector,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dataset::{read_dataset, DatasetError};
use crate::spec::{Method, ProblemSpec, ScheduleSource, SolverSpec};

#[derive(Debug, Error)]
pub enum SetupError {
    #[error("problem: {0}")]
    Problem(#[from] pes_core::ProblemError),
    #[error("solver: {0}")]
    Solver(#[from] pes_core::SolverError),
    #[error("metric: {0}")]
    Metric(#[from] pes_core::MetricError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("{0}")]
    Config(String),
}

/// A constructed problem with its start point and, for AUC, the holdout.
#[derive(Debug, Clone)]
pub enum BuiltProblem {
    Quadratic {
        game: QuadraticGame,
        start: PrimalDualPoint,
    },
    Auc {
        problem: AucLinearProblem,
        holdout: Option<AucDataset>,
    },
}

impl BuiltProblem {
    pub fn as_dyn(&self) -> &dyn SaddleProblem {
        match self {
            BuiltProblem::Quadratic { game, .. } => game,
            BuiltProblem::Auc { problem, .. } => problem,
        }
    }

    pub fn start(&self) -> PrimalDualPoint {
        match self {
            BuiltProblem::Quadratic { start, .. } => start.clone(),
            BuiltProblem::Auc { problem, .. } => {
                let (d, dp) = problem.dims();
                PrimalDualPoint::zeros(d, dp)
            }
        }
    }

    pub fn default_batch_size(&self) -> usize {
        match self {
            BuiltProblem::Quadratic { .. } => 1,
            BuiltProblem::Auc { .. } => 128,
        }
    }

    /// Holdout AUC of the weight block of `x`, when a holdout exists.
    pub fn holdout_auc(&self, x: &Vector) -> Option<f64> {
        match self {
            BuiltProblem::Auc {
                problem,
                holdout: Some(h),
            } => auc_eval(problem, x, h).ok(),
            _ => None,
        }
    }
}

/// Empirical AUC of the linear scorer packed in `x` on `holdout`.
pub fn auc_eval(
    prob: &AucLinearProblem,
    x: &Vector,
    holdout: &AucDataset,
) -> Result<f64, pes_core::ProblemError> {
    let w = Vector::from(prob.weights(x));
    pes_core::problems::empirical_auc(&holdout.scores(&w), &holdout.labels)
}

pub fn build_problem(spec: &ProblemSpec) -> Result<BuiltProblem, SetupError> {
    match spec {
        ProblemSpec::Quadratic {
            d,
            d_prime,
            singular_values,
            q,
            mu_y,
            sigma,
            coupling_seed,
            y_radius,
            start_x,
            start_y,
        } => {
            let k = (*d).min(*d_prime);
            let svals = spread(singular_values[0], singular_values[1], k);
            let mut rng = ChaCha8Rng::seed_from_u64(*coupling_seed);
            let mut game = QuadraticGame::with_singular_values(
                *d, *d_prime, &svals, *q, *mu_y, *sigma, &mut rng,
            )?;
            if let Some(r) = y_radius {
                let set = FeasibleSet::ball(Vector::zeros(*d_prime), *r)
                    .map_err(pes_core::ProblemError::from)?;
                game = game.with_feasible_set(set)?;
            }
            let start = PrimalDualPoint::new(
                Vector::from(vec![*start_x; *d]),
                game.feasible_set()
                    .project(&Vector::from(vec![*start_y; *d_prime]))
                    .map_err(pes_core::ProblemError::from)?,
            );
            Ok(BuiltProblem::Quadratic { game, start })
        }
        ProblemSpec::ScalarExample {
            sigma,
            start_x,
            start_y,
        } => Ok(BuiltProblem::Quadratic {
            game: QuadraticGame::scalar_example().with_noise(*sigma),
            start: PrimalDualPoint::new(Vector::from([*start_x]), Vector::from([*start_y])),
        }),
        ProblemSpec::Auc {
            n,
            d,
            positive_ratio,
            data_seed,
            holdout,
            data_file,
            holdout_file,
        } => {
            let (train, generated_holdout) = match data_file {
                Some(path) => (read_dataset(path)?, None),
                None => {
                    let gen = SyntheticImbalancedDataset::new(*n, *d, *positive_ratio, *data_seed);
                    let (train, h) = gen.generate_with_holdout(*holdout)?;
                    (train, (*holdout > 0).then_some(h))
                }
            };
            let holdout = match holdout_file {
                Some(path) => Some(read_dataset(path)?),
                None => generated_holdout,
            };
            if let Some(h) = &holdout {
                if h.dim() != train.dim() {
                    return Err(SetupError::Config(format!(
                        "holdout has {} features, training data {}",
                        h.dim(),
                        train.dim()
                    )));
                }
            }
            Ok(BuiltProblem::Auc {
                problem: AucLinearProblem::new(train)?,
                holdout,
            })
        }
    }
}

/// `k` values evenly spaced over `[lo, hi]`, largest first.
fn spread(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    if k == 1 {
        return vec![hi];
    }
    (0..k)
        .map(|i| hi - (hi - lo) * i as f64 / (k - 1) as f64)
        .collect()
}

/// `P(x₀) − P* + Gap₁(x₀, y₀)` on the first regularized objective.
pub fn initial_gap_bound<P: SaddleProblem + ?Sized>(
    prob: &P,
    start: &PrimalDualPoint,
    gamma: f64,
) -> Result<f64, SetupError> {
    Ok(primal_gap(prob, &start.x)? + gap_k(prob, start, &start.x, gamma)?)
}

/// What to run for one solver block (the run seed is filled in later).
#[derive(Debug, Clone)]
pub enum SolverPlan {
    Pes(PesConfig),
    StocAgda(StocAgdaParams),
}

pub fn plan_solver(
    spec: &SolverSpec,
    problem: &BuiltProblem,
    budget: Option<u64>,
) -> Result<SolverPlan, SetupError> {
    let prob = problem.as_dyn();
    let batch_size = spec
        .batch_size
        .unwrap_or_else(|| problem.default_batch_size());
    let variant = match spec.method {
        Method::Ogda => UpdateVariant::Ogda,
        Method::Sgda => UpdateVariant::Sgda,
        Method::Adagrad => UpdateVariant::AdaGrad,
        Method::StocAgda => {
            let iterations = match (spec.iterations, budget) {
                (Some(i), _) => i,
                (None, Some(b)) => b / 2,
                (None, None) => {
                    return Err(SetupError::Config(format!(
                        "solver {}: stoc-agda needs `iterations` or a budget",
                        spec.name
                    )))
                }
            };
            return Ok(SolverPlan::StocAgda(StocAgdaParams {
                tau1: spec.tau1.unwrap_or_default(),
                tau2: spec.tau2.unwrap_or_default(),
                lambda: spec.lambda.unwrap_or_default(),
                iterations,
                stride: spec.stride.unwrap_or((iterations / 50).max(1)),
                batch_size,
            }));
        }
    };
    let adagrad = (variant == UpdateVariant::AdaGrad).then(|| AdaGradParams {
        delta: spec.delta.unwrap_or(1.0),
        alpha_growth: spec.alpha_growth.unwrap_or(0.5),
        m: spec.m,
        cap_t: spec.cap_t,
    });

    let source = spec
        .schedule
        .ok_or_else(|| SetupError::Config(format!("solver {}: missing schedule", spec.name)))?;
    let mut schedule = match source {
        ScheduleSource::Manual => {
            let mut s = Schedule::manual(
                spec.gamma.unwrap_or_default(),
                spec.eta0.unwrap_or_default(),
                spec.decay.unwrap_or_default(),
                spec.length0.unwrap_or_default(),
                spec.growth.unwrap_or_default(),
                spec.epochs.unwrap_or_default(),
            )?;
            if variant == UpdateVariant::AdaGrad {
                // a manual AdaGrad schedule reads `length0` as M₁
                s.stopping_scale0 = Some(s.length0 as f64);
            }
            s
        }
        theorem => {
            let eps = spec.eps.unwrap_or_default();
            let gamma = match theorem {
                ScheduleSource::Theorem2 => prob.constants().mu_pl / 4.0,
                _ => 2.0 * prob.constants().rho,
            };
            let mut constants = prob.constants().clone();
            constants.eps0 = match spec.eps0 {
                Some(e) => e,
                None => initial_gap_bound(prob, &problem.start(), gamma)?,
            };
            match theorem {
                ScheduleSource::Theorem1 => {
                    schedule_from_theorem1_for(variant, &constants, spec.eta0, eps)?
                }
                ScheduleSource::Theorem2 => {
                    schedule_from_theorem2_for(variant, &constants, spec.eta0, eps)?
                }
                _ => schedule_adagrad(
                    &constants,
                    prob.dims(),
                    spec.eta0,
                    adagrad.as_ref().expect("adagrad params"),
                    eps,
                )?,
            }
        }
    };
    if source != ScheduleSource::Manual {
        if let Some(k) = spec.epochs {
            schedule = schedule.with_epochs(k);
        }
    }
    if let Some(f) = spec.length_multiplier {
        if !(f > 0.0 && f.is_finite()) {
            return Err(SetupError::Config(format!(
                "solver {}: length_multiplier must be positive",
                spec.name
            )));
        }
        schedule = schedule.with_length_multiplier(f);
    }
    let mut config = PesConfig::new(variant, schedule, 0).with_batch_size(batch_size);
    config.adagrad = adagrad;
    config.validate()?;
    Ok(SolverPlan::Pes(config))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spread_endpoints() {
        assert_eq!(spread(0.5, 1.0, 3), vec![1.0, 0.75, 0.5]);
        assert_eq!(spread(0.5, 1.0, 1), vec![1.0]);
    }

    #[test]
    fn scalar_initial_gap() {
        // P(1) = 1/4 with P* = 0. At y = 0 the regularized inner problem
        // min_x −x²/4 + (x−1)²/2 sits at x = 2 with value −1/2, so
        // Gap₁ = 1/4 + 1/2.
        let p = QuadraticGame::scalar_example();
        let z = PrimalDualPoint::new(Vector::from([1.0]), Vector::from([0.0]));
        let g = initial_gap_bound(&p, &z, 1.0).unwrap();
        assert!((g - 1.0).abs() < 1e-12, "{g}");
    }
}
