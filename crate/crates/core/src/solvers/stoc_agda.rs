use alloc::format;
use alloc::vec::Vec;

use rand::RngCore;

use crate::error::SolverError;
use crate::geometry::PrimalDualPoint;
use crate::metrics;
use crate::problems::SaddleProblem;

use super::OracleMeter;

/// `(τ₁, τ₂, λ)` grid used to tune the baseline.
pub const STOC_AGDA_GRID: [(f64, f64, f64); 32] = {
    let tau1 = [1.0, 5.0, 10.0, 15.0];
    let tau2 = [5.0, 10.0, 15.0, 20.0];
    let lambda = [1e3, 1e4];
    let mut out = [(0.0, 0.0, 0.0); 32];
    let mut i = 0;
    while i < 32 {
        out[i] = (tau1[i / 8], tau2[(i / 2) % 4], lambda[i % 2]);
        i += 1;
    }
    out
};

#[derive(Debug, Clone, PartialEq)]
pub struct StocAgdaParams {
    /// Dual step numerator.
    pub tau1: f64,
    /// Primal step numerator.
    pub tau2: f64,
    pub lambda: f64,
    pub iterations: u64,
    /// Record the objective gap every `stride` iterations (0 = final only).
    pub stride: u64,
    pub batch_size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StocAgdaSample {
    pub iteration: u64,
    pub oracle_calls: u64,
    pub objective_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StocAgdaRun {
    pub samples: Vec<StocAgdaSample>,
    pub final_point: PrimalDualPoint,
    pub iterations: u64,
    pub truncated: bool,
}

pub fn stoc_agda<P: SaddleProblem + ?Sized>(
    prob: &P,
    start: &PrimalDualPoint,
    params: &StocAgdaParams,
    rng: &mut dyn RngCore,
) -> Result<StocAgdaRun, SolverError> {
    stoc_agda_with(prob, start, params, rng, &mut OracleMeter::unlimited())
}

/// Alternating two-timescale SGDA: `x` moves first with step
/// `τ₂/(λ + t)`, then `y` ascends at the new `x` with step `τ₁/(λ + t)`.
/// Each iteration costs two oracle calls.
pub fn stoc_agda_with<P: SaddleProblem + ?Sized>(
    prob: &P,
    start: &PrimalDualPoint,
    params: &StocAgdaParams,
    rng: &mut dyn RngCore,
    meter: &mut OracleMeter,
) -> Result<StocAgdaRun, SolverError> {
    for (name, v) in [
        ("tau1", params.tau1),
        ("tau2", params.tau2),
        ("lambda", params.lambda),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(SolverError::InvalidConfig(format!(
                "{name} must be positive, got {v}"
            )));
        }
    }
    if params.batch_size == 0 {
        return Err(SolverError::InvalidConfig(
            "batch_size must be positive".into(),
        ));
    }
    let set = prob.feasible_set();
    let gap = |z: &PrimalDualPoint| metrics::primal_gap(prob, &z.x).ok();
    let mut z = start.clone();
    let mut samples = Vec::new();
    let mut truncated = false;
    let mut t = 0u64;
    while t < params.iterations {
        let denom = params.lambda + t as f64;
        let Some(g) = meter.draw(prob, &z, params.batch_size, rng) else {
            truncated = true;
            break;
        };
        z.x.axpy(-params.tau2 / denom, &g.gx);
        let Some(g) = meter.draw(prob, &z, params.batch_size, rng) else {
            truncated = true;
            break;
        };
        let mut y = z.y.clone();
        y.axpy(params.tau1 / denom, &g.gy);
        z.y = set.project(&y)?;
        t += 1;
        if params.stride > 0 && t % params.stride == 0 {
            samples.push(StocAgdaSample {
                iteration: t,
                oracle_calls: meter.calls(),
                objective_gap: gap(&z),
            });
        }
    }
    if samples.last().map(|s| s.iteration) != Some(t) {
        samples.push(StocAgdaSample {
            iteration: t,
            oracle_calls: meter.calls(),
            objective_gap: gap(&z),
        });
    }
    Ok(StocAgdaRun {
        samples,
        final_point: z,
        iterations: t,
        truncated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Vector;
    use crate::problems::QuadraticGame;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn grid_covers_all_combinations() {
        let mut g = STOC_AGDA_GRID.to_vec();
        g.sort_by(|a, b| a.partial_cmp(b).unwrap());
        g.dedup();
        assert_eq!(g.len(), 32);
    }

    #[test]
    fn tiny_steps_barely_move() {
        let p = QuadraticGame::scalar_example();
        let z0 = PrimalDualPoint::new(Vector::from([1.0]), Vector::from([-1.0]));
        let params = StocAgdaParams {
            tau1: 1.0,
            tau2: 1.0,
            lambda: 1e8,
            iterations: 1,
            stride: 0,
            batch_size: 1,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let run = stoc_agda(&p, &z0, &params, &mut rng).unwrap();
        let f0 = p.exact_gradient(&z0).as_operator().norm();
        assert!(run.final_point.distance_squared(&z0).sqrt() <= 1e-8 * f0 * (1.0 + 1e-6));
        assert_eq!(run.samples.len(), 1);
    }
}
