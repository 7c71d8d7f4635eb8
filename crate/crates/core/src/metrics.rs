//! Gap measures, Lyapunov values and PL-constant estimation.
//!
//! Everything here reads closed forms off the problem. Nothing calls a
//! solver, so these numbers can judge one.

use alloc::vec::Vec;

use rand::RngCore;

use crate::error::{MetricError, ProblemError};
use crate::geometry::{FeasibleSet, PrimalDualPoint};
use crate::linalg::Vector;
use crate::problems::{gaussian_vector, ProblemConstants, RegularizedProblem, SaddleProblem};

/// Slack allowed below zero for gaps computed in floating point.
pub const GAP_SLACK: f64 = 1e-9;

/// Which Lyapunov function a run is measured with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// `γ = 2ρ`; `Δ = (P − P*) + (8L̂/(53c))·Gap_k`.
    Theorem1,
    /// `γ = μ/4`, `ρ ≤ μ/8`; `Δ = 475(P − P*) + 57·Gap_k`.
    Theorem2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapMethod {
    ClosedForm,
    NumericInnerSolve,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    pub primal_gap: Option<f64>,
    pub duality_gap: Option<f64>,
    pub gap_k: Option<f64>,
    pub delta_k: Option<f64>,
    pub method: GapMethod,
}

/// `min P`, from the saddle point when there is one, else from the
/// problem's analytic minimum.
pub fn optimal_primal_value<P: SaddleProblem + ?Sized>(prob: &P) -> Result<f64, ProblemError> {
    match prob.saddle_point() {
        Ok(z) => Ok(prob.value(&z)),
        Err(ProblemError::Unsupported(_)) => prob.optimal_primal_value(),
        Err(e) => Err(e),
    }
}

/// `P(x) − min P`
pub fn primal_gap<P: SaddleProblem + ?Sized>(prob: &P, x: &Vector) -> Result<f64, MetricError> {
    Ok(prob.primal_value(x)? - optimal_primal_value(prob)?)
}

/// `max_{y'} f(x, y') − min_{x'} f(x', y)`, only when the inner minimum is
/// finite.
pub fn duality_gap<P: SaddleProblem + ?Sized>(
    prob: &P,
    z: &PrimalDualPoint,
) -> Result<f64, MetricError> {
    let upper = prob.primal_value(&z.x)?;
    let x_hat = prob.best_response_x(&z.y)?;
    let lower = prob.value(&PrimalDualPoint::new(x_hat, z.y.clone()));
    Ok(upper - lower)
}

/// Duality gap of `f_k = f + (γ/2)‖x − x₀‖²` at `z`, from closed-form best
/// responses.
pub fn gap_k<P: SaddleProblem + ?Sized>(
    prob: &P,
    z: &PrimalDualPoint,
    x0: &Vector,
    gamma: f64,
) -> Result<f64, MetricError> {
    let reg = RegularizedProblem::new(prob, x0.clone(), gamma);
    let y_hat = prob.best_response_y(&z.x)?;
    let x_hat = prob.best_response_x_regularized(&z.y, x0, gamma)?;
    let upper = reg.value(&PrimalDualPoint::new(z.x.clone(), y_hat));
    let lower = reg.value(&PrimalDualPoint::new(x_hat, z.y.clone()));
    Ok(upper - lower)
}

/// Weights `(a, b)` of `Δ = a·(P − P*) + b·Gap_k`.
pub fn lyapunov_coefficients(regime: Regime, constants: &ProblemConstants) -> (f64, f64) {
    match regime {
        Regime::Theorem1 => (1.0, 8.0 * constants.l_hat() / (53.0 * constants.c())),
        Regime::Theorem2 => (475.0, 57.0),
    }
}

pub fn lyapunov_delta(
    regime: Regime,
    constants: &ProblemConstants,
    primal_gap: f64,
    gap_k: f64,
) -> f64 {
    let (a, b) = lyapunov_coefficients(regime, constants);
    a * primal_gap + b * gap_k
}

/// Fills every field the problem's closed forms allow.
pub fn gap_report<P: SaddleProblem + ?Sized>(
    prob: &P,
    z: &PrimalDualPoint,
    x0: &Vector,
    gamma: f64,
    regime: Regime,
) -> GapReport {
    let primal = primal_gap(prob, &z.x).ok();
    let duality = duality_gap(prob, z).ok();
    let gk = gap_k(prob, z, x0, gamma).ok();
    let delta = match (primal, gk) {
        (Some(p), Some(g)) => Some(lyapunov_delta(regime, prob.constants(), p, g)),
        _ => None,
    };
    GapReport {
        primal_gap: primal,
        duality_gap: duality,
        gap_k: gk,
        delta_k: delta,
        method: GapMethod::ClosedForm,
    }
}

/// Result of [`numeric_inner_solve_gap`].
#[derive(Debug, Clone, PartialEq)]
pub struct InnerSolve {
    pub gap: f64,
    /// `argmin_x f_k(x, y)`
    pub x_hat: Vector,
    /// `argmax_{y ∈ Y} f_k(x, y)`
    pub y_hat: Vector,
    pub iterations: usize,
}

pub const INNER_SOLVE_MAX_ITERS: usize = 1_000_000;

/// `Gap_k` by running gradient descent in `x` and projected gradient
/// ascent in `y` on `f_k` until the gradient mapping drops below `tol`.
///
/// Uses only `value` and `exact_gradient`, so it checks the closed forms
/// independently.
pub fn numeric_inner_solve_gap<P: SaddleProblem + ?Sized>(
    prob: &P,
    z: &PrimalDualPoint,
    x0: &Vector,
    gamma: f64,
    tol: f64,
) -> Result<InnerSolve, MetricError> {
    let reg = RegularizedProblem::new(prob, x0.clone(), gamma);

    let y_fixed = z.y.clone();
    let (x_hat, it_x) = descend(
        |x| reg.value(&PrimalDualPoint::new(x.clone(), y_fixed.clone())),
        |x| {
            reg.exact_gradient(&PrimalDualPoint::new(x.clone(), y_fixed.clone()))
                .gx
        },
        z.x.clone(),
        &FeasibleSet::AllSpace,
        tol,
    )?;

    let x_fixed = z.x.clone();
    let (y_hat, it_y) = descend(
        |y| -reg.value(&PrimalDualPoint::new(x_fixed.clone(), y.clone())),
        |y| {
            reg.exact_gradient(&PrimalDualPoint::new(x_fixed.clone(), y.clone()))
                .gy
                .scaled(-1.0)
        },
        z.y.clone(),
        prob.feasible_set(),
        tol,
    )?;

    let upper = reg.value(&PrimalDualPoint::new(z.x.clone(), y_hat.clone()));
    let lower = reg.value(&PrimalDualPoint::new(x_hat.clone(), z.y.clone()));
    Ok(InnerSolve {
        gap: upper - lower,
        x_hat,
        y_hat,
        iterations: it_x + it_y,
    })
}

/// Projected gradient descent with Armijo backtracking on the step.
///
/// The step only shrinks, and the sufficient-decrease test carries a
/// relative slack so round-off near the optimum cannot stall it.
fn descend(
    h: impl Fn(&Vector) -> f64,
    grad: impl Fn(&Vector) -> Vector,
    start: Vector,
    set: &FeasibleSet,
    tol: f64,
) -> Result<(Vector, usize), MetricError> {
    let project = |v: &Vector| set.project(v).map_err(ProblemError::from);
    let mut u = project(&start)?;
    let mut hu = h(&u);
    let mut step = 1.0_f64;
    for it in 0..INNER_SOLVE_MAX_ITERS {
        let g = grad(&u);
        loop {
            let next = project(&u.sub(&g.scaled(step)))?;
            let d = next.sub(&u);
            let mapping = d.norm() / step;
            if mapping <= tol {
                return Ok((u, it));
            }
            let h_next = h(&next);
            let model = hu + g.dot(&d) + d.norm_squared() / (2.0 * step);
            if h_next <= model + 1e-15 * (1.0 + hu.abs()) {
                u = next;
                hu = h_next;
                break;
            }
            step *= 0.5;
            if step < 1e-300 {
                return Err(MetricError::NoConvergence { iterations: it });
            }
        }
    }
    Err(MetricError::NoConvergence {
        iterations: INNER_SOLVE_MAX_ITERS,
    })
}

/// `∇P(x) = ∇ₓ f(x, ŷ(x))`, valid because `ŷ(x)` is unique.
pub fn primal_gradient<P: SaddleProblem + ?Sized>(
    prob: &P,
    x: &Vector,
) -> Result<Vector, ProblemError> {
    let y = prob.best_response_y(x)?;
    Ok(prob.exact_gradient(&PrimalDualPoint::new(x.clone(), y)).gx)
}

/// Sampled lower estimate of the PL constant of `P`, drawing points
/// uniformly from the ball of `radius` around the primal minimizer.
pub fn estimate_pl_constant<P: SaddleProblem + ?Sized>(
    prob: &P,
    sample_count: usize,
    radius: f64,
    rng: &mut dyn RngCore,
) -> Result<f64, MetricError> {
    let center = prob.primal_minimizer()?;
    estimate_pl_constant_around(prob, &[center], sample_count, radius, rng)
}

/// Like [`estimate_pl_constant`] but spreads `sample_count` points over the
/// balls around each of `centers`.
pub fn estimate_pl_constant_around<P: SaddleProblem + ?Sized>(
    prob: &P,
    centers: &[Vector],
    sample_count: usize,
    radius: f64,
    rng: &mut dyn RngCore,
) -> Result<f64, MetricError> {
    let p_star = optimal_primal_value(prob)?;
    let mut best = f64::INFINITY;
    if centers.is_empty() {
        return Err(MetricError::NoSamples);
    }
    for i in 0..sample_count {
        let center = &centers[i % centers.len()];
        let x = center.add(&uniform_in_ball(center.len(), radius, rng));
        let excess = prob.primal_value(&x)? - p_star;
        if excess < 1e-12 {
            continue;
        }
        let g = primal_gradient(prob, &x)?;
        best = best.min(g.norm_squared() / (2.0 * excess));
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(MetricError::NoSamples)
    }
}

fn uniform_in_ball(n: usize, radius: f64, rng: &mut dyn RngCore) -> Vector {
    let dir = gaussian_vector(n, 1.0, rng);
    let norm = dir.norm();
    if norm == 0.0 || n == 0 {
        return Vector::zeros(n);
    }
    let u: f64 = rand::Rng::random(rng);
    let r = radius * libm::pow(u, 1.0 / n as f64);
    dir.scaled(r / norm)
}

/// Convenience for the sweep of `Gap_k` over a `γ` grid.
pub fn gap_k_over_gammas<P: SaddleProblem + ?Sized>(
    prob: &P,
    z: &PrimalDualPoint,
    x0: &Vector,
    gammas: &[f64],
) -> Result<Vec<f64>, MetricError> {
    gammas.iter().map(|&g| gap_k(prob, z, x0, g)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::QuadraticGame;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn z1(x: f64, y: f64) -> PrimalDualPoint {
        PrimalDualPoint::new(Vector::from([x]), Vector::from([y]))
    }

    #[test]
    fn scalar_primal_gap() {
        let p = QuadraticGame::scalar_example();
        assert!((primal_gap(&p, &Vector::from([1.0])).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(primal_gap(&p, &Vector::from([0.0])).unwrap(), 0.0);
    }

    #[test]
    fn scalar_gap_k_hand_value() {
        let p = QuadraticGame::scalar_example();
        let g = gap_k(&p, &z1(1.0, 0.0), &Vector::from([1.0]), 1.0).unwrap();
        assert!((g - 0.75).abs() < 1e-15);
        let n =
            numeric_inner_solve_gap(&p, &z1(1.0, 0.0), &Vector::from([1.0]), 1.0, 1e-10).unwrap();
        assert!((n.gap - 0.75).abs() < 1e-9);
        assert!((n.x_hat[0] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn weakly_convex_has_no_raw_gap() {
        let p = QuadraticGame::scalar_example();
        let r = gap_report(
            &p,
            &z1(1.0, 1.0),
            &Vector::from([1.0]),
            1.0,
            Regime::Theorem1,
        );
        assert!(r.duality_gap.is_none());
        assert!(r.gap_k.is_some() && r.delta_k.is_some());
    }

    #[test]
    fn lyapunov_values() {
        let c = QuadraticGame::scalar_example().constants().clone();
        assert_eq!(lyapunov_delta(Regime::Theorem2, &c, 1.0, 1.0), 532.0);
        assert_eq!(lyapunov_delta(Regime::Theorem1, &c, 0.0, 0.0), 0.0);
        let (_, b) = lyapunov_coefficients(Regime::Theorem1, &c);
        assert!(b > 0.0 && b <= 8.0 / 248.0);
    }

    #[test]
    fn scalar_pl_constant_is_half() {
        let p = QuadraticGame::scalar_example();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mu = estimate_pl_constant(&p, 200, 3.0, &mut rng).unwrap();
        assert!((mu - 0.5).abs() < 1e-9);
    }

    #[test]
    fn pl_with_zero_radius_has_no_samples() {
        let p = QuadraticGame::scalar_example();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert_eq!(
            estimate_pl_constant(&p, 10, 0.0, &mut rng),
            Err(MetricError::NoSamples)
        );
    }

    #[test]
    fn large_gamma_pins_x_hat_to_anchor() {
        // with q < 0 the modulus is q + γ < γ and the bound below is off by
        // that factor, so use a convex x-part
        let p = QuadraticGame::new(crate::linalg::Matrix::identity(1), 0.5, 1.0, 0.0).unwrap();
        let gamma = 1e3 * p.constants().ell;
        let z = z1(0.3, 0.7);
        let x0 = Vector::from([-0.2]);
        let n = numeric_inner_solve_gap(&p, &z, &x0, gamma, 1e-10).unwrap();
        let g0 = p
            .exact_gradient(&PrimalDualPoint::new(x0.clone(), z.y.clone()))
            .gx;
        assert!(n.x_hat.distance(&x0) <= g0.norm() / gamma + 1e-12);
    }
}
