use alloc::format;

use rand::RngCore;

use crate::error::SolverError;
use crate::geometry::{prox_step, prox_step_regularized, PrimalDualPoint};
use crate::linalg::Vector;
use crate::problems::SaddleProblem;

use super::OracleMeter;

/// What an epoch subroutine returns.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochOutcome {
    /// Uniform average of the iterates `z_1..z_steps` (or `z0` if none).
    pub point: PrimalDualPoint,
    pub steps: u64,
    /// The oracle budget ran out mid-epoch.
    pub truncated: bool,
    /// AdaGrad only: the step cap fired before the stopping rule.
    pub hit_cap: bool,
}

struct Averager {
    sum_x: Vector,
    sum_y: Vector,
    count: u64,
}

impl Averager {
    fn new(z0: &PrimalDualPoint) -> Self {
        let (d, dp) = z0.dims();
        Self {
            sum_x: Vector::zeros(d),
            sum_y: Vector::zeros(dp),
            count: 0,
        }
    }

    fn push(&mut self, z: &PrimalDualPoint) {
        self.sum_x.axpy(1.0, &z.x);
        self.sum_y.axpy(1.0, &z.y);
        self.count += 1;
    }

    fn finish(self, z0: &PrimalDualPoint) -> PrimalDualPoint {
        if self.count == 0 {
            return z0.clone();
        }
        let inv = 1.0 / self.count as f64;
        PrimalDualPoint::new(self.sum_x.scaled(inv), self.sum_y.scaled(inv))
    }
}

fn check_step(eta: f64, steps: u64) -> Result<(), SolverError> {
    if steps == 0 {
        return Err(SolverError::ZeroLength);
    }
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(SolverError::InvalidConfig(format!(
            "step size must be positive, got {eta}"
        )));
    }
    Ok(())
}

/// Optimistic (mirror-prox) epoch on an already regularized problem.
///
/// `z_t = Π_{z̃_{t−1}}(ηG(z_{t−1}))`, `z̃_t = Π_{z̃_{t−1}}(ηG(z_t))`. The
/// gradient drawn at `z_t` also leads step `t + 1`, so an epoch uses
/// `T + 1` draws.
pub fn ogda_epoch<P: SaddleProblem + ?Sized>(
    prob_k: &P,
    z0: &PrimalDualPoint,
    eta: f64,
    steps: u64,
    rng: &mut dyn RngCore,
) -> Result<PrimalDualPoint, SolverError> {
    let mut meter = OracleMeter::unlimited();
    Ok(ogda_epoch_metered(prob_k, z0, eta, steps, 1, rng, &mut meter)?.point)
}

pub fn ogda_epoch_metered<P: SaddleProblem + ?Sized>(
    prob_k: &P,
    z0: &PrimalDualPoint,
    eta: f64,
    steps: u64,
    batch: usize,
    rng: &mut dyn RngCore,
    meter: &mut OracleMeter,
) -> Result<EpochOutcome, SolverError> {
    check_step(eta, steps)?;
    let set = prob_k.feasible_set();
    let mut avg = Averager::new(z0);
    let mut truncated = false;
    let mut z_tilde = z0.clone();
    let mut lead = meter.draw(prob_k, z0, batch, rng);
    for _ in 0..steps {
        let Some(g) = lead.take() else {
            truncated = true;
            break;
        };
        let z = prox_step(&z_tilde, &g.as_operator().scaled(eta), set)?;
        avg.push(&z);
        let Some(g) = meter.draw(prob_k, &z, batch, rng) else {
            truncated = true;
            break;
        };
        z_tilde = prox_step(&z_tilde, &g.as_operator().scaled(eta), set)?;
        lead = Some(g);
    }
    let steps = avg.count;
    Ok(EpochOutcome {
        point: avg.finish(z0),
        steps,
        truncated,
        hit_cap: false,
    })
}

/// Proximal SGDA epoch on the unregularized problem, anchored at `z0.x`:
/// `z_t = Π^{γη}_{z_{t−1}, x₀}(ηG(z_{t−1}))`.
pub fn sgda_epoch<P: SaddleProblem + ?Sized>(
    prob: &P,
    z0: &PrimalDualPoint,
    eta: f64,
    steps: u64,
    gamma: f64,
    rng: &mut dyn RngCore,
) -> Result<PrimalDualPoint, SolverError> {
    let mut meter = OracleMeter::unlimited();
    Ok(sgda_epoch_metered(prob, z0, eta, steps, gamma, 1, rng, &mut meter)?.point)
}

#[allow(clippy::too_many_arguments)]
pub fn sgda_epoch_metered<P: SaddleProblem + ?Sized>(
    prob: &P,
    z0: &PrimalDualPoint,
    eta: f64,
    steps: u64,
    gamma: f64,
    batch: usize,
    rng: &mut dyn RngCore,
    meter: &mut OracleMeter,
) -> Result<EpochOutcome, SolverError> {
    check_step(eta, steps)?;
    let set = prob.feasible_set();
    let anchor = &z0.x;
    let mut avg = Averager::new(z0);
    let mut truncated = false;
    let mut z = z0.clone();
    for _ in 0..steps {
        let Some(g) = meter.draw(prob, &z, batch, rng) else {
            truncated = true;
            break;
        };
        z = prox_step_regularized(&z, &g.as_operator().scaled(eta), anchor, gamma * eta, set)?;
        avg.push(&z);
    }
    let steps = avg.count;
    Ok(EpochOutcome {
        point: avg.finish(z0),
        steps,
        truncated,
        hit_cap: false,
    })
}

/// Accumulators of the dual-averaging AdaGrad epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaGradState {
    /// `s_{t,i} = ‖g_{1:t,i}‖₂`
    pub s: Vector,
    /// `Σ_τ G(z_τ)` in operator form.
    pub grad_sum: Vector,
    pub t: u64,
}

impl AdaGradState {
    pub fn new(n: usize) -> Self {
        Self {
            s: Vector::zeros(n),
            grad_sum: Vector::zeros(n),
            t: 0,
        }
    }

    /// Folds in one operator-form gradient.
    pub fn accumulate(&mut self, g: &Vector) {
        for ((s, acc), gi) in self
            .s
            .as_mut_slice()
            .iter_mut()
            .zip(self.grad_sum.as_mut_slice())
            .zip(g.iter())
        {
            *s = libm::hypot(*s, *gi);
            *acc += gi;
        }
        self.t += 1;
    }

    /// `M·max{(δ + maxᵢ sᵢ)/m, m·Σᵢ sᵢ}`
    pub fn stopping_threshold(&self, delta: f64, m: f64, big_m: f64) -> f64 {
        let max_s = self.s.max_abs();
        let sum_s: f64 = self.s.iter().sum();
        big_m * ((delta + max_s) / m).max(m * sum_s)
    }
}

/// Per-epoch AdaGrad controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaGradEpoch {
    pub delta: f64,
    pub m: f64,
    /// `M_k` of the stopping rule.
    pub big_m: f64,
    pub cap: u64,
}

/// Dual-averaging AdaGrad epoch on an already regularized problem.
///
/// `z_{t+1} = argmin_z η zᵀ(Σ_τ g_τ) + ½⟨z − z0, H_t(z − z0)⟩` with
/// `H_t = δI + diag(s_t)`; the `y` block is projected in the `H_t` metric.
/// Runs until `t ≥ M·max{(δ + maxᵢ sᵢ)/m, m·Σᵢ sᵢ}` or the cap.
pub fn adagrad_epoch<P: SaddleProblem + ?Sized>(
    prob_k: &P,
    z0: &PrimalDualPoint,
    eta: f64,
    params: &AdaGradEpoch,
    rng: &mut dyn RngCore,
) -> Result<(PrimalDualPoint, u64), SolverError> {
    let mut meter = OracleMeter::unlimited();
    let (out, _) = adagrad_epoch_metered(prob_k, z0, eta, params, 1, rng, &mut meter)?;
    Ok((out.point, out.steps))
}

pub fn adagrad_epoch_metered<P: SaddleProblem + ?Sized>(
    prob_k: &P,
    z0: &PrimalDualPoint,
    eta: f64,
    params: &AdaGradEpoch,
    batch: usize,
    rng: &mut dyn RngCore,
    meter: &mut OracleMeter,
) -> Result<(EpochOutcome, AdaGradState), SolverError> {
    check_step(eta, params.cap)?;
    if !(params.delta > 0.0 && params.m > 0.0 && params.big_m > 0.0) {
        return Err(SolverError::InvalidConfig(
            "adagrad delta, m and M must be positive".into(),
        ));
    }
    let (d, dp) = z0.dims();
    let set = prob_k.feasible_set();
    let mut state = AdaGradState::new(d + dp);
    let mut avg = Averager::new(z0);
    let mut truncated = false;
    let mut stopped = false;
    let mut z = z0.clone();
    while state.t < params.cap {
        let Some(g) = meter.draw(prob_k, &z, batch, rng) else {
            truncated = true;
            break;
        };
        avg.push(&z);
        state.accumulate(&g.as_operator());
        if state.t as f64 >= state.stopping_threshold(params.delta, params.m, params.big_m) {
            stopped = true;
            break;
        }
        z = dual_averaging_point(z0, &state, eta, params.delta, set)?;
    }
    let steps = avg.count;
    Ok((
        EpochOutcome {
            point: avg.finish(z0),
            steps,
            truncated,
            hit_cap: !stopped && !truncated,
        },
        state,
    ))
}

fn dual_averaging_point(
    z0: &PrimalDualPoint,
    state: &AdaGradState,
    eta: f64,
    delta: f64,
    set: &crate::geometry::FeasibleSet,
) -> Result<PrimalDualPoint, SolverError> {
    let d = z0.x.len();
    let s = state.s.as_slice();
    let g = state.grad_sum.as_slice();
    let x = Vector::from(
        (0..d)
            .map(|i| z0.x[i] - eta * g[i] / (delta + s[i]))
            .collect::<alloc::vec::Vec<_>>(),
    );
    let dp = z0.y.len();
    let target = Vector::from(
        (0..dp)
            .map(|j| z0.y[j] - eta * g[d + j] / (delta + s[d + j]))
            .collect::<alloc::vec::Vec<_>>(),
    );
    let weights = Vector::from(
        (0..dp)
            .map(|j| delta + s[d + j])
            .collect::<alloc::vec::Vec<_>>(),
    );
    let y = set.project_weighted(&target, &weights)?;
    Ok(PrimalDualPoint::new(x, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{FeasibleSet, GradientPair};
    use crate::linalg::Matrix;
    use crate::problems::{ProblemConstants, QuadraticGame};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// `f(x, y) = xy`, noiseless.
    struct Bilinear(ProblemConstants, FeasibleSet);

    impl Bilinear {
        fn new() -> Self {
            Self(
                ProblemConstants {
                    ell: 1.0,
                    mu_y: 1.0,
                    rho: 0.0,
                    l_primal: 1.0,
                    mu_pl: 0.0,
                    mu_x_pl: 0.0,
                    sigma: 0.0,
                    b_bound: 0.0,
                    eps0: 0.0,
                },
                FeasibleSet::AllSpace,
            )
        }
    }

    impl SaddleProblem for Bilinear {
        fn dims(&self) -> (usize, usize) {
            (1, 1)
        }
        fn feasible_set(&self) -> &FeasibleSet {
            &self.1
        }
        fn constants(&self) -> &ProblemConstants {
            &self.0
        }
        fn value(&self, z: &PrimalDualPoint) -> f64 {
            z.x[0] * z.y[0]
        }
        fn exact_gradient(&self, z: &PrimalDualPoint) -> GradientPair {
            GradientPair::new(z.y.clone(), z.x.clone())
        }
        fn stochastic_gradient(
            &self,
            z: &PrimalDualPoint,
            _batch: usize,
            _rng: &mut dyn RngCore,
        ) -> GradientPair {
            self.exact_gradient(z)
        }
    }

    fn z1(x: f64, y: f64) -> PrimalDualPoint {
        PrimalDualPoint::new(Vector::from([x]), Vector::from([y]))
    }

    #[test]
    fn ogda_single_step_matches_hand_recursion() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut meter = OracleMeter::unlimited();
        let out = ogda_epoch_metered(
            &Bilinear::new(),
            &z1(1.0, 0.0),
            0.1,
            1,
            1,
            &mut rng,
            &mut meter,
        )
        .unwrap();
        assert_eq!(out.point, z1(1.0, 0.1));
        assert_eq!(meter.calls(), 2);
    }

    #[test]
    fn ogda_second_step_uses_extrapolated_anchor() {
        // z̃₁ = (0.99, 0.1); z₂ = z̃₁ − 0.1·G(z₁) = (0.98, 0.2)
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let avg = ogda_epoch(&Bilinear::new(), &z1(1.0, 0.0), 0.1, 2, &mut rng).unwrap();
        assert!((avg.x[0] - 0.99).abs() < 1e-15);
        assert!((avg.y[0] - 0.15).abs() < 1e-15);
    }

    #[test]
    fn sgda_plain_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let z = sgda_epoch(&Bilinear::new(), &z1(1.0, 0.0), 0.1, 1, 0.0, &mut rng).unwrap();
        assert_eq!(z, z1(1.0, 0.1));
    }

    #[test]
    fn zero_length_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            ogda_epoch(&Bilinear::new(), &z1(1.0, 0.0), 0.1, 0, &mut rng),
            Err(SolverError::ZeroLength)
        );
    }

    #[test]
    fn pythagorean_accumulation() {
        let mut st = AdaGradState::new(1);
        st.accumulate(&Vector::from([3.0]));
        st.accumulate(&Vector::from([4.0]));
        assert_eq!(st.s[0], 5.0);
        assert_eq!(st.grad_sum[0], 7.0);
    }

    #[test]
    fn adagrad_zero_gradient_stops_on_rule() {
        let p = QuadraticGame::new(Matrix::identity(2), 0.5, 1.0, 0.0).unwrap();
        let z0 = PrimalDualPoint::zeros(2, 2);
        let params = AdaGradEpoch {
            delta: 0.3,
            m: 0.5,
            big_m: 7.0,
            cap: 1_000,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (z, steps) = adagrad_epoch(&p, &z0, 0.1, &params, &mut rng).unwrap();
        assert_eq!(z, z0);
        assert_eq!(steps, libm::ceil(7.0 * 0.3 / 0.5) as u64);
    }

    #[test]
    fn budget_truncates_epoch() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut meter = OracleMeter::with_budget(3);
        let out = ogda_epoch_metered(
            &Bilinear::new(),
            &z1(1.0, 0.0),
            0.1,
            10,
            1,
            &mut rng,
            &mut meter,
        )
        .unwrap();
        assert!(out.truncated);
        assert_eq!(out.steps, 3);
        assert_eq!(meter.calls(), 3);
    }
}
