use alloc::format;

use crate::error::SolverError;
use crate::metrics::Regime;
use crate::problems::ProblemConstants;

use super::{AdaGradParams, UpdateVariant};

/// Fixed-point iterations allowed when solving for a self-referential `K`.
const K_ITERATIONS: usize = 100;

/// Geometric epoch schedule: `η_k = η₀·decay^{k−1}`,
/// `T_k = ⌈T₀·growth^{k−1}⌉`, for `k = 1..=epochs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub gamma: f64,
    pub eta0: f64,
    pub decay: f64,
    pub length0: u64,
    pub growth: f64,
    pub epochs: usize,
    pub regime: Regime,
    /// Set when the requested `η₀` exceeded the theorem bound.
    pub eta0_clamped: bool,
    /// AdaGrad only: `M₁` of the stopping rule. `T_k` is then decided at
    /// run time and `length0` is informational.
    pub stopping_scale0: Option<f64>,
}

impl Schedule {
    pub fn manual(
        gamma: f64,
        eta0: f64,
        decay: f64,
        length0: u64,
        growth: f64,
        epochs: usize,
    ) -> Result<Self, SolverError> {
        let s = Self {
            gamma,
            eta0,
            decay,
            length0,
            growth,
            epochs,
            regime: Regime::Theorem1,
            eta0_clamped: false,
            stopping_scale0: None,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |what: &str, v: f64| {
            Err(SolverError::InvalidConfig(format!(
                "{what} out of range: {v}"
            )))
        };
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return bad("gamma", self.gamma);
        }
        if !(self.eta0 > 0.0 && self.eta0.is_finite()) {
            return bad("eta0", self.eta0);
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return bad("decay", self.decay);
        }
        if !(self.growth >= 1.0 && self.growth.is_finite()) {
            return bad("growth", self.growth);
        }
        if self.length0 == 0 {
            return Err(SolverError::ZeroLength);
        }
        if self.epochs == 0 {
            return Err(SolverError::InvalidConfig("epochs must be positive".into()));
        }
        Ok(())
    }

    /// Step size of epoch `k` (1-based).
    pub fn eta(&self, k: usize) -> f64 {
        self.eta0 * libm::pow(self.decay, (k - 1) as f64)
    }

    /// Planned length of epoch `k` (1-based).
    pub fn length(&self, k: usize) -> u64 {
        let t = libm::ceil(self.length0 as f64 * libm::pow(self.growth, (k - 1) as f64));
        (t as u64).max(1)
    }

    /// `M_k` of the AdaGrad stopping rule.
    pub fn stopping_scale(&self, k: usize) -> Option<f64> {
        self.stopping_scale0
            .map(|m| m * libm::pow(self.growth, (k - 1) as f64))
    }

    pub fn with_epochs(mut self, epochs: usize) -> Self {
        self.epochs = epochs;
        self
    }

    /// Multiplies every epoch length (and AdaGrad `M_k`) by `factor`.
    pub fn with_length_multiplier(mut self, factor: f64) -> Self {
        self.length0 = (libm::ceil(self.length0 as f64 * factor) as u64).max(1);
        self.stopping_scale0 = self.stopping_scale0.map(|m| m * factor);
        self
    }

    /// Total planned steps over all epochs.
    pub fn total_length(&self) -> u64 {
        (1..=self.epochs)
            .map(|k| self.length(k))
            .fold(0u64, u64::saturating_add)
    }
}

/// Largest admissible `η₀`: `1/(2√2ℓ)` for OGDA and AdaGrad, `1/ρ` for SGDA.
pub fn eta0_bound(variant: UpdateVariant, constants: &ProblemConstants) -> f64 {
    match variant {
        UpdateVariant::Sgda if constants.rho > 0.0 => 1.0 / constants.rho,
        _ => 1.0 / (2.0 * core::f64::consts::SQRT_2 * constants.ell),
    }
}

fn resolve_eta0(
    variant: UpdateVariant,
    constants: &ProblemConstants,
    requested: Option<f64>,
) -> Result<(f64, bool), SolverError> {
    let bound = eta0_bound(variant, constants);
    match requested {
        None => Ok((bound, false)),
        Some(e) if !(e > 0.0 && e.is_finite()) => Err(SolverError::InvalidConfig(format!(
            "eta0 must be positive, got {e}"
        ))),
        Some(e) if e > bound => {
            log::warn!("eta0 = {e} exceeds the admissible {bound}; clamping");
            Ok((bound, true))
        }
        Some(e) => Ok((e, false)),
    }
}

fn check_targets(constants: &ProblemConstants, eps: f64) -> Result<(), SolverError> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(SolverError::InvalidConfig(format!(
            "target accuracy must be positive, got {eps}"
        )));
    }
    if !(constants.eps0 > 0.0) {
        return Err(SolverError::InvalidConfig(
            "eps0 (initial gap bound) must be known and positive".into(),
        ));
    }
    Ok(())
}

/// Smallest integer `K ≥ 1` with `K ≥ max{a, b(K)}`, for `b`
/// nondecreasing, found by iterating from `K = 1`.
fn least_fixed_point(a: f64, b: impl Fn(f64) -> f64) -> usize {
    let mut k = 1usize;
    for _ in 0..K_ITERATIONS {
        let bk = b(k as f64);
        let target = if bk.is_finite() { a.max(bk) } else { a };
        let next = (libm::ceil(target).max(1.0)) as usize;
        if next <= k {
            return k;
        }
        k = next;
    }
    k
}

/// Epoch count of the `γ = 2ρ` theorem.
pub fn theorem1_epochs(constants: &ProblemConstants, eta0: f64, eps: f64) -> usize {
    let mu = constants.mu_pl;
    let c = constants.c();
    let inv_rate = (c + 2.0 * mu) / (2.0 * mu);
    let a = inv_rate * libm::log(4.0 * constants.eps0 / eps);
    let sigma_sq = constants.sigma * constants.sigma;
    let l_hat = constants.l_hat();
    least_fixed_point(a, |k| {
        inv_rate * libm::log(208.0 * eta0 * l_hat * k * sigma_sq / ((c + 2.0 * mu) * eps))
    })
}

/// Epoch count of the `γ = μ/4` theorem.
pub fn theorem2_epochs(constants: &ProblemConstants, eta0: f64, eps: f64) -> usize {
    let a = 16.0 * libm::log(1200.0 * constants.eps0 / eps);
    let sigma_sq = constants.sigma * constants.sigma;
    least_fixed_point(a, |k| 16.0 * libm::log(15600.0 * eta0 * k * sigma_sq / eps))
}

/// Epoch count of the AdaGrad theorem.
pub fn adagrad_epochs(constants: &ProblemConstants, eta0: f64, m: f64, eps: f64) -> usize {
    let mu = constants.mu_pl;
    let c = constants.c();
    let inv_rate = (c + 2.0 * mu) / (2.0 * mu);
    let a = inv_rate * libm::log(4.0 * constants.eps0 / eps);
    let min = constants.rho.min(constants.mu_y);
    let l_hat = constants.l_hat();
    least_fixed_point(a, |k| {
        inv_rate
            * libm::log(
                16.0 * eta0 * eta0 * l_hat * min * k / (53.0 * m * m * (c + 2.0 * mu) * eps),
            )
    })
}

/// `γ = 2ρ` schedule for OGDA.
pub fn schedule_from_theorem1(
    constants: &ProblemConstants,
    eta0: Option<f64>,
    eps: f64,
) -> Result<Schedule, SolverError> {
    schedule_from_theorem1_for(UpdateVariant::Ogda, constants, eta0, eps)
}

/// `γ = 2ρ` schedule with the `η₀` bound of `variant`.
pub fn schedule_from_theorem1_for(
    variant: UpdateVariant,
    constants: &ProblemConstants,
    eta0: Option<f64>,
    eps: f64,
) -> Result<Schedule, SolverError> {
    if !(constants.mu_pl > 0.0) {
        return Err(SolverError::TheoremInapplicable(
            "PL constant mu must be positive",
        ));
    }
    if !(constants.rho > 0.0) {
        return Err(SolverError::TheoremInapplicable(
            "weak convexity rho must be positive",
        ));
    }
    check_targets(constants, eps)?;
    let (eta0, clamped) = resolve_eta0(variant, constants, eta0)?;
    let mu = constants.mu_pl;
    let rate = 2.0 * mu / (constants.c() + 2.0 * mu);
    let decay = libm::exp(-rate);
    let length0 = libm::ceil(212.0 / (eta0 * constants.rho.min(constants.mu_y)));
    Ok(Schedule {
        gamma: 2.0 * constants.rho,
        eta0,
        decay,
        length0: length0 as u64,
        growth: libm::exp(rate),
        epochs: theorem1_epochs(constants, eta0, eps),
        regime: Regime::Theorem1,
        eta0_clamped: clamped,
        stopping_scale0: None,
    })
}

/// `γ = μ/4` schedule for OGDA; needs `0 < ρ ≤ μ/8`.
pub fn schedule_from_theorem2(
    constants: &ProblemConstants,
    eta0: Option<f64>,
    eps: f64,
) -> Result<Schedule, SolverError> {
    schedule_from_theorem2_for(UpdateVariant::Ogda, constants, eta0, eps)
}

pub fn schedule_from_theorem2_for(
    variant: UpdateVariant,
    constants: &ProblemConstants,
    eta0: Option<f64>,
    eps: f64,
) -> Result<Schedule, SolverError> {
    let mu = constants.mu_pl;
    if !(mu > 0.0) {
        return Err(SolverError::TheoremInapplicable(
            "PL constant mu must be positive",
        ));
    }
    if !(constants.rho > 0.0) {
        return Err(SolverError::TheoremInapplicable(
            "weak convexity rho must be positive",
        ));
    }
    if constants.rho > mu / 8.0 {
        return Err(SolverError::RegimeViolated {
            rho: constants.rho,
            limit: mu / 8.0,
        });
    }
    check_targets(constants, eps)?;
    let (eta0, clamped) = resolve_eta0(variant, constants, eta0)?;
    let length0 = libm::ceil(384.0 / (eta0 * (mu / 8.0).min(constants.mu_y)));
    Ok(Schedule {
        gamma: mu / 4.0,
        eta0,
        decay: libm::exp(-1.0 / 16.0),
        length0: length0 as u64,
        growth: libm::exp(1.0 / 16.0),
        epochs: theorem2_epochs(constants, eta0, eps),
        regime: Regime::Theorem2,
        eta0_clamped: clamped,
        stopping_scale0: None,
    })
}

/// AdaGrad schedule: `η_k = η₀ e^{−(k−1)r/2}`,
/// `M_k = (212m/(η₀ min{ρ, μ_y})) e^{(k−1)r/2}` with `r = 2μ/(c + 2μ)`.
pub fn schedule_adagrad(
    constants: &ProblemConstants,
    dims: (usize, usize),
    eta0: Option<f64>,
    params: &AdaGradParams,
    eps: f64,
) -> Result<Schedule, SolverError> {
    if !(constants.mu_pl > 0.0) {
        return Err(SolverError::TheoremInapplicable(
            "PL constant mu must be positive",
        ));
    }
    if !(constants.rho > 0.0) {
        return Err(SolverError::TheoremInapplicable(
            "weak convexity rho must be positive",
        ));
    }
    params.validate()?;
    check_targets(constants, eps)?;
    let (eta0, clamped) = resolve_eta0(UpdateVariant::AdaGrad, constants, eta0)?;
    let mu = constants.mu_pl;
    let half_rate = mu / (constants.c() + 2.0 * mu);
    let m = params.m_for(dims);
    let scale0 = 212.0 * m / (eta0 * constants.rho.min(constants.mu_y));
    Ok(Schedule {
        gamma: 2.0 * constants.rho,
        eta0,
        decay: libm::exp(-half_rate),
        length0: (libm::ceil(scale0) as u64).max(1),
        growth: libm::exp(half_rate),
        epochs: adagrad_epochs(constants, eta0, m, eps),
        regime: Regime::Theorem1,
        eta0_clamped: clamped,
        stopping_scale0: Some(scale0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constants() -> ProblemConstants {
        ProblemConstants {
            ell: 2.0,
            mu_y: 0.5,
            rho: 0.3,
            l_primal: 1.7,
            mu_pl: 0.2,
            mu_x_pl: 0.0,
            sigma: 1.0,
            b_bound: 0.0,
            eps0: 1.0,
        }
    }

    #[test]
    fn theorem1_decay_growth_are_reciprocal() {
        let s = schedule_from_theorem1(&constants(), None, 1e-3).unwrap();
        assert!((s.decay * s.growth - 1.0).abs() <= 2.0 * f64::EPSILON);
        assert_eq!(s.gamma, 0.6);
        assert!(!s.eta0_clamped);
    }

    #[test]
    fn oversized_eta0_is_clamped() {
        let s = schedule_from_theorem1(&constants(), Some(10.0), 1e-3).unwrap();
        assert!(s.eta0_clamped);
        assert_eq!(s.eta0, eta0_bound(UpdateVariant::Ogda, &constants()));
    }

    #[test]
    fn theorem2_boundary() {
        let mut c = constants();
        c.mu_pl = 0.4;
        c.rho = 0.05;
        assert!(schedule_from_theorem2(&c, None, 1e-3).is_ok());
        c.rho = 0.05 + 1e-9;
        assert!(matches!(
            schedule_from_theorem2(&c, None, 1e-3),
            Err(SolverError::RegimeViolated { .. })
        ));
    }

    #[test]
    fn inapplicable_without_pl() {
        let mut c = constants();
        c.mu_pl = 0.0;
        assert!(matches!(
            schedule_from_theorem1(&c, None, 1e-3),
            Err(SolverError::TheoremInapplicable(_))
        ));
    }

    #[test]
    fn adagrad_m_default() {
        assert_eq!(AdaGradParams::new(1.0).m_for((3, 1)), 0.5);
    }

    #[test]
    fn noiseless_k_uses_first_term_only() {
        let mut c = constants();
        c.sigma = 0.0;
        let eta0 = 0.1;
        let k = theorem1_epochs(&c, eta0, 1e-3);
        let inv_rate = (c.c() + 2.0 * c.mu_pl) / (2.0 * c.mu_pl);
        assert_eq!(k, libm::ceil(inv_rate * libm::log(4.0 / 1e-3)) as usize);
    }
}
