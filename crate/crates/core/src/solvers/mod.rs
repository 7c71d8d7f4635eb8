//! Epoch subroutines, the PES outer loop, theorem schedules and the
//! Stoc-AGDA baseline.

mod epoch;
mod pes;
mod schedule;
mod stoc_agda;

pub use epoch::{
    adagrad_epoch, adagrad_epoch_metered, ogda_epoch, ogda_epoch_metered, sgda_epoch,
    sgda_epoch_metered, AdaGradEpoch, AdaGradState, EpochOutcome,
};
pub use pes::{pes_solve, pes_solve_with, EpochTrace, PesRun, SolveOptions, StartMetrics};
pub use schedule::{
    adagrad_epochs, eta0_bound, schedule_adagrad, schedule_from_theorem1,
    schedule_from_theorem1_for, schedule_from_theorem2, schedule_from_theorem2_for,
    theorem1_epochs, theorem2_epochs, Schedule,
};
pub use stoc_agda::{
    stoc_agda, stoc_agda_with, StocAgdaParams, StocAgdaRun, StocAgdaSample, STOC_AGDA_GRID,
};

use alloc::format;

use rand::RngCore;

use crate::error::SolverError;
use crate::geometry::{GradientPair, PrimalDualPoint};
use crate::problems::SaddleProblem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UpdateVariant {
    Ogda,
    Sgda,
    AdaGrad,
}

/// AdaGrad epoch controls.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaGradParams {
    /// `δ` in `H_t = δI + diag(s_t)`.
    pub delta: f64,
    /// Assumed growth exponent of `‖g_{1:T,i}‖ ≤ δT^α`, in `(0, 1/2]`.
    pub alpha_growth: f64,
    /// Stopping-rule scale; `None` means `1/√(d + d')`.
    pub m: Option<f64>,
    /// Hard cap on steps per epoch; `None` means `⌈100·M_k⌉`.
    pub cap_t: Option<u64>,
}

impl AdaGradParams {
    pub fn new(delta: f64) -> Self {
        Self {
            delta,
            alpha_growth: 0.5,
            m: None,
            cap_t: None,
        }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(SolverError::InvalidConfig(format!(
                "adagrad delta must be positive, got {}",
                self.delta
            )));
        }
        if !(self.alpha_growth > 0.0 && self.alpha_growth <= 0.5) {
            return Err(SolverError::InvalidConfig(format!(
                "adagrad alpha_growth must lie in (0, 0.5], got {}",
                self.alpha_growth
            )));
        }
        if let Some(m) = self.m {
            if !(m > 0.0 && m.is_finite()) {
                return Err(SolverError::InvalidConfig(format!(
                    "adagrad m must be positive, got {m}"
                )));
            }
        }
        if self.cap_t == Some(0) {
            return Err(SolverError::InvalidConfig(
                "adagrad cap_t must be positive".into(),
            ));
        }
        Ok(())
    }

    /// `m` for a problem of dimensions `(d, d')`.
    pub fn m_for(&self, dims: (usize, usize)) -> f64 {
        self.m
            .unwrap_or_else(|| 1.0 / libm::sqrt((dims.0 + dims.1) as f64))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PesConfig {
    pub variant: UpdateVariant,
    pub schedule: Schedule,
    pub batch_size: usize,
    pub seed: u64,
    pub adagrad: Option<AdaGradParams>,
}

impl PesConfig {
    pub fn new(variant: UpdateVariant, schedule: Schedule, seed: u64) -> Self {
        Self {
            variant,
            schedule,
            batch_size: 1,
            seed,
            adagrad: None,
        }
    }

    pub fn with_batch_size(mut self, batch_size: usize) -> Self {
        self.batch_size = batch_size;
        self
    }

    pub fn with_adagrad(mut self, params: AdaGradParams) -> Self {
        self.adagrad = Some(params);
        self
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        self.schedule.validate()?;
        if self.batch_size == 0 {
            return Err(SolverError::InvalidConfig(
                "batch_size must be positive".into(),
            ));
        }
        match (self.variant, &self.adagrad) {
            (UpdateVariant::AdaGrad, None) => Err(SolverError::InvalidConfig(
                "adagrad variant needs adagrad parameters".into(),
            )),
            (UpdateVariant::AdaGrad, Some(p)) => p.validate(),
            (_, Some(_)) => Err(SolverError::InvalidConfig(
                "adagrad parameters given for a non-adagrad variant".into(),
            )),
            _ => Ok(()),
        }
    }
}

/// Counts stochastic gradient calls against an optional budget.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OracleMeter {
    calls: u64,
    budget: Option<u64>,
}

impl OracleMeter {
    pub fn unlimited() -> Self {
        Self::default()
    }

    pub fn with_budget(budget: u64) -> Self {
        Self {
            calls: 0,
            budget: Some(budget),
        }
    }

    pub fn calls(&self) -> u64 {
        self.calls
    }

    pub fn budget(&self) -> Option<u64> {
        self.budget
    }

    pub fn exhausted(&self) -> bool {
        self.budget.is_some_and(|b| self.calls >= b)
    }

    /// Draws one stochastic gradient, or `None` once the budget is spent.
    pub fn draw<P: SaddleProblem + ?Sized>(
        &mut self,
        prob: &P,
        z: &PrimalDualPoint,
        batch: usize,
        rng: &mut dyn RngCore,
    ) -> Option<GradientPair> {
        if self.exhausted() {
            return None;
        }
        self.calls += 1;
        Some(prob.stochastic_gradient(z, batch, rng))
    }
}

/// Wall-clock source; the core crate has none of its own.
pub trait Clock {
    /// Seconds since an arbitrary fixed origin.
    fn now_secs(&self) -> f64;
}
