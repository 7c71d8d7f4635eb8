//! Stochastic saddle-point problems.
//!
//! A problem is an oracle bundle: exact and stochastic gradients plus
//! whatever closed forms it can offer (primal value, best responses,
//! saddle point). Capabilities a problem lacks return
//! [`ProblemError::Unsupported`].

mod auc;
mod quadratic;

pub use auc::{empirical_auc, AucDataset, AucLinearProblem, SyntheticImbalancedDataset};
pub use quadratic::{random_coupling, QuadraticGame};

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::error::ProblemError;
use crate::geometry::{FeasibleSet, GradientPair, PrimalDualPoint};
use crate::linalg::Vector;

/// Regularity constants a problem declares about itself.
///
/// A zero in an optional slot (`mu_pl`, `mu_x_pl`, `sigma`, `b_bound`,
/// `eps0`) means "unknown".
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConstants {
    /// Lipschitz constant of the operator `F`.
    pub ell: f64,
    /// Strong concavity in `y`.
    pub mu_y: f64,
    /// Weak convexity in `x`.
    pub rho: f64,
    /// Smoothness of the primal function `P`.
    pub l_primal: f64,
    /// PL constant of `P`.
    pub mu_pl: f64,
    /// x-side PL constant of `f(·, y)`.
    pub mu_x_pl: f64,
    /// Gradient noise bound.
    pub sigma: f64,
    /// Second-moment bound on stochastic gradients.
    pub b_bound: f64,
    /// Bound on the initial gap.
    pub eps0: f64,
}

impl ProblemConstants {
    pub fn validate(&self) -> Result<(), ProblemError> {
        let named = [
            ("ell", self.ell),
            ("mu_y", self.mu_y),
            ("rho", self.rho),
            ("l_primal", self.l_primal),
            ("mu_pl", self.mu_pl),
            ("mu_x_pl", self.mu_x_pl),
            ("sigma", self.sigma),
            ("b_bound", self.b_bound),
            ("eps0", self.eps0),
        ];
        for (name, v) in named {
            if !(v.is_finite() && v >= 0.0) {
                return Err(ProblemError::InvalidParameter(format!(
                    "{name} must be finite and nonnegative, got {v}"
                )));
            }
        }
        if !(self.ell > 0.0 && self.mu_y > 0.0) {
            return Err(ProblemError::InvalidParameter(
                "ell and mu_y must be positive".into(),
            ));
        }
        if self.rho > self.ell {
            return Err(ProblemError::InvalidParameter(format!(
                "rho = {} exceeds ell = {}",
                self.rho, self.ell
            )));
        }
        Ok(())
    }

    /// `L̂ = L + 2ρ`
    pub fn l_hat(&self) -> f64 {
        self.l_primal + 2.0 * self.rho
    }

    /// `c = 4ρ + (248/53) L̂`
    pub fn c(&self) -> f64 {
        4.0 * self.rho + 248.0 / 53.0 * self.l_hat()
    }
}

/// Oracle interface for `min_x max_{y ∈ Y} f(x, y)`.
pub trait SaddleProblem {
    /// `(d, d')`
    fn dims(&self) -> (usize, usize);
    fn feasible_set(&self) -> &FeasibleSet;
    fn constants(&self) -> &ProblemConstants;
    fn value(&self, z: &PrimalDualPoint) -> f64;
    fn exact_gradient(&self, z: &PrimalDualPoint) -> GradientPair;
    /// Unbiased minibatch gradient; `batch` draws are averaged.
    fn stochastic_gradient(
        &self,
        z: &PrimalDualPoint,
        batch: usize,
        rng: &mut dyn RngCore,
    ) -> GradientPair;

    /// `P(x) = max_{y ∈ Y} f(x, y)`
    fn primal_value(&self, _x: &Vector) -> Result<f64, ProblemError> {
        Err(ProblemError::Unsupported("primal_value"))
    }

    /// `min P`, from analytic minimization only.
    fn optimal_primal_value(&self) -> Result<f64, ProblemError> {
        Err(ProblemError::Unsupported("optimal_primal_value"))
    }

    /// A global minimizer of `P`.
    fn primal_minimizer(&self) -> Result<Vector, ProblemError> {
        Err(ProblemError::Unsupported("primal_minimizer"))
    }

    /// `ŷ(x) = argmax_{y ∈ Y} f(x, y)`
    fn best_response_y(&self, _x: &Vector) -> Result<Vector, ProblemError> {
        Err(ProblemError::Unsupported("best_response_y"))
    }

    /// `x̂(y) = argmin_x f(x, y)`, only when that minimum is finite.
    fn best_response_x(&self, _y: &Vector) -> Result<Vector, ProblemError> {
        Err(ProblemError::Unsupported("best_response_x"))
    }

    /// `argmin_x f(x, y) + (γ/2)‖x − x₀‖²`
    fn best_response_x_regularized(
        &self,
        _y: &Vector,
        _x0: &Vector,
        _gamma: f64,
    ) -> Result<Vector, ProblemError> {
        Err(ProblemError::Unsupported("best_response_x_regularized"))
    }

    fn saddle_point(&self) -> Result<PrimalDualPoint, ProblemError> {
        Err(ProblemError::Unsupported("saddle_point"))
    }
}

/// `f_k(x, y) = f(x, y) + (γ/2)‖x − x₀‖²` over a borrowed base problem.
#[derive(Debug, Clone)]
pub struct RegularizedProblem<'a, P: ?Sized> {
    base: &'a P,
    anchor: Vector,
    gamma: f64,
}

impl<'a, P: SaddleProblem + ?Sized> RegularizedProblem<'a, P> {
    pub fn new(base: &'a P, anchor: Vector, gamma: f64) -> Self {
        Self {
            base,
            anchor,
            gamma,
        }
    }

    pub fn anchor(&self) -> &Vector {
        &self.anchor
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    fn penalty(&self, x: &Vector) -> f64 {
        0.5 * self.gamma * x.distance_squared(&self.anchor)
    }

    fn wrap(&self, x: &Vector, mut g: GradientPair) -> GradientPair {
        for ((gi, xi), ai) in
            g.gx.as_mut_slice()
                .iter_mut()
                .zip(x.iter())
                .zip(self.anchor.iter())
        {
            *gi += self.gamma * (xi - ai);
        }
        g
    }
}

impl<P: SaddleProblem + ?Sized> SaddleProblem for RegularizedProblem<'_, P> {
    fn dims(&self) -> (usize, usize) {
        self.base.dims()
    }

    fn feasible_set(&self) -> &FeasibleSet {
        self.base.feasible_set()
    }

    fn constants(&self) -> &ProblemConstants {
        self.base.constants()
    }

    fn value(&self, z: &PrimalDualPoint) -> f64 {
        self.base.value(z) + self.penalty(&z.x)
    }

    fn exact_gradient(&self, z: &PrimalDualPoint) -> GradientPair {
        self.wrap(&z.x, self.base.exact_gradient(z))
    }

    fn stochastic_gradient(
        &self,
        z: &PrimalDualPoint,
        batch: usize,
        rng: &mut dyn RngCore,
    ) -> GradientPair {
        self.wrap(&z.x, self.base.stochastic_gradient(z, batch, rng))
    }

    fn primal_value(&self, x: &Vector) -> Result<f64, ProblemError> {
        Ok(self.base.primal_value(x)? + self.penalty(x))
    }

    fn best_response_y(&self, x: &Vector) -> Result<Vector, ProblemError> {
        self.base.best_response_y(x)
    }

    fn best_response_x(&self, y: &Vector) -> Result<Vector, ProblemError> {
        self.base
            .best_response_x_regularized(y, &self.anchor, self.gamma)
    }

    fn best_response_x_regularized(
        &self,
        y: &Vector,
        x0: &Vector,
        gamma: f64,
    ) -> Result<Vector, ProblemError> {
        // (γ/2)‖x − a‖² + (γ'/2)‖x − x₀‖² = ((γ+γ')/2)‖x − m‖² + const
        let total = self.gamma + gamma;
        let mut merged = self.anchor.scaled(self.gamma);
        merged.axpy(gamma, x0);
        if total != 0.0 {
            merged.scale(1.0 / total);
        }
        self.base.best_response_x_regularized(y, &merged, total)
    }
}

/// Outcome of [`check_regularity`].
#[derive(Debug, Clone, PartialEq)]
pub struct RegularityReport {
    /// Largest sampled `‖F(z) − F(z')‖ / ‖z − z'‖`.
    pub ell_hat: f64,
    /// Smallest sampled concavity modulus in `y`.
    pub mu_y_hat: f64,
    /// Largest sampled negative curvature in `x` (0 if none).
    pub rho_hat: f64,
    pub violations: Vec<String>,
}

/// Samples random pairs and compares empirical regularity against the
/// declared constants. Report only; never fails.
pub fn check_regularity<P: SaddleProblem + ?Sized>(
    prob: &P,
    sample_count: usize,
    rng: &mut dyn RngCore,
) -> RegularityReport {
    let (d, dp) = prob.dims();
    let set = prob.feasible_set();
    let draw = |n: usize, rng: &mut dyn RngCore| gaussian_vector(n, 1.0, rng);
    let mut ell_hat = 0.0_f64;
    let mut mu_y_hat = f64::INFINITY;
    let mut rho_hat = 0.0_f64;
    for _ in 0..sample_count {
        let x = draw(d, rng);
        let x2 = draw(d, rng);
        let y = set
            .project(&draw(dp, rng))
            .unwrap_or_else(|_| Vector::zeros(dp));
        let y2 = set
            .project(&draw(dp, rng))
            .unwrap_or_else(|_| Vector::zeros(dp));

        let z = PrimalDualPoint::new(x.clone(), y.clone());
        let z2 = PrimalDualPoint::new(x2.clone(), y2.clone());
        let dz = z.distance_squared(&z2);
        if dz > 0.0 {
            let f1 = prob.exact_gradient(&z).as_operator();
            let f2 = prob.exact_gradient(&z2).as_operator();
            ell_hat = ell_hat.max(libm::sqrt(f1.distance_squared(&f2) / dz));
        }

        let dy = y.distance_squared(&y2);
        if dy > 0.0 {
            let g1 = prob.exact_gradient(&PrimalDualPoint::new(x.clone(), y.clone()));
            let g2 = prob.exact_gradient(&PrimalDualPoint::new(x.clone(), y2.clone()));
            let curv = -g1.gy.sub(&g2.gy).dot(&y.sub(&y2)) / dy;
            mu_y_hat = mu_y_hat.min(curv);
        }

        let dx = x.distance_squared(&x2);
        if dx > 0.0 {
            let g1 = prob.exact_gradient(&PrimalDualPoint::new(x.clone(), y.clone()));
            let g2 = prob.exact_gradient(&PrimalDualPoint::new(x2.clone(), y.clone()));
            let curv = g1.gx.sub(&g2.gx).dot(&x.sub(&x2)) / dx;
            rho_hat = rho_hat.max(-curv);
        }
    }

    let c = prob.constants();
    let mut violations = Vec::new();
    if ell_hat > c.ell * (1.0 + 1e-6) {
        violations.push(format!("ell: sampled {ell_hat} > declared {}", c.ell));
    }
    if mu_y_hat < c.mu_y * (1.0 - 1e-6) {
        violations.push(format!("mu_y: sampled {mu_y_hat} < declared {}", c.mu_y));
    }
    if rho_hat > c.rho * (1.0 + 1e-6) + 1e-12 {
        violations.push(format!("rho: sampled {rho_hat} > declared {}", c.rho));
    }
    RegularityReport {
        ell_hat,
        mu_y_hat,
        rho_hat,
        violations,
    }
}

pub(crate) fn gaussian_vector(n: usize, std: f64, rng: &mut dyn RngCore) -> Vector {
    Vector::from(
        (0..n)
            .map(|_| {
                let s: f64 = StandardNormal.sample(&mut *rng);
                std * s
            })
            .collect::<Vec<f64>>(),
    )
}
