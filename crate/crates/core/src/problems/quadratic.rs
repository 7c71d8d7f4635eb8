use alloc::vec::Vec;

use rand::RngCore;

use super::{gaussian_vector, ProblemConstants, SaddleProblem};
use crate::error::ProblemError;
use crate::geometry::{FeasibleSet, GradientPair, PrimalDualPoint};
use crate::linalg::{symmetric_eigenvalues, Matrix, Vector};

/// `f(x, y) = xᵀAy − (μ_y/2)‖y‖² + (q/2)‖x‖²` with Gaussian gradient noise.
///
/// `q < 0` makes `f` weakly convex in `x` with `ρ = −q`. The declared
/// constants are computed from the matrices at construction:
/// `ℓ` is the spectral norm of `[[qI, A], [Aᵀ, −μ_y I]]`, and `L`, `μ` are
/// the extreme eigenvalues of `∇²P = AAᵀ/μ_y + qI` (unconstrained `y`).
#[derive(Debug, Clone)]
pub struct QuadraticGame {
    a: Matrix,
    q: f64,
    mu_y: f64,
    noise_sigma: f64,
    set: FeasibleSet,
    primal_hessian: Matrix,
    primal_eigenvalues: Vec<f64>,
    constants: ProblemConstants,
}

impl QuadraticGame {
    pub fn new(a: Matrix, q: f64, mu_y: f64, noise_sigma: f64) -> Result<Self, ProblemError> {
        if !(mu_y > 0.0 && mu_y.is_finite()) {
            return Err(ProblemError::InvalidParameter(
                "mu_y must be positive".into(),
            ));
        }
        if !q.is_finite() || !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
            return Err(ProblemError::InvalidParameter(
                "q and noise_sigma must be finite, noise_sigma nonnegative".into(),
            ));
        }
        if a.rows() == 0 || a.cols() == 0 || a.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(ProblemError::InvalidParameter(
                "coupling matrix must be nonempty and finite".into(),
            ));
        }
        let (d, dp) = (a.rows(), a.cols());

        let mut joint = Matrix::zeros(d + dp, d + dp);
        for i in 0..d {
            joint[(i, i)] = q;
            for j in 0..dp {
                joint[(i, d + j)] = a[(i, j)];
                joint[(d + j, i)] = a[(i, j)];
            }
        }
        for j in 0..dp {
            joint[(d + j, d + j)] = -mu_y;
        }
        let joint_ev = symmetric_eigenvalues(&joint);
        let ell = joint_ev.iter().fold(0.0_f64, |m, v| m.max(v.abs()));

        let mut primal_hessian = a.mul(&a.transpose()).scaled(1.0 / mu_y);
        primal_hessian.add_diagonal(q);
        let primal_eigenvalues = symmetric_eigenvalues(&primal_hessian);
        let l_primal = primal_eigenvalues
            .iter()
            .fold(0.0_f64, |m, v| m.max(v.abs()));
        let lambda_min = primal_eigenvalues[0];

        let constants = ProblemConstants {
            ell,
            mu_y,
            rho: (-q).max(0.0),
            l_primal,
            mu_pl: if lambda_min > 0.0 { lambda_min } else { 0.0 },
            mu_x_pl: q.max(0.0),
            sigma: noise_sigma,
            b_bound: 0.0,
            eps0: 0.0,
        };
        Ok(Self {
            a,
            q,
            mu_y,
            noise_sigma,
            set: FeasibleSet::AllSpace,
            primal_hessian,
            primal_eigenvalues,
            constants,
        })
    }

    /// `f(x, y) = xy − y²/2 − x²/4`: PL with `μ = 1/2` in the primal but
    /// not x-side PL.
    pub fn scalar_example() -> Self {
        let a = Matrix::identity(1);
        Self::new(a, -0.5, 1.0, 0.0).expect("valid constants")
    }

    /// `A = I`, `q = L − 1/μ_y`, so `P(x) = (L/2)‖x‖²` while `ℓ ≈ 1/μ_y`.
    pub fn smooth_primal(d: usize, mu_y: f64, l_primal: f64) -> Result<Self, ProblemError> {
        Self::new(Matrix::identity(d), l_primal - 1.0 / mu_y, mu_y, 0.0)
    }

    /// Random orthogonal factors around the given singular values.
    pub fn with_singular_values(
        d: usize,
        d_prime: usize,
        singular_values: &[f64],
        q: f64,
        mu_y: f64,
        noise_sigma: f64,
        rng: &mut dyn RngCore,
    ) -> Result<Self, ProblemError> {
        let a = random_coupling(d, d_prime, singular_values, rng)?;
        Self::new(a, q, mu_y, noise_sigma)
    }

    pub fn with_feasible_set(mut self, set: FeasibleSet) -> Result<Self, ProblemError> {
        if let Some(n) = set.dim() {
            if n != self.a.cols() {
                return Err(ProblemError::Core(
                    crate::error::CoreError::DimensionMismatch {
                        expected: self.a.cols(),
                        found: n,
                    },
                ));
            }
        }
        self.set = set;
        Ok(self)
    }

    pub fn with_noise(mut self, noise_sigma: f64) -> Self {
        self.noise_sigma = noise_sigma;
        self.constants.sigma = noise_sigma;
        self
    }

    pub fn with_eps0(mut self, eps0: f64) -> Self {
        self.constants.eps0 = eps0;
        self
    }

    pub fn coupling(&self) -> &Matrix {
        &self.a
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn mu_y(&self) -> f64 {
        self.mu_y
    }

    pub fn noise_sigma(&self) -> f64 {
        self.noise_sigma
    }

    /// `AAᵀ/μ_y + qI`, the Hessian of `P` when `y` is unconstrained.
    pub fn primal_hessian(&self) -> &Matrix {
        &self.primal_hessian
    }

    /// Ascending eigenvalues of [`Self::primal_hessian`].
    pub fn primal_eigenvalues(&self) -> &[f64] {
        &self.primal_eigenvalues
    }

    fn unconstrained_primal(&self) -> bool {
        matches!(self.set, FeasibleSet::AllSpace)
    }

    fn primal_bounded_below(&self) -> bool {
        self.unconstrained_primal() && self.primal_eigenvalues[0] >= 0.0
    }
}

impl SaddleProblem for QuadraticGame {
    fn dims(&self) -> (usize, usize) {
        (self.a.rows(), self.a.cols())
    }

    fn feasible_set(&self) -> &FeasibleSet {
        &self.set
    }

    fn constants(&self) -> &ProblemConstants {
        &self.constants
    }

    fn value(&self, z: &PrimalDualPoint) -> f64 {
        let ay = self.a.mul_vec(&z.y);
        z.x.dot(&ay) - 0.5 * self.mu_y * z.y.norm_squared() + 0.5 * self.q * z.x.norm_squared()
    }

    fn exact_gradient(&self, z: &PrimalDualPoint) -> GradientPair {
        let mut gx = self.a.mul_vec(&z.y);
        gx.axpy(self.q, &z.x);
        let mut gy = self.a.tr_mul_vec(&z.x);
        gy.axpy(-self.mu_y, &z.y);
        GradientPair::new(gx, gy)
    }

    fn stochastic_gradient(
        &self,
        z: &PrimalDualPoint,
        batch: usize,
        rng: &mut dyn RngCore,
    ) -> GradientPair {
        let mut g = self.exact_gradient(z);
        if self.noise_sigma > 0.0 {
            let (d, dp) = self.dims();
            // total variance over all d + d' coordinates is σ²/batch
            let std = self.noise_sigma / libm::sqrt(((d + dp) * batch.max(1)) as f64);
            g.gx.axpy(1.0, &gaussian_vector(d, std, rng));
            g.gy.axpy(1.0, &gaussian_vector(dp, std, rng));
        }
        g
    }

    fn primal_value(&self, x: &Vector) -> Result<f64, ProblemError> {
        let y = self.best_response_y(x)?;
        Ok(self.value(&PrimalDualPoint::new(x.clone(), y)))
    }

    fn optimal_primal_value(&self) -> Result<f64, ProblemError> {
        if self.primal_bounded_below() {
            Ok(0.0)
        } else {
            Err(ProblemError::Unsupported("optimal_primal_value"))
        }
    }

    fn primal_minimizer(&self) -> Result<Vector, ProblemError> {
        if self.primal_bounded_below() {
            Ok(Vector::zeros(self.a.rows()))
        } else {
            Err(ProblemError::Unsupported("primal_minimizer"))
        }
    }

    fn best_response_y(&self, x: &Vector) -> Result<Vector, ProblemError> {
        // the y-part is an isotropic concave quadratic, so the constrained
        // maximizer is the projection of the unconstrained one
        let target = self.a.tr_mul_vec(x).scaled(1.0 / self.mu_y);
        Ok(self.set.project(&target)?)
    }

    fn best_response_x(&self, y: &Vector) -> Result<Vector, ProblemError> {
        if self.q <= 0.0 {
            return Err(ProblemError::Unsupported("best_response_x"));
        }
        Ok(self.a.mul_vec(y).scaled(-1.0 / self.q))
    }

    fn best_response_x_regularized(
        &self,
        y: &Vector,
        x0: &Vector,
        gamma: f64,
    ) -> Result<Vector, ProblemError> {
        let curvature = self.q + gamma;
        if !(curvature > 0.0) {
            return Err(ProblemError::NotStronglyConvex { q: self.q, gamma });
        }
        let mut x = x0.scaled(gamma);
        x.axpy(-1.0, &self.a.mul_vec(y));
        x.scale(1.0 / curvature);
        Ok(x)
    }

    fn saddle_point(&self) -> Result<PrimalDualPoint, ProblemError> {
        let (d, dp) = self.dims();
        let origin_feasible = self.set.contains(&Vector::zeros(dp), 0.0);
        if self.q > 0.0 && origin_feasible {
            Ok(PrimalDualPoint::zeros(d, dp))
        } else {
            Err(ProblemError::Unsupported("saddle_point"))
        }
    }
}

/// `U diag(s) Vᵀ` with Haar-ish orthogonal factors from Gram-Schmidt on
/// Gaussian matrices. `singular_values` must have `min(d, d')` entries.
pub fn random_coupling(
    d: usize,
    d_prime: usize,
    singular_values: &[f64],
    rng: &mut dyn RngCore,
) -> Result<Matrix, ProblemError> {
    let k = d.min(d_prime);
    if singular_values.len() != k {
        return Err(ProblemError::InvalidParameter(alloc::format!(
            "need {k} singular values, got {}",
            singular_values.len()
        )));
    }
    let u = random_orthonormal_columns(d, k, rng);
    let v = random_orthonormal_columns(d_prime, k, rng);
    let mut a = Matrix::zeros(d, d_prime);
    for (c, s) in singular_values.iter().enumerate() {
        for i in 0..d {
            for j in 0..d_prime {
                a[(i, j)] += s * u[c][i] * v[c][j];
            }
        }
    }
    Ok(a)
}

fn random_orthonormal_columns(n: usize, k: usize, rng: &mut dyn RngCore) -> Vec<Vector> {
    let mut cols: Vec<Vector> = Vec::with_capacity(k);
    while cols.len() < k {
        let mut v = gaussian_vector(n, 1.0, rng);
        for c in &cols {
            let proj = v.dot(c);
            v.axpy(-proj, c);
        }
        let norm = v.norm();
        if norm > 1e-8 {
            v.scale(1.0 / norm);
            cols.push(v);
        }
    }
    cols
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn z1(x: f64, y: f64) -> PrimalDualPoint {
        PrimalDualPoint::new(Vector::from([x]), Vector::from([y]))
    }

    #[test]
    fn scalar_example_value_and_gradient() {
        let p = QuadraticGame::scalar_example();
        assert!((p.value(&z1(1.0, 1.0)) - 0.25).abs() < 1e-15);
        let g = p.exact_gradient(&z1(1.0, 1.0));
        assert_eq!(g.gx[0], 0.5);
        assert_eq!(g.gy[0], 0.0);
        assert_eq!(p.value(&z1(0.0, 0.0)), 0.0);
    }

    #[test]
    fn scalar_example_primal() {
        let p = QuadraticGame::scalar_example();
        assert!((p.primal_value(&Vector::from([1.0])).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(p.primal_value(&Vector::from([0.0])).unwrap(), 0.0);
        assert_eq!(p.constants().rho, 0.5);
        assert!((p.constants().mu_pl - 0.5).abs() < 1e-12);
        assert_eq!(p.constants().mu_x_pl, 0.0);
        // min_x f(x, 1) = −∞
        assert!(p.best_response_x(&Vector::from([1.0])).is_err());
        assert!(p.saddle_point().is_err());
    }

    #[test]
    fn smooth_primal_is_l_over_two() {
        let p = QuadraticGame::smooth_primal(3, 0.1, 0.1).unwrap();
        let x = Vector::from([0.3, -1.0, 2.0]);
        let expected = 0.05 * x.norm_squared();
        assert!((p.primal_value(&x).unwrap() - expected).abs() < 1e-12);
        assert!((p.constants().l_primal - 0.1).abs() < 1e-9);
        // per-coordinate block [[q, 1], [1, −μ_y]]
        let (q, m): (f64, f64) = (0.1 - 10.0, 0.1);
        let disc = libm::sqrt((q + m) * (q + m) + 4.0);
        let ell = (((q - m) - disc) / 2.0)
            .abs()
            .max((((q - m) + disc) / 2.0).abs());
        assert!((p.constants().ell - ell).abs() < 1e-9);
    }

    #[test]
    fn regularized_best_response_examples() {
        let p = QuadraticGame::scalar_example();
        let x = p
            .best_response_x_regularized(&Vector::from([0.0]), &Vector::from([1.0]), 1.0)
            .unwrap();
        assert!((x[0] - 2.0).abs() < 1e-15);

        let x = p
            .best_response_x_regularized(&Vector::from([0.0]), &Vector::from([0.0]), 0.7)
            .unwrap();
        assert_eq!(x[0], 0.0);

        let near = p
            .best_response_x_regularized(&Vector::from([1.0]), &Vector::from([0.0]), 0.5 + 1e-9)
            .unwrap();
        assert!(near[0].is_finite() && near[0].abs() > 1e8);
        assert!(matches!(
            p.best_response_x_regularized(&Vector::from([1.0]), &Vector::from([0.0]), 0.5),
            Err(ProblemError::NotStronglyConvex { .. })
        ));
    }

    #[test]
    fn ball_best_response_is_projection() {
        let p = QuadraticGame::scalar_example()
            .with_feasible_set(FeasibleSet::ball(Vector::from([0.0]), 0.5).unwrap())
            .unwrap();
        let y = p.best_response_y(&Vector::from([2.0])).unwrap();
        assert_eq!(y[0], 0.5);
        assert!(p.optimal_primal_value().is_err());
    }

    #[test]
    fn coupling_has_requested_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_coupling(4, 3, &[0.5, 0.75, 1.0], &mut rng).unwrap();
        let gram = a.transpose().mul(&a);
        let ev = symmetric_eigenvalues(&gram);
        for (got, want) in ev.iter().zip([0.25, 0.5625, 1.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn noiseless_stochastic_equals_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = QuadraticGame::with_singular_values(3, 2, &[0.6, 0.9], -0.2, 0.5, 0.0, &mut rng)
            .unwrap();
        let z = PrimalDualPoint::new(Vector::from([0.1, 0.2, 0.3]), Vector::from([1.0, -1.0]));
        assert_eq!(p.stochastic_gradient(&z, 1, &mut rng), p.exact_gradient(&z));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(QuadraticGame::new(Matrix::identity(2), 0.0, 0.0, 0.0).is_err());
        assert!(QuadraticGame::new(Matrix::identity(2), f64::NAN, 1.0, 0.0).is_err());
        assert!(QuadraticGame::scalar_example()
            .with_feasible_set(FeasibleSet::ball(Vector::zeros(2), 1.0).unwrap())
            .is_err());
    }
}
