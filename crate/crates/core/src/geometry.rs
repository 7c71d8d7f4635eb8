//! Primal-dual points, feasible sets and the proximal steps every update
//! rule is built from.
//!
//! The primal block `x` is always unconstrained; only the dual block `y`
//! lives in a [`FeasibleSet`].

use alloc::vec::Vec;

use crate::error::CoreError;
use crate::linalg::Vector;

/// Absolute tolerance used when checking membership after a projection.
pub const MEMBERSHIP_TOL: f64 = 1e-12;

/// The pair `z = (x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalDualPoint {
    pub x: Vector,
    pub y: Vector,
}

impl PrimalDualPoint {
    pub fn new(x: Vector, y: Vector) -> Self {
        Self { x, y }
    }

    pub fn zeros(d: usize, d_prime: usize) -> Self {
        Self::new(Vector::zeros(d), Vector::zeros(d_prime))
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.x.len(), self.y.len())
    }

    /// `‖z‖² = ‖x‖² + ‖y‖²`
    pub fn norm_squared(&self) -> f64 {
        self.x.norm_squared() + self.y.norm_squared()
    }

    pub fn distance_squared(&self, other: &PrimalDualPoint) -> f64 {
        self.x.distance_squared(&other.x) + self.y.distance_squared(&other.y)
    }

    /// Stacks `(x, y)` into one vector of length `d + d'`.
    pub fn to_stacked(&self) -> Vector {
        self.x.concat(&self.y)
    }

    /// Splits a stacked vector back into its blocks.
    pub fn from_stacked(v: &Vector, d: usize) -> Self {
        let s = v.as_slice();
        Self::new(Vector::from(&s[..d]), Vector::from(&s[d..]))
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Raw partial gradients `(∇ₓf, ∇ᵧf)`. The monotone-operator form with the
/// sign flip on the dual block comes from [`GradientPair::as_operator`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradientPair {
    pub gx: Vector,
    pub gy: Vector,
}

impl GradientPair {
    pub fn new(gx: Vector, gy: Vector) -> Self {
        Self { gx, gy }
    }

    /// `F = (gx, −gy)` stacked into one vector.
    pub fn as_operator(&self) -> Vector {
        let mut out = Vec::with_capacity(self.gx.len() + self.gy.len());
        out.extend_from_slice(self.gx.as_slice());
        out.extend(self.gy.iter().map(|v| -v));
        Vector::from(out)
    }
}

/// See [`GradientPair::as_operator`].
pub fn as_operator(g: &GradientPair) -> Vector {
    g.as_operator()
}

/// Closed convex set for the dual variable.
#[derive(Debug, Clone, PartialEq)]
pub enum FeasibleSet {
    AllSpace,
    EuclideanBall { center: Vector, radius: f64 },
    Box { lower: Vector, upper: Vector },
}

impl FeasibleSet {
    pub fn ball(center: Vector, radius: f64) -> Result<Self, CoreError> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(CoreError::InvalidSet(
                "ball radius must be positive and finite",
            ));
        }
        if !center.is_finite() {
            return Err(CoreError::InvalidSet("ball center must be finite"));
        }
        Ok(Self::EuclideanBall { center, radius })
    }

    pub fn boxed(lower: Vector, upper: Vector) -> Result<Self, CoreError> {
        if lower.len() != upper.len() {
            return Err(CoreError::DimensionMismatch {
                expected: lower.len(),
                found: upper.len(),
            });
        }
        if lower.iter().zip(upper.iter()).any(|(l, u)| !(l <= u)) {
            return Err(CoreError::InvalidSet(
                "box needs lower <= upper componentwise",
            ));
        }
        Ok(Self::Box { lower, upper })
    }

    /// Dimension the set is tied to, `None` for the whole space.
    pub fn dim(&self) -> Option<usize> {
        match self {
            Self::AllSpace => None,
            Self::EuclideanBall { center, .. } => Some(center.len()),
            Self::Box { lower, .. } => Some(lower.len()),
        }
    }

    fn check_dim(&self, n: usize) -> Result<(), CoreError> {
        match self.dim() {
            Some(expected) if expected != n => {
                Err(CoreError::DimensionMismatch { expected, found: n })
            }
            _ => Ok(()),
        }
    }

    /// Membership with absolute slack `tol` on the constraint residual.
    pub fn contains(&self, p: &Vector, tol: f64) -> bool {
        if self.check_dim(p.len()).is_err() {
            return false;
        }
        match self {
            Self::AllSpace => true,
            Self::EuclideanBall { center, radius } => p.distance(center) <= radius + tol,
            Self::Box { lower, upper } => p
                .iter()
                .zip(lower.iter().zip(upper.iter()))
                .all(|(v, (l, u))| *v >= l - tol && *v <= u + tol),
        }
    }

    /// Euclidean projection onto the set.
    pub fn project(&self, p: &Vector) -> Result<Vector, CoreError> {
        self.check_dim(p.len())?;
        Ok(match self {
            Self::AllSpace => p.clone(),
            Self::EuclideanBall { center, radius } => {
                let dist = p.distance(center);
                if dist <= *radius {
                    p.clone()
                } else {
                    let mut out = p.sub(center);
                    out.scale(radius / dist);
                    out.axpy(1.0, center);
                    out
                }
            }
            Self::Box { lower, upper } => Vector::from(
                p.iter()
                    .zip(lower.iter().zip(upper.iter()))
                    .map(|(v, (l, u))| v.clamp(*l, *u))
                    .collect::<Vec<_>>(),
            ),
        })
    }

    /// Projection under the diagonal metric `Σ wᵢ (qᵢ − pᵢ)²`, `w > 0`.
    ///
    /// The ball case solves the scalar KKT equation for the multiplier by
    /// bisection; the radius residual is monotone in the multiplier.
    pub fn project_weighted(&self, p: &Vector, weights: &Vector) -> Result<Vector, CoreError> {
        self.check_dim(p.len())?;
        if weights.len() != p.len() {
            return Err(CoreError::DimensionMismatch {
                expected: p.len(),
                found: weights.len(),
            });
        }
        match self {
            Self::AllSpace | Self::Box { .. } => self.project(p),
            Self::EuclideanBall { center, radius } => {
                let offset = p.sub(center);
                if offset.norm() <= *radius {
                    return Ok(p.clone());
                }
                let at = |lambda: f64| -> Vector {
                    Vector::from(
                        offset
                            .iter()
                            .zip(weights.iter())
                            .map(|(o, w)| w * o / (w + lambda))
                            .collect::<Vec<_>>(),
                    )
                };
                let w_max = weights.iter().fold(0.0_f64, |m, w| m.max(*w));
                let mut lo = 0.0;
                let mut hi = w_max * offset.norm() / radius;
                while at(hi).norm() > *radius {
                    hi *= 2.0;
                }
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if at(mid).norm() > *radius {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi - lo <= 1e-12 * hi.max(1e-300) {
                        break;
                    }
                }
                let mut shifted = at(hi);
                let n = shifted.norm();
                if n > *radius {
                    shifted.scale(radius / n);
                }
                shifted.axpy(1.0, center);
                Ok(shifted)
            }
        }
    }
}

/// See [`FeasibleSet::project`].
pub fn project(set: &FeasibleSet, p: &Vector) -> Result<Vector, CoreError> {
    set.project(p)
}

fn split_operator<'a>(
    zbar: &PrimalDualPoint,
    g: &'a Vector,
) -> Result<(&'a [f64], &'a [f64]), CoreError> {
    let (d, dp) = zbar.dims();
    if g.len() != d + dp {
        return Err(CoreError::DimensionMismatch {
            expected: d + dp,
            found: g.len(),
        });
    }
    Ok(g.as_slice().split_at(d))
}

fn project_dual(
    zbar: &PrimalDualPoint,
    g_y: &[f64],
    set: &FeasibleSet,
) -> Result<Vector, CoreError> {
    let target = Vector::from(
        zbar.y
            .iter()
            .zip(g_y)
            .map(|(a, b)| a - b)
            .collect::<Vec<_>>(),
    );
    set.project(&target)
}

/// `argmin_{z ∈ Rᵈ×Y} gᵀz + ½‖z − z̄‖²`, with `g` already scaled by the step.
pub fn prox_step(
    zbar: &PrimalDualPoint,
    g: &Vector,
    set: &FeasibleSet,
) -> Result<PrimalDualPoint, CoreError> {
    let (g_x, g_y) = split_operator(zbar, g)?;
    let x = Vector::from(
        zbar.x
            .iter()
            .zip(g_x)
            .map(|(a, b)| a - b)
            .collect::<Vec<_>>(),
    );
    Ok(PrimalDualPoint::new(x, project_dual(zbar, g_y, set)?))
}

/// `argmin gᵀz + ½‖z − z̄‖² + (γη/2)‖x − x₀‖²`.
///
/// The x-minimizer is `(x̄ − g_x + γη·x₀)/(1 + γη)`; with `γη = 0` this is
/// exactly [`prox_step`].
pub fn prox_step_regularized(
    zbar: &PrimalDualPoint,
    g: &Vector,
    x0: &Vector,
    gamma_eta: f64,
    set: &FeasibleSet,
) -> Result<PrimalDualPoint, CoreError> {
    if !(gamma_eta >= 0.0) {
        return Err(CoreError::NegativeRegularization(gamma_eta));
    }
    if gamma_eta == 0.0 {
        return prox_step(zbar, g, set);
    }
    let (g_x, g_y) = split_operator(zbar, g)?;
    if x0.len() != zbar.x.len() {
        return Err(CoreError::DimensionMismatch {
            expected: zbar.x.len(),
            found: x0.len(),
        });
    }
    let denom = 1.0 + gamma_eta;
    let x = Vector::from(
        zbar.x
            .iter()
            .zip(g_x)
            .zip(x0.iter())
            .map(|((a, b), anchor)| (a - b + gamma_eta * anchor) / denom)
            .collect::<Vec<_>>(),
    );
    Ok(PrimalDualPoint::new(x, project_dual(zbar, g_y, set)?))
}
