use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{gaussian_vector, ProblemConstants, SaddleProblem};
use crate::error::ProblemError;
use crate::geometry::{FeasibleSet, GradientPair, PrimalDualPoint};
use crate::linalg::{solve, symmetric_eigenvalues, Matrix, Vector};

/// Labeled feature rows, labels are `+1` / `-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct AucDataset {
    pub features: Matrix,
    pub labels: Vec<i8>,
}

impl AucDataset {
    pub fn new(features: Matrix, labels: Vec<i8>) -> Result<Self, ProblemError> {
        if features.rows() != labels.len() {
            return Err(ProblemError::InvalidParameter(alloc::format!(
                "{} feature rows but {} labels",
                features.rows(),
                labels.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|l| **l != 1 && **l != -1) {
            return Err(ProblemError::InvalidParameter(alloc::format!(
                "label {bad} is not +1/-1"
            )));
        }
        Ok(Self { features, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|l| **l == 1).count()
    }

    pub fn positive_fraction(&self) -> f64 {
        self.positives() as f64 / self.len() as f64
    }

    /// `wᵀv` for every row.
    pub fn scores(&self, w: &Vector) -> Vec<f64> {
        self.features.mul_vec(w).into_inner()
    }

    /// Mean feature vector of one class.
    pub fn class_mean(&self, label: i8) -> Vector {
        let mut sum = Vector::zeros(self.dim());
        let mut count = 0usize;
        for (i, l) in self.labels.iter().enumerate() {
            if *l == label {
                sum.axpy(1.0, &Vector::from(self.features.row(i)));
                count += 1;
            }
        }
        if count > 0 {
            sum.scale(1.0 / count as f64);
        }
        sum
    }
}

/// Two unit-variance Gaussian clouds whose means sit `±u` along a random
/// unit direction `u`, so the class means are 2 apart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticImbalancedDataset {
    pub n: usize,
    pub d: usize,
    pub positive_ratio: f64,
    pub seed: u64,
}

const HALF_SEPARATION: f64 = 1.0;

impl SyntheticImbalancedDataset {
    pub fn new(n: usize, d: usize, positive_ratio: f64, seed: u64) -> Self {
        Self {
            n,
            d,
            positive_ratio,
            seed,
        }
    }

    pub fn generate(&self) -> Result<AucDataset, ProblemError> {
        Ok(self.generate_with_holdout(0)?.0)
    }

    /// Training set plus a holdout of `holdout_n` rows drawn from the same
    /// class-conditional distributions and ratio.
    pub fn generate_with_holdout(
        &self,
        holdout_n: usize,
    ) -> Result<(AucDataset, AucDataset), ProblemError> {
        if !(self.positive_ratio > 0.0 && self.positive_ratio < 1.0) {
            return Err(ProblemError::InvalidParameter(
                "positive_ratio must lie in (0, 1)".into(),
            ));
        }
        if self.n < 10 || self.d == 0 {
            return Err(ProblemError::InvalidParameter(
                "need n >= 10 and d >= 1".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut direction = gaussian_vector(self.d, 1.0, &mut rng);
        let norm = direction.norm();
        direction.scale(HALF_SEPARATION / norm);

        let train = self.sample(self.n, &direction, &mut rng)?;
        let holdout = if holdout_n > 0 {
            self.sample(holdout_n, &direction, &mut rng)?
        } else {
            AucDataset {
                features: Matrix::zeros(0, self.d),
                labels: Vec::new(),
            }
        };
        Ok((train, holdout))
    }

    fn sample(
        &self,
        n: usize,
        direction: &Vector,
        rng: &mut ChaCha8Rng,
    ) -> Result<AucDataset, ProblemError> {
        let n_pos = libm::round(n as f64 * self.positive_ratio) as usize;
        if n_pos == 0 {
            return Err(ProblemError::DegenerateDataset(1));
        }
        if n_pos >= n {
            return Err(ProblemError::DegenerateDataset(-1));
        }
        let mut labels: Vec<i8> = (0..n).map(|i| if i < n_pos { 1 } else { -1 }).collect();
        labels.shuffle(rng);
        let mut data = Vec::with_capacity(n * self.d);
        for label in &labels {
            let noise = gaussian_vector(self.d, 1.0, rng);
            let sign = f64::from(*label);
            data.extend(
                noise
                    .iter()
                    .zip(direction.iter())
                    .map(|(e, m)| e + sign * m),
            );
        }
        AucDataset::new(Matrix::from_row_major(n, self.d, data)?, labels)
    }
}

/// Square-loss AUC surrogate for a linear scorer.
///
/// Primal variables are packed as `x = (w, a, b) ∈ R^{d+2}`, the dual is the
/// scalar `α`. Per sample `(v, y)` with `s = wᵀv`:
///
/// ```text
/// (1−p)(s − a)²·[y=1] + p(s − b)²·[y=−1]
///   + 2(1+α)(p·s·[y=−1] − (1−p)·s·[y=1]) − p(1−p)α²
/// ```
///
/// The objective is jointly quadratic, so the constants and `min P` are
/// computed exactly from the full-batch Hessian.
#[derive(Debug, Clone)]
pub struct AucLinearProblem {
    data: AucDataset,
    p: f64,
    set: FeasibleSet,
    constants: ProblemConstants,
    primal_optimum: Option<(Vector, f64)>,
}

impl AucLinearProblem {
    pub fn new(data: AucDataset) -> Result<Self, ProblemError> {
        let n_pos = data.positives();
        if n_pos == 0 {
            return Err(ProblemError::DegenerateDataset(1));
        }
        if n_pos == data.len() {
            return Err(ProblemError::DegenerateDataset(-1));
        }
        let p = data.positive_fraction();
        let mut prob = Self {
            data,
            p,
            set: FeasibleSet::AllSpace,
            constants: ProblemConstants {
                ell: 1.0,
                mu_y: 2.0 * p * (1.0 - p),
                rho: 0.0,
                l_primal: 0.0,
                mu_pl: 0.0,
                mu_x_pl: 0.0,
                sigma: 0.0,
                b_bound: 0.0,
                eps0: 0.0,
            },
            primal_optimum: None,
        };
        prob.analyze();
        Ok(prob)
    }

    /// Restricts `α` to `[lower, upper]`.
    pub fn with_alpha_interval(mut self, lower: f64, upper: f64) -> Result<Self, ProblemError> {
        self.set = FeasibleSet::boxed(Vector::from([lower]), Vector::from([upper]))?;
        self.analyze();
        Ok(self)
    }

    pub fn dataset(&self) -> &AucDataset {
        &self.data
    }

    pub fn positive_fraction(&self) -> f64 {
        self.p
    }

    pub fn feature_dim(&self) -> usize {
        self.data.dim()
    }

    /// The `w` block of a packed primal vector.
    pub fn weights<'x>(&self, x: &'x Vector) -> &'x [f64] {
        &x.as_slice()[..self.data.dim()]
    }

    /// Full-batch Hessian in the order `(w, a, b, α)`.
    pub fn hessian(&self) -> Matrix {
        let d = self.data.dim();
        let n = self.data.len() as f64;
        let p = self.p;
        let (ia, ib, ialpha) = (d, d + 1, d + 2);
        let mut h = Matrix::zeros(d + 3, d + 3);
        for (i, label) in self.data.labels.iter().enumerate() {
            let v = self.data.features.row(i);
            let (wq, cross_alpha) = if *label == 1 {
                (2.0 * (1.0 - p), -2.0 * (1.0 - p))
            } else {
                (2.0 * p, 2.0 * p)
            };
            let shift = if *label == 1 { ia } else { ib };
            for r in 0..d {
                for c in 0..d {
                    h[(r, c)] += wq * v[r] * v[c] / n;
                }
                h[(r, shift)] -= wq * v[r] / n;
                h[(shift, r)] -= wq * v[r] / n;
                h[(r, ialpha)] += cross_alpha * v[r] / n;
                h[(ialpha, r)] += cross_alpha * v[r] / n;
            }
            h[(shift, shift)] += wq / n;
        }
        h[(ialpha, ialpha)] = -2.0 * p * (1.0 - p);
        h
    }

    fn analyze(&mut self) {
        let d = self.data.dim();
        let nx = d + 2;
        let h = self.hessian();
        let ev = symmetric_eigenvalues(&h);
        let ell = ev.iter().fold(0.0_f64, |m, v| m.max(v.abs()));

        let mut hxx = Matrix::zeros(nx, nx);
        for r in 0..nx {
            for c in 0..nx {
                hxx[(r, c)] = h[(r, c)];
            }
        }
        let hxx_min = symmetric_eigenvalues(&hxx)[0];

        let mu = 2.0 * self.p * (1.0 - self.p);
        let mut hp = hxx.clone();
        for r in 0..nx {
            for c in 0..nx {
                hp[(r, c)] += h[(r, d + 2)] * h[(c, d + 2)] / mu;
            }
        }
        let hp_ev = symmetric_eigenvalues(&hp);

        self.constants.ell = ell;
        self.constants.mu_y = mu;
        self.constants.rho = (-hxx_min).max(0.0);
        self.constants.l_primal = hp_ev.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        self.constants.mu_pl = if hp_ev[0] > 1e-12 { hp_ev[0] } else { 0.0 };
        self.constants.mu_x_pl = if hxx_min > 1e-12 { hxx_min } else { 0.0 };

        self.primal_optimum = None;
        if matches!(self.set, FeasibleSet::AllSpace) && hp_ev[0] > 1e-12 {
            let origin = Vector::zeros(nx);
            let grad0 = self.primal_gradient_unconstrained(&origin);
            if let Some(x_star) = solve(&hp, &grad0.scaled(-1.0)) {
                if let Ok(value) = self.primal_value(&x_star) {
                    self.primal_optimum = Some((x_star, value));
                }
            }
        }
    }

    fn primal_gradient_unconstrained(&self, x: &Vector) -> Vector {
        let alpha = self.alpha_star(x);
        let z = PrimalDualPoint::new(x.clone(), Vector::from([alpha]));
        self.exact_gradient(&z).gx
    }

    fn alpha_star(&self, x: &Vector) -> f64 {
        let d = self.data.dim();
        let w = Vector::from(&x.as_slice()[..d]);
        let scores = self.data.features.mul_vec(&w);
        let n = self.data.len() as f64;
        let (mut s_pos, mut s_neg) = (0.0, 0.0);
        for (s, l) in scores.iter().zip(&self.data.labels) {
            if *l == 1 {
                s_pos += s;
            } else {
                s_neg += s;
            }
        }
        let p = self.p;
        (p * s_neg / n - (1.0 - p) * s_pos / n) / (p * (1.0 - p))
    }

    fn sample_gradient(
        &self,
        i: usize,
        x: &[f64],
        alpha: f64,
        gx: &mut [f64],
        galpha: &mut f64,
        weight: f64,
    ) {
        let d = self.data.dim();
        let v = self.data.features.row(i);
        let s: f64 = v.iter().zip(&x[..d]).map(|(a, b)| a * b).sum();
        let (a, b) = (x[d], x[d + 1]);
        let p = self.p;
        if self.data.labels[i] == 1 {
            let coef = 2.0 * (1.0 - p) * (s - a) - 2.0 * (1.0 + alpha) * (1.0 - p);
            for (g, vi) in gx[..d].iter_mut().zip(v) {
                *g += weight * coef * vi;
            }
            gx[d] += weight * (-2.0 * (1.0 - p) * (s - a));
            *galpha += weight * (-2.0 * (1.0 - p) * s - 2.0 * p * (1.0 - p) * alpha);
        } else {
            let coef = 2.0 * p * (s - b) + 2.0 * (1.0 + alpha) * p;
            for (g, vi) in gx[..d].iter_mut().zip(v) {
                *g += weight * coef * vi;
            }
            gx[d + 1] += weight * (-2.0 * p * (s - b));
            *galpha += weight * (2.0 * p * s - 2.0 * p * (1.0 - p) * alpha);
        }
    }
}

impl SaddleProblem for AucLinearProblem {
    fn dims(&self) -> (usize, usize) {
        (self.data.dim() + 2, 1)
    }

    fn feasible_set(&self) -> &FeasibleSet {
        &self.set
    }

    fn constants(&self) -> &ProblemConstants {
        &self.constants
    }

    fn value(&self, z: &PrimalDualPoint) -> f64 {
        let d = self.data.dim();
        let x = z.x.as_slice();
        let (a, b, alpha) = (x[d], x[d + 1], z.y[0]);
        let p = self.p;
        let scores = self.data.features.mul_vec(&Vector::from(&x[..d]));
        let total: f64 = scores
            .iter()
            .zip(&self.data.labels)
            .map(|(s, l)| {
                if *l == 1 {
                    (1.0 - p) * (s - a) * (s - a) - 2.0 * (1.0 + alpha) * (1.0 - p) * s
                } else {
                    p * (s - b) * (s - b) + 2.0 * (1.0 + alpha) * p * s
                }
            })
            .sum();
        total / self.data.len() as f64 - p * (1.0 - p) * alpha * alpha
    }

    fn exact_gradient(&self, z: &PrimalDualPoint) -> GradientPair {
        let mut gx = alloc::vec![0.0; self.data.dim() + 2];
        let mut galpha = 0.0;
        let weight = 1.0 / self.data.len() as f64;
        for i in 0..self.data.len() {
            self.sample_gradient(i, z.x.as_slice(), z.y[0], &mut gx, &mut galpha, weight);
        }
        GradientPair::new(Vector::from(gx), Vector::from([galpha]))
    }

    fn stochastic_gradient(
        &self,
        z: &PrimalDualPoint,
        batch: usize,
        rng: &mut dyn RngCore,
    ) -> GradientPair {
        let batch = batch.max(1);
        let mut gx = alloc::vec![0.0; self.data.dim() + 2];
        let mut galpha = 0.0;
        let weight = 1.0 / batch as f64;
        let n = self.data.len();
        for _ in 0..batch {
            let i = rng.random_range(0..n);
            self.sample_gradient(i, z.x.as_slice(), z.y[0], &mut gx, &mut galpha, weight);
        }
        GradientPair::new(Vector::from(gx), Vector::from([galpha]))
    }

    fn primal_value(&self, x: &Vector) -> Result<f64, ProblemError> {
        let y = self.best_response_y(x)?;
        Ok(self.value(&PrimalDualPoint::new(x.clone(), y)))
    }

    fn optimal_primal_value(&self) -> Result<f64, ProblemError> {
        self.primal_optimum
            .as_ref()
            .map(|(_, v)| *v)
            .ok_or(ProblemError::Unsupported("optimal_primal_value"))
    }

    fn primal_minimizer(&self) -> Result<Vector, ProblemError> {
        self.primal_optimum
            .as_ref()
            .map(|(x, _)| x.clone())
            .ok_or(ProblemError::Unsupported("primal_minimizer"))
    }

    fn best_response_y(&self, x: &Vector) -> Result<Vector, ProblemError> {
        Ok(self.set.project(&Vector::from([self.alpha_star(x)]))?)
    }
}

/// Empirical AUC: the fraction of (positive, negative) pairs the scores
/// rank correctly, ties counted as one half. Mid-rank formula, `O(n log n)`.
pub fn empirical_auc(scores: &[f64], labels: &[i8]) -> Result<f64, ProblemError> {
    if scores.len() != labels.len() {
        return Err(ProblemError::InvalidParameter(
            "scores and labels differ in length".into(),
        ));
    }
    let n_pos = labels.iter().filter(|l| **l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 {
        return Err(ProblemError::DegenerateDataset(1));
    }
    if n_neg == 0 {
        return Err(ProblemError::DegenerateDataset(-1));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| scores[i].total_cmp(&scores[j]));
    let mut rank_sum_pos = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // ranks start..end (1-based start+1..=end) share their mean
        let mid_rank = (start + 1 + end) as f64 / 2.0;
        let pos_in_group = order[start..end]
            .iter()
            .filter(|&&i| labels[i] == 1)
            .count();
        rank_sum_pos += mid_rank * pos_in_group as f64;
        start = end;
    }
    let (np, nn) = (n_pos as f64, n_neg as f64);
    Ok((rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn))
}
