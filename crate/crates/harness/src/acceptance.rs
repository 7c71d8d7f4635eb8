//! Built-in acceptance suite.
//!
//! Each criterion is a scaled-down, property-style check of the method's
//! claims. Runtimes are part of the criteria and assume an optimized build.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use pes_core::metrics::{estimate_pl_constant, gap_k, numeric_inner_solve_gap};
use pes_core::solvers::{
    adagrad_epoch, adagrad_epoch_metered, ogda_epoch, pes_solve, schedule_adagrad,
    schedule_from_theorem1, schedule_from_theorem2, theorem1_epochs, AdaGradEpoch, AdaGradState,
    Schedule, STOC_AGDA_GRID,
};
use pes_core::{
    AdaGradParams, AucLinearProblem, FeasibleSet, OracleMeter, PesConfig, PrimalDualPoint,
    ProblemConstants, QuadraticGame, RegularizedProblem, SaddleProblem, SyntheticImbalancedDataset,
    UpdateVariant, Vector,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::output::{emit_csv, median};
use crate::run::{run_experiment, RunOptions, RunRecord, RunStatus};
use crate::setup::initial_gap_bound;
use crate::spec::{ExperimentSpec, Method, ProblemSpec, ScheduleSource, SolverSpec};

#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "[{}] C{:<2} {} ({:.2}s): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.elapsed.as_secs_f64(),
            self.detail
        )
    }
}

/// `Ok(detail)` when the property holds, `Err(detail)` otherwise.
type Check = fn() -> Result<String, String>;

pub struct Criterion {
    pub id: u32,
    pub name: &'static str,
    pub time_limit: Duration,
    check: Check,
}

pub const CRITERIA: [Criterion; 11] = [
    Criterion {
        id: 1,
        name: "linear convergence (first regime)",
        time_limit: secs(5),
        check: linear_convergence,
    },
    Criterion {
        id: 2,
        name: "noise floor and target accuracy",
        time_limit: secs(60),
        check: noise_floor,
    },
    Criterion {
        id: 3,
        name: "second regime schedule and decay",
        time_limit: secs(5),
        check: second_regime,
    },
    Criterion {
        id: 4,
        name: "one-epoch OGDA bound",
        time_limit: secs(10),
        check: one_epoch_bound,
    },
    Criterion {
        id: 5,
        name: "gap oracle equivalence",
        time_limit: secs(10),
        check: gap_equivalence,
    },
    Criterion {
        id: 6,
        name: "PL constant recovery",
        time_limit: secs(5),
        check: pl_recovery,
    },
    Criterion {
        id: 7,
        name: "schedule algebra",
        time_limit: secs(1),
        check: schedule_algebra,
    },
    Criterion {
        id: 8,
        name: "AdaGrad structure",
        time_limit: secs(10),
        check: adagrad_structure,
    },
    Criterion {
        id: 9,
        name: "baseline ordering at equal budget",
        time_limit: secs(120),
        check: baseline_ordering,
    },
    Criterion {
        id: 10,
        name: "AUC sanity and determinism",
        time_limit: secs(60),
        check: auc_sanity,
    },
    Criterion {
        id: 11,
        name: "gradient checks",
        time_limit: secs(5),
        check: gradient_checks,
    },
];

const fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

impl Criterion {
    pub fn run(&self) -> CriterionResult {
        let start = Instant::now();
        let outcome = (self.check)();
        let elapsed = start.elapsed();
        let (mut passed, mut detail) = match outcome {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        if elapsed > self.time_limit {
            passed = false;
            detail = format!(
                "{detail}; runtime {:.2}s over the {}s limit",
                elapsed.as_secs_f64(),
                self.time_limit.as_secs()
            );
        }
        CriterionResult {
            id: self.id,
            name: self.name,
            passed,
            detail,
            elapsed,
        }
    }
}

pub fn run_all() -> Vec<CriterionResult> {
    CRITERIA.iter().map(Criterion::run).collect()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_vec(n: usize, scale: f64, rng: &mut ChaCha8Rng) -> Vector {
    Vector::from(
        (0..n)
            .map(|_| scale * (2.0 * rng.random::<f64>() - 1.0))
            .collect::<Vec<_>>(),
    )
}

/// `k` values evenly spaced over `[lo, hi]`.
fn spread(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    (0..k)
        .map(|i| hi - (hi - lo) * i as f64 / (k.max(2) - 1) as f64)
        .collect()
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// The first-regime test problem: `d = d' = 10`, singular values over
/// `[0.5, 1]`, `q = −0.3`, `μ_y = 0.5`, started at `x = 1`, `y = 0`.
fn first_regime_game(sigma: f64) -> Result<(QuadraticGame, PrimalDualPoint), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let game = QuadraticGame::with_singular_values(
        10,
        10,
        &spread(0.5, 1.0, 10),
        -0.3,
        0.5,
        sigma,
        &mut rng,
    )
    .map_err(err)?;
    let start = PrimalDualPoint::new(Vector::from(vec![1.0; 10]), Vector::zeros(10));
    Ok((game, start))
}

fn with_eps0(
    game: &QuadraticGame,
    start: &PrimalDualPoint,
    gamma: f64,
) -> Result<ProblemConstants, String> {
    let mut c = game.constants().clone();
    c.eps0 = initial_gap_bound(game, start, gamma).map_err(err)?;
    Ok(c)
}

/// Coefficient of determination of the least-squares line through `ys`
/// against `0, 1, 2, ...`.
fn r_squared(ys: &[f64]) -> f64 {
    let n = ys.len() as f64;
    let xs: Vec<f64> = (0..ys.len()).map(|i| i as f64).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if syy == 0.0 {
        return 1.0;
    }
    sxy * sxy / (sxx * syy)
}

/// Epochs run for the first-regime checks. The theorem's `K` is in the
/// hundreds with exponentially growing epochs; this prefix already spans
/// many orders of magnitude of the gap.
const FIRST_REGIME_EPOCHS: usize = 25;

fn linear_convergence() -> Result<String, String> {
    let (game, start) = first_regime_game(0.0)?;
    let c = with_eps0(&game, &start, 2.0 * game.constants().rho)?;
    let schedule = schedule_from_theorem1(&c, None, 1e-3).map_err(err)?;
    let theorem_k = schedule.epochs;
    let schedule = schedule.with_epochs(theorem_k.min(FIRST_REGIME_EPOCHS));
    let cfg = PesConfig::new(UpdateVariant::Ogda, schedule, 0);
    let run = pes_solve(&game, &cfg, &start).map_err(err)?;
    let gaps: Vec<f64> = run
        .traces
        .iter()
        .map(|t| t.objective_gap.ok_or("missing objective gap"))
        .collect::<Result<_, _>>()?;
    let mu = c.mu_pl;
    let bound = c.c() / (c.c() + 2.0 * mu) * 1.25;
    let worst = gaps.windows(2).map(|w| w[1] / w[0]).fold(0.0f64, f64::max);
    let logs: Vec<f64> = gaps.iter().map(|g| g.ln()).collect();
    let r2 = r_squared(&logs);
    let detail = format!(
        "{} of {theorem_k} epochs, worst ratio {worst:.4} (bound {bound:.4}), R² {r2:.4}, final gap {:.3e}",
        gaps.len(),
        gaps.last().copied().unwrap_or(f64::NAN)
    );
    ensure(
        worst <= bound && r2 >= 0.98 && gaps.iter().all(|g| *g > 0.0),
        || detail.clone(),
    )?;
    Ok(detail)
}

/// Epochs run for the noisy first-regime check (the theorem's `K` at this
/// accuracy is in the hundreds).
const NOISE_FLOOR_EPOCHS: usize = 20;

fn noise_floor() -> Result<String, String> {
    let eps = 1e-3;
    let (game, start) = first_regime_game(1.0)?;
    let c = with_eps0(&game, &start, 2.0 * game.constants().rho)?;
    let schedule = schedule_from_theorem1(&c, None, eps).map_err(err)?;
    let theorem_k = schedule.epochs;
    let schedule = schedule.with_epochs(NOISE_FLOOR_EPOCHS);
    let final_deltas = |s: &Schedule| -> Result<f64, String> {
        let deltas: Vec<f64> = (0..20u64)
            .into_par_iter()
            .map(|seed| {
                let cfg = PesConfig::new(UpdateVariant::Ogda, s.clone(), 1000 + seed);
                let run = pes_solve(&game, &cfg, &start).map_err(err)?;
                run.traces
                    .last()
                    .and_then(|t| t.delta_k)
                    .ok_or_else(|| "missing Δ".to_string())
            })
            .collect::<Result<_, _>>()?;
        median(&deltas).ok_or_else(|| "no runs".into())
    };
    let plain = final_deltas(&schedule)?;
    let slack = final_deltas(&schedule.clone().with_length_multiplier(10.0))?;
    let detail = format!(
        "K = {NOISE_FLOOR_EPOCHS} (theorem {theorem_k}): median Δ_K {plain:.3e} plain (≤ {:.0e}), {slack:.3e} with 10× epochs (≤ {eps:.0e})",
        10.0 * eps
    );
    ensure(plain <= 10.0 * eps && slack <= eps, || detail.clone())?;
    Ok(detail)
}

/// Epochs checked in the second regime.
const SECOND_REGIME_EPOCHS: usize = 8;

fn second_regime() -> Result<String, String> {
    // λ_min(AAᵀ)/μ_y + q ≈ 0.4 with q = −0.01
    let mu_y: f64 = 0.5;
    let q = -0.01;
    let s_min = ((0.4 - q) * mu_y).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let game =
        QuadraticGame::with_singular_values(5, 5, &spread(s_min, 0.9, 5), q, mu_y, 0.0, &mut rng)
            .map_err(err)?;
    let start = PrimalDualPoint::new(Vector::from(vec![1.0; 5]), Vector::zeros(5));
    let mu = game.constants().mu_pl;
    let c = with_eps0(&game, &start, mu / 4.0)?;
    let schedule = schedule_from_theorem2(&c, None, 1e-3).map_err(err)?;
    let decay_exact = schedule.decay == (-1.0f64 / 16.0).exp();
    let theorem_k = schedule.epochs;
    let schedule = schedule.with_epochs(SECOND_REGIME_EPOCHS);
    let cfg = PesConfig::new(UpdateVariant::Ogda, schedule, 0);
    let run = pes_solve(&game, &cfg, &start).map_err(err)?;
    let mut deltas = vec![run.start.delta.ok_or("missing Δ₁")?];
    for t in &run.traces {
        deltas.push(t.delta_k.ok_or("missing Δ")?);
    }
    let bound = (-1.0f64 / 16.0).exp() * 1.25;
    let worst = deltas
        .windows(2)
        .map(|w| w[1] / w[0])
        .fold(0.0f64, f64::max);
    let detail = format!(
        "μ = {mu:.4}, ρ = {:.2}, decay exact: {decay_exact}, worst Δ ratio {worst:.3e} over {} epochs of {theorem_k} (bound {bound:.4})",
        c.rho,
        run.traces.len()
    );
    ensure(decay_exact && worst <= bound, || detail.clone())?;
    Ok(detail)
}

fn one_epoch_bound() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for i in 0..50 {
        let (d, dp) = (2 + i % 4, 1 + i % 3);
        let svals: Vec<f64> = (0..d.min(dp)).map(|_| 0.2 + rng.random::<f64>()).collect();
        let q = 0.1 + rng.random::<f64>();
        let mu_y = 0.1 + rng.random::<f64>();
        let game = QuadraticGame::with_singular_values(d, dp, &svals, q, mu_y, 0.0, &mut rng)
            .map_err(err)?;
        let z0 = PrimalDualPoint::new(random_vec(d, 1.0, &mut rng), random_vec(dp, 1.0, &mut rng));
        let eta = 1.0 / (4.0 * 3f64.sqrt() * game.constants().ell);
        let t = 50 + 10 * i as u64;
        let z = ogda_epoch(&game, &z0, eta, t, &mut rng).map_err(err)?;
        let gap = gap_k(&game, &z, &z0.x, 0.0).map_err(err)?;
        let x_hat = game.best_response_x(&z.y).map_err(err)?;
        let y_hat = game.best_response_y(&z.x).map_err(err)?;
        let bound =
            (x_hat.distance_squared(&z0.x) + y_hat.distance_squared(&z0.y)) / (eta * t as f64);
        let ratio = gap / bound;
        worst = worst.max(ratio);
        ensure(gap <= bound * (1.0 + 1e-6), || {
            format!("instance {i}: gap {gap:.6e} > bound {bound:.6e}")
        })?;
    }
    Ok(format!("50 instances, worst gap/bound {worst:.4}"))
}

fn gap_equivalence() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let (d, dp) = (1 + i % 4, 1 + (i / 4) % 3);
        let svals: Vec<f64> = (0..d.min(dp))
            .map(|_| 0.1 + 1.5 * rng.random::<f64>())
            .collect();
        let q = -0.5 + rng.random::<f64>();
        let mu_y = 0.2 + rng.random::<f64>();
        let mut game = QuadraticGame::with_singular_values(d, dp, &svals, q, mu_y, 0.0, &mut rng)
            .map_err(err)?;
        if i % 2 == 1 {
            let center = random_vec(dp, 0.3, &mut rng);
            game = game
                .with_feasible_set(FeasibleSet::ball(center, 0.4).map_err(err)?)
                .map_err(err)?;
        }
        let gamma = (-q).max(0.0) + 0.1 + rng.random::<f64>();
        let z = PrimalDualPoint::new(random_vec(d, 2.0, &mut rng), random_vec(dp, 0.3, &mut rng));
        let x0 = random_vec(d, 2.0, &mut rng);
        let closed = gap_k(&game, &z, &x0, gamma).map_err(err)?;
        let numeric = numeric_inner_solve_gap(&game, &z, &x0, gamma, 1e-10).map_err(err)?;
        let diff = (closed - numeric.gap).abs();
        worst = worst.max(diff);
        ensure(diff <= 1e-8, || {
            format!(
                "instance {i}: closed {closed:.12e} vs numeric {:.12e}",
                numeric.gap
            )
        })?;
    }
    Ok(format!("100 instances, max |difference| {worst:.2e}"))
}

fn pl_recovery() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let scalar = estimate_pl_constant(&QuadraticGame::scalar_example(), 1000, 10.0, &mut rng)
        .map_err(err)?;
    ensure((scalar - 0.5).abs() <= 1e-6, || {
        format!("scalar example: {scalar}")
    })?;
    let mut worst = 0.0f64;
    for i in 0..5 {
        let game = QuadraticGame::with_singular_values(
            2,
            2,
            &[0.6 + 0.1 * i as f64, 1.2],
            -0.2,
            0.8,
            0.0,
            &mut rng,
        )
        .map_err(err)?;
        let lambda_min = game.primal_eigenvalues()[0];
        let mu = estimate_pl_constant(&game, 20_000, 1.0, &mut rng).map_err(err)?;
        let rel = (mu - lambda_min).abs() / lambda_min;
        worst = worst.max(rel);
        ensure(rel <= 0.05, || {
            format!("instance {i}: estimate {mu:.6} vs λ_min {lambda_min:.6}")
        })?;
    }
    Ok(format!(
        "scalar {scalar:.9}, worst relative error on random quadratics {worst:.4}"
    ))
}

fn schedule_constants(mu: f64, rho: f64, sigma: f64) -> ProblemConstants {
    ProblemConstants {
        ell: 2.0,
        mu_y: 0.5,
        rho,
        l_primal: 1.5,
        mu_pl: mu,
        mu_x_pl: 0.0,
        sigma,
        b_bound: 0.0,
        eps0: 2.0,
    }
}

fn schedule_algebra() -> Result<String, String> {
    let mut checked = 0;
    for (mu, rho) in [(0.2, 0.3), (0.05, 0.01), (0.4, 0.05), (1.0, 2.0)] {
        let c = schedule_constants(mu, rho, 1.0);
        let mut schedules = vec![schedule_from_theorem1(&c, None, 1e-3).map_err(err)?];
        if rho <= mu / 8.0 {
            schedules.push(schedule_from_theorem2(&c, None, 1e-3).map_err(err)?);
        }
        for s in &schedules {
            let base = s.eta(1) * s.length(1) as f64;
            for k in 1..=30 {
                // T_k is rounded up, so η_k·T_k sits within η_k of η₁·T₁·(1 ± ε)
                let dev = (s.eta(k) * s.length(k) as f64 - base).abs();
                ensure(dev <= s.eta(k) + 1e-12 * base, || {
                    format!("μ={mu} ρ={rho} k={k}: η·T drifted by {dev:.3e}")
                })?;
                checked += 1;
            }
        }
        let ada =
            schedule_adagrad(&c, (3, 1), None, &AdaGradParams::new(1.0), 1e-3).map_err(err)?;
        let base = ada.eta(1) * ada.stopping_scale(1).unwrap_or(f64::NAN);
        for k in 1..=30 {
            let prod = ada.eta(k) * ada.stopping_scale(k).unwrap_or(f64::NAN);
            ensure((prod - base).abs() <= 1e-9 * base, || {
                format!("adagrad k={k}: η·M = {prod} vs {base}")
            })?;
            checked += 1;
        }
    }

    let mut grid = 0;
    for (i, &eps) in [1e-2, 1e-3, 1e-4, 1e-5].iter().enumerate() {
        for &sigma in &[0.0, 0.5, 1.0, 3.0, 10.0] {
            let c = schedule_constants(0.1 + 0.1 * i as f64, 0.3, sigma);
            let eta0 = 0.1;
            // smallest K with K ≥ both logarithmic terms
            let inv_rate = (c.c() + 2.0 * c.mu_pl) / (2.0 * c.mu_pl);
            let a = inv_rate * (4.0 * c.eps0 / eps).ln();
            let b = |k: f64| {
                inv_rate
                    * (208.0 * eta0 * c.l_hat() * k * sigma * sigma
                        / ((c.c() + 2.0 * c.mu_pl) * eps))
                        .ln()
            };
            let brute = (1..1_000_000usize)
                .find(|&k| {
                    let kf = k as f64;
                    kf >= a && (sigma == 0.0 || kf >= b(kf))
                })
                .ok_or("no K below 10⁶")?;
            let k = theorem1_epochs(&c, eta0, eps);
            ensure(k.abs_diff(brute) <= 1, || {
                format!("ε={eps} σ={sigma}: K = {k}, direct evaluation {brute}")
            })?;
            grid += 1;
        }
    }
    Ok(format!(
        "{checked} η·T (or η·M) products constant, K agrees on {grid} grid points"
    ))
}

fn adagrad_structure() -> Result<String, String> {
    // accumulator monotone over 10⁴ noisy steps
    let game = QuadraticGame::scalar_example().with_noise(1.0);
    let z0 = PrimalDualPoint::new(Vector::from([1.0]), Vector::from([1.0]));
    let reg = RegularizedProblem::new(&game, z0.x.clone(), 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut state = AdaGradState::new(2);
    let mut z = z0.clone();
    for step in 0..10_000 {
        let before = state.s.clone();
        let g = reg.stochastic_gradient(&z, 1, &mut rng).as_operator();
        state.accumulate(&g);
        for i in 0..2 {
            ensure(state.s[i] >= before[i], || {
                format!("s[{i}] decreased at step {step}")
            })?;
        }
        z.x[0] = z0.x[0] - 0.05 * state.grad_sum[0] / (1.0 + state.s[0]);
        z.y[0] = z0.y[0] - 0.05 * state.grad_sum[1] / (1.0 + state.s[1]);
    }

    // large δ: one AdaGrad step is a plain dual-averaging step of size η/δ
    let game = QuadraticGame::scalar_example();
    let z0 = PrimalDualPoint::new(Vector::from([1.0]), Vector::from([-0.5]));
    let (eta, delta) = (0.2, 1e6);
    let params = AdaGradEpoch {
        delta,
        m: 1.0,
        big_m: 1e9,
        cap: 2,
    };
    let mut meter = OracleMeter::unlimited();
    let (out, st) =
        adagrad_epoch_metered(&game, &z0, eta, &params, 1, &mut rng, &mut meter).map_err(err)?;
    // the average of z₁ = z0 and z₂ recovers z₂
    let z2 = out.point.to_stacked().scaled(2.0).sub(&z0.to_stacked());
    let g = game.exact_gradient(&z0).as_operator();
    let plain_move = g.scaled(-eta / delta);
    let moved = z2.sub(&z0.to_stacked());
    let rel = moved.sub(&plain_move).norm() / plain_move.norm();
    let limit = 2.0 * st.s.max_abs() / delta;
    ensure(rel <= limit, || {
        format!("large-δ relative error {rel:.3e} > {limit:.3e}")
    })?;

    // stopping rule fires before the cap on noiseless quadratics
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut max_steps = 0;
    for i in 0..10 {
        let game = QuadraticGame::with_singular_values(
            3,
            2,
            &[0.5, 1.0],
            0.1 + 0.05 * i as f64,
            0.5,
            0.0,
            &mut rng,
        )
        .map_err(err)?;
        let z0 = PrimalDualPoint::new(random_vec(3, 1.0, &mut rng), random_vec(2, 1.0, &mut rng));
        let params = AdaGradEpoch {
            delta: 0.5,
            m: 1.0 / 5f64.sqrt(),
            big_m: 20.0,
            cap: 1_000_000,
        };
        let (_, steps) = adagrad_epoch(&game, &z0, 0.5, &params, &mut rng).map_err(err)?;
        ensure(steps < params.cap, || format!("instance {i} hit the cap"))?;
        max_steps = max_steps.max(steps);
    }
    Ok(format!(
        "s monotone over 10⁴ steps; large-δ error {rel:.2e} ≤ {limit:.2e}; rule fired on 10/10 (≤ {max_steps} steps)"
    ))
}

const BASELINE_BUDGET: u64 = 100_000;

fn baseline_spec() -> ExperimentSpec {
    let mut pes = SolverSpec::new("pes-ogda", Method::Ogda);
    pes.schedule = Some(ScheduleSource::Theorem1);
    pes.eps = Some(1e-4);
    let mut solvers = vec![pes];
    for (i, (tau1, tau2, lambda)) in STOC_AGDA_GRID.iter().enumerate() {
        let mut s = SolverSpec::new(format!("stoc-agda-{i:02}"), Method::StocAgda);
        s.tau1 = Some(*tau1);
        s.tau2 = Some(*tau2);
        s.lambda = Some(*lambda);
        s.stride = Some(BASELINE_BUDGET / 2);
        solvers.push(s);
    }
    ExperimentSpec {
        seed: 9,
        seeds: (1..=10).collect(),
        budget: Some(BASELINE_BUDGET),
        output_dir: None,
        record_timing: false,
        problem: ProblemSpec::Quadratic {
            d: 5,
            d_prime: 5,
            singular_values: [0.05, 0.1],
            q: -0.1,
            mu_y: 0.01,
            sigma: 0.5,
            coupling_seed: 9,
            y_radius: None,
            start_x: 1.0,
            start_y: 0.0,
        },
        solvers,
    }
}

fn final_gap_median(records: &[RunRecord], solver: &str) -> Option<f64> {
    let gaps: Vec<f64> = records
        .iter()
        .filter(|r| r.solver == solver)
        .filter_map(|r| r.summary.final_objective_gap)
        .collect();
    median(&gaps)
}

fn baseline_ordering() -> Result<String, String> {
    let spec = baseline_spec();
    spec.validate().map_err(err)?;
    let records = run_experiment(&spec, &RunOptions::default()).map_err(err)?;
    if let Some(r) = records
        .iter()
        .find(|r| matches!(r.status, RunStatus::Failed(_)))
    {
        return Err(format!(
            "{} seed {} failed: {:?}",
            r.solver, r.seed, r.status
        ));
    }
    let over = records
        .iter()
        .find(|r| r.summary.total_oracle_calls > BASELINE_BUDGET);
    ensure(over.is_none(), || "a run exceeded the oracle budget".into())?;
    let pes = final_gap_median(&records, "pes-ogda").ok_or("no PES result")?;
    let (best_name, best) = spec.solvers[1..]
        .iter()
        .filter_map(|s| final_gap_median(&records, &s.name).map(|g| (s.name.clone(), g)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or("no baseline result")?;
    let detail =
        format!("median final gap at {BASELINE_BUDGET} calls: PES-OGDA (first-regime schedule) {pes:.3e}, best Stoc-AGDA ({best_name}) {best:.3e}");
    ensure(pes <= best, || detail.clone())?;
    Ok(detail)
}

/// Population AUC of the Bayes direction: the classes are unit-variance
/// Gaussians whose means are 2 apart, so the score difference of a random
/// (positive, negative) pair is `N(2, 2)` and `AUC = Φ(√2)`.
pub fn synthetic_bayes_auc() -> f64 {
    0.5 * libm::erfc(-1.0)
}

fn auc_spec() -> ExperimentSpec {
    let mut sgda = SolverSpec::new("pes-sgda", Method::Sgda);
    sgda.schedule = Some(ScheduleSource::Manual);
    sgda.gamma = Some(0.1);
    sgda.eta0 = Some(0.5);
    sgda.decay = Some(0.95);
    sgda.length0 = Some(50);
    sgda.growth = Some(1.0);
    sgda.epochs = Some(50);
    ExperimentSpec {
        seed: 10,
        seeds: (1..=5).collect(),
        budget: None,
        output_dir: None,
        record_timing: false,
        problem: ProblemSpec::Auc {
            n: 2000,
            d: 20,
            positive_ratio: 0.09,
            data_seed: 10,
            holdout: 4000,
            data_file: None,
            holdout_file: None,
        },
        solvers: vec![sgda],
    }
}

fn scratch_dir(tag: &str) -> PathBuf {
    let nanos = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_nanos())
        .unwrap_or_default();
    std::env::temp_dir().join(format!(
        "pes-acceptance-{tag}-{}-{nanos}",
        std::process::id()
    ))
}

fn read_dir_bytes(dir: &std::path::Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .map_err(err)?
        .map(|e| {
            let e = e.map_err(err)?;
            Ok((
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).map_err(err)?,
            ))
        })
        .collect::<Result<_, String>>()?;
    files.sort();
    Ok(files)
}

fn auc_sanity() -> Result<String, String> {
    let spec = auc_spec();
    spec.validate().map_err(err)?;
    let bayes = synthetic_bayes_auc();
    let mut outputs = Vec::new();
    let mut medians = Vec::new();
    for attempt in 0..2 {
        let records = run_experiment(&spec, &RunOptions::default()).map_err(err)?;
        let aucs: Vec<f64> = records
            .iter()
            .map(|r| r.summary.holdout_auc.ok_or("missing holdout AUC"))
            .collect::<Result<_, _>>()?;
        ensure(records.iter().all(|r| r.rows.len() <= 50), || {
            "more than 50 epochs".into()
        })?;
        medians.push(median(&aucs).ok_or("no runs")?);
        let dir = scratch_dir(&format!("auc{attempt}"));
        emit_csv(&records, &dir).map_err(err)?;
        outputs.push(read_dir_bytes(&dir)?);
        let _ = std::fs::remove_dir_all(&dir);
    }
    let identical = outputs[0] == outputs[1];
    let detail = format!(
        "median holdout AUC {:.4} vs 0.95 × Bayes {:.4} = {:.4}; repeated outputs identical: {identical}",
        medians[0],
        bayes,
        0.95 * bayes
    );
    ensure(medians[0] >= 0.95 * bayes && identical, || detail.clone())?;
    Ok(detail)
}

/// Largest relative central-difference error of `exact_gradient`.
fn finite_difference_error<P: SaddleProblem + ?Sized>(prob: &P, z: &PrimalDualPoint) -> f64 {
    let h = 1e-6;
    let g = prob.exact_gradient(z);
    let (d, dp) = prob.dims();
    let scale = g.gx.norm().max(g.gy.norm()).max(1e-3);
    let mut worst: f64 = 0.0;
    for i in 0..d + dp {
        let (mut zp, mut zm) = (z.clone(), z.clone());
        let exact = if i < d {
            zp.x[i] += h;
            zm.x[i] -= h;
            g.gx[i]
        } else {
            zp.y[i - d] += h;
            zm.y[i - d] -= h;
            g.gy[i - d]
        };
        let fd = (prob.value(&zp) - prob.value(&zm)) / (2.0 * h);
        worst = worst.max((fd - exact).abs() / scale);
    }
    worst
}

fn gradient_checks() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let quad =
        QuadraticGame::with_singular_values(4, 3, &[1.0, 0.7, 0.3], -0.3, 0.7, 0.0, &mut rng)
            .map_err(err)?;
    let ball = quad
        .clone()
        .with_feasible_set(FeasibleSet::ball(Vector::zeros(3), 1.0).map_err(err)?)
        .map_err(err)?;
    let data = SyntheticImbalancedDataset::new(300, 5, 0.2, 11)
        .generate()
        .map_err(err)?;
    let auc = AucLinearProblem::new(data).map_err(err)?;
    let problems: [(&str, &dyn SaddleProblem); 4] = [
        ("quadratic", &quad),
        ("quadratic on a ball", &ball),
        ("scalar example", &QuadraticGame::scalar_example()),
        ("AUC surrogate", &auc),
    ];
    let mut worst = 0.0f64;
    for (name, p) in problems {
        let (d, dp) = p.dims();
        for i in 0..100 {
            let z =
                PrimalDualPoint::new(random_vec(d, 2.0, &mut rng), random_vec(dp, 2.0, &mut rng));
            let e = finite_difference_error(p, &z);
            worst = worst.max(e);
            ensure(e < 1e-4, || {
                format!("{name}, point {i}: relative error {e:.3e}")
            })?;
        }
    }
    Ok(format!(
        "4 problems × 100 points, worst relative error {worst:.2e}"
    ))
}
