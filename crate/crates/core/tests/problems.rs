use nalgebra::DMatrix;
use pes_core::problems::{check_regularity, empirical_auc, random_coupling};
use pes_core::{
    AucLinearProblem, FeasibleSet, PrimalDualPoint, ProblemConstants, QuadraticGame, SaddleProblem,
    SyntheticImbalancedDataset, Vector,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_vec(n: usize, scale: f64, rng: &mut ChaCha8Rng) -> Vector {
    Vector::from(
        (0..n)
            .map(|_| scale * (2.0 * rng.random::<f64>() - 1.0))
            .collect::<Vec<_>>(),
    )
}

fn random_game(rng: &mut ChaCha8Rng, noise: f64) -> QuadraticGame {
    let svals: Vec<f64> = (0..3).map(|_| 0.2 + rng.random::<f64>()).collect();
    QuadraticGame::with_singular_values(4, 3, &svals, -0.3, 0.7, noise, rng).unwrap()
}

fn auc_problem() -> AucLinearProblem {
    let data = SyntheticImbalancedDataset::new(300, 5, 0.2, 4)
        .generate()
        .unwrap();
    AucLinearProblem::new(data).unwrap()
}

/// Central differences of `value` against `exact_gradient`.
fn finite_difference_error<P: SaddleProblem>(prob: &P, z: &PrimalDualPoint) -> f64 {
    let h = 1e-6;
    let g = prob.exact_gradient(z);
    let mut worst: f64 = 0.0;
    let (d, dp) = prob.dims();
    let scale = g.gx.norm().max(g.gy.norm()).max(1e-3);
    for i in 0..d + dp {
        let mut zp = z.clone();
        let mut zm = z.clone();
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

#[test]
fn gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let game = random_game(&mut rng, 0.0);
    let auc = auc_problem();
    for _ in 0..100 {
        let z = PrimalDualPoint::new(random_vec(4, 2.0, &mut rng), random_vec(3, 2.0, &mut rng));
        assert!(finite_difference_error(&game, &z) < 1e-4);
        let z = PrimalDualPoint::new(random_vec(7, 1.0, &mut rng), random_vec(1, 1.0, &mut rng));
        assert!(finite_difference_error(&auc, &z) < 1e-4);
    }
}

fn monte_carlo<P: SaddleProblem>(
    prob: &P,
    z: &PrimalDualPoint,
    draws: usize,
    seed: u64,
) -> (Vec<f64>, Vec<f64>, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let exact = prob.exact_gradient(z).as_operator();
    let n = exact.len();
    let mut mean = vec![0.0; n];
    let mut sq = vec![0.0; n];
    let mut total_sq = 0.0;
    for _ in 0..draws {
        let g = prob.stochastic_gradient(z, 1, &mut rng).as_operator();
        for i in 0..n {
            mean[i] += g[i];
            sq[i] += g[i] * g[i];
        }
        total_sq += g.distance_squared(&exact);
    }
    let m = draws as f64;
    let means: Vec<f64> = mean.iter().map(|s| s / m).collect();
    let stderr: Vec<f64> = (0..n)
        .map(|i| ((sq[i] / m - means[i] * means[i]).max(0.0) / m).sqrt())
        .collect();
    (means, stderr, total_sq / m)
}

#[test]
fn quadratic_noise_is_unbiased_with_declared_variance() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let game = random_game(&mut rng, 1.5);
    let z = PrimalDualPoint::new(random_vec(4, 1.0, &mut rng), random_vec(3, 1.0, &mut rng));
    let (means, stderr, var) = monte_carlo(&game, &z, 100_000, 9);
    let exact = game.exact_gradient(&z).as_operator();
    for i in 0..exact.len() {
        assert!(
            (means[i] - exact[i]).abs() <= 4.0 * stderr[i],
            "coordinate {i}"
        );
    }
    assert!(var <= 1.5 * 1.5 * 1.05);
}

#[test]
fn auc_minibatch_is_unbiased() {
    let auc = auc_problem();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let z = PrimalDualPoint::new(random_vec(7, 0.5, &mut rng), random_vec(1, 0.5, &mut rng));
    let (means, stderr, _) = monte_carlo(&auc, &z, 100_000, 10);
    let exact = auc.exact_gradient(&z).as_operator();
    for i in 0..exact.len() {
        assert!(
            (means[i] - exact[i]).abs() <= 4.0 * stderr[i] + 1e-12,
            "coordinate {i}"
        );
    }
}

#[test]
fn best_response_stationarity_and_envelope() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let game = random_game(&mut rng, 0.0);
    let ball = FeasibleSet::ball(Vector::zeros(3), 0.5).unwrap();
    let bounded = game.clone().with_feasible_set(ball).unwrap();
    for _ in 0..100 {
        let x = random_vec(4, 2.0, &mut rng);
        let y = game.best_response_y(&x).unwrap();
        let g = game.exact_gradient(&PrimalDualPoint::new(x.clone(), y.clone()));
        assert!(g.gy.norm() < 1e-10);
        let envelope = game.value(&PrimalDualPoint::new(x.clone(), y));
        assert!((game.primal_value(&x).unwrap() - envelope).abs() < 1e-10);

        // ball KKT: ∇_y f = λ y with λ ≥ 0 on the boundary
        let y = bounded.best_response_y(&x).unwrap();
        let gy = bounded
            .exact_gradient(&PrimalDualPoint::new(x.clone(), y.clone()))
            .gy;
        if y.norm() < 0.5 - 1e-12 {
            assert!(gy.norm() < 1e-10);
        } else {
            let lambda = gy.dot(&y) / y.norm_squared();
            assert!(lambda >= -1e-12);
            assert!(gy.sub(&y.scaled(lambda)).norm() < 1e-10);
        }
    }
}

#[test]
fn scalar_example_facts() {
    let p = QuadraticGame::scalar_example();
    for x in [-3.0, -0.5, 0.7, 2.0] {
        let xv = Vector::from([x]);
        assert!((p.primal_value(&xv).unwrap() - x * x / 4.0).abs() < 1e-15);
        // ‖∇P‖² = 2·½·P exactly
        let grad = x / 2.0;
        assert!((grad * grad - p.primal_value(&xv).unwrap()).abs() < 1e-15);
    }
    let smooth = QuadraticGame::smooth_primal(2, 0.1, 0.4).unwrap();
    let x = Vector::from([1.0, -2.0]);
    assert!((smooth.primal_value(&x).unwrap() - 0.2 * x.norm_squared()).abs() < 1e-12);
}

#[test]
fn auc_concavity_in_alpha_is_constant() {
    let auc = auc_problem();
    let p = auc.positive_fraction();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let x = random_vec(7, 1.0, &mut rng);
        let a = rng.random::<f64>();
        let h = 0.25;
        let f = |al: f64| auc.value(&PrimalDualPoint::new(x.clone(), Vector::from([al])));
        let second = (f(a + h) - 2.0 * f(a) + f(a - h)) / (h * h);
        assert!((second + 2.0 * p * (1.0 - p)).abs() < 1e-9);
    }
    assert!((auc.constants().mu_y - 2.0 * p * (1.0 - p)).abs() < 1e-15);
}

#[test]
fn regularity_checks() {
    let p = QuadraticGame::scalar_example();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let report = check_regularity(&p, 200, &mut rng);
    assert!((report.rho_hat - 0.5).abs() < 1e-12);
    assert!(report.violations.is_empty(), "{:?}", report.violations);

    // lying about ℓ is caught
    struct Liar(QuadraticGame, ProblemConstants);
    impl SaddleProblem for Liar {
        fn dims(&self) -> (usize, usize) {
            self.0.dims()
        }
        fn feasible_set(&self) -> &FeasibleSet {
            self.0.feasible_set()
        }
        fn constants(&self) -> &ProblemConstants {
            &self.1
        }
        fn value(&self, z: &PrimalDualPoint) -> f64 {
            self.0.value(z)
        }
        fn exact_gradient(&self, z: &PrimalDualPoint) -> pes_core::GradientPair {
            self.0.exact_gradient(z)
        }
        fn stochastic_gradient(
            &self,
            z: &PrimalDualPoint,
            b: usize,
            r: &mut dyn rand::RngCore,
        ) -> pes_core::GradientPair {
            self.0.stochastic_gradient(z, b, r)
        }
    }
    let mut lie = p.constants().clone();
    lie.ell *= 0.5;
    let report = check_regularity(&Liar(p, lie), 200, &mut rng);
    assert!(report.violations.iter().any(|v| v.starts_with("ell")));
}

#[test]
fn ell_is_the_joint_spectral_norm() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let a = random_coupling(2, 2, &[0.3, 1.1], &mut rng).unwrap();
    let (q, mu_y) = (-0.4, 0.6);
    let game = QuadraticGame::new(a.clone(), q, mu_y, 0.0).unwrap();
    let joint = DMatrix::from_fn(4, 4, |i, j| match (i < 2, j < 2) {
        (true, true) => {
            if i == j {
                q
            } else {
                0.0
            }
        }
        (true, false) => a[(i, j - 2)],
        (false, true) => a[(j, i - 2)],
        (false, false) => {
            if i == j {
                -mu_y
            } else {
                0.0
            }
        }
    });
    let oracle = joint
        .symmetric_eigenvalues()
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    assert!((game.constants().ell - oracle).abs() < 1e-10);

    let report = check_regularity(&game, 10_000, &mut rng);
    assert!(report.ell_hat >= 0.95 * oracle && report.ell_hat <= oracle * (1.0 + 1e-9));
}

#[test]
fn synthetic_dataset_contract() {
    let gen = SyntheticImbalancedDataset::new(1000, 20, 0.09, 7);
    let a = gen.generate().unwrap();
    assert_eq!(a, gen.generate().unwrap());
    assert!((a.positives() as f64 - 90.0).abs() <= 1.0);
    let half = SyntheticImbalancedDataset::new(1001, 3, 0.5, 1)
        .generate()
        .unwrap();
    assert!((half.positives() as f64 - 500.5).abs() <= 1.0);

    let dir = a.class_mean(1).sub(&a.class_mean(-1));
    let auc = empirical_auc(&a.scores(&dir), &a.labels).unwrap();
    assert!(auc >= 0.8, "bayes-direction auc {auc}");
    assert!(SyntheticImbalancedDataset::new(20, 2, 0.001, 1)
        .generate()
        .is_err());
}

#[test]
fn auc_primal_optimum_is_a_minimum() {
    let auc = auc_problem();
    let x_star = auc.primal_minimizer().unwrap();
    let p_star = auc.optimal_primal_value().unwrap();
    assert!((auc.primal_value(&x_star).unwrap() - p_star).abs() < 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..50 {
        let x = x_star.add(&random_vec(7, 0.1, &mut rng));
        assert!(auc.primal_value(&x).unwrap() >= p_star - 1e-12);
    }
}
