use nalgebra::{DMatrix, DVector};
use pes_core::metrics::{
    estimate_pl_constant, gap_k, gap_k_over_gammas, numeric_inner_solve_gap, primal_gap,
};
use pes_core::problems::random_coupling;
use pes_core::{FeasibleSet, PrimalDualPoint, QuadraticGame, SaddleProblem, Vector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_vec(n: usize, scale: f64, rng: &mut ChaCha8Rng) -> Vector {
    Vector::from(
        (0..n)
            .map(|_| scale * (2.0 * rng.random::<f64>() - 1.0))
            .collect::<Vec<_>>(),
    )
}

#[test]
fn closed_form_and_numeric_gap_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for i in 0..100 {
        let (d, dp) = (1 + i % 4, 1 + (i / 4) % 3);
        let k = d.min(dp);
        let svals: Vec<f64> = (0..k).map(|_| 0.1 + 1.5 * rng.random::<f64>()).collect();
        let q = -0.5 + rng.random::<f64>();
        let mu_y = 0.2 + rng.random::<f64>();
        let mut game =
            QuadraticGame::with_singular_values(d, dp, &svals, q, mu_y, 0.0, &mut rng).unwrap();
        if i % 2 == 1 {
            let c = random_vec(dp, 0.3, &mut rng);
            game = game
                .with_feasible_set(FeasibleSet::ball(c, 0.4).unwrap())
                .unwrap();
        }
        let gamma = (-q).max(0.0) + 0.1 + rng.random::<f64>();
        let z = PrimalDualPoint::new(random_vec(d, 2.0, &mut rng), random_vec(dp, 0.3, &mut rng));
        let x0 = random_vec(d, 2.0, &mut rng);
        let closed = gap_k(&game, &z, &x0, gamma).unwrap();
        let numeric = numeric_inner_solve_gap(&game, &z, &x0, gamma, 1e-10).unwrap();
        let tol = 1e-8_f64.max(1e-6 * closed.abs());
        assert!(
            (closed - numeric.gap).abs() <= tol,
            "instance {i}: {closed} vs {}",
            numeric.gap
        );
        assert!(closed >= -1e-9);
    }
}

#[test]
fn gap_vanishes_at_regularized_saddle() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let a = random_coupling(3, 2, &[0.4, 0.9], &mut rng).unwrap();
    let (q, mu_y, gamma) = (-0.3, 0.5, 0.8);
    let game = QuadraticGame::new(a.clone(), q, mu_y, 0.0).unwrap();
    let x0 = random_vec(3, 1.0, &mut rng);
    // (q+γ)x + Ay = γx₀, Aᵀx = μ_y y
    let am = DMatrix::from_fn(3, 2, |i, j| a[(i, j)]);
    let lhs = DMatrix::identity(3, 3) * (q + gamma) + &am * am.transpose() / mu_y;
    let x = lhs
        .lu()
        .solve(&(DVector::from_column_slice(x0.as_slice()) * gamma))
        .unwrap();
    let y = am.transpose() * &x / mu_y;
    let z = PrimalDualPoint::new(Vector::from(x.as_slice()), Vector::from(y.as_slice()));
    assert!(gap_k(&game, &z, &x0, gamma).unwrap().abs() < 1e-12);
    assert!(
        numeric_inner_solve_gap(&game, &z, &x0, gamma, 1e-10)
            .unwrap()
            .gap
            .abs()
            < 1e-10
    );
}

#[test]
fn gap_is_continuous_in_gamma() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let game =
        QuadraticGame::with_singular_values(2, 2, &[0.5, 1.0], -0.2, 0.5, 0.0, &mut rng).unwrap();
    let z = PrimalDualPoint::new(random_vec(2, 1.0, &mut rng), random_vec(2, 1.0, &mut rng));
    let x0 = random_vec(2, 1.0, &mut rng);
    let gammas: Vec<f64> = (0..200).map(|i| 0.5 + 0.01 * i as f64).collect();
    let gaps = gap_k_over_gammas(&game, &z, &x0, &gammas).unwrap();
    // envelope: dGap/dγ = ½‖x − x₀‖² − ½‖x̂_γ(y) − x₀‖²
    let slope = gammas
        .iter()
        .map(|&g| {
            let xh = game.best_response_x_regularized(&z.y, &x0, g).unwrap();
            0.5 * z.x.distance_squared(&x0).max(xh.distance_squared(&x0))
        })
        .fold(0.0f64, f64::max);
    for w in gaps.windows(2) {
        assert!((w[1] - w[0]).abs() <= 0.01 * slope * (1.0 + 1e-9));
    }
}

#[test]
fn scalar_example_pl_constant() {
    let p = QuadraticGame::scalar_example();
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let mu = estimate_pl_constant(&p, 1000, 10.0, &mut rng).unwrap();
    assert!((mu - 0.5).abs() < 1e-6);
    assert!((primal_gap(&p, &Vector::from([1.0])).unwrap() - 0.25).abs() < 1e-15);
}

#[test]
fn pl_estimate_approaches_smallest_hessian_eigenvalue() {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    for _ in 0..5 {
        let game = QuadraticGame::with_singular_values(2, 2, &[0.6, 1.2], -0.2, 0.8, 0.0, &mut rng)
            .unwrap();
        let lambda_min = game.primal_eigenvalues()[0];
        let mu = estimate_pl_constant(&game, 20_000, 1.0, &mut rng).unwrap();
        assert!(mu >= lambda_min * (1.0 - 1e-9));
        assert!(mu <= lambda_min * 1.05, "{mu} vs {lambda_min}");
    }
}

#[test]
fn x_side_pl_lower_bounds_primal_pl() {
    let mut rng = ChaCha8Rng::seed_from_u64(26);
    let game =
        QuadraticGame::with_singular_values(3, 2, &[0.5, 0.7], 0.4, 1.0, 0.0, &mut rng).unwrap();
    let mu_x = game.constants().mu_x_pl;
    assert_eq!(mu_x, 0.4);
    let mu = estimate_pl_constant(&game, 2_000, 2.0, &mut rng).unwrap();
    assert!(mu >= mu_x * 0.95);
}
