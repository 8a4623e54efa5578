use memincl::diagnostics::{energy_ledger, gronwall_constants, manufactured_forcing, manufactured_profile, OperatorConstants};
use memincl::kernel::{apply_k_direct, memory_recurrence, verify_lemma_bounds, MemoryParams};
use memincl::operators::BKind;
use memincl::setvalued::{
    affine_map, constant_scalar, project, GrowthEnvelope, SetValue, MAX_POLYTOPE_VERTICES,
};
use memincl::solver::{marching_solve, residual_certificate, solve_single_valued, CertificateTolerances};
use memincl::spaces::{h_norm, pairing};
use memincl::*;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn vector(n: usize, scale: f64) -> impl Strategy<Value = StateVector> {
    prop::collection::vec(-scale..scale, n).prop_map(StateVector::from_vec)
}

fn set_value(n: usize) -> impl Strategy<Value = SetValue> {
    prop_oneof![
        (vector(n, 2.0), 0.0..2.0).prop_map(|(center, radius)| SetValue::Ball { center, radius }),
        (vector(n, 2.0), vector(n, 1.0)).prop_map(|(lo, w)| SetValue::Box {
            upper: &lo + w.abs(),
            lower: lo,
        }),
        prop::collection::vec(vector(n, 2.0), 1..=MAX_POLYTOPE_VERTICES)
            .prop_map(|vertices| SetValue::Polytope { vertices }),
        vector(n, 2.0).prop_map(SetValue::Singleton),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn recurrence_matches_direct_convolution(
        lambda in 1e-3..50.0f64,
        steps in 1usize..80,
        t_final in 0.1..3.0f64,
        seed in any::<u64>(),
    ) {
        let grid = Grid::new(3, 1.0).unwrap();
        let mesh = TimeMesh::new(t_final, steps).unwrap();
        let mut state = seed;
        let vtraj: Vec<StateVector> = (0..=steps)
            .map(|_| StateVector::from_fn(grid.n(), |_, _| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            }))
            .collect();
        let direct = apply_k_direct(&vtraj, lambda, &mesh);
        let rec = memory_recurrence(&vtraj, lambda, &mesh);
        for (d, r) in direct.iter().zip(&rec) {
            prop_assert!((d - r).amax() <= 1e-12 * d.amax().max(1e-300) + 1e-15);
        }
    }

    #[test]
    fn lemma_bounds_hold(lambda in 1e-2..20.0f64, amp in 0.0..5.0f64, freq in 0.0..10.0f64) {
        let grid = Grid::new(4, 1.0).unwrap();
        let mesh = TimeMesh::new(1.5, 120).unwrap();
        let u0 = grid.sample(|x| amp * x);
        let mp = MemoryParams::new(lambda, u0, 1.5).unwrap();
        let vtraj: Vec<StateVector> = mesh.nodes().map(|t| grid.sample(|x| amp * (freq * t + x).sin())).collect();
        prop_assert!(verify_lemma_bounds(&vtraj, &mp, &mesh, &grid).passed());
    }

    #[test]
    fn projection_is_idempotent_and_nonexpansive(
        s in set_value(4),
        x in vector(4, 5.0),
        y in vector(4, 5.0),
    ) {
        let grid = Grid::new(4, 0.5).unwrap();
        let px = project(&s, &x, &grid).unwrap();
        let py = project(&s, &y, &grid).unwrap();
        let ppx = project(&s, &px, &grid).unwrap();
        prop_assert!(h_norm(&(&ppx - &px), &grid) <= 1e-9);
        prop_assert!(h_norm(&(&px - &py), &grid) <= h_norm(&(&x - &y), &grid) + 1e-9);
        // variational inequality <x - Px, z - Px> ≤ 0 at z = Py
        prop_assert!(pairing(&(&x - &px), &(&py - &px), &grid) <= 1e-9);
    }
}

/// With `A - B ⪰ 0` the modified energy `½‖v‖² + ‖w‖²_B/(2λθ)`,
/// `θ = (1 - e^{-λτ})/(λτ)`, is non-increasing for any step size when
/// `f = 0`, `u0 = 0`.
#[test]
fn unforced_energy_decays_for_any_step() {
    let grid = Grid::new(12, 1.0).unwrap();
    let a = OperatorA::laplacian_plus_identity(grid);
    let b = OperatorB::new(BKind::IdentityScaled(1.0), grid).unwrap();
    for (lambda, steps) in [(0.5, 10), (5.0, 40), (50.0, 7), (1e3, 100)] {
        let data = ProblemData::new(
            grid,
            TimeMesh::new(2.0, steps).unwrap(),
            lambda,
            grid.zeros(),
            grid.sample(|x| (9.0 * x).sin() + x),
            a.clone(),
            b.clone(),
            SetField::singleton(setvalued::constant_map(grid.zeros())),
        )
        .unwrap();
        let traj = solve_single_valued(&vec![grid.zeros(); steps], &data, &SolverOptions::default()).unwrap();
        let tau = data.mesh.tau();
        let theta = -(-lambda * tau).exp_m1() / (lambda * tau);
        let energy: Vec<f64> = traj
            .v
            .iter()
            .zip(&traj.w)
            .map(|(v, w)| {
                0.5 * h_norm(v, &grid).powi(2) + pairing(&b.apply(w), w, &grid) / (2.0 * lambda * theta)
            })
            .collect();
        for e in energy.windows(2) {
            assert!(e[1] <= e[0] * (1.0 + 1e-14), "lambda {lambda}: {} > {}", e[1], e[0]);
        }
    }
}

/// Seeded random certified runs: the coercivity form of the energy
/// estimate holds at every node.
#[test]
fn energy_inequality_on_random_runs() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    for run in 0..50 {
        let n = rng.random_range(2..10);
        let grid = Grid::new(n, rng.random_range(0.5..2.0)).unwrap();
        let p = [2.0, 2.5, 3.0, 4.0][run % 4];
        let b = match run % 3 {
            0 => OperatorB::new(BKind::Laplacian, grid).unwrap(),
            1 => OperatorB::new(BKind::FractionalLaplacian(rng.random_range(0.55..0.95)), grid).unwrap(),
            _ => OperatorB::new(BKind::IdentityScaled(rng.random_range(0.1..3.0)), grid).unwrap(),
        };
        let gain = rng.random_range(-0.5..0.5);
        let radius = rng.random_range(0.0..0.5);
        let offset = StateVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let data = ProblemData::new(
            grid,
            TimeMesh::new(rng.random_range(0.2..1.5), 200).unwrap(),
            rng.random_range(0.1..5.0),
            StateVector::from_fn(n, |_, _| rng.random_range(-0.5..0.5)),
            StateVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0)),
            OperatorA::p_laplacian(grid, p).unwrap(),
            b,
            SetField::ball(affine_map(gain, offset), constant_scalar(radius)),
        )
        .unwrap();
        let rule = [SelectionRule::MinimalNorm, SelectionRule::ProjectPrevious, SelectionRule::ConstantCenter][run % 3].clone();
        let traj = marching_solve(&data, &rule, &SolverOptions::default()).unwrap();
        let cert = residual_certificate(&traj, &data, &CertificateTolerances::default()).unwrap();
        assert!(cert.passed(), "run {run}: {cert:?}");
        let ops = OperatorConstants {
            mu_a: 1.0,
            c_a: 0.0,
            beta_a: 1.0,
            beta_b: 1.0,
            mu_b: 1.0,
            c_e: memincl::spaces::embedding_constant(&grid, p, run as u64),
        };
        let env = GrowthEnvelope::constant(1.0, 1.0, data.exps.q, &data.mesh).unwrap();
        let k = gronwall_constants(&data, &env, &ops).unwrap();
        let ledger = energy_ledger(&traj, &data, &k).unwrap();
        assert!(ledger.min_inequality_slack() >= -1e-10, "run {run}: {}", ledger.min_inequality_slack());
    }
}

#[test]
fn manufactured_solution_is_reproduced() {
    let grid = Grid::new(16, 1.0).unwrap();
    let mut errors = Vec::new();
    for steps in [100, 200, 400] {
        let base = ProblemData::new(
            grid,
            TimeMesh::new(1.0, steps).unwrap(),
            2.0,
            grid.zeros(),
            grid.zeros(),
            OperatorA::p_laplacian(grid, 3.0).unwrap(),
            OperatorB::new(BKind::FractionalLaplacian(0.75), grid).unwrap(),
            SetField::singleton(setvalued::constant_map(grid.zeros())),
        )
        .unwrap();
        let phi = manufactured_profile(&base);
        let data = ProblemData { v0: phi.clone(), ..base };
        let f = manufactured_forcing(&data);
        let traj = solve_single_valued(&f, &data, &SolverOptions::default()).unwrap();
        let err = (0..=steps)
            .map(|n| h_norm(&(&traj.v[n] - &phi * (-data.mesh.t(n)).exp()), &grid))
            .fold(0.0, f64::max);
        errors.push(err);
    }
    for e in errors.windows(2) {
        assert!((e[0] / e[1]).log2() >= 0.8, "{errors:?}");
    }
}

#[test]
fn dense_jacobian_path_matches_tridiagonal() {
    let grid = Grid::new(6, 1.0).unwrap();
    let lap = grid.laplacian_matrix();
    let dense = OperatorA::new(operators::AKind::Linear(lap + DMatrix::identity(6, 6)), grid).unwrap();
    let tri = OperatorA::laplacian_plus_identity(grid);
    let rhs = grid.sample(|x| x.exp());
    let a = solver::implicit_step_a(&rhs, 0.05, &dense, 1e-13, 5).unwrap();
    let b = solver::implicit_step_a(&rhs, 0.05, &tri, 1e-13, 5).unwrap();
    assert!(h_norm(&(a - b), &grid) < 1e-12);
}
