mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trunckern_core::evolution::solve_elliptic_detailed;
use trunckern_core::{
    apply_linear, apply_pucci, cfl_dt, solve_cauchy, solve_elliptic, solve_truncation_sequence, step_explicit,
    DtPolicy, EvolutionConfig, Forcing, GridFunction, GridSpec, OperatorConfig, Profile,
};

fn evolution(grid: GridSpec, operator: OperatorConfig, initial: GridFunction, horizon: f64) -> EvolutionConfig {
    EvolutionConfig {
        grid,
        operator,
        forcing: Forcing::Zero,
        initial,
        horizon,
        dt_policy: DtPolicy::Auto { cfl_fraction: 0.9 },
        snapshot_stride: 1,
    }
}

/// Columns of the discrete operator from unit vectors with zero exterior.
fn dense_matrix(g: &GridSpec, cfg: &OperatorConfig) -> DMatrix<f64> {
    let zero = g.with_extension(trunckern_core::Extension::Constant(0.0)).unwrap();
    let n = g.len();
    let mut a = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let col = apply_linear(&GridFunction::new(zero.clone(), e).unwrap(), cfg).unwrap();
        for i in 0..n {
            a[(i, j)] = col.values()[i];
        }
    }
    a
}

#[test]
fn elliptic_iteration_matches_dense_solve() {
    let g = grid(1, 1.0, 257, 0.3);
    let cfg = OperatorConfig::linear(kernel(1, 0.25, 0.5));
    let f = GridFunction::from_fn(g.clone(), |x| (3.0 * x[0]).sin() - 0.5).unwrap();
    let exterior = GridFunction::constant(g.clone(), 0.3).unwrap();
    let sol = solve_elliptic_detailed(&g, &cfg, &f, &exterior).unwrap();

    let a = dense_matrix(&g, &cfg);
    let offset = apply_linear(&GridFunction::constant(g.clone(), 0.0).unwrap(), &cfg).unwrap();
    let rhs = DVector::from_iterator(g.len(), f.values().iter().zip(offset.values()).map(|(f, b)| f - b));
    let direct = a.lu().solve(&rhs).unwrap();
    let err = sol
        .u
        .values()
        .iter()
        .zip(direct.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(err < 1e-6, "sup error {err} after {} iterations", sol.iterations);

    // consistency: the operator reproduces f up to the terminal residual
    let back = apply_linear(&sol.u, &cfg).unwrap();
    let res = back.sup_distance(&f);
    assert!(res <= sol.residual * (1.0 + 1e-9) && res < 1e-8);
}

#[test]
fn elliptic_trivial_data() {
    let g = grid(1, 1.0, 65, 1.0);
    let cfg = OperatorConfig::linear(kernel(1, 0.75, 0.25));
    let zero_f = GridFunction::constant(g.clone(), 0.0).unwrap();
    let one = solve_elliptic(&g, &cfg, &zero_f, &GridFunction::constant(g.clone(), 0.2).unwrap()).unwrap();
    assert!(one.values().iter().all(|v| (v - 1.0).abs() < 1e-7));
    let g0 = grid(1, 1.0, 65, 0.0);
    let zero = solve_elliptic(
        &g0,
        &cfg,
        &GridFunction::constant(g0.clone(), 0.0).unwrap(),
        &GridFunction::constant(g0.clone(), 0.0).unwrap(),
    )
    .unwrap();
    assert!(zero.values().iter().all(|v| *v == 0.0));
    let pucci_one = solve_elliptic(
        &g,
        &pucci(1, 0.5, 0.25, false),
        &zero_f,
        &GridFunction::constant(g.clone(), 0.0).unwrap(),
    )
    .unwrap();
    assert!(pucci_one.values().iter().all(|v| (v - 1.0).abs() < 1e-5));
}

#[test]
fn constants_are_fixed_points() {
    for (dim, n) in [(1, 33), (2, 9)] {
        for s in [0.25, 0.5, 0.75] {
            let g = grid(dim, 1.0, n, 0.7);
            let u = GridFunction::constant(g.clone(), 0.7).unwrap();
            for op in [
                OperatorConfig::linear(kernel(dim, s, 0.1)),
                pucci(dim, s, 0.0, true),
                pucci(dim, s, 0.0, false),
            ] {
                let cfg = evolution(g.clone(), op, u.clone(), 0.1);
                let field = solve_cauchy(&cfg).unwrap();
                for (_, v) in &field.snapshots {
                    assert_eq!(v.values(), u.values());
                }
                let mut forced = cfg.clone();
                forced.forcing = Forcing::Constant(1.0);
                let next = step_explicit(&u, -0.1, &forced, 0.01).unwrap();
                assert!(next.values().iter().all(|v| (v - 0.71).abs() < 1e-15));
            }
        }
    }
}

#[test]
fn snapshots_end_at_zero_and_respect_the_maximum_principle() {
    let g = grid(1, 2.0, 129, 0.0);
    let u0 = Profile::DEFAULT_BOX.sample(&g).unwrap();
    for op in [OperatorConfig::linear(kernel(1, 0.5, 0.0)), pucci(1, 0.75, 0.0, false)] {
        let mut cfg = evolution(g.clone(), op, u0.clone(), 0.2);
        cfg.snapshot_stride = 3;
        let field = solve_cauchy(&cfg).unwrap();
        assert_eq!(field.snapshots.first().unwrap().0, -0.2);
        assert_eq!(field.snapshots.last().unwrap().0, 0.0);
        // the exterior value 0 takes part in the infimum
        let mut prev = (u0.max(), 0.0);
        for (_, v) in &field.snapshots {
            assert!(v.max() <= prev.0 && v.min() >= prev.1);
            prev.0 = v.max();
        }
    }
}

#[test]
fn forcing_obeys_the_ode_bound() {
    let g = grid(1, 1.0, 65, 0.0);
    let u0 = GridFunction::from_fn(g.clone(), |x| 0.5 * (2.0 * x[0]).cos()).unwrap();
    let mut cfg = evolution(g.clone(), pucci(1, 0.5, 0.0, true), u0.clone(), 0.5);
    cfg.forcing = Forcing::Field {
        f: std::sync::Arc::new(|x: &[f64], t: f64| (x[0] + t).sin()),
        bound: 1.0,
    };
    let field = solve_cauchy(&cfg).unwrap();
    assert!(field.last().sup_norm() <= u0.sup_norm() + 0.5 * 1.0 + 1e-12);
}

#[test]
fn comparison_principle_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut violations = 0;
    for trial in 0..100 {
        let s = [0.25, 0.5, 0.75][trial % 3];
        let rho = [0.0, 0.125][trial % 2];
        let ext = rng.random_range(-1.0..1.0);
        let g = grid(1, 1.0, 33, ext);
        let u = GridFunction::new(g.clone(), (0..33).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let v = GridFunction::new(
            g.clone(),
            u.values()
                .iter()
                .map(|x| {
                    x + if rng.random_bool(0.3) {
                        0.0
                    } else {
                        rng.random_range(0.0..1.0)
                    }
                })
                .collect(),
        )
        .unwrap();
        let op = OperatorConfig::linear(kernel(1, s, rho));
        let mut a = evolution(g.clone(), op, u, 0.05);
        a.forcing = Forcing::Constant(0.3);
        let mut b = a.clone();
        b.initial = v;
        let (fa, fb) = (solve_cauchy(&a).unwrap(), solve_cauchy(&b).unwrap());
        for ((_, x), (_, y)) in fa.snapshots.iter().zip(&fb.snapshots) {
            violations += x.values().iter().zip(y.values()).filter(|(p, q)| p > q).count();
        }
    }
    assert_eq!(violations, 0);
}

#[test]
fn cfl_step_scales_like_h_to_the_2s() {
    for s in [0.25, 0.5, 0.75] {
        let dt = |n: usize| {
            let g = grid(1, 1.0, n, 0.0);
            let u = GridFunction::constant(g.clone(), 0.0).unwrap();
            cfl_dt(&evolution(g, OperatorConfig::linear(kernel(1, s, 0.0)), u, 1.0)).unwrap()
        };
        let ratio = dt(129) / dt(257);
        let want = (2.0 * s).exp2();
        assert!((ratio / want - 1.0).abs() < 0.1, "s={s}: {ratio} vs {want}");
    }
}

#[test]
fn truncation_sweep_basics() {
    let g = grid(1, 2.0, 65, 0.0);
    let c = GridFunction::constant(g.with_extension(trunckern_core::Extension::Constant(0.4)).unwrap(), 0.4).unwrap();
    let cfg = evolution(c.spec().clone(), OperatorConfig::linear(kernel(1, 0.25, 0.0)), c, 0.1);
    let report = solve_truncation_sequence(&cfg, &[0.5, 0.25, 0.0]).unwrap();
    assert_eq!(report.sup_errors, vec![0.0, 0.0, 0.0]);
    assert_eq!(report.reference_rho, 0.0);
    assert!(solve_truncation_sequence(&cfg, &[0.25, 0.5]).is_err());
    assert!(solve_truncation_sequence(&cfg, &[]).is_err());
    assert!(solve_truncation_sequence(&cfg, &[0.5, -0.1]).is_err());
}

#[test]
fn truncation_errors_shrink_for_the_smoothed_box() {
    let g = grid(1, 4.0, 513, 0.0);
    let u0 = Profile::DEFAULT_BOX.sample(&g).unwrap();
    let cfg = evolution(g, OperatorConfig::linear(kernel(1, 0.25, 0.0)), u0, 0.25);
    let rhos = [0.5, 0.25, 0.125, 0.0625, 0.0];
    let report = solve_truncation_sequence(&cfg, &rhos).unwrap();
    let e = &report.sup_errors;
    assert_eq!(e[4], 0.0);
    for w in e[..4].windows(2) {
        assert!(w[1] < w[0], "{e:?}");
    }
    assert!(e[3] < 5e-3, "{e:?}");
}

#[test]
fn pucci_solutions_are_ordered() {
    let g = grid(1, 2.0, 65, 0.0);
    let u0 = Profile::DEFAULT_BOX.sample(&g).unwrap();
    let run = |plus| solve_cauchy(&evolution(g.clone(), pucci(1, 0.5, 0.0, plus), u0.clone(), 0.1)).unwrap();
    let (up, um) = (run(true), run(false));
    let lin = solve_cauchy(&evolution(
        g.clone(),
        OperatorConfig::linear(kernel(1, 0.5, 0.0)),
        u0.clone(),
        0.1,
    ))
    .unwrap();
    for i in 0..g.len() {
        let (a, b, c) = (um.last().values()[i], lin.last().values()[i], up.last().values()[i]);
        assert!(a <= b + 1e-12 && b <= c + 1e-12);
    }
    let _ = apply_pucci(&u0, &pucci(1, 0.5, 0.0, true)).unwrap();
}
