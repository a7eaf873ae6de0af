mod common;

use common::*;
use proptest::prelude::*;
use trunckern_core::{
    apply_linear, apply_pucci, cfl_dt, kernel_l1_norm, make_truncated_fractional_kernel, make_user_kernel,
    parabolic_distance, partial_holder_seminorm, step_explicit, validate_ellipticity, weak_harnack_ratio, Cylinder,
    DtPolicy, EvolutionConfig, Forcing, GridFunction, GridSpec, KernelParams, Mass, OperatorConfig, SpaceTimeField,
};

const N1: usize = 33;
const N2: usize = 9;

fn order() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.25), Just(0.5), Just(0.75), 0.05f64..0.95]
}

fn cutoff() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), 0.05f64..1.0]
}

/// A grid function on `[-1, 1]^d` together with its dimension.
fn field() -> impl Strategy<Value = (usize, Vec<f64>, f64)> {
    prop_oneof![
        (prop::collection::vec(-1.0f64..1.0, N1), -1.0f64..1.0).prop_map(|(v, e)| (1, v, e)),
        (prop::collection::vec(-1.0f64..1.0, N2 * N2), -1.0f64..1.0).prop_map(|(v, e)| (2, v, e)),
    ]
}

fn make(dim: usize, values: Vec<f64>, ext: f64) -> GridFunction {
    let n = if dim == 1 { N1 } else { N2 };
    GridFunction::new(grid(dim, 1.0, n, ext), values).unwrap()
}

fn close(a: f64, b: f64) -> f64 {
    1e-10 * (1.0 + a.abs().max(b.abs()))
}

fn plus_minus(u: &GridFunction, s: f64, rho: f64) -> (GridFunction, GridFunction) {
    let d = u.spec().dim;
    (
        apply_pucci(u, &pucci(d, s, rho, true)).unwrap(),
        apply_pucci(u, &pucci(d, s, rho, false)).unwrap(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn constants_are_annihilated(dim in 1usize..=2, s in order(), rho in cutoff(), c in -1e3f64..1e3) {
        let n = if dim == 1 { N1 } else { N2 };
        let u = GridFunction::constant(grid(dim, 1.0, n, c), c).unwrap();
        let lin = apply_linear(&u, &OperatorConfig::linear(kernel(dim, s, rho))).unwrap();
        let (p, m) = plus_minus(&u, s, rho);
        for v in lin.values().iter().chain(p.values()).chain(m.values()) {
            prop_assert_eq!(*v, 0.0);
        }
    }

    #[test]
    fn pucci_is_antisymmetric((dim, v, e) in field(), s in order(), rho in cutoff()) {
        let u = make(dim, v, e);
        let plus_neg = apply_pucci(&u.negated(), &pucci(dim, s, rho, true)).unwrap();
        let minus = apply_pucci(&u, &pucci(dim, s, rho, false)).unwrap();
        for (a, b) in plus_neg.values().iter().zip(minus.values()) {
            prop_assert_eq!(*a, -*b);
        }
    }

    #[test]
    fn linear_operators_are_sandwiched((dim, v, e) in field(), s in order(), rho in cutoff(), scale in 1.0f64..2.0) {
        let u = make(dim, v, e);
        let k = make_truncated_fractional_kernel(params(dim, s, rho), scale).unwrap();
        let l = apply_linear(&u, &OperatorConfig::linear(k)).unwrap();
        let (p, m) = plus_minus(&u, s, rho);
        for i in 0..u.values().len() {
            let (lo, x, hi) = (m.values()[i], l.values()[i], p.values()[i]);
            prop_assert!(lo <= x + close(lo, x), "node {}: {} > {}", i, lo, x);
            prop_assert!(x <= hi + close(x, hi), "node {}: {} > {}", i, x, hi);
        }
    }

    #[test]
    fn pucci_homogeneous_and_shift_invariant((dim, v, e) in field(), s in order(), rho in cutoff(), c in 0.0f64..10.0, k in -3.0f64..3.0) {
        let u = make(dim, v, e);
        let (p, m) = plus_minus(&u, s, rho);
        let (pc, mc) = plus_minus(&u.scaled(c), s, rho);
        let shifted = GridFunction::new(
            u.spec().with_extension(trunckern_core::Extension::Constant(e + k)).unwrap(),
            u.values().iter().map(|x| x + k).collect(),
        ).unwrap();
        let (pk, mk) = plus_minus(&shifted, s, rho);
        for i in 0..u.values().len() {
            prop_assert!((pc.values()[i] - c * p.values()[i]).abs() <= close(pc.values()[i], c * p.values()[i]));
            prop_assert!((mc.values()[i] - c * m.values()[i]).abs() <= close(mc.values()[i], c * m.values()[i]));
            prop_assert!((pk.values()[i] - p.values()[i]).abs() <= 1e-9 * (1.0 + p.values()[i].abs()));
            prop_assert!((mk.values()[i] - m.values()[i]).abs() <= 1e-9 * (1.0 + m.values()[i].abs()));
        }
    }

    #[test]
    fn pucci_sub_and_superadditive((dim, v, e) in field(), w in prop::collection::vec(-1.0f64..1.0, N1), f in -1.0f64..1.0, s in order(), rho in cutoff()) {
        let u = make(dim, v, e);
        let w = GridFunction::new(u.spec().with_extension(trunckern_core::Extension::Constant(f)).unwrap(),
            w.into_iter().cycle().take(u.values().len()).collect()).unwrap();
        let sum = GridFunction::new(
            u.spec().with_extension(trunckern_core::Extension::Constant(e + f)).unwrap(),
            u.values().iter().zip(w.values()).map(|(a, b)| a + b).collect(),
        ).unwrap();
        let (pu, mu) = plus_minus(&u, s, rho);
        let (pw, mw) = plus_minus(&w, s, rho);
        let (ps, ms) = plus_minus(&sum, s, rho);
        for i in 0..u.values().len() {
            let sub = pu.values()[i] + pw.values()[i];
            let sup = mu.values()[i] + mw.values()[i];
            prop_assert!(ps.values()[i] <= sub + close(ps.values()[i], sub));
            prop_assert!(ms.values()[i] >= sup - close(ms.values()[i], sup));
        }
    }

    #[test]
    fn comparison_at_touching_points((dim, v, e) in field(), bump in prop::collection::vec(0.0f64..1.0, N1), s in order(), rho in cutoff(), at in 0usize..1000) {
        let u = make(dim, v, e);
        let g = u.spec().clone();
        let x0 = at % g.len();
        let i0 = g.multi_index(x0);
        // v = u + w with w >= 0 vanishing at x0 and its neighbours
        let w: Vec<f64> = (0..g.len()).map(|i| {
            let j = g.multi_index(i);
            let near = (0..dim).all(|k| j[k].abs_diff(i0[k]) <= 1) && (0..dim).filter(|&k| j[k] != i0[k]).count() <= 1;
            if near { 0.0 } else { bump[i % N1] }
        }).collect();
        let vv = GridFunction::new(g.clone(), u.values().iter().zip(&w).map(|(a, b)| a + b).collect()).unwrap();
        let (pu, mu) = plus_minus(&u, s, rho);
        let (pv, mv) = plus_minus(&vv, s, rho);
        prop_assert!(pu.values()[x0] <= pv.values()[x0] + close(pu.values()[x0], pv.values()[x0]));
        prop_assert!(mu.values()[x0] <= mv.values()[x0] + close(mu.values()[x0], mv.values()[x0]));
    }

    #[test]
    fn explicit_step_is_sup_stable((dim, v, e) in field(), s in order(), rho in cutoff(), plus in any::<bool>(), f in -1.0f64..1.0) {
        let u = make(dim, v, e);
        let cfg = EvolutionConfig {
            grid: u.spec().clone(),
            operator: pucci(dim, s, rho, plus),
            forcing: Forcing::Constant(f),
            initial: u.clone(),
            horizon: 1.0,
            dt_policy: DtPolicy::Auto { cfl_fraction: 1.0 },
            snapshot_stride: 1,
        };
        let dt = cfl_dt(&cfg).unwrap();
        let next = step_explicit(&u, -1.0, &cfg, dt).unwrap();
        let bound = u.sup_norm().max(e.abs()) + dt * f.abs();
        prop_assert!(next.sup_norm() <= bound * (1.0 + 1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn truncated_mass_scales_with_the_cutoff(dim in 1usize..=2, s in 0.05f64..0.95, rho in 0.01f64..10.0) {
        let at = |r: f64| match kernel_l1_norm(&kernel(dim, s, r)) {
            Mass::Finite(m) => m,
            Mass::Infinite => f64::INFINITY,
        };
        let unit = at(1.0);
        let m = at(rho);
        prop_assert!((m - rho.powf(-2.0 * s) * unit).abs() <= 1e-9 * m);
        prop_assert!(at(rho * 1.5) < m);
        prop_assert_eq!(kernel_l1_norm(&kernel(dim, s, 0.0)), Mass::Infinite);
    }

    #[test]
    fn truncation_is_pointwise_monotone(dim in 1usize..=2, s in 0.05f64..0.95, rho in 0.01f64..2.0, y in prop::collection::vec(-3.0f64..3.0, 2)) {
        let (small, large) = (kernel(dim, s, rho), kernel(dim, s, 2.0 * rho));
        let full = kernel(dim, s, 0.0);
        prop_assert!(large.eval(&y[..dim]) <= small.eval(&y[..dim]));
        prop_assert!(small.eval(&y[..dim]) <= full.eval(&y[..dim]));
    }

    #[test]
    fn validation_accepts_the_class(dim in 1usize..=2, s in 0.1f64..0.9, rho in cutoff(), scale in 1.0f64..2.0) {
        let k = make_truncated_fractional_kernel(params(dim, s, rho), scale).unwrap();
        let radii = [0.01, 0.1, 0.5, 1.0, 3.0, 20.0];
        prop_assert!(validate_ellipticity(&k, &radii, 8).unwrap().passed());
    }

    #[test]
    fn validation_rejects_outside_the_class(dim in 1usize..=2, s in 0.1f64..0.9, rho in cutoff(), low in 0.1f64..0.9, high in 2.1f64..10.0) {
        let radii = [0.01, 0.1, 0.5, 1.0, 3.0, 20.0];
        let base = kernel(dim, s, rho);
        let weak = make_user_kernel(move |y| low * base.eval(y), params(dim, s, rho), true);
        let r = validate_ellipticity(&weak, &radii, 8).unwrap();
        prop_assert!(!r.lower_bound_ok);
        let heavy = make_truncated_fractional_kernel(params(dim, s, rho), high).unwrap();
        let r = validate_ellipticity(&heavy, &radii, 8).unwrap();
        prop_assert!(!r.annulus_bound_ok);
    }

    #[test]
    fn parabolic_distance_is_a_quasi_metric(s in 0.05f64..0.95, p in prop::collection::vec(-2.0f64..2.0, 9)) {
        let a = ([p[0], p[1]], p[2]);
        let b = ([p[3], p[4]], p[5]);
        let c = ([p[6], p[7]], p[8]);
        let d = |x: &([f64; 2], f64), y: &([f64; 2], f64)| parabolic_distance((&x.0, x.1), (&y.0, y.1), s);
        prop_assert_eq!(d(&a, &a), 0.0);
        prop_assert_eq!(d(&a, &b), d(&b, &a));
        prop_assert!(d(&a, &b) > 0.0);
        // |t|^{1/(2s)} is subadditive only for s >= 1/2
        let k = (1.0 / (2.0 * s) - 1.0).exp2().max(1.0);
        prop_assert!(d(&a, &c) <= k * (d(&a, &b) + d(&b, &c)) * (1.0 + 1e-12));
    }
}

fn synthetic(values: &[f64], ext: f64) -> SpaceTimeField {
    let g: GridSpec = grid(1, 1.0, 17, ext);
    let snaps = (0..4)
        .map(|k| {
            let t = -1.0 + k as f64 / 3.0;
            let u =
                GridFunction::new(g.clone(), (0..17).map(|i| values[(i + 5 * k) % values.len()]).collect()).unwrap();
            (t, u)
        })
        .collect();
    SpaceTimeField::new(g, 1.0 / 3.0, snaps).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn seminorm_monotone_and_homogeneous(v in prop::collection::vec(-1.0f64..1.0, 17), rho in 0.0f64..0.5, frac in 0.05f64..0.95, c in -5.0f64..5.0) {
        let s = 0.5;
        let field = synthetic(&v, 0.0);
        let q = Cylinder::at_origin(1.0, s);
        let alpha = frac * 2.0 * s;
        let base = partial_holder_seminorm(&field, &q, rho, alpha).unwrap();
        let coarser = partial_holder_seminorm(&field, &q, rho + 0.25, alpha).unwrap();
        prop_assert!(coarser.seminorm <= base.seminorm);
        let smaller = partial_holder_seminorm(&field, &q.with_radius(0.5), rho, alpha).unwrap();
        prop_assert!(smaller.seminorm <= base.seminorm);
        let scaled = partial_holder_seminorm(&field.scaled(c), &q, rho, alpha).unwrap();
        prop_assert!((scaled.seminorm - c.abs() * base.seminorm).abs() <= 1e-12 * (1.0 + scaled.seminorm));
    }

    #[test]
    fn harnack_ratio_is_scale_invariant(v in prop::collection::vec(0.01f64..1.0, 17), ext in 0.0f64..1.0, c in 0.01f64..100.0) {
        let field = synthetic(&v, ext);
        let q = Cylinder::at_origin(1.0, 0.5);
        let a = weak_harnack_ratio(&field, &q, 0.0).unwrap();
        let b = weak_harnack_ratio(&field.scaled(c), &q, 0.0).unwrap();
        prop_assert!((a.empirical_c - b.empirical_c).abs() <= 1e-10 * a.empirical_c.abs().max(1.0));
    }
}

#[test]
fn harnack_rejects_negative_fields() {
    let field = synthetic(&[0.5, -0.1, 0.3], 0.0);
    let r = weak_harnack_ratio(&field, &Cylinder::at_origin(1.0, 0.5), 0.0);
    assert!(matches!(r, Err(trunckern_core::Error::HypothesisViolated(_))));
    let _ = KernelParams::new(1, 0.5, 1.0, 2.0, 0.0).unwrap();
}
