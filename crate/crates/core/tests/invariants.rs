use modspace_core::fields::BandLimited;
use modspace_core::modulation::{build_window, modulation_norm, Window};
use modspace_core::propagator::{propagate, PropagatorPlan};
use modspace_core::spectral::{
    forward_transform, ComplexField, DispersionParams, Exponent, GridSpec, ModIndex,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn grid(d: usize) -> GridSpec {
    match d {
        1 => GridSpec::cube(1, 128, 32.0).unwrap(),
        _ => GridSpec::cube(2, 32, 16.0).unwrap(),
    }
}

fn field(g: &GridSpec, seed: u64, radius: f64) -> ComplexField {
    BandLimited {
        radius,
        seed,
        amplitude: 1.0,
    }
    .sample(g)
    .unwrap()
}

fn window(g: &GridSpec) -> Window {
    build_window(g.dim(), g).unwrap()
}

fn exponent() -> impl Strategy<Value = Exponent> {
    prop_oneof![
        Just(1.0),
        Just(1.5),
        Just(2.0),
        Just(3.0),
        Just(7.0),
        Just(f64::INFINITY)
    ]
    .prop_map(|p| Exponent::new(p).unwrap())
}

fn index() -> impl Strategy<Value = ModIndex> {
    (exponent(), exponent(), 0.0..2.0f64).prop_map(|(p, q, s)| ModIndex::new(p, q, s).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn transform_is_an_isometry(d in 1usize..=2, seed in any::<u64>()) {
        let g = grid(d);
        let f = field(&g, seed, 3.0);
        let hat = forward_transform(&f).unwrap();
        prop_assert!((hat.sum_sq() / f.sum_sq() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn propagator_is_linear(
        d in 1usize..=2,
        seed in any::<u64>(),
        t in -20.0..20.0f64,
        a in (-2.0..2.0f64, -2.0..2.0f64),
        b in (-2.0..2.0f64, -2.0..2.0f64),
    ) {
        let g = grid(d);
        let plan = PropagatorPlan::new(&g, DispersionParams::new(1.0, 0.4, 0.05).unwrap());
        let (a, b) = (Complex64::new(a.0, a.1), Complex64::new(b.0, b.1));
        let f = field(&g, seed, 3.0);
        let h = field(&g, seed ^ 0x5555, 3.0);
        let lhs = propagate(&f.axpby(a, &h, b).unwrap(), t, &plan).unwrap();
        let rhs = propagate(&f, t, &plan).unwrap().axpby(a, &propagate(&h, t, &plan).unwrap(), b).unwrap();
        let scale = (a.norm() + b.norm()) * (f.sum_sq().sqrt() + h.sum_sq().sqrt());
        prop_assert!(lhs.sub(&rhs).unwrap().sum_sq().sqrt() <= 1e-12 * scale);
    }

    #[test]
    fn modulation_norm_is_homogeneous(idx in index(), seed in any::<u64>(), c in (-3.0..3.0f64, -3.0..3.0f64)) {
        let g = grid(1);
        let w = window(&g);
        let f = field(&g, seed, 3.0);
        let c = Complex64::new(c.0, c.1);
        let lhs = modulation_norm(&f.scale(c), &idx, &w).unwrap();
        let rhs = c.norm() * modulation_norm(&f, &idx, &w).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300));
    }

    #[test]
    fn modulation_norm_triangle(idx in index(), s1 in any::<u64>(), s2 in any::<u64>(), d in 1usize..=2) {
        let g = grid(d);
        let w = window(&g);
        let f = field(&g, s1, 3.0);
        let h = field(&g, s2, 2.0);
        let sum = modulation_norm(&f.add(&h).unwrap(), &idx, &w).unwrap();
        let parts = modulation_norm(&f, &idx, &w).unwrap() + modulation_norm(&h, &idx, &w).unwrap();
        prop_assert!(sum <= parts * (1.0 + 1e-12));
    }

    #[test]
    fn modulation_norm_grows_with_s(p in exponent(), q in exponent(), seed in any::<u64>(), s in 0.0..2.0f64, ds in 0.0..1.0f64) {
        let g = grid(1);
        let w = window(&g);
        let f = field(&g, seed, 4.0);
        let lo = modulation_norm(&f, &ModIndex::new(p, q, s).unwrap(), &w).unwrap();
        let hi = modulation_norm(&f, &ModIndex::new(p, q, s + ds).unwrap(), &w).unwrap();
        prop_assert!(lo <= hi * (1.0 + 1e-12));
    }

    #[test]
    fn modulation_norm_shrinks_with_q(p in exponent(), seed in any::<u64>()) {
        let g = grid(1);
        let w = window(&g);
        let f = field(&g, seed, 4.0);
        let norms: Vec<f64> = [1.0, 2.0, 4.0, f64::INFINITY]
            .iter()
            .map(|&q| modulation_norm(&f, &ModIndex::new(p, Exponent::new(q).unwrap(), 0.0).unwrap(), &w).unwrap())
            .collect();
        prop_assert!(norms.windows(2).all(|n| n[1] <= n[0] * (1.0 + 1e-12)), "{:?}", norms);
    }

    #[test]
    fn modulation_norm_is_invariant_under_the_flow_for_p2(seed in any::<u64>(), t in -30.0..30.0f64, q in exponent()) {
        // W(t) commutes with every band and is unitary, so ‖W(t) f‖_{M_{2,q}} = ‖f‖_{M_{2,q}}.
        let g = grid(1);
        let w = window(&g);
        let plan = PropagatorPlan::new(&g, DispersionParams::new(1.0, -0.2, 0.1).unwrap());
        let idx = ModIndex::new(Exponent::new(2.0).unwrap(), q, 0.5).unwrap();
        let f = field(&g, seed, 4.0);
        let before = modulation_norm(&f, &idx, &w).unwrap();
        let after = modulation_norm(&propagate(&f, t, &plan).unwrap(), &idx, &w).unwrap();
        prop_assert!((after / before - 1.0).abs() < 1e-12);
    }
}
