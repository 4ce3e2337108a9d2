use modspace_core::fields::Gaussian;
use modspace_core::modulation::{build_window, Window};
use modspace_core::propagator::PropagatorPlan;
use modspace_core::solver::{
    duhamel_integral_direct, duhamel_integrals, picard_solve, Nonlinearity, PicardOutcome,
    SolverConfig,
};
use modspace_core::spectral::{
    inverse_transform, to_spectral, ComplexField, DispersionParams, Exponent, GridSpec, ModIndex,
    Representation,
};
use num_complex::Complex64;

fn grid_times(t_max: f64, nodes: usize) -> Vec<f64> {
    (0..nodes)
        .map(|i| t_max * i as f64 / (nodes - 1) as f64)
        .collect()
}

fn l2(f: &ComplexField) -> f64 {
    f.sum_sq().sqrt()
}

/// `∫_0^t W(t - τ) τ g dτ` mode by mode.
fn exact_ramp_integral(g: &ComplexField, plan: &PropagatorPlan, t: f64) -> ComplexField {
    let hat = to_spectral(g).unwrap();
    let i = Complex64::i();
    let values = hat
        .values()
        .iter()
        .zip(plan.phase())
        .map(|(v, &phi)| {
            let weight = if phi.abs() < 1e-12 {
                Complex64::new(0.5 * t * t, 0.0)
            } else {
                let z = i * phi;
                -t / z + ((z * t).exp() - 1.0) / (z * z)
            };
            weight * v
        })
        .collect();
    let spectral = ComplexField::new(g.grid().clone(), values, Representation::Spectral).unwrap();
    inverse_transform(&spectral).unwrap()
}

fn ramp_setup() -> (ComplexField, PropagatorPlan) {
    let grid = GridSpec::cube(1, 64, 32.0).unwrap();
    let plan = PropagatorPlan::new(&grid, DispersionParams::new(1.0, 0.2, 0.01).unwrap());
    let g = Gaussian::new(1.0, 1.0).sample(&grid).unwrap();
    (g, plan)
}

#[test]
fn trapezoid_duhamel_converges_at_second_order() {
    let (g, plan) = ramp_setup();
    let t = 2.0;
    let exact = exact_ramp_integral(&g, &plan, t);
    let errors: Vec<f64> = [33, 65, 129, 257]
        .iter()
        .map(|&nodes| {
            let times = grid_times(t, nodes);
            let sources: Vec<_> = times
                .iter()
                .map(|&s| g.scale(Complex64::new(s, 0.0)))
                .collect();
            let approx = duhamel_integrals(&sources, &times, &plan).unwrap();
            l2(&approx[nodes - 1].sub(&exact).unwrap()) / l2(&exact)
        })
        .collect();
    for pair in errors.windows(2) {
        assert!(pair[0] / pair[1] >= 3.5, "{errors:?}");
    }
}

#[test]
fn fast_and_direct_duhamel_agree() {
    let (g, plan) = ramp_setup();
    let times = grid_times(3.0, 31);
    let sources: Vec<_> = times
        .iter()
        .map(|&s| g.scale(Complex64::from_polar(1.0 + s, s)))
        .collect();
    let fast = duhamel_integrals(&sources, &times, &plan).unwrap();
    assert!(fast[0].is_zero());
    for i in [1, 7, 30] {
        let direct = duhamel_integral_direct(&sources, &times, &plan, i).unwrap();
        let err = l2(&fast[i].sub(&direct).unwrap()) / l2(&direct);
        assert!(err < 1e-12, "node {i}: {err}");
    }
}

struct PowerCase {
    plan: PropagatorPlan,
    window: Window,
    idx: ModIndex,
    data: ComplexField,
}

fn power_case() -> PowerCase {
    let grid = GridSpec::cube(1, 128, 64.0).unwrap();
    PowerCase {
        plan: PropagatorPlan::new(&grid, DispersionParams::new(1.0, 0.0, 0.1).unwrap()),
        window: build_window(1, &grid).unwrap(),
        idx: ModIndex::new(
            Exponent::new(7.0).unwrap(),
            Exponent::new(1.0).unwrap(),
            0.0,
        )
        .unwrap(),
        data: Gaussian::new(1.5, 1.0).sample(&grid).unwrap(),
    }
}

fn solve(
    case: &PowerCase,
    data: &ComplexField,
    spec: &Nonlinearity,
    times: &[f64],
) -> PicardOutcome {
    let config = SolverConfig {
        radius: 1e6,
        delta: f64::MAX,
        tol: 1e-14,
        max_iter: 60,
        allow_subcritical: false,
    };
    picard_solve(
        data,
        spec,
        &case.plan,
        &case.window,
        &case.idx,
        &config,
        times,
    )
    .unwrap()
}

#[test]
fn nonlinear_part_scales_with_the_power() {
    let case = power_case();
    let spec = Nonlinearity::power(5);
    let times = grid_times(4.0, 41);
    let parts: Vec<f64> = [0.2, 0.1]
        .iter()
        .map(|&eps| {
            solve(
                &case,
                &case.data.scale(Complex64::new(eps, 0.0)),
                &spec,
                &times,
            )
            .duhamel_norm
        })
        .collect();
    let ratio = parts[0] / parts[1];
    assert!((ratio / 64.0 - 1.0).abs() < 0.01, "{ratio}");
}

#[test]
fn zero_data_is_a_fixed_point() {
    let case = power_case();
    let zero = ComplexField::zeros(case.data.grid(), Representation::Physical);
    let out = solve(&case, &zero, &Nonlinearity::power(5), &grid_times(1.0, 5));
    assert_eq!(out.iterations(), 1);
    assert!(out.series.is_zero());
}

#[test]
fn fixed_point_converges_at_second_order_in_the_step() {
    let case = power_case();
    let spec = Nonlinearity::power(5);
    let data = case.data.scale(Complex64::new(0.6, 0.0));
    let t_max = 2.0;
    let end: Vec<ComplexField> = [81, 161, 321]
        .iter()
        .map(|&n| {
            solve(&case, &data, &spec, &grid_times(t_max, n))
                .series
                .fields()[n - 1]
                .clone()
        })
        .collect();
    let coarse = l2(&end[0].sub(&end[1]).unwrap());
    let fine = l2(&end[1].sub(&end[2]).unwrap());
    assert!(fine > 0.0);
    let ratio = coarse / fine;
    assert!((3.5..=4.5).contains(&ratio), "{ratio}");
}

#[test]
fn exponential_series_order_doubling_is_invisible() {
    let grid = GridSpec::cube(2, 32, 32.0).unwrap();
    let window = build_window(2, &grid).unwrap();
    let plan = PropagatorPlan::new(&grid, DispersionParams::new(0.5, 0.0, 0.02).unwrap());
    let idx = ModIndex::new(
        Exponent::new(4.0).unwrap(),
        Exponent::new(1.0).unwrap(),
        0.0,
    )
    .unwrap();
    let data = Gaussian::new(3.0, 0.3).sample(&grid).unwrap();
    let times = grid_times(2.0, 11);
    let config = SolverConfig {
        radius: 1e6,
        delta: f64::MAX,
        tol: 1e-12,
        max_iter: 40,
        allow_subcritical: false,
    };
    let run = |order| {
        let spec = Nonlinearity::Exponential {
            lambda: Complex64::new(1.0, 0.0),
            rho: 1.0,
            order,
        };
        picard_solve(&data, &spec, &plan, &window, &idx, &config, &times).unwrap()
    };
    let (k, k2) = (run(8), run(16));
    assert!(!k.tail_flagged && !k2.tail_flagged);
    let diff = k.series.sub(&k2.series).unwrap();
    let gap = diff.weighted_norm(&idx, k.alpha, &window).unwrap().value;
    assert!(gap <= 4.0 * config.tol, "{gap}");
}
