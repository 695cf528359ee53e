use proptest::prelude::*;

use wavelab::observability::{
    damped_observation, gramian, observation, propagate_damped, propagate_undamped, resonance_criterion,
    RayOdeSystem, SampledTrace,
};

fn constant_system(a: f64, b: f64, horizon: f64, n: usize) -> RayOdeSystem<f64> {
    RayOdeSystem::new(
        SampledTrace::from_fn(horizon, n, |_| a).unwrap(),
        SampledTrace::from_fn(horizon, n, |_| b).unwrap(),
    )
    .unwrap()
}

/// `exp(s A)` by scaling and squaring of a Taylor polynomial.
fn expm(m: [[f64; 2]; 2], s: f64) -> [[f64; 2]; 2] {
    let mul = |x: [[f64; 2]; 2], y: [[f64; 2]; 2]| {
        let mut z = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                z[i][j] = x[i][0] * y[0][j] + x[i][1] * y[1][j];
            }
        }
        z
    };
    let squarings = 20;
    let h = s / f64::powi(2.0, squarings);
    let a = [[m[0][0] * h, m[0][1] * h], [m[1][0] * h, m[1][1] * h]];
    let mut term = [[1.0, 0.0], [0.0, 1.0]];
    let mut sum = term;
    for k in 1..20 {
        term = mul(term, a);
        term = [[term[0][0] / k as f64, term[0][1] / k as f64], [term[1][0] / k as f64, term[1][1] / k as f64]];
        for i in 0..2 {
            for j in 0..2 {
                sum[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..squarings {
        sum = mul(sum, sum);
    }
    sum
}

fn random_trace(seed: &[f64], horizon: f64, n: usize) -> SampledTrace<f64> {
    SampledTrace::from_fn(horizon, n, |s| {
        seed.iter()
            .enumerate()
            .map(|(k, c)| c.abs() * (1.0 + ((k + 1) as f64 * s).sin()))
            .sum()
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn rotation_preserves_length(x in -5.0f64..5.0, y in -5.0f64..5.0, s in 0.0f64..8.0,
                                 coeffs in prop::collection::vec(-2.0f64..2.0, 1..4)) {
        let sys = RayOdeSystem::new(random_trace(&coeffs, 8.0, 401), random_trace(&coeffs, 8.0, 401)).unwrap();
        let out = propagate_undamped([x, y], &sys, s);
        prop_assert!((out[0].hypot(out[1]) - x.hypot(y)).abs() < 1e-10 * (1.0 + x.hypot(y)));
    }

    #[test]
    fn gramian_is_symmetric_and_semidefinite(ca in prop::collection::vec(-2.0f64..2.0, 1..4),
                                             cb in prop::collection::vec(-2.0f64..2.0, 1..4),
                                             x in -1.0f64..1.0, y in -1.0f64..1.0) {
        let sys = RayOdeSystem::new(random_trace(&ca, 6.0, 601), random_trace(&cb, 6.0, 601)).unwrap();
        let r = gramian(&sys);
        let g = r.gramian;
        prop_assert_eq!(g[0][1], g[1][0]);
        prop_assert!(r.min_eigenvalue >= -1e-12 * (1.0 + r.trace()));
        let quad = g[0][0] * x * x + 2.0 * g[0][1] * x * y + g[1][1] * y * y;
        prop_assert!((quad - observation([x, y], &sys)).abs() < 1e-10 * (1.0 + r.trace()));
    }

    #[test]
    fn constant_coefficient_observation_closed_form(a in 0.1f64..3.0, b in 0.1f64..5.0, horizon in 1.0f64..8.0) {
        let sys = constant_system(a, b, horizon, 4001);
        // ¼ a² ∫₀ᵀ cos²(b s / 2) ds
        let exact = 0.25 * a * a * (horizon / 2.0 + (b * horizon).sin() / (2.0 * b));
        prop_assert!((observation([1.0, 0.0], &sys) - exact).abs() < 1e-5 * exact);
        prop_assert!(resonance_criterion(&sys).holds);
    }

    #[test]
    fn damped_flow_matches_matrix_exponential(a in 0.0f64..3.0, b in 0.0f64..5.0, s in 0.0f64..4.0,
                                              x in -1.0f64..1.0, y in -1.0f64..1.0) {
        let sys = constant_system(a, b, 4.0, 81);
        let e = expm([[-0.5 * a, -0.5 * b], [0.5 * b, 0.0]], s);
        let exact = [e[0][0] * x + e[0][1] * y, e[1][0] * x + e[1][1] * y];
        let got = propagate_damped([x, y], &sys, s);
        prop_assert!((got[0] - exact[0]).abs() < 1e-9 && (got[1] - exact[1]).abs() < 1e-9,
                     "{got:?} vs {exact:?}");
        prop_assert!(got[0].hypot(got[1]) <= x.hypot(y) + 1e-12);
    }
}

#[test]
fn damped_and_undamped_observability_agree_on_constant_pairs() {
    for (a, b) in [(1.0, 2.0), (0.5, 0.0), (2.0, 7.0)] {
        let sys = constant_system(a, b, 5.0, 1001);
        let undamped = gramian(&sys).observable();
        let damped = damped_observation([0.0, 1.0], &sys) > 1e-12;
        assert_eq!(undamped, damped, "a = {a}, b = {b}");
    }
}
