use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wavelab::domain::{build_coefficient, CoefficientField, GridDomain, RegionSpec, Side};
use wavelab::semilinear::{Nonlinearity, NonlinearityPair};
use wavelab::wave::{energy, evolve, gradient_energy, step_linear, RunSettings, Stepper, SystemState};

fn smooth_field(g: &GridDomain<f64>, rng: &mut ChaCha8Rng, modes: usize) -> Vec<f64> {
    let c: Vec<f64> = (0..modes * modes).map(|_| rng.gen_range(-1.0..1.0)).collect();
    g.sample_dirichlet(|p| {
        let mut s = 0.0;
        for m in 1..=modes {
            for n in 1..=modes {
                let k = (m - 1) * modes + n - 1;
                s += c[k] / (m * m + n * n) as f64
                    * (m as f64 * std::f64::consts::PI * p[0]).sin()
                    * (n as f64 * std::f64::consts::PI * p[1]).sin();
            }
        }
        s
    })
}

fn random_state(g: &GridDomain<f64>, seed: u64, modes: usize) -> SystemState<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = smooth_field(g, &mut rng, modes);
    let v = smooth_field(g, &mut rng, modes);
    let ut = smooth_field(g, &mut rng, modes);
    let vt = smooth_field(g, &mut rng, modes);
    SystemState::from_fields(g, u, v, ut, vt).unwrap()
}

fn random_source(g: &GridDomain<f64>, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..g.len()).map(|k| if g.is_boundary(k) { 0.0 } else { rng.gen_range(-1.0..1.0) }).collect()
}

fn modified(s: &SystemState<f64>, g: &GridDomain<f64>, dt: f64, v_only: bool) -> f64 {
    let e = energy(s, None);
    if v_only {
        e.v_subsystem() - dt * dt / 4.0 * gradient_energy(&s.vt, g)
    } else {
        e.linear() - dt * dt / 4.0 * (gradient_energy(&s.ut, g) + gradient_energy(&s.vt, g))
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn skew_coupling_is_energy_neutral(seed in 0u64..1000, amp in 0.1f64..5.0) {
        let g = GridDomain::unit_square(33).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xb);
        let bvals: Vec<f64> = (0..g.len()).map(|_| amp * rng.gen_range(0.0..1.0)).collect();
        let b = CoefficientField::from_values(&g, bvals, 0.0).unwrap();
        let a = CoefficientField::zero(&g);
        let mut state = random_state(&g, seed, 3);
        let dt = Stepper::max_dt(&g, 0.5);
        let mut stepper = Stepper::new(&a, &b, dt, 0.5).unwrap();
        let e0 = energy(&state, None).linear();
        let m0 = modified(&state, &g, dt, false);
        let mut worst: f64 = 0.0;
        for _ in 0..200 {
            stepper.advance(&mut state, wavelab::wave::Forcing::None).unwrap();
            prop_assert!((modified(&state, &g, dt, false) - m0).abs() < 1e-12 * m0);
            worst = worst.max((energy(&state, None).linear() - e0).abs() / e0);
        }
        // the standard energy only wobbles by dt^2/4 |∇w|^2 <= dt^2/4 ω_max^2 E,
        // ω_max^2 = 18π^2 for modes up to 3
        let omega2 = 18.0 * std::f64::consts::PI.powi(2);
        prop_assert!(worst < dt * dt / 4.0 * omega2, "drift {worst}");
    }

    #[test]
    fn step_is_linear_in_state_and_sources(s1 in 0u64..1000, s2 in 0u64..1000, alpha in -3.0f64..3.0) {
        let g = GridDomain::unit_square(17).unwrap();
        let a = build_coefficient(&RegionSpec::collar(&[Side::Left], 0.3), &g, 1.0, 0.5).unwrap();
        let b = build_coefficient(&RegionSpec::collar(&[Side::Left], 0.2), &g, 2.0, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(s1 ^ s2);
        let (x, y) = (random_state(&g, s1, 4), random_state(&g, s2, 4));
        let (g1, g2, h1, h2) = (random_source(&g, &mut rng), random_source(&g, &mut rng), random_source(&g, &mut rng), random_source(&g, &mut rng));
        let dt = Stepper::max_dt(&g, 0.5);
        let combo = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(p, q)| p + alpha * q).collect::<Vec<_>>();
        let lhs = step_linear(&x.add_scaled(&y, alpha), &a, &b, &combo(&g1, &h1), &combo(&g2, &h2), dt).unwrap();
        let rhs = step_linear(&x, &a, &b, &g1, &g2, dt)
            .unwrap()
            .add_scaled(&step_linear(&y, &a, &b, &h1, &h2, dt).unwrap(), alpha);
        let scale = 1.0 + rhs.h_norm();
        for (p, q) in lhs.fields().iter().zip(rhs.fields()) {
            for (u, w) in p.iter().zip(q) {
                prop_assert!((u - w).abs() < 1e-12 * scale);
            }
        }
    }

    #[test]
    fn energy_and_norm_are_equivalent_on_bounded_states(seed in 0u64..1000, e_cap in 0.1f64..2.0) {
        let pair = NonlinearityPair::same(Nonlinearity::Cubic);
        for n in [17, 33, 65] {
            let g = GridDomain::unit_square(n).unwrap();
            let s = random_state(&g, seed, 5);
            let s = s.scaled((e_cap / energy(&s, None).linear()).sqrt());
            let norm2 = s.h_norm().powi(2);
            let e = energy(&s, Some(&pair)).total;
            prop_assert!(e >= 0.5 * norm2 * (1.0 - 1e-12));
            prop_assert!(e <= 1.5 * norm2, "ratio {} on {n}^2", e / norm2);
        }
    }
}

#[test]
fn uncoupled_v_keeps_its_energy() {
    let g = GridDomain::unit_square(65).unwrap();
    let a = build_coefficient(&RegionSpec::collar(&[Side::Left, Side::Bottom], 0.25), &g, 1.0, 0.5).unwrap();
    let b = CoefficientField::zero(&g);
    let mut state = SystemState::zeros(&g);
    state.v = g.sample_dirichlet(|p| (std::f64::consts::PI * p[0]).sin() * (std::f64::consts::PI * p[1]).sin());
    // ten periods of the fundamental mode
    let horizon = 10.0 * std::f64::consts::SQRT_2;
    let settings = RunSettings::new(horizon).stride(25).keep_snapshots(true);
    let rec = evolve(&state, &a, &b, None, &settings).unwrap();
    let dt = horizon / ((horizon / Stepper::max_dt(&g, 0.5) - 1e-9).ceil());
    let m0 = modified(&rec.snapshots[0], &g, dt, true);
    for s in &rec.snapshots {
        assert!(s.u.iter().chain(&s.ut).all(|x| *x == 0.0));
        assert!((modified(s, &g, dt, true) - m0).abs() < 1e-6 * m0);
    }
    assert!(rec.dissipation.iter().all(|d| *d == 0.0));
}
