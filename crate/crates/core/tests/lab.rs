use std::path::Path;

use wavelab::domain::RegionSpec;
use wavelab::lab::config::{NonlinearityConfig, ScenarioConfig};
use wavelab::lab::{beta_versus_energy, fit_decay, run_scenario, Scenario};
use wavelab::rays::gcc_verify;
use wavelab::wave::{evolve, SystemState};

fn scenario_file(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

#[test]
fn shipped_scenarios_load() {
    for name in ["reference.toml", "quick.toml", "strip.toml"] {
        let cfg = ScenarioConfig::load(scenario_file(name)).unwrap();
        let s = Scenario::build(&cfg).unwrap();
        assert!(!s.hypothesis_violating, "{name}");
    }
    assert_eq!(ScenarioConfig::load(scenario_file("reference.toml")).unwrap(), ScenarioConfig::reference());
}

fn beam_beta(scenario: &Scenario, k: usize, horizon: f64) -> f64 {
    let g = &scenario.grid;
    let mut state = SystemState::zeros(g);
    let pi = std::f64::consts::PI;
    state.u = g.sample_dirichlet(|p| {
        (-(p[0] - 0.15).powi(2) / (2.0 * 0.05f64.powi(2))).exp() * (pi * p[0]).sin() * (k as f64 * pi * p[1]).sin()
    });
    state.v = state.u.clone();
    let rec = evolve(&state, &scenario.a, &scenario.b, None, &scenario.settings(horizon)).unwrap();
    fit_decay(&rec.times, &rec.totals(), 0.6).unwrap().beta
}

#[test]
fn removing_control_slows_decay_of_trapped_beams() {
    let mut cfg = ScenarioConfig::reference();
    cfg.grid.nodes = vec![65, 65];
    cfg.nonlinearity = NonlinearityConfig::none();
    let strip = RegionSpec::rect([0.4, 0.0], [0.6, 1.0]).with_mollification(0.05);
    cfg.regions.omega_a = strip.clone();
    cfg.regions.omega_b = strip.clone();
    cfg.time.sample_stride = 10;
    let s = Scenario::build(&cfg).unwrap();
    let gcc = gcc_verify(&strip, &s.grid, 500, 10.0, 1).unwrap();
    assert!(gcc.certificate.is_some());
    let betas: Vec<f64> = [2, 6, 12].iter().map(|&k| beam_beta(&s, k, 20.0)).collect();
    println!("beam betas {betas:?}");
    assert!(betas.windows(2).all(|w| w[1] < w[0]), "{betas:?}");
}

#[test]
fn reference_rate_is_stable_under_refinement() {
    let mut cfg = ScenarioConfig::reference();
    let coarse = run_scenario(&cfg).unwrap().record;
    cfg.grid.nodes = vec![257, 257];
    cfg.time.sample_stride *= 2;
    let fine = run_scenario(&cfg).unwrap().record;
    let b1 = fit_decay(&coarse.times, &coarse.totals(), 0.6).unwrap();
    let b2 = fit_decay(&fine.times, &fine.totals(), 0.6).unwrap();
    println!("beta {} (129^2), {} (257^2)", b1.beta, b2.beta);
    assert!(b1.beta > 0.0 && b2.beta > 0.0);
    assert!((b2.beta - b1.beta).abs() <= 0.1 * b1.beta);
}

#[test]
fn rate_against_initial_energy_is_recorded() {
    let mut cfg = ScenarioConfig::reference();
    cfg.grid.nodes = vec![65, 65];
    cfg.time.horizon = 30.0;
    cfg.time.sample_stride = 10;
    let s = Scenario::build(&cfg).unwrap();
    let rows = beta_versus_energy(&s, &[0.1, 1.0, 10.0, 100.0]).unwrap();
    for (e0, fit) in &rows {
        match fit {
            Some(f) => println!("E0 {e0}: beta {:.4}, R^2 {:.4}", f.beta, f.r_squared),
            None => println!("E0 {e0}: no fit"),
        }
    }
    assert_eq!(rows.len(), 4);
}
