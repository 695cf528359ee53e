//! Semilinear system: nonlinear stepping, the Duhamel fixed-point (Picard)
//! construction on short windows, and the blow-up detector.

mod nonlinearity;
mod strichartz;

pub use nonlinearity::{HypothesisViolation, Nonlinearity, NonlinearityPair};
pub use strichartz::{
    admissible_pair, contraction_quantity, lebesgue_norm, resolution_norm, source_bound_exponent,
    source_norm, strichartz_norm, strichartz_norms, StrichartzPair,
};

use crate::domain::CoefficientField;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::wave::{Forcing, Stepper, SystemState, TrajectoryRecord, DEFAULT_CFL_SAFETY};

/// One step of the semilinear system: the linear step with sources
/// `-f1(u_mid)`, `-f2(v_mid)` taken at the half-step predictors.
pub fn step_semilinear<T: Real>(
    state: &SystemState<T>,
    a: &CoefficientField<T>,
    b: &CoefficientField<T>,
    fpair: &NonlinearityPair<T>,
    dt: T,
) -> Result<SystemState<T>> {
    let mut stepper = Stepper::new(a, b, dt, T::lit(DEFAULT_CFL_SAFETY))?;
    let mut next = state.clone();
    stepper.advance(&mut next, Forcing::Nonlinear(fpair))?;
    Ok(next)
}

/// Window and stopping rule of a fixed-point solve.
#[derive(Clone, Debug)]
pub struct PicardSettings<T> {
    pub horizon: T,
    pub tol: T,
    pub max_iter: usize,
    pub cfl_safety: T,
}

impl<T: Real> PicardSettings<T> {
    pub fn new(horizon: T, tol: T, max_iter: usize) -> Self {
        Self {
            horizon,
            tol,
            max_iter,
            cfl_safety: T::lit(DEFAULT_CFL_SAFETY),
        }
    }

    /// Step count and size for the window.
    pub fn steps(&self, grid: &crate::domain::GridDomain<T>) -> (usize, T) {
        let max_dt = Stepper::max_dt(grid, self.cfl_safety);
        let ratio = (self.horizon / max_dt).to_f64_lossy();
        let n = ((ratio - 1e-9).ceil() as usize).max(1);
        (n, self.horizon / T::from_count(n))
    }
}

/// Converged fixed point: the state at every time level and the
/// sup-in-time energy-norm distances between consecutive iterates.
#[derive(Clone, Debug)]
pub struct PicardSolution<T> {
    pub states: Vec<SystemState<T>>,
    pub residuals: Vec<T>,
    pub dt: T,
}

impl<T: Real> PicardSolution<T> {
    pub fn iterations(&self) -> usize {
        self.residuals.len()
    }

    /// Ratios `r_{k+1} / r_k` of consecutive residuals.
    pub fn residual_ratios(&self) -> Vec<T> {
        self.residuals.windows(2).map(|w| w[1] / w[0]).collect()
    }
}

/// `sup_n ‖x_n - y_n‖_H` over two equally long state sequences.
pub fn sup_h_distance<T: Real>(x: &[SystemState<T>], y: &[SystemState<T>]) -> T {
    x.iter()
        .zip(y)
        .map(|(p, q)| p.difference(q).h_norm())
        .fold(T::zero(), |acc, d| if d.is_nan() { d } else { acc.max(d) })
}

fn propagate<T: Real>(
    initial: &SystemState<T>,
    stepper: &mut Stepper<T>,
    n_steps: usize,
    sources: Option<&[(Vec<T>, Vec<T>)]>,
) -> Result<Vec<SystemState<T>>> {
    let mut states = Vec::with_capacity(n_steps + 1);
    let mut state = initial.clone();
    let t0 = initial.time;
    states.push(state.clone());
    for n in 0..n_steps {
        let forcing = match sources {
            Some(src) => Forcing::Given {
                g1: &src[n].0,
                g2: &src[n].1,
            },
            None => Forcing::None,
        };
        stepper.advance(&mut state, forcing)?;
        state.time = t0 + T::from_count(n + 1) * stepper.dt();
        states.push(state.clone());
    }
    Ok(states)
}

fn frozen_sources<T: Real>(
    states: &[SystemState<T>],
    stepper: &Stepper<T>,
    fpair: &NonlinearityPair<T>,
) -> Vec<(Vec<T>, Vec<T>)> {
    states[..states.len() - 1]
        .iter()
        .map(|s| {
            let (um, vm) = stepper.midpoint_predictor(s);
            (
                um.iter().map(|x| -fpair.f1.eval(*x)).collect(),
                vm.iter().map(|x| -fpair.f2.eval(*x)).collect(),
            )
        })
        .collect()
}

/// Fixed-point iteration of the discrete Duhamel map on `[0, horizon]`.
///
/// The first iterate is the free evolution; each further iterate is the
/// linear evolution with the sources `-f(U^k)` frozen at the previous
/// iterate's half-step predictors, so a fixed point is exactly a
/// trajectory of [`step_semilinear`].
pub fn picard_solve<T: Real>(
    initial: &SystemState<T>,
    a: &CoefficientField<T>,
    b: &CoefficientField<T>,
    fpair: &NonlinearityPair<T>,
    settings: &PicardSettings<T>,
) -> Result<PicardSolution<T>> {
    if !(settings.tol > T::zero()) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let (n_steps, dt) = settings.steps(a.grid());
    let mut stepper = Stepper::new(a, b, dt, settings.cfl_safety)?;
    let mut current = propagate(initial, &mut stepper, n_steps, None)?;
    let mut residuals: Vec<T> = Vec::new();
    let mut rising = 0usize;
    for k in 1..=settings.max_iter {
        let sources = frozen_sources(&current, &stepper, fpair);
        let next = propagate(initial, &mut stepper, n_steps, Some(&sources))?;
        let r = sup_h_distance(&next, &current);
        if !r.is_finite() {
            return Err(Error::NonContractive { iteration: k });
        }
        if let Some(prev) = residuals.last() {
            if r >= *prev {
                rising += 1;
                if rising >= 3 {
                    return Err(Error::NonContractive { iteration: k });
                }
            } else {
                rising = 0;
            }
        }
        residuals.push(r);
        current = next;
        if r <= settings.tol {
            return Ok(PicardSolution {
                states: current,
                residuals,
                dt,
            });
        }
    }
    Err(Error::MaxIterations(settings.max_iter))
}

/// `sup_t ‖U(t) - V(t)‖_H / ‖U0 - V0‖_H` for two fixed points on the same
/// window; 0 when the data coincide.
pub fn picard_stability<T: Real>(
    initial1: &SystemState<T>,
    initial2: &SystemState<T>,
    a: &CoefficientField<T>,
    b: &CoefficientField<T>,
    fpair: &NonlinearityPair<T>,
    settings: &PicardSettings<T>,
) -> Result<T> {
    let denom = initial1.difference(initial2).h_norm();
    if denom == T::zero() {
        return Ok(T::zero());
    }
    let s1 = picard_solve(initial1, a, b, fpair, settings)?;
    let s2 = picard_solve(initial2, a, b, fpair, settings)?;
    Ok(sup_h_distance(&s1.states, &s2.states) / denom)
}

/// First horizon of an increasing list on which the fixed-point iteration
/// fails to contract, if any.
pub fn first_noncontractive_horizon<T: Real>(
    initial: &SystemState<T>,
    a: &CoefficientField<T>,
    b: &CoefficientField<T>,
    fpair: &NonlinearityPair<T>,
    horizons: &[T],
    tol: T,
    max_iter: usize,
) -> Result<Option<T>> {
    for &h in horizons {
        match picard_solve(initial, a, b, fpair, &PicardSettings::new(h, tol, max_iter)) {
            Ok(_) => {}
            Err(Error::NonContractive { .. }) | Err(Error::MaxIterations(_)) => return Ok(Some(h)),
            Err(e) => return Err(e),
        }
    }
    Ok(None)
}

/// Bisects between a contractive horizon `lo` and a non-contractive `hi`;
/// returns the largest horizon found to contract.
#[allow(clippy::too_many_arguments)]
pub fn contraction_window<T: Real>(
    initial: &SystemState<T>,
    a: &CoefficientField<T>,
    b: &CoefficientField<T>,
    fpair: &NonlinearityPair<T>,
    mut lo: T,
    mut hi: T,
    bisections: usize,
    tol: T,
    max_iter: usize,
) -> Result<T> {
    for _ in 0..bisections {
        let mid = T::lit(0.5) * (lo + hi);
        match picard_solve(initial, a, b, fpair, &PicardSettings::new(mid, tol, max_iter)) {
            Ok(_) => lo = mid,
            Err(Error::NonContractive { .. }) | Err(Error::MaxIterations(_)) => hi = mid,
            Err(e) => return Err(e),
        }
    }
    Ok(lo)
}

/// Why the explosion guard fired.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExplosionCause {
    NonFinite,
    CeilingExceeded,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Explosion<T> {
    pub time: T,
    pub cause: ExplosionCause,
}

/// Default ceiling: `1e6 * max(‖U0‖_H, 1)`.
pub fn default_ceiling<T: Real>(initial: &SystemState<T>) -> T {
    T::lit(1e6) * initial.h_norm().max(T::one())
}

/// First sample whose energy-space norm exceeds `ceiling` or is not finite.
pub fn explosion_guard<T: Real>(traj: &TrajectoryRecord<T>, ceiling: T) -> Option<Explosion<T>> {
    for (t, e) in traj.times.iter().zip(&traj.energies) {
        let norm = e.h_norm();
        if !norm.is_finite() || !e.total.is_finite() {
            return Some(Explosion {
                time: *t,
                cause: ExplosionCause::NonFinite,
            });
        }
        if norm > ceiling {
            return Some(Explosion {
                time: *t,
                cause: ExplosionCause::CeilingExceeded,
            });
        }
    }
    traj.blow_up.map(|time| Explosion {
        time,
        cause: ExplosionCause::NonFinite,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_coefficient, GridDomain, RegionSpec};
    use crate::wave::{energy, evolve, step_linear, RunSettings};
    use std::f64::consts::PI;

    fn bump(grid: &GridDomain<f64>, amp: f64, center: f64) -> Vec<f64> {
        grid.sample_dirichlet(|p| amp * (-(p[0] - center).powi(2) / 0.01).exp() * (PI * p[0]).sin())
    }

    fn setup() -> (GridDomain<f64>, CoefficientField<f64>, CoefficientField<f64>) {
        let g = GridDomain::line(1.0, 201).unwrap();
        let a = build_coefficient(&RegionSpec::interval(0.1, 0.5).with_mollification(0.05), &g, 1.0, 0.5)
            .unwrap();
        let b = build_coefficient(&RegionSpec::interval(0.2, 0.4).with_mollification(0.05), &g, 1.0, 0.5)
            .unwrap();
        (g, a, b)
    }

    fn data(g: &GridDomain<f64>, amp: f64) -> SystemState<f64> {
        let n = g.len();
        SystemState::from_fields(g, bump(g, amp, 0.5), bump(g, 0.5 * amp, 0.6), vec![0.0; n], vec![0.0; n])
            .unwrap()
    }

    #[test]
    fn zero_nonlinearity_reduces_to_linear_step() {
        let (g, a, b) = setup();
        let s = data(&g, 1.0);
        let z = vec![0.0; g.len()];
        let dt = 0.002;
        let lin = step_linear(&s, &a, &b, &z, &z, dt).unwrap();
        let semi = step_semilinear(&s, &a, &b, &NonlinearityPair::zero(), dt).unwrap();
        assert_eq!(lin, semi);
        let zero = SystemState::zeros(&g);
        let next = step_semilinear(&zero, &a, &b, &NonlinearityPair::cubic(), dt).unwrap();
        assert!(next.fields().iter().all(|f| f.iter().all(|x| *x == 0.0)));
    }

    #[test]
    fn cubic_hamiltonian_drift() {
        let g = GridDomain::line(1.0, 201).unwrap();
        let z = CoefficientField::zero(&g);
        let n = g.len();
        let u = g.sample_dirichlet(|p| (PI * p[0]).sin());
        let s0 = SystemState::from_fields(&g, u, vec![0.0; n], vec![0.0; n], vec![0.0; n]).unwrap();
        let pair = NonlinearityPair::cubic();
        let rec = evolve(&s0, &z, &z, Some(&pair), &RunSettings::new(10.0)).unwrap();
        let e = rec.totals();
        let drift = e.iter().map(|x| (x - e[0]).abs() / e[0]).fold(0.0, f64::max);
        assert!(drift < 1e-4, "drift {drift}");
        assert!(rec.energies[0].nonlinear_potential > 0.0);
    }

    #[test]
    fn picard_with_zero_nonlinearity_converges_immediately() {
        let (g, a, b) = setup();
        let sol = picard_solve(&data(&g, 1.0), &a, &b, &NonlinearityPair::zero(), &PicardSettings::new(0.2, 1e-12, 10))
            .unwrap();
        assert_eq!(sol.residuals, vec![0.0]);
    }

    #[test]
    fn picard_contracts_geometrically_and_matches_direct_run() {
        let (g, a, b) = setup();
        let s0 = data(&g, 2.0);
        let pair = NonlinearityPair::cubic();
        let settings = PicardSettings::new(0.5, 1e-12, 60);
        let sol = picard_solve(&s0, &a, &b, &pair, &settings).unwrap();
        assert!(sol.iterations() >= 6, "{:?}", sol.residuals);
        for r in &sol.residual_ratios()[..5] {
            assert!(*r < 0.8, "ratios {:?}", sol.residual_ratios());
        }
        let direct = evolve(
            &s0,
            &a,
            &b,
            Some(&pair),
            &RunSettings::new(0.5).keep_snapshots(true),
        )
        .unwrap();
        assert_eq!(direct.snapshots.len(), sol.states.len());
        let diff = sup_h_distance(&direct.snapshots, &sol.states);
        assert!(diff < 10.0 * settings.tol, "diff {diff}");
    }

    #[test]
    fn noncontractive_threshold_shrinks_with_data() {
        let (g, a, b) = setup();
        let pair = NonlinearityPair::cubic();
        let horizons: Vec<f64> = (0..12).map(|k| 0.05 * 1.5f64.powi(k)).collect();
        let mut thresholds = Vec::new();
        for amp in [6.0, 12.0, 24.0] {
            let t = first_noncontractive_horizon(&data(&g, amp), &a, &b, &pair, &horizons, 1e-10, 25)
                .unwrap()
                .unwrap_or(f64::INFINITY);
            thresholds.push(t);
        }
        assert!(thresholds.windows(2).all(|w| w[1] <= w[0]), "{thresholds:?}");
        assert!(thresholds[2] < thresholds[0], "{thresholds:?}");
    }

    #[test]
    fn stability_ratio_linear_and_equal_data() {
        let (g, a, b) = setup();
        let s1 = data(&g, 1.0);
        let s2 = data(&g, 1.3);
        let settings = PicardSettings::new(0.4, 1e-12, 40);
        assert_eq!(
            picard_stability(&s1, &s1, &a, &b, &NonlinearityPair::cubic(), &settings).unwrap(),
            0.0
        );
        let ratio = picard_stability(&s1, &s2, &a, &b, &NonlinearityPair::zero(), &settings).unwrap();
        let (_, dt) = settings.steps(&g);
        assert!(ratio <= 1.0 + 10.0 * dt, "ratio {ratio}");
    }

    #[test]
    fn explosion_guard_controls() {
        let (g, a, b) = setup();
        let pair = NonlinearityPair::cubic();
        let s0 = data(&g, 3.0);
        let rec = evolve(&s0, &a, &b, Some(&pair), &RunSettings::new(5.0).stride(10)).unwrap();
        assert!(explosion_guard(&rec, default_ceiling(&s0)).is_none());
        let zero = SystemState::zeros(&g);
        let rec0 = evolve(&zero, &a, &b, Some(&pair), &RunSettings::new(1.0).stride(10)).unwrap();
        assert!(explosion_guard(&rec0, default_ceiling(&zero)).is_none());

        let focusing = NonlinearityPair::same(Nonlinearity::focusing(Nonlinearity::Cubic));
        let big = data(&g, 30.0);
        let ceiling = default_ceiling(&big);
        let rec = evolve(
            &big,
            &a,
            &b,
            Some(&focusing),
            &RunSettings::new(5.0).norm_ceiling(ceiling),
        )
        .unwrap();
        let fired = explosion_guard(&rec, ceiling).expect("focusing run must blow up");
        assert!(fired.time < 5.0);
    }

    #[test]
    fn source_norm_bound_holds_with_fitted_constant() {
        let (g, a, b) = setup();
        let pair = NonlinearityPair::cubic();
        let spair = admissible_pair(4.0).unwrap();
        let p = 3.0f64;
        let theta = source_bound_exponent(p);
        let ratio = |amp: f64, horizon: f64| {
            let rec = evolve(
                &data(&g, amp),
                &a,
                &b,
                Some(&pair),
                &RunSettings::new(horizon).keep_snapshots(true),
            )
            .unwrap();
            let x = resolution_norm(&rec.snapshots, spair);
            source_norm(&rec.snapshots, &pair) / (x * (horizon + horizon.powf(theta) * x.powf(p - 1.0)))
        };
        let fitted = [(4.0, 0.5), (8.0, 0.3), (2.0, 1.0)]
            .iter()
            .map(|&(amp, t)| ratio(amp, t))
            .fold(0.0, f64::max);
        for (amp, t) in [(0.5, 0.5), (1.0, 0.2), (3.0, 0.8), (6.0, 0.25), (0.1, 1.0)] {
            let r = ratio(amp, t);
            assert!(r <= 2.0 * fitted, "amp {amp}, T {t}: {r} vs fitted {fitted}");
        }
    }

    #[test]
    fn defocusing_energy_never_grows_beyond_scheme_error() {
        let (g, a, b) = setup();
        let pair = NonlinearityPair::cubic();
        let s0 = data(&g, 2.0);
        let rec = evolve(&s0, &a, &b, Some(&pair), &RunSettings::new(3.0)).unwrap();
        let e0 = energy(&s0, Some(&pair)).total;
        let dt = rec.times[1] - rec.times[0];
        for w in rec.totals().windows(2) {
            assert!(w[1] <= w[0] + 50.0 * dt.powi(2) * e0, "{} -> {}", w[0], w[1]);
        }
    }
}
