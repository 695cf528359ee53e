//! Ray ODE observability driven from scenario files or trace tables.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::observability::{gramian, ObservabilityReport, RayOdeSystem, SampledTrace};
use crate::rays::{coefficient_trace, trace_ray};

use super::scenario::Scenario;

/// Flow label for traces taken along billiard rays: the boundary turns the
/// ODE criterion into a diagnostic rather than a theorem.
pub const BILLIARD_FLOW: &str = "billiard-heuristic";
/// Flow label for user-supplied traces.
pub const GIVEN_FLOW: &str = "given-trace";

/// Traces `n_rays` seeded rays of the scenario's 2D grid up to `horizon`
/// and evaluates the Gramian of each coefficient pair.
pub fn ray_observability(
    scenario: &Scenario,
    n_rays: usize,
    horizon: f64,
    seed: u64,
) -> Result<Vec<ObservabilityReport<f64>>> {
    let grid = &scenario.grid;
    if grid.dim() != 2 {
        return Err(Error::InvalidArgument("ray observability needs a 2D grid".into()));
    }
    if !(horizon > 0.0) {
        return Err(Error::InvalidArgument("ray horizon must be positive".into()));
    }
    let ext = [grid.extents()[0], grid.extents()[1]];
    let h = grid.spacing()[0].min(grid.spacing()[1]);
    let n = ((4.0 * horizon / h).ceil() as usize).max(64) + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_rays)
        .map(|_| {
            let x0 = [rng.gen_range(0.01..0.99) * ext[0], rng.gen_range(0.01..0.99) * ext[1]];
            let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let path = trace_ray(x0, [theta.cos(), theta.sin()], horizon, grid)?;
            let sys = RayOdeSystem::new(
                coefficient_trace(&path, &scenario.a, n)?,
                coefficient_trace(&path, &scenario.b, n)?,
            )?;
            Ok(gramian(&sys))
        })
        .collect()
}

/// Reads a trace table with columns `s`, `a`, `b` on a uniform grid
/// starting at `s = 0`.
pub fn read_trace_csv(path: &Path) -> Result<RayOdeSystem<f64>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let header = reader.headers()?.clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Config(format!("{}: missing column '{name}'", path.display())))
    };
    let (is, ia, ib) = (col("s")?, col("a")?, col("b")?);
    let (mut s, mut a, mut b) = (Vec::new(), Vec::new(), Vec::new());
    for rec in reader.records() {
        let rec = rec?;
        let get = |i: usize| {
            rec.get(i)
                .and_then(|x| x.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::Config(format!("{}: unparsable row {:?}", path.display(), rec)))
        };
        s.push(get(is)?);
        a.push(get(ia)?);
        b.push(get(ib)?);
    }
    if s.len() < 2 {
        return Err(Error::Config(format!("{}: a trace needs at least two rows", path.display())));
    }
    let ds = s[1] - s[0];
    let uniform = s[0].abs() <= 1e-12
        && s.iter()
            .enumerate()
            .all(|(k, x)| (x - k as f64 * ds).abs() <= 1e-9 * (1.0 + ds * k as f64));
    if !uniform {
        return Err(Error::Config(format!(
            "{}: s must start at 0 and be uniformly spaced",
            path.display()
        )));
    }
    RayOdeSystem::new(SampledTrace::new(ds, a)?, SampledTrace::new(ds, b)?)
}
