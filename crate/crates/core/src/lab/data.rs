//! Initial-data recipes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::GridDomain;
use crate::error::{Error, Result};
use crate::wave::{energy, SystemState};

use super::config::{Component, DataConfig, DataRecipe};

fn sine(grid: &GridDomain<f64>, axis: usize, m: usize, x: f64) -> f64 {
    (m as f64 * std::f64::consts::PI * x / grid.extents()[axis]).sin()
}

fn eigenmode(grid: &GridDomain<f64>, mode: &[usize]) -> Result<Vec<f64>> {
    if mode.len() != grid.dim() || mode.contains(&0) {
        return Err(Error::Config(format!(
            "eigenmode needs {} positive mode numbers",
            grid.dim()
        )));
    }
    Ok(grid.sample_dirichlet(|p| (0..grid.dim()).map(|i| sine(grid, i, mode[i], p[i])).product()))
}

fn gaussian(grid: &GridDomain<f64>, center: &[f64], width: f64) -> Result<Vec<f64>> {
    if center.len() != grid.dim() || !(width > 0.0) {
        return Err(Error::Config(format!(
            "gaussian needs a {}-entry center and a positive width",
            grid.dim()
        )));
    }
    let dim = grid.dim();
    Ok(grid.sample_dirichlet(|p| {
        let r2: f64 = (0..dim).map(|i| (p[i] - center[i]).powi(2)).sum();
        let taper: f64 = (0..dim).map(|i| sine(grid, i, 1, p[i])).product();
        (-r2 / (2.0 * width * width)).exp() * taper
    }))
}

/// `Σ c_mn sin(mπx) sin(nπy)` with `c_mn` uniform in `[-1, 1]` divided by
/// `m² + n²`.
fn band_limited(grid: &GridDomain<f64>, max_mode: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    if max_mode == 0 {
        return Err(Error::Config("random data needs max_mode >= 1".into()));
    }
    let ny = if grid.dim() == 2 { max_mode } else { 1 };
    let mut coeffs = Vec::with_capacity(max_mode * ny);
    for m in 1..=max_mode {
        for n in 1..=ny {
            let c: f64 = rng.gen_range(-1.0..1.0);
            coeffs.push((m, n, c / (m * m + n * n) as f64));
        }
    }
    let dim = grid.dim();
    Ok(grid.sample_dirichlet(|p| {
        coeffs
            .iter()
            .map(|&(m, n, c)| {
                let sy = if dim == 2 { sine(grid, 1, n, p[1]) } else { 1.0 };
                c * sine(grid, 0, m, p[0]) * sy
            })
            .sum()
    }))
}

/// Builds the initial state described by `data`; `seed` drives the random
/// recipe (each component draws its own coefficients).
pub fn initial_state(grid: &GridDomain<f64>, data: &DataConfig, seed: u64) -> Result<SystemState<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = SystemState::zeros(grid);
    for comp in &data.components {
        let profile = match &data.recipe {
            DataRecipe::Eigenmode { mode } => eigenmode(grid, mode)?,
            DataRecipe::Gaussian { center, width } => gaussian(grid, center, *width)?,
            DataRecipe::Random { max_mode } => band_limited(grid, *max_mode, &mut rng)?,
        };
        let field = match comp {
            Component::U => &mut state.u,
            Component::V => &mut state.v,
            Component::Ut => &mut state.ut,
            Component::Vt => &mut state.vt,
        };
        for (f, p) in field.iter_mut().zip(profile) {
            *f += data.amplitude * p;
        }
    }
    if let Some(target) = data.energy {
        let e = energy(&state, None).linear();
        if e > 0.0 {
            state = state.scaled((target / e).sqrt());
        }
    }
    Ok(state)
}
