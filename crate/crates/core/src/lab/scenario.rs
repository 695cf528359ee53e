//! Building and running scenarios, energy CSV files, and the empirical
//! observability and semigroup-decay measurements.

use std::path::Path;

use crate::domain::{build_coefficient, check_containment, CoefficientField, GridDomain};
use crate::error::{Error, Result};
use crate::semilinear::NonlinearityPair;
use crate::wave::{evolve, RunSettings, SystemState, TrajectoryRecord};

use super::config::{Component, DataConfig, DataRecipe, ScenarioConfig};
use super::data::initial_state;
use super::fit::{fit_decay, DecayFit, DEFAULT_TAIL_FRACTION};

/// A validated configuration resolved into grid, coefficients and
/// nonlinearity.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub grid: GridDomain<f64>,
    pub a: CoefficientField<f64>,
    pub b: CoefficientField<f64>,
    pub nonlinearity: NonlinearityPair<f64>,
    /// `supp b ⊄ ω_a`; such runs are still executed.
    pub hypothesis_violating: bool,
}

impl Scenario {
    pub fn build(config: &ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let grid = GridDomain::new(&config.grid.extents, &config.grid.nodes)?;
        let c = &config.coefficients;
        let a = coefficient(&config.regions.omega_a, &grid, c.a_amplitude, c.a_floor)?;
        let b = coefficient(&config.regions.omega_b, &grid, c.b_amplitude, c.b_floor)?;
        let hypothesis_violating = !check_containment(&b, &a)?;
        Ok(Self {
            config: config.clone(),
            grid,
            a,
            b,
            nonlinearity: config.nonlinearity.pair(),
            hypothesis_violating,
        })
    }

    pub fn initial_state(&self) -> Result<SystemState<f64>> {
        initial_state(&self.grid, &self.config.data, self.config.data.seed)
    }

    pub fn settings(&self, horizon: f64) -> RunSettings<f64> {
        RunSettings::new(horizon)
            .cfl_safety(self.config.time.cfl_safety)
            .stride(self.config.time.sample_stride)
    }

    /// Runs from `initial` to `horizon` with the scenario's nonlinearity.
    pub fn run_from(&self, initial: &SystemState<f64>, horizon: f64) -> Result<TrajectoryRecord<f64>> {
        evolve(initial, &self.a, &self.b, Some(&self.nonlinearity), &self.settings(horizon))
    }

    /// Same scenario with `f = 0`.
    pub fn linearized(&self) -> Self {
        let mut s = self.clone();
        s.nonlinearity = NonlinearityPair::zero();
        s.config.nonlinearity = super::config::NonlinearityConfig::none();
        s
    }
}

fn coefficient(
    spec: &crate::domain::RegionSpec<f64>,
    grid: &GridDomain<f64>,
    amplitude: f64,
    floor: f64,
) -> Result<CoefficientField<f64>> {
    if amplitude == 0.0 {
        return Ok(CoefficientField::zero(grid));
    }
    build_coefficient(spec, grid, amplitude, floor)
}

/// Result of [`run_scenario`].
#[derive(Clone, Debug)]
pub struct ScenarioRun {
    pub record: TrajectoryRecord<f64>,
    pub hypothesis_violating: bool,
}

/// Builds the scenario, runs it to the configured horizon and returns the
/// record.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioRun> {
    let scenario = Scenario::build(cfg)?;
    let initial = scenario.initial_state()?;
    let record = scenario.run_from(&initial, cfg.time.horizon)?;
    Ok(ScenarioRun {
        record,
        hypothesis_violating: scenario.hypothesis_violating,
    })
}

pub const ENERGY_HEADER: [&str; 8] = [
    "t",
    "E_total",
    "E_kin_u",
    "E_kin_v",
    "E_el_u",
    "E_el_v",
    "E_nl",
    "dissipation_cum",
];

pub(crate) fn num(x: f64) -> String {
    format!("{x:.15e}")
}

fn create_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

/// Writes `header` and `rows` with a fixed layout.
pub fn write_table<S: AsRef<str>>(path: &Path, header: &[&str], rows: &[Vec<S>]) -> Result<()> {
    let mut w = create_writer(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|s| s.as_ref()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Energy CSV with the columns of [`ENERGY_HEADER`].
pub fn write_energy_csv(path: &Path, record: &TrajectoryRecord<f64>) -> Result<()> {
    let rows: Vec<Vec<String>> = record
        .times
        .iter()
        .zip(&record.energies)
        .zip(&record.dissipation)
        .map(|((t, e), d)| {
            [
                *t,
                e.total,
                e.kinetic_u,
                e.kinetic_v,
                e.elastic_u,
                e.elastic_v,
                e.nonlinear_potential,
                *d,
            ]
            .iter()
            .map(|x| num(*x))
            .collect()
        })
        .collect();
    write_table(path, &ENERGY_HEADER, &rows)
}

/// `(t, E_total)` columns of an energy CSV, located by header name.
pub fn read_energy_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    let header = r.headers()?.clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Config(format!("{}: missing column {name}", path.display())))
    };
    let (ct, ce) = (col("t")?, col("E_total")?);
    let mut t = Vec::new();
    let mut e = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let parse = |c: usize| -> Result<f64> {
            rec.get(c)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::Config(format!("{}: bad number on row {}", path.display(), line + 2)))
        };
        t.push(parse(ct)?);
        e.push(parse(ce)?);
    }
    Ok((t, e))
}

/// Random band-limited data in all four fields with energy `energy`.
pub fn random_data(scenario: &Scenario, energy: f64, components: &[Component], seed: u64) -> Result<SystemState<f64>> {
    let data = DataConfig {
        recipe: DataRecipe::Random { max_mode: 4 },
        components: components.to_vec(),
        amplitude: 1.0,
        energy: Some(energy),
        seed,
    };
    initial_state(&scenario.grid, &data, seed)
}

pub const ALL_COMPONENTS: [Component; 4] = [Component::U, Component::V, Component::Ut, Component::Vt];

/// Ratios `E(0) / ∫₀ᵀ∫ a|u_t|²` per datum (rows) and horizon (columns).
#[derive(Clone, Debug, PartialEq)]
pub struct ObservabilityTable {
    pub horizons: Vec<f64>,
    pub seeds: Vec<u64>,
    pub ratios: Vec<Vec<f64>>,
}

impl ObservabilityTable {
    /// Empirical constant `Ĉ(T)`: the max ratio at horizon column `j`.
    pub fn c_hat(&self, j: usize) -> f64 {
        self.ratios.iter().map(|r| r[j]).fold(0.0, f64::max)
    }

    /// Infinite ratios mark an observability failure.
    pub fn failed(&self, j: usize) -> bool {
        !self.c_hat(j).is_finite()
    }

    pub fn rows(&self) -> Vec<Vec<String>> {
        let mut rows = Vec::new();
        for (i, r) in self.ratios.iter().enumerate() {
            for (j, x) in r.iter().enumerate() {
                rows.push(vec![self.seeds[i].to_string(), num(self.horizons[j]), num(*x)]);
            }
        }
        rows
    }
}

/// Runs the linear system for each datum up to the largest horizon and reads
/// the accumulated dissipation at every requested horizon.
pub fn observability_table_for(
    scenario: &Scenario,
    data: &[SystemState<f64>],
    seeds: &[u64],
    horizons: &[f64],
) -> Result<ObservabilityTable> {
    if horizons.is_empty() || horizons.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::InvalidArgument("horizons must be positive".into()));
    }
    let t_max = horizons.iter().cloned().fold(0.0, f64::max);
    let lin = scenario.linearized();
    let mut ratios = Vec::with_capacity(data.len());
    for initial in data {
        let rec = lin.run_from(initial, t_max)?;
        let e0 = rec.energies[0].total;
        let row = horizons
            .iter()
            .map(|&t| {
                let d = rec.dissipation_at(t).unwrap_or(0.0);
                if e0 == 0.0 {
                    0.0
                } else if d > 0.0 {
                    e0 / d
                } else {
                    f64::INFINITY
                }
            })
            .collect();
        ratios.push(row);
    }
    Ok(ObservabilityTable {
        horizons: horizons.to_vec(),
        seeds: seeds.to_vec(),
        ratios,
    })
}

/// [`observability_table_for`] on `n_data` random data of energy at most
/// `E0` (the configured data energy, default 1).
pub fn observability_table(scenario: &Scenario, horizons: &[f64], n_data: usize, seed: u64) -> Result<ObservabilityTable> {
    let e0 = scenario.config.data.energy.unwrap_or(1.0);
    let seeds: Vec<u64> = (0..n_data as u64).map(|k| seed.wrapping_add(k)).collect();
    let data = seeds
        .iter()
        .enumerate()
        .map(|(k, s)| random_data(scenario, e0 * (0.5 + 0.5 * (k % 2) as f64), &ALL_COMPONENTS, *s))
        .collect::<Result<Vec<_>>>()?;
    observability_table_for(scenario, &data, &seeds, horizons)
}

/// Empirical constant `Ĉ(T)` with its ratio table.
pub fn observability_ratio(scenario: &Scenario, horizon: f64, n_data: usize, seed: u64) -> Result<(f64, ObservabilityTable)> {
    let table = observability_table(scenario, &[horizon], n_data, seed)?;
    Ok((table.c_hat(0), table))
}

/// Per-datum decay fits of the linear system on the configured horizon.
#[derive(Clone, Debug)]
pub struct SemigroupDecay {
    pub seeds: Vec<u64>,
    pub fits: Vec<DecayFit>,
}

impl SemigroupDecay {
    pub fn min_beta(&self) -> f64 {
        self.fits.iter().map(|f| f.beta).fold(f64::INFINITY, f64::min)
    }
}

pub fn linear_semigroup_decay(scenario: &Scenario, n_data: usize, seed: u64) -> Result<SemigroupDecay> {
    let lin = scenario.linearized();
    let seeds: Vec<u64> = (0..n_data as u64).map(|k| seed.wrapping_add(k)).collect();
    let mut fits = Vec::with_capacity(n_data);
    for s in &seeds {
        let initial = random_data(&lin, 1.0, &ALL_COMPONENTS, *s)?;
        let rec = lin.run_from(&initial, lin.config.time.horizon)?;
        fits.push(fit_decay(&rec.times, &rec.totals(), DEFAULT_TAIL_FRACTION)?);
    }
    Ok(SemigroupDecay { seeds, fits })
}

/// Fitted rate of the scenario's own data rescaled to each initial energy;
/// `None` where the tail window is too short to fit.
pub fn beta_versus_energy(scenario: &Scenario, energies: &[f64]) -> Result<Vec<(f64, Option<DecayFit>)>> {
    let mut out = Vec::with_capacity(energies.len());
    for &e0 in energies {
        let mut data = scenario.config.data.clone();
        data.energy = Some(e0);
        let initial = initial_state(&scenario.grid, &data, data.seed)?;
        let record = scenario.run_from(&initial, scenario.config.time.horizon)?;
        let fit = fit_decay(&record.times, &record.totals(), DEFAULT_TAIL_FRACTION).ok();
        out.push((e0, fit));
    }
    Ok(out)
}
