//! Scenario files (TOML) with the sections `grid`, `regions`,
//! `coefficients`, `nonlinearity`, `data`, `time` and `output`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::domain::{RegionSpec, Side};
use crate::error::{Error, Result};
use crate::semilinear::{Nonlinearity, NonlinearityPair};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub grid: GridConfig,
    pub regions: RegionsConfig,
    pub coefficients: CoefficientsConfig,
    #[serde(default)]
    pub nonlinearity: NonlinearityConfig,
    pub data: DataConfig,
    pub time: TimeConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub extents: Vec<f64>,
    pub nodes: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionsConfig {
    pub omega_a: RegionSpec<f64>,
    pub omega_b: RegionSpec<f64>,
}

/// `a = a_amplitude · ramp(ω_a)`; `a_floor` marks where `a` counts as active.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientsConfig {
    pub a_amplitude: f64,
    #[serde(default = "default_floor")]
    pub a_floor: f64,
    pub b_amplitude: f64,
    #[serde(default = "default_floor")]
    pub b_floor: f64,
}

fn default_floor() -> f64 {
    0.5
}

/// Same nonlinearity for both components unless `f2` is given.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearityConfig {
    pub f1: Nonlinearity<f64>,
    #[serde(default)]
    pub f2: Option<Nonlinearity<f64>>,
}

impl Default for NonlinearityConfig {
    fn default() -> Self {
        Self {
            f1: Nonlinearity::Zero,
            f2: None,
        }
    }
}

impl NonlinearityConfig {
    pub fn pair(&self) -> NonlinearityPair<f64> {
        NonlinearityPair::new(self.f1.clone(), self.f2.clone().unwrap_or_else(|| self.f1.clone()))
    }

    pub fn none() -> Self {
        Self::default()
    }

    pub fn cubic() -> Self {
        Self {
            f1: Nonlinearity::Cubic,
            f2: None,
        }
    }
}

/// Field an initial-data profile is written into.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    U,
    V,
    Ut,
    Vt,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "recipe", rename_all = "snake_case")]
pub enum DataRecipe {
    /// `Π sin(m_i π x_i / L_i)`.
    Eigenmode { mode: Vec<usize> },
    /// Gaussian bump tapered by the fundamental mode.
    Gaussian { center: Vec<f64>, width: f64 },
    /// Sine series with random coefficients up to `max_mode` per axis.
    Random { max_mode: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataConfig {
    #[serde(flatten)]
    pub recipe: DataRecipe,
    pub components: Vec<Component>,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    /// Rescales the data to this linear energy when set.
    #[serde(default)]
    pub energy: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

fn default_amplitude() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub horizon: f64,
    #[serde(default = "default_cfl")]
    pub cfl_safety: f64,
    #[serde(default = "default_stride")]
    pub sample_stride: usize,
    #[serde(default)]
    pub picard_window: Option<f64>,
    #[serde(default = "default_picard_tol")]
    pub picard_tol: f64,
    #[serde(default = "default_picard_iter")]
    pub picard_max_iter: usize,
}

fn default_cfl() -> f64 {
    crate::wave::DEFAULT_CFL_SAFETY
}

fn default_stride() -> usize {
    1
}

fn default_picard_tol() -> f64 {
    1e-10
}

fn default_picard_iter() -> usize {
    50
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default = "default_name")]
    pub name: String,
}

fn default_name() -> String {
    "run".into()
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: None,
            name: default_name(),
        }
    }
}

// `[data]` flattens the recipe, which serde cannot combine with
// `deny_unknown_fields`, so its keys are checked by hand.
fn check_data_keys(text: &str) -> Result<()> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
    let Some(data) = table.get("data").and_then(|d| d.as_table()) else {
        return Ok(());
    };
    let recipe_keys: &[&str] = match data.get("recipe").and_then(|r| r.as_str()) {
        Some("eigenmode") => &["mode"],
        Some("gaussian") => &["center", "width"],
        Some("random") => &["max_mode"],
        _ => &[],
    };
    let common = ["recipe", "components", "amplitude", "energy", "seed"];
    match data
        .keys()
        .find(|k| !common.contains(&k.as_str()) && !recipe_keys.contains(&k.as_str()))
    {
        Some(k) => Err(Error::Config(format!("unknown field `{k}` in [data]"))),
        None => Ok(()),
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        check_data_keys(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario configs serialize")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.grid.extents.is_empty()
            || self.grid.extents.len() > 2
            || self.grid.extents.len() != self.grid.nodes.len()
        {
            return bad("grid.extents and grid.nodes must both have 1 or 2 entries");
        }
        if !(self.time.horizon > 0.0) {
            return bad("time.horizon must be positive");
        }
        if !(self.time.cfl_safety > 0.0 && self.time.cfl_safety <= 1.0) {
            return bad("time.cfl_safety must lie in (0, 1]");
        }
        if self.time.sample_stride == 0 {
            return bad("time.sample_stride must be at least 1");
        }
        if self.data.components.is_empty() {
            return bad("data.components must name at least one field");
        }
        if self.data.energy.is_some_and(|e| !(e >= 0.0)) {
            return bad("data.energy must be nonnegative");
        }
        if self.coefficients.a_amplitude < 0.0 || self.coefficients.b_amplitude < 0.0 {
            return bad("coefficient amplitudes must be nonnegative");
        }
        if let Some(w) = self.time.picard_window {
            if !(w > 0.0) {
                return bad("time.picard_window must be positive");
            }
        }
        Ok(())
    }

    /// Unit square, ω_a a left+bottom collar of width 0.25, ω_b the same
    /// collar of width 0.2, cubic nonlinearity, Gaussian bump data, T = 40.
    pub fn reference() -> Self {
        Self {
            grid: GridConfig {
                extents: vec![1.0, 1.0],
                nodes: vec![129, 129],
            },
            regions: RegionsConfig {
                omega_a: RegionSpec::collar(&[Side::Left, Side::Bottom], 0.25).with_mollification(0.05),
                omega_b: RegionSpec::collar(&[Side::Left, Side::Bottom], 0.2).with_mollification(0.05),
            },
            coefficients: CoefficientsConfig {
                a_amplitude: 1.0,
                a_floor: default_floor(),
                b_amplitude: 1.0,
                b_floor: default_floor(),
            },
            nonlinearity: NonlinearityConfig::cubic(),
            data: DataConfig {
                recipe: DataRecipe::Gaussian {
                    center: vec![0.6, 0.55],
                    width: 0.25,
                },
                components: vec![Component::U, Component::V],
                amplitude: 1.0,
                energy: None,
                seed: 0,
            },
            time: TimeConfig {
                horizon: 40.0,
                cfl_safety: default_cfl(),
                sample_stride: 20,
                picard_window: Some(0.5),
                picard_tol: default_picard_tol(),
                picard_max_iter: default_picard_iter(),
            },
            output: OutputConfig::default(),
        }
    }
}

/// The shipped reference scenario file.
pub const REFERENCE_TOML: &str = include_str!("../../scenarios/reference.toml");

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_file_matches_builder() {
        let cfg = ScenarioConfig::from_toml(REFERENCE_TOML).unwrap();
        assert_eq!(cfg, ScenarioConfig::reference());
    }

    #[test]
    fn round_trip() {
        let cfg = ScenarioConfig::reference();
        assert_eq!(ScenarioConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn unknown_section_rejected() {
        let text = format!("{REFERENCE_TOML}\n[extra]\nx = 1\n");
        assert!(matches!(ScenarioConfig::from_toml(&text), Err(Error::Config(_))));
        let text = REFERENCE_TOML.replace("width = 0.25\ncomponents", "width = 0.25\nmax_mode = 3\ncomponents");
        assert_ne!(text, REFERENCE_TOML);
        let err = ScenarioConfig::from_toml(&text).unwrap_err();
        assert!(err.to_string().contains("max_mode"), "{err}");
    }

    #[test]
    fn invalid_values_rejected() {
        let mut cfg = ScenarioConfig::reference();
        cfg.time.horizon = -1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = ScenarioConfig::reference();
        cfg.grid.nodes = vec![10];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn missing_file_is_validation_error() {
        let err = ScenarioConfig::load("definitely/missing.toml").unwrap_err();
        assert!(err.is_validation());
        assert!(err.to_string().contains("missing.toml"));
    }
}
