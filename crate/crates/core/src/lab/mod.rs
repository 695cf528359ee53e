//! Experiment orchestration: scenario files, initial data, decay fits,
//! empirical observability and semigroup measurements, and the acceptance
//! suite.

pub mod config;
pub mod data;
pub mod fit;
pub mod observe;
pub mod scenario;
pub mod suite;

pub use config::{Component, DataRecipe, ScenarioConfig, REFERENCE_TOML};
pub use fit::{fit_decay, DecayFit};
pub use observe::{ray_observability, read_trace_csv};
pub use scenario::{
    beta_versus_energy, linear_semigroup_decay, observability_ratio, observability_table, read_energy_csv, run_scenario,
    write_energy_csv, Scenario,
};
pub use suite::{run_acceptance, run_suite, DEFAULT_SEED, CriterionOutcome, SuiteReport};
