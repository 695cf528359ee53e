//! Damped and coupled wave systems on rectangles: simulation, decay
//! measurement, ray-based geometric control checks and the ray ODE
//! observability test.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod domain;
pub mod error;
pub mod lab;
pub mod observability;
pub mod rays;
pub mod scalar;
pub mod semilinear;
pub mod wave;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Grid = domain::GridDomain<f64>;
pub type Coefficient = domain::CoefficientField<f64>;
pub type Region = domain::RegionSpec<f64>;
pub type State = wave::SystemState<f64>;
pub type Energy = wave::EnergyBreakdown<f64>;
pub type Trajectory = wave::TrajectoryRecord<f64>;
