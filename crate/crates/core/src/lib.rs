//! Metric spaces, the Harmonic facility-location mechanism, its pure Nash
//! equilibria, bound checkers and an experiment harness.

pub mod analysis;
pub mod equilibrium;
pub mod harness;
pub mod instance;
pub mod mechanism;
pub mod metric;
pub mod par;
pub mod tolerance;

pub use instance::{Geometry, Instance};
pub use mechanism::{MechanismConfig, MechanismError, MechanismSpec};
pub use metric::{MetricError, MetricSpace, Point, SpaceKind};
