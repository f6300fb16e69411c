//! Numerical tolerances shared across the crate.

/// Relative tolerance for metric axioms and path identities, scaled by
/// `max(1, magnitude)`.
pub const METRIC_REL: f64 = 1e-9;

/// Probability vectors must sum to one within this bound.
pub const SIMPLEX: f64 = 1e-12;

/// Equilibrium tolerance factor: `eps = EPS_PNE * max(1, max_i t_i)`.
pub const EPS_PNE: f64 = 1e-7;

/// Bound checks pass when `left <= right + CHECK_REL * scale`.
pub const CHECK_REL: f64 = 1e-9;

/// Indifference solves stop once `max |kappa| <= SOLVER_REL * scale`.
pub const SOLVER_REL: f64 = 1e-11;

/// Distinct equilibria differ in some report coordinate by more than this
/// (relative to scale).
pub const DISTINCT_REL: f64 = 1e-6;

/// Weiszfeld stops when a step moves less than this (relative to scale).
pub const WEISZFELD_REL: f64 = 1e-10;

/// `max(1, max |x|)`.
pub fn scale_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(1.0, |m, v| m.max(v.abs()))
}
