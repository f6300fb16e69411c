//! Best responses on shortest paths and pure Nash equilibria of the
//! Harmonic game.
//!
//! Every undominated report of agent `i` lies on the shortest path from the
//! prediction to `l_i`, so a profile is a vector `y` with `y_i` the distance
//! of the report from the prediction. The deciding quantity for agent `i` is
//!
//! ```text
//! kappa_i = cost_i(truthful report; others fixed) - (t_i + delta)
//! ```
//!
//! Negative `kappa_i` makes the truthful report the unique best response,
//! positive makes the prediction the unique best response, and zero leaves
//! the agent indifferent along the whole path.

mod finders;
mod solver;

pub use finders::{
    brute_force_epsilon_pne, find_pne_dynamics, find_pne_enumerative, grid_deviation_gain,
    is_grid_epsilon_pne, DynamicsOptions, EnumerationOptions, FinderError, NonConvergence,
};
pub use solver::IndifferenceSolver;

use serde::{Deserialize, Serialize};

use crate::instance::{Geometry, Instance};
use crate::mechanism::{harmonic_distribution, HarmonicDistribution, HarmonicMean, MechanismError};
use crate::metric::Point;

/// A report on the agent's own path, `y` away from the prediction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathStrategy {
    pub agent: usize,
    pub y: f64,
    pub t: f64,
}

impl PathStrategy {
    /// Distance from the report to the agent's true location.
    pub fn x(&self) -> f64 {
        self.t - self.y
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ReportProfile {
    /// Path-constrained profile: `y_i` per agent.
    Path { y: Vec<f64> },
    /// Arbitrary reported points.
    Free { reports: Vec<Point> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportClass {
    /// Reports the prediction (`y = 0`).
    Prediction,
    /// Reports the true location (`y = t`).
    Truthful,
    /// Interior report, only stable when indifferent.
    Interior,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BestResponse {
    Truthful,
    Prediction,
    Indifferent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BestResponseDiagnostic {
    /// `sum_{j != i} c_ij / (d_j + delta)`; infinite under the zero-set rule.
    pub numerator: f64,
    /// `sum_{j != i} 1 / (d_j + delta)`; infinite under the zero-set rule.
    pub denominator: f64,
    pub kappa: f64,
    pub recommended: BestResponse,
}

/// Equilibrium profile together with everything the bound checkers need.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumCertificate {
    pub delta: f64,
    pub eps: f64,
    /// Agents reporting the prediction.
    pub at_prediction: Vec<usize>,
    /// Agents reporting their true location.
    pub truthful: Vec<usize>,
    /// Agents reporting an interior path point (indifferent).
    pub interior: Vec<usize>,
    pub y: Vec<f64>,
    pub kappa: Vec<f64>,
    /// `t_i = d(prediction, l_i)`.
    pub to_prediction: Vec<f64>,
    /// `d_i = d(prediction, report_i)`.
    pub report_dist: Vec<f64>,
    /// `c_ij = d(l_i, report_j)`.
    pub cross: Vec<Vec<f64>>,
    /// `d_ij = d(l_i, l_j)`.
    pub pairwise: Vec<Vec<f64>>,
    pub reports: Vec<Point>,
    pub distribution: HarmonicDistribution,
    /// `sum_i cost_i` at this profile.
    pub social_cost: f64,
}

/// Serialized certificate: `{"S":[...],"T":[...],"U":[...],"y":[...],"kappa":[...],"eps":...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateJson {
    #[serde(rename = "S")]
    pub s: Vec<usize>,
    #[serde(rename = "T")]
    pub t: Vec<usize>,
    #[serde(rename = "U")]
    pub u: Vec<usize>,
    pub y: Vec<f64>,
    pub kappa: Vec<f64>,
    pub eps: f64,
}

impl EquilibriumCertificate {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn class_of(&self, i: usize) -> ReportClass {
        if self.at_prediction.contains(&i) {
            ReportClass::Prediction
        } else if self.interior.contains(&i) {
            ReportClass::Interior
        } else {
            ReportClass::Truthful
        }
    }

    pub fn to_json(&self) -> CertificateJson {
        CertificateJson {
            s: self.at_prediction.clone(),
            t: self.truthful.clone(),
            u: self.interior.clone(),
            y: self.y.clone(),
            kappa: self.kappa.clone(),
            eps: self.eps,
        }
    }
}

/// A failed equilibrium condition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub agent: usize,
    pub class: ReportClass,
    pub kappa: f64,
    /// The report class the agent would profitably switch to.
    pub deviation: BestResponse,
}

/// Fixed instance, geometry and `delta`, with report-dependent costs.
#[derive(Debug, Clone)]
pub struct Game<'a> {
    pub instance: &'a Instance,
    pub geom: Geometry,
    pub delta: f64,
}

impl<'a> Game<'a> {
    pub fn new(instance: &'a Instance, delta: f64) -> Result<Self, MechanismError> {
        if !(delta.is_finite() && delta >= 0.0) {
            return Err(MechanismError::BadDelta(delta));
        }
        Ok(Self {
            instance,
            geom: instance.geometry(),
            delta,
        })
    }

    pub fn n(&self) -> usize {
        self.instance.n()
    }

    pub fn t(&self, i: usize) -> f64 {
        self.geom.to_prediction[i]
    }

    pub fn eps(&self) -> f64 {
        self.geom.eps()
    }

    pub fn report(&self, i: usize, y: f64) -> Point {
        self.instance.path_report(i, y, self.t(i))
    }

    pub fn reports(&self, y: &[f64]) -> Vec<Point> {
        y.iter().enumerate().map(|(i, &v)| self.report(i, v)).collect()
    }

    /// `c_ij` for agent `j` reporting `report` at distance `y_j`.
    #[inline]
    pub(crate) fn cross(&self, i: usize, j: usize, y_j: f64, report: &Point) -> f64 {
        if i == j {
            self.t(i) - y_j
        } else if y_j <= 0.0 {
            self.t(i)
        } else if y_j >= self.t(j) {
            self.geom.pairwise[i][j]
        } else {
            self.instance
                .metric
                .distance_unchecked(&self.instance.locations[i], report)
        }
    }

    /// Accumulated cost terms of every agent other than `i`.
    pub(crate) fn others(&self, i: usize, y: &[f64], reports: &[Point]) -> HarmonicMean {
        let mut acc = HarmonicMean::new(self.delta);
        for j in 0..self.n() {
            if j != i {
                acc.push(y[j], self.cross(i, j, y[j], &reports[j]));
            }
        }
        acc
    }

    /// Expected cost of agent `i` when reporting `y_i` on its own path.
    pub fn cost_on_path(&self, i: usize, y_i: f64, y: &[f64], reports: &[Point]) -> f64 {
        let mut acc = self.others(i, y, reports);
        acc.push(y_i, self.t(i) - y_i);
        acc.value()
    }

    pub fn kappa(&self, i: usize, y: &[f64], reports: &[Point]) -> f64 {
        self.cost_on_path(i, self.t(i), y, reports) - (self.t(i) + self.delta)
    }

    pub fn kappas(&self, y: &[f64], reports: &[Point]) -> Vec<f64> {
        (0..self.n()).map(|i| self.kappa(i, y, reports)).collect()
    }

    /// Expected cost of agent `i` for an arbitrary report point.
    pub fn cost_with_report(&self, i: usize, report: &Point, y: &[f64], reports: &[Point]) -> f64 {
        let inst = self.instance;
        let own_d = inst.metric.distance_unchecked(report, &inst.prediction);
        let own_c = inst.metric.distance_unchecked(&inst.locations[i], report);
        let mut acc = self.others(i, y, reports);
        acc.push(own_d, own_c);
        acc.value()
    }

    fn classify(&self, i: usize, y: f64) -> ReportClass {
        let t = self.t(i);
        let tol = 1e-12 * self.geom.scale;
        if t <= 0.0 || y >= t - tol {
            ReportClass::Truthful
        } else if y <= tol {
            ReportClass::Prediction
        } else {
            ReportClass::Interior
        }
    }

    /// Builds the certificate for `y`, or lists the failing agents.
    pub fn certify(&self, y: &[f64], eps: f64) -> Result<EquilibriumCertificate, Vec<Violation>> {
        let n = self.n();
        let mut y: Vec<f64> = y.to_vec();
        let mut bad_range = Vec::new();
        for (i, v) in y.iter_mut().enumerate() {
            let t = self.t(i);
            let tol = 1e-9 * self.geom.scale;
            if !(v.is_finite() && *v >= -tol && *v <= t + tol) {
                bad_range.push(Violation {
                    agent: i,
                    class: ReportClass::Interior,
                    kappa: f64::NAN,
                    deviation: BestResponse::Truthful,
                });
                continue;
            }
            *v = match self.classify(i, *v) {
                ReportClass::Truthful => t,
                ReportClass::Prediction => 0.0,
                ReportClass::Interior => *v,
            };
        }
        if !bad_range.is_empty() {
            return Err(bad_range);
        }
        let reports = self.reports(&y);
        let kappa = self.kappas(&y, &reports);
        let mut violations = Vec::new();
        let (mut s, mut t_set, mut u) = (Vec::new(), Vec::new(), Vec::new());
        for i in 0..n {
            let class = self.classify(i, y[i]);
            let k = kappa[i];
            let deviation = if k > eps {
                BestResponse::Prediction
            } else {
                BestResponse::Truthful
            };
            let ok = self.t(i) <= 0.0
                || match class {
                    ReportClass::Prediction => k >= -eps,
                    ReportClass::Truthful => k <= eps,
                    ReportClass::Interior => k.abs() <= eps,
                };
            if !ok {
                violations.push(Violation {
                    agent: i,
                    class,
                    kappa: k,
                    deviation,
                });
            }
            match class {
                ReportClass::Prediction => s.push(i),
                ReportClass::Truthful => t_set.push(i),
                ReportClass::Interior => u.push(i),
            }
        }
        if !violations.is_empty() {
            return Err(violations);
        }
        let cross: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| self.cross(i, j, y[j], &reports[j])).collect())
            .collect();
        let distribution =
            harmonic_distribution(&y, self.delta).expect("validated distances and delta");
        let social_cost = (0..n)
            .map(|i| (0..n).map(|j| distribution.probs[j] * cross[i][j]).sum::<f64>())
            .sum();
        Ok(EquilibriumCertificate {
            delta: self.delta,
            eps,
            at_prediction: s,
            truthful: t_set,
            interior: u,
            report_dist: y.clone(),
            y,
            kappa,
            to_prediction: self.geom.to_prediction.clone(),
            cross,
            pairwise: self.geom.pairwise.clone(),
            reports,
            distribution,
            social_cost,
        })
    }
}

/// Best response of agent `i` to the others' path reports `y` (entry `i`
/// is ignored).
pub fn best_response_class(
    i: usize,
    instance: &Instance,
    y: &[f64],
    delta: f64,
    eps: f64,
) -> Result<(BestResponse, BestResponseDiagnostic), MechanismError> {
    let n = instance.n();
    if i >= n {
        return Err(MechanismError::IndexOutOfRange { index: i, n });
    }
    if y.len() != n {
        return Err(MechanismError::LengthMismatch {
            what: "profile vs agents",
            expected: n,
            got: y.len(),
        });
    }
    let game = Game::new(instance, delta)?;
    let mut y = y.to_vec();
    for (j, v) in y.iter_mut().enumerate() {
        *v = v.clamp(0.0, game.t(j));
    }
    let reports = game.reports(&y);
    let others = game.others(i, &y, &reports);
    let (numerator, denominator) = others.parts().unwrap_or((f64::INFINITY, f64::INFINITY));
    let kappa = game.kappa(i, &y, &reports);
    let recommended = if n == 1 || game.t(i) <= 0.0 || kappa < -eps {
        BestResponse::Truthful
    } else if kappa > eps {
        BestResponse::Prediction
    } else {
        BestResponse::Indifferent
    };
    Ok((
        recommended,
        BestResponseDiagnostic {
            numerator,
            denominator,
            kappa,
            recommended,
        },
    ))
}

/// Checks that `y` is an `eps`-equilibrium by the best-response
/// characterization.
pub fn verify_pne(
    instance: &Instance,
    y: &[f64],
    delta: f64,
    eps: f64,
) -> Result<Result<EquilibriumCertificate, Vec<Violation>>, MechanismError> {
    if y.len() != instance.n() {
        return Err(MechanismError::LengthMismatch {
            what: "profile vs agents",
            expected: instance.n(),
            got: y.len(),
        });
    }
    let game = Game::new(instance, delta)?;
    Ok(game.certify(y, eps))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DominatingReport {
    /// The off-path report is farther from the prediction than the agent.
    Truthful,
    /// The path point at the same distance from the prediction.
    OnPath,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominanceRecord {
    /// Distance of the off-path report from the prediction.
    pub y: f64,
    /// Distance of the off-path report from the true location.
    pub x: f64,
    pub off_path_cost: f64,
    pub alternative: DominatingReport,
    pub alternative_cost: f64,
    /// Strict improvement when the alternative is truthful, weak otherwise.
    pub dominated: bool,
}

/// Compares an arbitrary report against the path report that should
/// dominate it.
pub fn dominance_check(
    i: usize,
    instance: &Instance,
    off_path_report: &Point,
    others: &[f64],
    delta: f64,
) -> Result<DominanceRecord, MechanismError> {
    let n = instance.n();
    if i >= n {
        return Err(MechanismError::IndexOutOfRange { index: i, n });
    }
    instance.metric.check_point(off_path_report)?;
    let game = Game::new(instance, delta)?;
    let mut y_all = others.to_vec();
    y_all.resize(n, 0.0);
    for (j, v) in y_all.iter_mut().enumerate() {
        *v = v.clamp(0.0, game.t(j));
    }
    let reports = game.reports(&y_all);
    let y = instance.metric.distance_unchecked(off_path_report, &instance.prediction);
    let x = instance.metric.distance_unchecked(off_path_report, &instance.locations[i]);
    let off_path_cost = game.cost_with_report(i, off_path_report, &y_all, &reports);
    let t = game.t(i);
    let tol = 1e-12 * game.geom.scale;
    let (alternative, alternative_cost, dominated) = if y > t + tol {
        let c = game.cost_on_path(i, t, &y_all, &reports);
        (DominatingReport::Truthful, c, c < off_path_cost)
    } else {
        let c = game.cost_on_path(i, y.min(t), &y_all, &reports);
        let slack = 1e-12 * game.geom.scale;
        (DominatingReport::OnPath, c, c <= off_path_cost + slack)
    };
    Ok(DominanceRecord {
        y,
        x,
        off_path_cost,
        alternative,
        alternative_cost,
        dominated,
    })
}

#[cfg(test)]
mod tests;
