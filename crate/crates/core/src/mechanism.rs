//! Outcome distributions of the Harmonic and Random Dictatorship mechanisms
//! and the expected costs they induce.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::equilibrium::EquilibriumCertificate;
use crate::instance::Instance;
use crate::metric::{MetricError, MetricSpace, Point};
use crate::tolerance;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MechanismError {
    #[error("mechanism needs at least one agent")]
    NoAgents,
    #[error("distance {0} to the prediction is negative or not finite")]
    BadDistance(f64),
    #[error("delta must be finite and nonnegative, got {0}")]
    BadDelta(f64),
    #[error("c must be finite and nonnegative, got {0}")]
    BadC(f64),
    #[error("agent index {index} out of range for {n} agents")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("{what}: expected {expected} entries, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("cost decomposition needs delta > 0 when some agent reports the prediction")]
    UnsupportedDecomposition,
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// JSON form: `{"kind":"harmonic","delta":0.5}`, `{"kind":"harmonic","c":0.25}`
/// or `{"kind":"rd"}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MechanismSpec {
    Harmonic {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        delta: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        c: Option<f64>,
    },
    Rd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MechanismKind {
    Harmonic,
    RandomDictatorship,
}

/// A fully resolved mechanism: the additive smoothing `delta` and, when it
/// was derived from an instance, the ratio `c = delta / (SC(prediction)/n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MechanismConfig {
    pub kind: MechanismKind,
    pub delta: f64,
    pub c: Option<f64>,
}

impl MechanismConfig {
    pub fn harmonic(delta: f64) -> Result<Self, MechanismError> {
        if !(delta.is_finite() && delta >= 0.0) {
            return Err(MechanismError::BadDelta(delta));
        }
        Ok(Self {
            kind: MechanismKind::Harmonic,
            delta,
            c: None,
        })
    }

    /// `delta = c * SC(prediction, locations) / n`.
    pub fn harmonic_with_c(c: f64, instance: &Instance) -> Result<Self, MechanismError> {
        if !(c.is_finite() && c >= 0.0) {
            return Err(MechanismError::BadC(c));
        }
        let avg = instance.prediction_cost() / instance.n() as f64;
        Ok(Self {
            kind: MechanismKind::Harmonic,
            delta: c * avg,
            c: Some(c),
        })
    }

    pub fn random_dictatorship() -> Self {
        Self {
            kind: MechanismKind::RandomDictatorship,
            delta: 0.0,
            c: None,
        }
    }

    pub fn from_spec(spec: MechanismSpec, instance: &Instance) -> Result<Self, MechanismError> {
        match spec {
            MechanismSpec::Rd => Ok(Self::random_dictatorship()),
            MechanismSpec::Harmonic { c: Some(c), .. } => Self::harmonic_with_c(c, instance),
            MechanismSpec::Harmonic { delta, c: None } => Self::harmonic(delta.unwrap_or(0.0)),
        }
    }

    /// The outcome distribution for reports at distances `d` from the
    /// prediction.
    pub fn distribution(&self, d: &[f64]) -> Result<HarmonicDistribution, MechanismError> {
        match self.kind {
            MechanismKind::Harmonic => harmonic_distribution(d, self.delta),
            MechanismKind::RandomDictatorship => rd_distribution(d.len()),
        }
    }
}

/// Selection probabilities over reported locations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarmonicDistribution {
    pub probs: Vec<f64>,
    /// `1 / (d_i + delta)`; infinite for members of the zero set.
    pub weights: Vec<f64>,
    /// `sum_j 1 / (d_j + delta)`, or `+inf` when the zero set is nonempty.
    pub denominator: f64,
    /// Agents whose report sits on the prediction while `delta = 0`. When
    /// nonempty they share all probability mass uniformly.
    pub zero_set: Vec<usize>,
    pub delta: f64,
}

impl HarmonicDistribution {
    pub fn n(&self) -> usize {
        self.probs.len()
    }

    /// True when the `delta -> 0+` limit rule decided the outcome.
    pub fn zero_rule_triggered(&self) -> bool {
        !self.zero_set.is_empty()
    }

    /// Draws the index of the selected report.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (i, p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        self.probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
    }
}

/// Harmonic selection: `Pr[i] ∝ 1 / (d_i + delta)`.
///
/// With `delta = 0` and some `d_i = 0`, the mass is split uniformly over
/// the zero set (the `delta -> 0+` limit).
pub fn harmonic_distribution(d: &[f64], delta: f64) -> Result<HarmonicDistribution, MechanismError> {
    if d.is_empty() {
        return Err(MechanismError::NoAgents);
    }
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(MechanismError::BadDelta(delta));
    }
    if let Some(&bad) = d.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(MechanismError::BadDistance(bad));
    }
    let zero_set: Vec<usize> = if delta == 0.0 {
        d.iter().enumerate().filter(|(_, v)| **v == 0.0).map(|(i, _)| i).collect()
    } else {
        Vec::new()
    };
    if !zero_set.is_empty() {
        let share = 1.0 / zero_set.len() as f64;
        let mut probs = vec![0.0; d.len()];
        let mut weights: Vec<f64> = d.iter().map(|v| 1.0 / v).collect();
        for &i in &zero_set {
            probs[i] = share;
            weights[i] = f64::INFINITY;
        }
        return Ok(HarmonicDistribution {
            probs,
            weights,
            denominator: f64::INFINITY,
            zero_set,
            delta,
        });
    }
    let weights: Vec<f64> = d.iter().map(|v| 1.0 / (v + delta)).collect();
    let denominator: f64 = weights.iter().sum();
    let probs = weights.iter().map(|w| w / denominator).collect();
    Ok(HarmonicDistribution {
        probs,
        weights,
        denominator,
        zero_set,
        delta,
    })
}

/// Random Dictatorship: every report is selected with probability `1/n`.
pub fn rd_distribution(n: usize) -> Result<HarmonicDistribution, MechanismError> {
    if n == 0 {
        return Err(MechanismError::NoAgents);
    }
    Ok(HarmonicDistribution {
        probs: vec![1.0 / n as f64; n],
        weights: vec![1.0; n],
        denominator: n as f64,
        zero_set: Vec::new(),
        delta: 0.0,
    })
}

/// Streaming evaluation of `sum_j c_j / (d_j + delta) / sum_j 1 / (d_j + delta)`
/// honouring the zero-set rule, without materialising a distribution.
#[derive(Debug, Clone, Copy)]
pub(crate) struct HarmonicMean {
    delta: f64,
    num: f64,
    den: f64,
    zero_sum: f64,
    zero_count: usize,
}

impl HarmonicMean {
    pub(crate) fn new(delta: f64) -> Self {
        Self {
            delta,
            num: 0.0,
            den: 0.0,
            zero_sum: 0.0,
            zero_count: 0,
        }
    }

    #[inline]
    pub(crate) fn push(&mut self, d: f64, cost: f64) {
        if self.delta == 0.0 && d <= 0.0 {
            self.zero_sum += cost;
            self.zero_count += 1;
        } else {
            let w = 1.0 / (d + self.delta);
            self.num += w * cost;
            self.den += w;
        }
    }

    /// `(numerator, denominator)` when no zero-set member was pushed.
    pub(crate) fn parts(&self) -> Option<(f64, f64)> {
        (self.zero_count == 0).then_some((self.num, self.den))
    }

    #[inline]
    pub(crate) fn value(&self) -> f64 {
        if self.zero_count > 0 {
            self.zero_sum / self.zero_count as f64
        } else {
            self.num / self.den
        }
    }
}

/// Expected distance from `true_loc` to the selected report.
pub fn expected_agent_cost(
    i: usize,
    true_loc: &Point,
    reports: &[Point],
    dist: &HarmonicDistribution,
    space: &MetricSpace,
) -> Result<f64, MechanismError> {
    let n = reports.len();
    if i >= n {
        return Err(MechanismError::IndexOutOfRange { index: i, n });
    }
    if dist.n() != n {
        return Err(MechanismError::LengthMismatch {
            what: "distribution vs reports",
            expected: n,
            got: dist.n(),
        });
    }
    let mut total = 0.0;
    for (p, r) in dist.probs.iter().zip(reports) {
        if *p > 0.0 {
            total += p * space.distance(true_loc, r)?;
        }
    }
    Ok(total)
}

/// `sum_i E[d(f, l_i)]` for the given reports and outcome distribution.
pub fn expected_social_cost(
    instance: &Instance,
    reports: &[Point],
    dist: &HarmonicDistribution,
) -> Result<f64, MechanismError> {
    if reports.len() != instance.n() {
        return Err(MechanismError::LengthMismatch {
            what: "reports vs agents",
            expected: instance.n(),
            got: reports.len(),
        });
    }
    instance
        .locations
        .iter()
        .enumerate()
        .map(|(i, l)| expected_agent_cost(i, l, reports, dist, &instance.metric))
        .sum()
}

/// `SC(f, locations) = sum_i d(f, l_i)`.
pub fn social_cost(f: &Point, locations: &[Point], space: &MetricSpace) -> Result<f64, MechanismError> {
    locations
        .iter()
        .map(|l| space.distance(f, l).map_err(MechanismError::from))
        .sum()
}

/// Expected social cost split by the class of the selected report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostDecomposition {
    /// Selected report is the prediction: `Pr[S] * sum_i t_i`.
    pub prediction_term: f64,
    /// Selected report is a true location: `sum_{j in T} p_j sum_i d_ij`.
    pub truthful_term: f64,
    /// Selected report is interior: `sum_{j in U} p_j sum_i c_ij`.
    pub interior_term: f64,
}

impl CostDecomposition {
    pub fn total(&self) -> f64 {
        self.prediction_term + self.truthful_term + self.interior_term
    }
}

/// Splits the expected social cost at a certified equilibrium into the
/// contributions of the three report classes, using the closed forms
/// `c_ij = t_i` for `j` reporting the prediction and `c_ij = d_ij` for `j`
/// reporting truthfully.
pub fn sc_decomposition(
    cert: &EquilibriumCertificate,
    instance: &Instance,
) -> Result<CostDecomposition, MechanismError> {
    let n = instance.n();
    if cert.report_dist.len() != n {
        return Err(MechanismError::LengthMismatch {
            what: "certificate vs agents",
            expected: n,
            got: cert.report_dist.len(),
        });
    }
    let delta = cert.delta;
    if delta == 0.0 && !cert.at_prediction.is_empty() {
        return Err(MechanismError::UnsupportedDecomposition);
    }
    // Class-wise distances: 0 for S, t_j for T, y_j for U.
    let mut d = vec![0.0; n];
    for &j in &cert.truthful {
        d[j] = cert.to_prediction[j];
    }
    for &j in &cert.interior {
        d[j] = cert.report_dist[j];
    }
    let dist = harmonic_distribution(&d, delta)?;
    let total_t: f64 = cert.to_prediction.iter().sum();
    let prediction_term = if cert.at_prediction.is_empty() {
        0.0
    } else {
        // |S| / delta / D * sum_i t_i
        cert.at_prediction.len() as f64 / delta / dist.denominator * total_t
    };
    let truthful_term = cert
        .truthful
        .iter()
        .map(|&j| dist.probs[j] * (0..n).map(|i| cert.pairwise[i][j]).sum::<f64>())
        .sum();
    let interior_term = cert
        .interior
        .iter()
        .map(|&j| dist.probs[j] * (0..n).map(|i| cert.cross[i][j]).sum::<f64>())
        .sum();
    Ok(CostDecomposition {
        prediction_term,
        truthful_term,
        interior_term,
    })
}

/// True if `probs` is a probability vector within [`tolerance::SIMPLEX`].
pub fn is_simplex(probs: &[f64]) -> bool {
    probs.iter().all(|p| *p >= 0.0) && (probs.iter().sum::<f64>() - 1.0).abs() <= tolerance::SIMPLEX
}
