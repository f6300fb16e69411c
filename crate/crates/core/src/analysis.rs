//! Optimal facilities, accuracy and price of anarchy, and runtime checks of
//! the quantitative bounds at certified equilibria.

use serde::Serialize;
use thiserror::Error;

use crate::equilibrium::EquilibriumCertificate;
use crate::instance::Instance;
use crate::mechanism::{expected_social_cost, rd_distribution, sc_decomposition, MechanismError};
use crate::metric::{MetricError, MetricSpace, Point, SpaceKind};
use crate::tolerance;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("optimal cost is zero but the prediction costs {0}")]
    DegenerateInstance(f64),
    #[error("no equilibrium certificates given")]
    NoCertificates,
    #[error("{0} is not strictly convex; the path convex-combination bound does not apply")]
    NotStrictlyConvex(String),
    #[error(transparent)]
    Mechanism(#[from] MechanismError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum OptMethod {
    /// Coordinate-wise median (line, or L1 in any dimension).
    ExactMedian,
    Weiszfeld { iterations: usize, residual: f64 },
    /// Circle: every agent position and its antipode.
    Breakpoints { candidates: usize },
    /// Segment extension: agents, prediction and anchors. Exact, since the
    /// cost is concave between consecutive agents on every segment.
    SegmentCandidates { candidates: usize },
    /// Best of a finite candidate set; an upper bound on the optimum.
    CandidateRestricted { candidates: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptResult {
    pub facility: Point,
    pub value: f64,
    #[serde(flatten)]
    pub method: OptMethod,
    pub exact: bool,
}

fn sc(instance: &Instance, f: &Point) -> f64 {
    instance
        .locations
        .iter()
        .map(|l| instance.metric.distance_unchecked(f, l))
        .sum()
}

fn best_candidate(instance: &Instance, candidates: impl IntoIterator<Item = Point>) -> (Point, f64, usize) {
    let mut best: Option<(Point, f64)> = None;
    let mut count = 0;
    for c in candidates {
        count += 1;
        let v = sc(instance, &c);
        if best.as_ref().map_or(true, |(_, b)| v < *b) {
            best = Some((c, v));
        }
    }
    let (p, v) = best.expect("at least one candidate");
    (p, v, count)
}

fn coords_of(p: &Point) -> &[f64] {
    match p {
        Point::Coords { coords } => coords,
        _ => unreachable!("euclidean instance holds coordinate points"),
    }
}

fn coordinate_median(instance: &Instance, dim: usize) -> Point {
    let n = instance.n();
    let mut out = Vec::with_capacity(dim);
    for k in 0..dim {
        let mut xs: Vec<f64> = instance.locations.iter().map(|l| coords_of(l)[k]).collect();
        xs.sort_by(f64::total_cmp);
        out.push(xs[(n - 1) / 2]);
    }
    Point::coords(out)
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt()
}

/// Geometric median by Weiszfeld's iteration. Data points are tested for
/// optimality first, so the iteration never needs to pass through one.
pub fn weiszfeld(points: &[Vec<f64>], rel_tol: f64, max_iters: usize) -> (Vec<f64>, usize, f64) {
    let dim = points[0].len();
    let scale = tolerance::scale_of(points.iter().flatten().copied());
    let tie = 1e-14 * scale;
    for x in points {
        let mut mult = 0.0;
        let mut pull = vec![0.0; dim];
        for q in points {
            let d = euclid(x, q);
            if d <= tie {
                mult += 1.0;
            } else {
                for k in 0..dim {
                    pull[k] += (q[k] - x[k]) / d;
                }
            }
        }
        if pull.iter().map(|v| v * v).sum::<f64>().sqrt() <= mult {
            return (x.clone(), 0, 0.0);
        }
    }
    let n = points.len() as f64;
    let mut y: Vec<f64> = (0..dim).map(|k| points.iter().map(|p| p[k]).sum::<f64>() / n).collect();
    let mut step = f64::INFINITY;
    let mut iters = 0;
    while iters < max_iters {
        iters += 1;
        let mut num = vec![0.0; dim];
        let mut den = 0.0;
        let mut hit = false;
        for q in points {
            let d = euclid(&y, q);
            if d <= tie {
                hit = true;
                break;
            }
            for k in 0..dim {
                num[k] += q[k] / d;
            }
            den += 1.0 / d;
        }
        if hit {
            // Not optimal there (checked above); nudge off the data point.
            for v in y.iter_mut() {
                *v += 1e-9 * scale;
            }
            continue;
        }
        let next: Vec<f64> = num.iter().map(|v| v / den).collect();
        step = euclid(&next, &y);
        y = next;
        if step <= rel_tol * scale {
            break;
        }
    }
    (y, iters, step)
}

/// A 1-median of the agent locations, using the best available method for
/// the space.
pub fn optimal_facility(instance: &Instance) -> OptResult {
    let metric = &instance.metric;
    match metric.kind() {
        SpaceKind::Euclidean { dim, p } if *dim == 1 || *p == 1.0 => {
            let facility = coordinate_median(instance, *dim);
            OptResult {
                value: sc(instance, &facility),
                facility,
                method: OptMethod::ExactMedian,
                exact: true,
            }
        }
        SpaceKind::Euclidean { p, .. } if *p == 2.0 => {
            let pts: Vec<Vec<f64>> = instance.locations.iter().map(|l| coords_of(l).to_vec()).collect();
            let (y, iterations, residual) = weiszfeld(&pts, tolerance::WEISZFELD_REL, 100_000);
            let facility = Point::coords(y);
            OptResult {
                value: sc(instance, &facility),
                facility,
                method: OptMethod::Weiszfeld { iterations, residual },
                exact: true,
            }
        }
        SpaceKind::Euclidean { .. } => {
            let cands = instance
                .locations
                .iter()
                .cloned()
                .chain([instance.prediction.clone(), coordinate_median(instance, dim_of(metric))]);
            let (facility, value, candidates) = best_candidate(instance, cands);
            OptResult {
                facility,
                value,
                method: OptMethod::CandidateRestricted { candidates },
                exact: false,
            }
        }
        SpaceKind::Circle { circumference } => {
            let l = *circumference;
            let cands = instance.locations.iter().flat_map(|p| {
                let Point::Arc { arc } = p else { unreachable!() };
                [Point::arc(*arc), metric.canonicalize(&Point::arc(arc + l / 2.0)).expect("valid arc")]
            });
            let (facility, value, candidates) = best_candidate(instance, cands);
            OptResult {
                facility,
                value,
                method: OptMethod::Breakpoints { candidates },
                exact: true,
            }
        }
        SpaceKind::SegmentExtension { .. } => {
            let cands = instance
                .locations
                .iter()
                .cloned()
                .chain([instance.prediction.clone()])
                .chain(metric.anchors());
            let (facility, value, candidates) = best_candidate(instance, cands);
            OptResult {
                facility,
                value,
                method: OptMethod::SegmentCandidates { candidates },
                exact: true,
            }
        }
    }
}

fn dim_of(metric: &MetricSpace) -> usize {
    match metric.kind() {
        SpaceKind::Euclidean { dim, .. } => *dim,
        _ => 1,
    }
}

/// The optimum, improved by extra candidate points when the method is not
/// exact.
pub fn optimal_facility_with(instance: &Instance, extra: &[Point]) -> OptResult {
    let base = optimal_facility(instance);
    if base.exact || extra.is_empty() {
        return base;
    }
    let (facility, value, count) = best_candidate(instance, extra.iter().cloned());
    if value < base.value {
        let candidates = match base.method {
            OptMethod::CandidateRestricted { candidates } => candidates + count,
            _ => count,
        };
        OptResult {
            facility,
            value,
            method: OptMethod::CandidateRestricted { candidates },
            exact: false,
        }
    } else {
        base
    }
}

/// `SC(prediction) / opt`, with `1` when both vanish.
pub fn gamma_accuracy(instance: &Instance) -> Result<f64, AnalysisError> {
    gamma_with_opt(instance, optimal_facility(instance).value)
}

pub fn gamma_with_opt(instance: &Instance, opt: f64) -> Result<f64, AnalysisError> {
    let pred = instance.prediction_cost();
    ratio_to_opt(pred, opt)
}

fn ratio_to_opt(value: f64, opt: f64) -> Result<f64, AnalysisError> {
    let tiny = 1e-12 * tolerance::scale_of([value, opt]);
    if opt <= tiny {
        if value <= tiny {
            Ok(1.0)
        } else {
            Err(AnalysisError::DegenerateInstance(value))
        }
    } else {
        Ok(value / opt)
    }
}

/// Worst equilibrium social cost over `opt`.
pub fn poa(instance: &Instance, certificates: &[EquilibriumCertificate]) -> Result<f64, AnalysisError> {
    if certificates.is_empty() {
        return Err(AnalysisError::NoCertificates);
    }
    let extra: Vec<Point> = certificates.iter().flat_map(|c| c.reports.iter().cloned()).collect();
    let opt = optimal_facility_with(instance, &extra).value;
    poa_with_opt(certificates, opt)
}

pub fn poa_with_opt(certificates: &[EquilibriumCertificate], opt: f64) -> Result<f64, AnalysisError> {
    let worst = certificates
        .iter()
        .map(|c| c.social_cost)
        .fold(f64::NEG_INFINITY, f64::max);
    if certificates.is_empty() {
        return Err(AnalysisError::NoCertificates);
    }
    ratio_to_opt(worst, opt)
}

/// Outcome of one bound check, aggregated over its cases.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: &'static str,
    pub bound: &'static str,
    /// Left and right side at the tightest case.
    pub left: f64,
    pub right: f64,
    /// `right - left` at the tightest case.
    pub slack: f64,
    pub pass: bool,
    pub cases: usize,
    pub worst_case: Option<String>,
    pub skipped: Option<String>,
    pub note: Option<String>,
}

impl CheckReport {
    fn new(name: &'static str, bound: &'static str) -> Self {
        Self {
            name,
            bound,
            left: 0.0,
            right: 0.0,
            slack: f64::INFINITY,
            pass: true,
            cases: 0,
            worst_case: None,
            skipped: None,
            note: None,
        }
    }

    fn skip(name: &'static str, bound: &'static str, reason: impl Into<String>) -> Self {
        let mut r = Self::new(name, bound);
        r.skipped = Some(reason.into());
        r
    }

    /// Records `left <= right` for one case.
    fn case(&mut self, left: f64, right: f64, label: impl FnOnce() -> String) {
        self.cases += 1;
        let slack = right - left;
        let tol = tolerance::CHECK_REL * tolerance::scale_of([left, right]);
        if slack < self.slack {
            self.slack = slack;
            self.left = left;
            self.right = right;
            self.worst_case = Some(label());
        }
        if !(left <= right + tol) {
            self.pass = false;
        }
    }

    pub fn is_skipped(&self) -> bool {
        self.skipped.is_some()
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

fn u_or_t(cert: &EquilibriumCertificate) -> impl Iterator<Item = usize> + '_ {
    cert.truthful.iter().chain(&cert.interior).copied()
}

/// `SC <= gamma (1 + 2c) opt` at every certificate, with `c = delta / (SC(prediction) / n)`.
pub fn check_consistency_bound(
    instance: &Instance,
    delta: f64,
    certificates: &[EquilibriumCertificate],
    opt: f64,
) -> Result<CheckReport, AnalysisError> {
    let mut r = CheckReport::new("consistency", "SC <= gamma (1 + 2c) opt");
    let gamma = gamma_with_opt(instance, opt)?;
    let pred = instance.prediction_cost();
    let c = if pred > 0.0 { delta * instance.n() as f64 / pred } else { 0.0 };
    let right = gamma * (1.0 + 2.0 * c) * opt;
    for (k, cert) in certificates.iter().enumerate() {
        r.case(cert.social_cost, right, || format!("certificate {k}"));
    }
    r.note = Some(format!("gamma={gamma}, c={c}"));
    Ok(r)
}

/// `p_i <= (2/n) (t_i + delta) / (d_i + delta)` for truthful and interior agents.
pub fn check_prob_tu(cert: &EquilibriumCertificate) -> CheckReport {
    const NAME: &str = "prob_tu";
    const BOUND: &str = "p_i <= (2/n)(t_i + delta)/(d_i + delta), i in T or U";
    if cert.delta == 0.0 {
        return CheckReport::skip(NAME, BOUND, "delta = 0");
    }
    let mut r = CheckReport::new(NAME, BOUND);
    let n = cert.n() as f64;
    let delta = cert.delta;
    // An agent located on the prediction reports it whether truthful or
    // not, so it also belongs to the prediction class and is exempt.
    for i in u_or_t(cert).filter(|&i| cert.to_prediction[i] > 0.0) {
        let right = 2.0 / n * (cert.to_prediction[i] + delta) / (cert.report_dist[i] + delta);
        r.case(cert.distribution.probs[i], right, || format!("i={i}"));
    }
    r
}

/// `1/(delta D) <= max{(1/c + 1)/n, (1/c + 1)/(n/c)}`.
pub fn check_delta_d(cert: &EquilibriumCertificate, c: f64) -> CheckReport {
    const NAME: &str = "delta_d";
    const BOUND: &str = "1/(delta D) <= max{(1/c+1)/n, (1/c+1)/(n/c)}";
    if cert.delta == 0.0 || c <= 0.0 {
        return CheckReport::skip(NAME, BOUND, "delta = 0");
    }
    let mut r = CheckReport::new(NAME, BOUND);
    let n = cert.n() as f64;
    let k = 1.0 / c + 1.0;
    let right = (k / n).max(k / (n / c));
    r.case(1.0 / (cert.delta * cert.distribution.denominator), right, String::new);
    r
}

/// `c_ij <= (t_j - d_j)/t_j t_i + d_j/t_j d_ij` for interior `j`; strictly
/// convex spaces only.
pub fn check_convex_cij(cert: &EquilibriumCertificate, space: &MetricSpace) -> Result<CheckReport, AnalysisError> {
    if !space.is_strictly_convex() {
        return Err(AnalysisError::NotStrictlyConvex(space.label()));
    }
    let mut r = CheckReport::new("convex_cij", "c_ij <= (t_j-d_j)/t_j t_i + d_j/t_j d_ij, j in U");
    for &j in &cert.interior {
        let (t_j, d_j) = (cert.to_prediction[j], cert.report_dist[j]);
        for i in 0..cert.n() {
            let right = (t_j - d_j) / t_j * cert.to_prediction[i] + d_j / t_j * cert.pairwise[i][j];
            r.case(cert.cross[i][j], right, || format!("i={i}, j={j}"));
        }
    }
    Ok(r)
}

/// `c_ij <= 2 t_i + 2 (d_j + delta)/(t_j + delta) d_ij` for interior `j`.
pub fn check_metric_cij(cert: &EquilibriumCertificate) -> CheckReport {
    let mut r = CheckReport::new("metric_cij", "c_ij <= 2 t_i + 2 (d_j+delta)/(t_j+delta) d_ij, j in U");
    let delta = cert.delta;
    for &j in &cert.interior {
        let ratio = (cert.report_dist[j] + delta) / (cert.to_prediction[j] + delta);
        for i in 0..cert.n() {
            let right = 2.0 * cert.to_prediction[i] + 2.0 * ratio * cert.pairwise[i][j];
            r.case(cert.cross[i][j], right, || format!("i={i}, j={j}"));
        }
    }
    r
}

/// `c_ij <= t_i` whenever `d_j >= 2 d_ij`.
pub fn check_obs_large_dj(cert: &EquilibriumCertificate) -> CheckReport {
    let mut r = CheckReport::new("obs_large_dj", "d_j >= 2 d_ij implies c_ij <= t_i");
    for j in 0..cert.n() {
        for i in 0..cert.n() {
            if cert.report_dist[j] >= 2.0 * cert.pairwise[i][j] {
                r.case(cert.cross[i][j], cert.to_prediction[i], || format!("i={i}, j={j}"));
            }
        }
    }
    r
}

/// Bound on the number of agents not reporting truthfully, in the form
/// appropriate for the space.
pub fn check_su_delta(cert: &EquilibriumCertificate, space: &MetricSpace) -> CheckReport {
    let n = cert.n() as f64;
    let k = (cert.at_prediction.len() + cert.interior.len()) as f64;
    let total: f64 = cert.pairwise.iter().flatten().sum();
    let delta = cert.delta;
    if space.is_strictly_convex() {
        let mut r = CheckReport::new("su_delta", "(|S|+|U|) delta <= (2/n) sum d_ij");
        r.case(k * delta, 2.0 / n * total, String::new);
        r
    } else {
        const BOUND: &str = "(|S|+|U|) delta / 2 <= (4n/(delta D) + 2) sum d_ij / n";
        if delta == 0.0 {
            return CheckReport::skip("su_delta", BOUND, "delta = 0");
        }
        let mut r = CheckReport::new("su_delta", BOUND);
        let dd = delta * cert.distribution.denominator;
        r.case(0.5 * k * delta, (4.0 * n / dd + 2.0) * total / n, String::new);
        r
    }
}

/// Decomposition terms add up to the expected social cost.
pub fn check_decomposition(cert: &EquilibriumCertificate, instance: &Instance) -> Result<CheckReport, AnalysisError> {
    const NAME: &str = "sc_decomposition";
    const BOUND: &str = "|terms - SC| <= 1e-9 SC";
    let parts = match sc_decomposition(cert, instance) {
        Ok(p) => p,
        Err(MechanismError::UnsupportedDecomposition) => {
            return Ok(CheckReport::skip(NAME, BOUND, "delta = 0 with agents at the prediction"))
        }
        Err(e) => return Err(e.into()),
    };
    let mut r = CheckReport::new(NAME, BOUND);
    let sc = expected_social_cost(instance, &cert.reports, &cert.distribution)?;
    let gap = (parts.total() - sc).abs().max((sc - cert.social_cost).abs());
    r.case(gap, 1e-9 * sc.abs().max(1.0), String::new);
    r.note = Some(format!(
        "prediction={}, truthful={}, interior={}",
        parts.prediction_term, parts.truthful_term, parts.interior_term
    ));
    Ok(r)
}

/// Truthful-term of the decomposition is at most `4 opt`.
pub fn check_t_term(cert: &EquilibriumCertificate, instance: &Instance, opt: f64) -> Result<CheckReport, AnalysisError> {
    const NAME: &str = "t_term";
    const BOUND: &str = "sum_{j in T} p_j sum_i d_ij <= 4 opt";
    if cert.delta == 0.0 {
        return Ok(CheckReport::skip(NAME, BOUND, "delta = 0"));
    }
    let parts = sc_decomposition(cert, instance)?;
    let mut r = CheckReport::new(NAME, BOUND);
    r.case(parts.truthful_term, 4.0 * opt, String::new);
    Ok(r)
}

/// Random dictatorship on truthful reports costs at most `2 opt`, and so
/// does the average pairwise distance.
pub fn check_rd_approx(instance: &Instance, opt: f64) -> Result<CheckReport, AnalysisError> {
    let n = instance.n();
    let dist = rd_distribution(n)?;
    let rd = expected_social_cost(instance, &instance.locations, &dist)?;
    let mut r = CheckReport::new("rd_approx", "SC(RD, truthful) <= 2 opt");
    r.case(rd, 2.0 * opt, || "random dictatorship".into());
    let sharp = 2.0 * (1.0 - 1.0 / n as f64);
    let ratio = ratio_to_opt(rd, opt).unwrap_or(f64::INFINITY);
    r.note = Some(format!("ratio={ratio}, sharper reference 2(1-1/n)={sharp}"));
    Ok(r)
}

/// `(1/n) sum_{i,j} d_ij <= 2 opt`.
pub fn check_pairwise_average(instance: &Instance, opt: f64) -> CheckReport {
    let g = instance.geometry();
    let mut r = CheckReport::new("pairwise_average", "(1/n) sum d_ij <= 2 opt");
    r.case(g.pairwise_total() / instance.n() as f64, 2.0 * opt, String::new);
    r
}

/// Every applicable check for one certificate. `c` is the ratio of `delta`
/// to the average prediction cost.
pub fn run_battery(
    instance: &Instance,
    cert: &EquilibriumCertificate,
    c: f64,
    opt: f64,
) -> Result<Vec<CheckReport>, AnalysisError> {
    let mut out = vec![
        check_prob_tu(cert),
        check_delta_d(cert, c),
        check_metric_cij(cert),
        check_obs_large_dj(cert),
        check_su_delta(cert, &instance.metric),
        check_decomposition(cert, instance)?,
        check_t_term(cert, instance, opt)?,
    ];
    if instance.metric.is_strictly_convex() {
        out.push(check_convex_cij(cert, &instance.metric)?);
    }
    Ok(out)
}

/// True if every non-skipped report passed.
pub fn all_pass(reports: &[CheckReport]) -> bool {
    reports.iter().all(|r| r.pass)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::{find_pne_enumerative, verify_pne, EnumerationOptions};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn l2(points: &[[f64; 2]], pred: [f64; 2]) -> Instance {
        Instance::new(
            MetricSpace::l2(2),
            points.iter().map(|p| Point::coords(p.to_vec())).collect(),
            Point::coords(pred.to_vec()),
        )
        .unwrap()
    }

    fn circle() -> Instance {
        Instance::new(
            MetricSpace::circle(201.0).unwrap(),
            vec![Point::arc(0.0), Point::arc(200.0)],
            Point::arc(100.0),
        )
        .unwrap()
    }

    #[test]
    fn equilateral_triangle_median() {
        let h = 3f64.sqrt() / 2.0;
        let inst = l2(&[[0.0, 0.0], [1.0, 0.0], [0.5, h]], [0.0, 0.0]);
        let opt = optimal_facility(&inst);
        let Point::Coords { coords } = &opt.facility else { panic!() };
        assert_abs_diff_eq!(coords[0], 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(coords[1], 3f64.sqrt() / 6.0, epsilon = 1e-9);
        assert_abs_diff_eq!(opt.value, 3f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn line_median_and_gamma() {
        let line = |xs: &[f64], p: f64| {
            Instance::new(
                MetricSpace::l2(1),
                xs.iter().map(|x| Point::coords(vec![*x])).collect(),
                Point::coords(vec![p]),
            )
            .unwrap()
        };
        let opt = optimal_facility(&line(&[0.0, 0.0, 10.0], 0.0));
        assert_eq!(opt.facility, Point::coords(vec![0.0]));
        assert_eq!(opt.value, 10.0);
        assert_eq!(gamma_accuracy(&line(&[0.0, 10.0], 5.0)).unwrap(), 1.0);
        assert_eq!(gamma_accuracy(&line(&[3.0, 3.0], 3.0)).unwrap(), 1.0);
        assert!(matches!(
            gamma_accuracy(&line(&[3.0, 3.0], 4.0)),
            Err(AnalysisError::DegenerateInstance(_))
        ));
    }

    #[test]
    fn circle_opt_gamma_and_poa() {
        let inst = circle();
        let opt = optimal_facility(&inst);
        assert_eq!(opt.value, 1.0);
        assert!(opt.exact);
        assert_eq!(gamma_accuracy(&inst).unwrap(), 200.0);
        let cert = verify_pne(&inst, &[0.5, 0.5], 0.0, 1e-5).unwrap().unwrap();
        assert_abs_diff_eq!(poa(&inst, &[cert.clone()]).unwrap(), 200.0, epsilon = 1e-9);
        let tu = check_prob_tu(&cert);
        assert!(tu.is_skipped());
        assert!(check_metric_cij(&cert).pass);
        assert!(check_obs_large_dj(&cert).pass);
        let su = check_su_delta(&cert, &inst.metric);
        assert!(su.is_skipped());
        assert!(matches!(
            check_convex_cij(&cert, &inst.metric),
            Err(AnalysisError::NotStrictlyConvex(_))
        ));
        let dec = check_decomposition(&cert, &inst).unwrap();
        assert!(dec.pass && !dec.is_skipped());
    }

    #[test]
    fn poa_requires_certificates() {
        assert!(matches!(poa(&circle(), &[]), Err(AnalysisError::NoCertificates)));
    }

    #[test]
    fn delta_d_formula() {
        // c = 1: bound 2/n. Equal t truthful: delta D = n c/(c+1).
        let inst = l2(&[[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]], [0.0, 0.0]);
        let c = 1.0;
        let delta = c * 1.0;
        let cert = find_pne_enumerative(&inst, delta, &EnumerationOptions::default())
            .unwrap()
            .into_iter()
            .find(|c| c.truthful.len() == 4)
            .unwrap();
        let r = check_delta_d(&cert, c);
        assert_abs_diff_eq!(r.left, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(r.right, 0.5, epsilon = 1e-12);
        assert!(r.pass);
        assert!(check_prob_tu(&cert).pass);
    }

    #[test]
    fn consistency_bound_instantiation() {
        let inst = l2(&[[0.0, 0.0], [2.0, 0.0], [1.0, 1.0]], [1.0, 0.0]);
        let opt = optimal_facility(&inst).value;
        let delta = 0.25 * inst.prediction_cost() / 3.0;
        let certs = find_pne_enumerative(&inst, delta, &EnumerationOptions::default()).unwrap();
        let r = check_consistency_bound(&inst, delta, &certs, opt).unwrap();
        assert!(r.pass);
        assert_abs_diff_eq!(r.right, 1.5 * gamma_accuracy(&inst).unwrap() * opt, epsilon = 1e-9);
    }

    #[test]
    fn rd_two_points() {
        let inst = Instance::new(
            MetricSpace::l2(1),
            vec![Point::coords(vec![0.0]), Point::coords(vec![1.0])],
            Point::coords(vec![0.0]),
        )
        .unwrap();
        let r = check_rd_approx(&inst, 1.0).unwrap();
        assert!(r.pass);
        assert_abs_diff_eq!(r.left, 1.0);
        let single = Instance::new(MetricSpace::l2(1), vec![Point::coords(vec![4.0])], Point::coords(vec![0.0])).unwrap();
        assert!(check_rd_approx(&single, optimal_facility(&single).value).unwrap().pass);
    }

    /// Dense grid search refined around the best cell.
    fn grid_median(pts: &[Vec<f64>]) -> f64 {
        let cost = |x: f64, y: f64| pts.iter().map(|p| euclid(p, &[x, y])).sum::<f64>();
        let (mut cx, mut cy, mut half) = (0.0, 0.0, 10.0);
        let mut best = f64::INFINITY;
        for _ in 0..6 {
            let (mut bx, mut by) = (cx, cy);
            for a in 0..=400 {
                for b in 0..=400 {
                    let x = cx - half + 2.0 * half * a as f64 / 400.0;
                    let y = cy - half + 2.0 * half * b as f64 / 400.0;
                    let v = cost(x, y);
                    if v < best {
                        best = v;
                        bx = x;
                        by = y;
                    }
                }
            }
            cx = bx;
            cy = by;
            half /= 20.0;
        }
        best
    }

    #[test]
    fn weiszfeld_matches_grid_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let n = rng.gen_range(3..=8);
            let pts: Vec<Vec<f64>> = (0..n)
                .map(|_| vec![rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)])
                .collect();
            let (y, _, _) = weiszfeld(&pts, 1e-10, 100_000);
            let w = pts.iter().map(|p| euclid(p, &y)).sum::<f64>();
            let g = grid_median(&pts);
            assert!(w <= g + 1e-9, "weiszfeld {w} vs grid {g}");
            assert!(g - w <= 1e-4);
        }
    }

    #[test]
    fn weiszfeld_stops_at_dominant_data_point() {
        let pts = vec![vec![0.0, 0.0], vec![0.0, 0.0], vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        let (y, iters, _) = weiszfeld(&pts, 1e-10, 100);
        assert_eq!(y, vec![0.0, 0.0]);
        assert_eq!(iters, 0);
    }

    #[test]
    fn pairwise_average_is_within_twice_opt() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let n = rng.gen_range(1..8);
            let locs: Vec<Point> = (0..n).map(|_| MetricSpace::l2(3).sample_point(&mut rng, 10.0)).collect();
            let inst = Instance::new(MetricSpace::l2(3), locs, Point::coords(vec![0.0; 3])).unwrap();
            let opt = optimal_facility(&inst).value;
            assert!(check_pairwise_average(&inst, opt).pass);
        }
    }
}
