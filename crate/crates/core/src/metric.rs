//! Continuous metric spaces with canonical shortest-path interpolation.
//!
//! Three families are supported:
//!
//! * `Euclidean`: `R^dim` under the `p`-norm (`1 <= p < inf`). Straight
//!   segments are shortest paths for every such norm.
//! * `Circle`: a circle of circumference `L` with arc-length distance.
//! * `SegmentExtension`: a finite metric (validated distance matrix) made
//!   continuous by gluing a segment of length `d(p, q)` between every pair
//!   of discrete points.
//!
//! All values are immutable after construction and safe to share across
//! threads.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tolerance;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("point kind does not match metric space ({0})")]
    KindMismatch(&'static str),
    #[error("euclidean point has {got} coordinates, space dimension is {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid metric parameters: {0}")]
    InvalidSpace(String),
    #[error("invalid point: {0}")]
    InvalidPoint(String),
    #[error("path offset {s} outside [0, {len}]")]
    OffsetOutOfRange { s: f64, len: f64 },
}

/// A point of one of the supported spaces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Point {
    Coords {
        coords: Vec<f64>,
    },
    Arc {
        arc: f64,
    },
    Segment {
        segment: [usize; 2],
        offset: f64,
    },
    Anchor {
        anchor: usize,
    },
}

impl Point {
    pub fn coords(coords: impl Into<Vec<f64>>) -> Self {
        Point::Coords {
            coords: coords.into(),
        }
    }

    pub fn arc(arc: f64) -> Self {
        Point::Arc { arc }
    }

    pub fn anchor(anchor: usize) -> Self {
        Point::Anchor { anchor }
    }

    /// A point on the segment between discrete points `p` and `q`, measured
    /// from `p`. Endpoint order is normalised so that `p < q`.
    pub fn segment(p: usize, q: usize, offset_from_p: f64) -> Self {
        Point::Segment {
            segment: [p, q],
            offset: offset_from_p,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpaceKind {
    Euclidean {
        dim: usize,
        p: f64,
    },
    Circle {
        #[serde(rename = "L")]
        circumference: f64,
    },
    SegmentExtension {
        matrix: Vec<Vec<f64>>,
    },
}

/// A validated continuous metric space.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct MetricSpace {
    kind: SpaceKind,
}

impl<'de> Deserialize<'de> for MetricSpace {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let kind = SpaceKind::deserialize(deserializer)?;
        MetricSpace::new(kind).map_err(serde::de::Error::custom)
    }
}

impl MetricSpace {
    pub fn new(kind: SpaceKind) -> Result<Self, MetricError> {
        match &kind {
            SpaceKind::Euclidean { dim, p } => {
                if *dim == 0 {
                    return Err(MetricError::InvalidSpace("dimension must be positive".into()));
                }
                if !(p.is_finite() && *p >= 1.0) {
                    return Err(MetricError::InvalidSpace(format!(
                        "exponent p must be finite and >= 1, got {p}"
                    )));
                }
            }
            SpaceKind::Circle { circumference } => {
                if !(circumference.is_finite() && *circumference > 0.0) {
                    return Err(MetricError::InvalidSpace(format!(
                        "circumference must be positive, got {circumference}"
                    )));
                }
            }
            SpaceKind::SegmentExtension { matrix } => validate_matrix(matrix)?,
        }
        Ok(Self { kind })
    }

    pub fn euclidean(dim: usize, p: f64) -> Result<Self, MetricError> {
        Self::new(SpaceKind::Euclidean { dim, p })
    }

    pub fn l2(dim: usize) -> Self {
        Self::euclidean(dim, 2.0).expect("L2 is always valid")
    }

    pub fn circle(circumference: f64) -> Result<Self, MetricError> {
        Self::new(SpaceKind::Circle { circumference })
    }

    pub fn segment_extension(matrix: Vec<Vec<f64>>) -> Result<Self, MetricError> {
        Self::new(SpaceKind::SegmentExtension { matrix })
    }

    pub fn kind(&self) -> &SpaceKind {
        &self.kind
    }

    /// True for `p`-norms with `1 < p < inf`.
    pub fn is_strictly_convex(&self) -> bool {
        matches!(self.kind, SpaceKind::Euclidean { p, .. } if p > 1.0)
    }

    /// Short label used in CSV output.
    pub fn label(&self) -> String {
        match &self.kind {
            SpaceKind::Euclidean { dim, p } if *p == 2.0 => format!("l2-d{dim}"),
            SpaceKind::Euclidean { dim, p } => format!("l{p}-d{dim}"),
            SpaceKind::Circle { circumference } => format!("circle-L{circumference}"),
            SpaceKind::SegmentExtension { matrix } => format!("segext-k{}", matrix.len()),
        }
    }

    /// Checks that `point` belongs to this space.
    pub fn check_point(&self, point: &Point) -> Result<(), MetricError> {
        match (&self.kind, point) {
            (SpaceKind::Euclidean { dim, .. }, Point::Coords { coords }) => {
                if coords.len() != *dim {
                    return Err(MetricError::DimensionMismatch {
                        expected: *dim,
                        got: coords.len(),
                    });
                }
                if coords.iter().any(|c| !c.is_finite()) {
                    return Err(MetricError::InvalidPoint("non-finite coordinate".into()));
                }
                Ok(())
            }
            (SpaceKind::Circle { .. }, Point::Arc { arc }) => {
                if arc.is_finite() {
                    Ok(())
                } else {
                    Err(MetricError::InvalidPoint("non-finite arc position".into()))
                }
            }
            (SpaceKind::SegmentExtension { matrix }, Point::Anchor { anchor }) => {
                if *anchor < matrix.len() {
                    Ok(())
                } else {
                    Err(MetricError::InvalidPoint(format!("anchor {anchor} out of range")))
                }
            }
            (SpaceKind::SegmentExtension { matrix }, Point::Segment { segment, offset }) => {
                let [p, q] = *segment;
                let k = matrix.len();
                if p >= k || q >= k || p == q {
                    return Err(MetricError::InvalidPoint(format!(
                        "segment ({p}, {q}) is not a pair of distinct anchors"
                    )));
                }
                let len = matrix[p][q];
                let tol = tolerance::METRIC_REL * len.max(1.0);
                if !(offset.is_finite() && *offset >= -tol && *offset <= len + tol) {
                    return Err(MetricError::InvalidPoint(format!(
                        "offset {offset} outside segment of length {len}"
                    )));
                }
                Ok(())
            }
            (SpaceKind::Euclidean { .. }, _) => Err(MetricError::KindMismatch("expected coords")),
            (SpaceKind::Circle { .. }, _) => Err(MetricError::KindMismatch("expected arc")),
            (SpaceKind::SegmentExtension { .. }, _) => {
                Err(MetricError::KindMismatch("expected segment or anchor"))
            }
        }
    }

    /// Canonical form of a point: circle positions reduced into `[0, L)`,
    /// segment endpoints collapsed to anchors and `p < q` enforced.
    pub fn canonicalize(&self, point: &Point) -> Result<Point, MetricError> {
        self.check_point(point)?;
        Ok(match (&self.kind, point) {
            (SpaceKind::Circle { circumference }, Point::Arc { arc }) => {
                Point::arc(wrap(*arc, *circumference))
            }
            (SpaceKind::SegmentExtension { matrix }, Point::Segment { segment, offset }) => {
                let [p, q] = *segment;
                let len = matrix[p][q];
                let (p, q, off) = if p < q { (p, q, *offset) } else { (q, p, len - offset) };
                let off = off.clamp(0.0, len);
                if off <= 0.0 {
                    Point::anchor(p)
                } else if off >= len {
                    Point::anchor(q)
                } else {
                    Point::segment(p, q, off)
                }
            }
            _ => point.clone(),
        })
    }

    pub fn distance(&self, a: &Point, b: &Point) -> Result<f64, MetricError> {
        self.check_point(a)?;
        self.check_point(b)?;
        Ok(self.distance_unchecked(a, b))
    }

    /// Distance without membership checks. Callers must pass points that
    /// belong to this space.
    pub(crate) fn distance_unchecked(&self, a: &Point, b: &Point) -> f64 {
        match (&self.kind, a, b) {
            (SpaceKind::Euclidean { p, .. }, Point::Coords { coords: x }, Point::Coords { coords: y }) => {
                lp_norm(x.iter().zip(y).map(|(u, v)| u - v), *p)
            }
            (SpaceKind::Circle { circumference }, Point::Arc { arc: x }, Point::Arc { arc: y }) => {
                let fwd = wrap(y - x, *circumference);
                fwd.min(circumference - fwd)
            }
            (SpaceKind::SegmentExtension { matrix }, a, b) => segment_distance(matrix, a, b).0,
            _ => f64::NAN,
        }
    }

    /// The point at distance `s` from `a` along the canonical shortest path
    /// from `a` to `b`.
    pub fn point_on_path(&self, a: &Point, b: &Point, s: f64) -> Result<Point, MetricError> {
        let len = self.distance(a, b)?;
        let tol = tolerance::METRIC_REL * len.max(1.0);
        if !(s.is_finite() && s >= -tol && s <= len + tol) {
            return Err(MetricError::OffsetOutOfRange { s, len });
        }
        Ok(self.point_on_path_unchecked(a, b, s.clamp(0.0, len), len))
    }

    pub(crate) fn point_on_path_unchecked(&self, a: &Point, b: &Point, s: f64, len: f64) -> Point {
        if s <= 0.0 {
            return a.clone();
        }
        if s >= len {
            return b.clone();
        }
        match (&self.kind, a, b) {
            (SpaceKind::Euclidean { .. }, Point::Coords { coords: x }, Point::Coords { coords: y }) => {
                let f = s / len;
                Point::coords(x.iter().zip(y).map(|(u, v)| u + f * (v - u)).collect::<Vec<_>>())
            }
            (SpaceKind::Circle { circumference }, Point::Arc { arc: x }, Point::Arc { arc: y }) => {
                let l = *circumference;
                let fwd = wrap(y - x, l);
                // Forward (counterclockwise) wins ties at the antipode.
                if fwd <= l - fwd {
                    Point::arc(wrap(x + s, l))
                } else {
                    Point::arc(wrap(x - s, l))
                }
            }
            (SpaceKind::SegmentExtension { matrix }, a, b) => {
                let (_, route) = segment_distance(matrix, a, b);
                walk_route(matrix, a, b, route, s)
            }
            _ => a.clone(),
        }
    }

    /// Draws a point: uniform in `[-extent, extent]^dim`, uniform on the
    /// circle, or uniform over segments and offsets.
    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R, extent: f64) -> Point {
        match &self.kind {
            SpaceKind::Euclidean { dim, .. } => {
                Point::coords((0..*dim).map(|_| rng.gen_range(-extent..=extent)).collect::<Vec<_>>())
            }
            SpaceKind::Circle { circumference } => Point::arc(rng.gen_range(0.0..*circumference)),
            SpaceKind::SegmentExtension { matrix } => {
                let k = matrix.len();
                if k == 1 {
                    return Point::anchor(0);
                }
                let p = rng.gen_range(0..k);
                let mut q = rng.gen_range(0..k - 1);
                if q >= p {
                    q += 1;
                }
                let (p, q) = (p.min(q), p.max(q));
                let off = rng.gen_range(0.0..=matrix[p][q]);
                self.canonicalize(&Point::segment(p, q, off))
                    .expect("sampled point is valid")
            }
        }
    }

    /// Discrete anchors of a segment extension (empty for other spaces).
    pub fn anchors(&self) -> Vec<Point> {
        match &self.kind {
            SpaceKind::SegmentExtension { matrix } => (0..matrix.len()).map(Point::anchor).collect(),
            _ => Vec::new(),
        }
    }
}

fn wrap(x: f64, l: f64) -> f64 {
    let r = x.rem_euclid(l);
    if r >= l {
        0.0
    } else {
        r
    }
}

fn lp_norm(diffs: impl Iterator<Item = f64>, p: f64) -> f64 {
    if p == 2.0 {
        diffs.map(|d| d * d).sum::<f64>().sqrt()
    } else if p == 1.0 {
        diffs.map(f64::abs).sum()
    } else {
        // Scale by the largest component to avoid overflow in |d|^p.
        let v: Vec<f64> = diffs.map(f64::abs).collect();
        let m = v.iter().copied().fold(0.0, f64::max);
        if m == 0.0 {
            return 0.0;
        }
        m * v.iter().map(|d| (d / m).powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

fn validate_matrix(matrix: &[Vec<f64>]) -> Result<(), MetricError> {
    let k = matrix.len();
    if k == 0 {
        return Err(MetricError::InvalidSpace("distance matrix is empty".into()));
    }
    for (i, row) in matrix.iter().enumerate() {
        if row.len() != k {
            return Err(MetricError::InvalidSpace(format!("row {i} has length {}", row.len())));
        }
        if row[i] != 0.0 {
            return Err(MetricError::InvalidSpace(format!("diagonal entry {i} is nonzero")));
        }
        for (j, &v) in row.iter().enumerate() {
            if i != j && !(v.is_finite() && v > 0.0) {
                return Err(MetricError::InvalidSpace(format!(
                    "entry ({i}, {j}) = {v} must be positive and finite"
                )));
            }
            if (v - matrix[j][i]).abs() > tolerance::METRIC_REL * v.max(1.0) {
                return Err(MetricError::InvalidSpace(format!("matrix not symmetric at ({i}, {j})")));
            }
        }
    }
    for i in 0..k {
        for j in 0..k {
            for m in 0..k {
                let lhs = matrix[i][j];
                let rhs = matrix[i][m] + matrix[m][j];
                if lhs > rhs + tolerance::METRIC_REL * lhs.max(1.0) {
                    return Err(MetricError::InvalidSpace(format!(
                        "triangle inequality fails for ({i}, {m}, {j})"
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Ways to leave a point of the segment extension: (anchor, distance to it).
fn exits(matrix: &[Vec<f64>], p: &Point) -> ([(usize, f64); 2], usize) {
    match p {
        Point::Anchor { anchor } => ([(*anchor, 0.0), (*anchor, 0.0)], 1),
        Point::Segment { segment: [a, b], offset } => {
            let len = matrix[*a][*b];
            ([(*a, *offset), (*b, len - offset)], 2)
        }
        _ => ([(0, f64::NAN), (0, f64::NAN)], 0),
    }
}

#[derive(Debug, Clone, Copy)]
enum Route {
    Direct,
    Via(usize, usize),
}

/// Shortest distance and the minimising route. Candidates are examined in
/// a fixed order (direct first, then exits by ascending anchor index) and
/// ties keep the earliest candidate.
fn segment_distance(matrix: &[Vec<f64>], a: &Point, b: &Point) -> (f64, Route) {
    let mut best = (f64::INFINITY, Route::Direct);
    if let (Point::Segment { segment: sa, offset: oa }, Point::Segment { segment: sb, offset: ob }) =
        (a, b)
    {
        if sa == sb {
            best = ((oa - ob).abs(), Route::Direct);
        }
    }
    if a == b {
        return (0.0, Route::Direct);
    }
    let (ea, na) = exits(matrix, a);
    let (eb, nb) = exits(matrix, b);
    let mut cands: Vec<(usize, f64, usize, f64)> = Vec::with_capacity(4);
    for &(u, du) in &ea[..na] {
        for &(v, dv) in &eb[..nb] {
            cands.push((u, du, v, dv));
        }
    }
    cands.sort_by_key(|c| (c.0, c.2));
    for (u, du, v, dv) in cands {
        let d = du + matrix[u][v] + dv;
        if d < best.0 {
            best = (d, Route::Via(u, v));
        }
    }
    best
}

fn point_toward(matrix: &[Vec<f64>], from: &Point, anchor: usize, s: f64) -> Point {
    match from {
        Point::Segment { segment: [p, q], offset } => {
            let len = matrix[*p][*q];
            let off = if anchor == *p { offset - s } else { offset + s };
            canonical_segment(len, *p, *q, off)
        }
        _ => Point::anchor(anchor),
    }
}

fn canonical_segment(len: f64, p: usize, q: usize, off: f64) -> Point {
    if off <= 0.0 {
        Point::anchor(p)
    } else if off >= len {
        Point::anchor(q)
    } else {
        Point::segment(p, q, off)
    }
}

fn walk_route(matrix: &[Vec<f64>], a: &Point, b: &Point, route: Route, s: f64) -> Point {
    match route {
        Route::Direct => match a {
            Point::Segment { segment: [p, q], offset } => {
                let ob = match b {
                    Point::Segment { offset, .. } => *offset,
                    _ => *offset,
                };
                let off = if ob >= *offset { offset + s } else { offset - s };
                canonical_segment(matrix[*p][*q], *p, *q, off)
            }
            _ => a.clone(),
        },
        Route::Via(u, v) => {
            let (ea, na) = exits(matrix, a);
            let leg1 = ea[..na].iter().find(|e| e.0 == u).map(|e| e.1).unwrap_or(0.0);
            let mid = matrix[u][v];
            if s <= leg1 {
                return point_toward(matrix, a, u, s);
            }
            let s2 = s - leg1;
            if s2 <= mid {
                if u == v {
                    return Point::anchor(u);
                }
                let (p, q, off) = if u < v { (u, v, s2) } else { (v, u, mid - s2) };
                return canonical_segment(mid, p, q, off);
            }
            // Last leg: walk from anchor v toward b.
            let s3 = s2 - mid;
            match b {
                Point::Segment { segment: [p, q], offset } => {
                    let len = matrix[*p][*q];
                    let off = if v == *p { s3 } else { len - s3 };
                    let _ = offset;
                    canonical_segment(len, *p, *q, off)
                }
                _ => b.clone(),
            }
        }
    }
}

/// Worst violations of the metric axioms and of the path property over a
/// sample of point triples.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub triples: usize,
    pub max_symmetry: f64,
    pub max_triangle: f64,
    pub max_path: f64,
    pub max_identity: f64,
    pub pass: bool,
}

impl ValidationReport {
    pub fn max_violation(&self) -> f64 {
        self.max_symmetry
            .max(self.max_triangle)
            .max(self.max_path)
            .max(self.max_identity)
    }
}

/// Checks symmetry, identity, the triangle inequality and the path property
/// `d(a, P) + d(P, b) = d(a, b)` for `P` at fractions 0, 1/4, 1/2, 3/4 and 1
/// of the way from `a` to `b`. Violations are relative to
/// `max(1, magnitude)`.
pub fn validate_metric(space: &MetricSpace, sample: &[(Point, Point, Point)]) -> ValidationReport {
    let mut rep = ValidationReport {
        triples: sample.len(),
        max_symmetry: 0.0,
        max_triangle: 0.0,
        max_path: 0.0,
        max_identity: 0.0,
        pass: true,
    };
    let rel = |v: f64, mag: f64| v / mag.max(1.0);
    for (a, b, c) in sample {
        let (Ok(ab), Ok(ba), Ok(bc), Ok(ac)) = (
            space.distance(a, b),
            space.distance(b, a),
            space.distance(b, c),
            space.distance(a, c),
        ) else {
            rep.pass = false;
            continue;
        };
        rep.max_identity = rep
            .max_identity
            .max(space.distance_unchecked(a, a).abs())
            .max(if ab < 0.0 { -ab } else { 0.0 });
        rep.max_symmetry = rep.max_symmetry.max(rel((ab - ba).abs(), ab));
        rep.max_triangle = rep.max_triangle.max(rel((ac - ab - bc).max(0.0), ac));
        for f in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let s = f * ab;
            let p = space.point_on_path_unchecked(a, b, s, ab);
            let ap = space.distance_unchecked(a, &p);
            let pb = space.distance_unchecked(&p, b);
            let v = (ap - s).abs().max((pb - (ab - s)).abs());
            rep.max_path = rep.max_path.max(rel(v, ab));
        }
    }
    rep.pass = rep.pass && rep.max_violation() <= tolerance::METRIC_REL;
    rep
}

/// Both sides of the path convex-combination inequality
/// `d(A, P) <= d(P, P2)/d(P1, P2) * d(A, P1) + d(P, P1)/d(P1, P2) * d(A, P2)`.
/// `P` must lie on some shortest path between `P1` and `P2`; this holds in
/// strictly convex spaces and can fail otherwise.
pub fn path_convexity_sides(
    space: &MetricSpace,
    a: &Point,
    p1: &Point,
    p2: &Point,
    p: &Point,
) -> Result<(f64, f64), MetricError> {
    let d12 = space.distance(p1, p2)?;
    let d1 = space.distance(p, p1)?;
    let d2 = space.distance(p, p2)?;
    if (d1 + d2 - d12).abs() > tolerance::METRIC_REL * d12.max(1.0) {
        return Err(MetricError::InvalidPoint(
            "P does not lie on a shortest path between P1 and P2".into(),
        ));
    }
    let lhs = space.distance(a, p)?;
    if d12 == 0.0 {
        return Ok((lhs, space.distance(a, p1)?));
    }
    let rhs = d2 / d12 * space.distance(a, p1)? + d1 / d12 * space.distance(a, p2)?;
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn circle_distance_direct_arc() {
        let c = MetricSpace::circle(201.0).unwrap();
        assert_eq!(c.distance(&Point::arc(0.0), &Point::arc(100.5)).unwrap(), 100.5);
        assert_eq!(c.distance(&Point::arc(0.0), &Point::arc(200.0)).unwrap(), 1.0);
    }

    #[test]
    fn l1_distance() {
        let s = MetricSpace::euclidean(2, 1.0).unwrap();
        let d = s.distance(&Point::coords([1.0, 0.0]), &Point::coords([0.0, 1.0])).unwrap();
        assert_eq!(d, 2.0);
        assert!(!s.is_strictly_convex());
        assert!(MetricSpace::l2(2).is_strictly_convex());
        assert!(MetricSpace::euclidean(3, 1.5).unwrap().is_strictly_convex());
    }

    #[test]
    fn same_segment_direct_travel() {
        let s = MetricSpace::segment_extension(vec![vec![0.0, 4.0], vec![4.0, 0.0]]).unwrap();
        let d = s.distance(&Point::segment(0, 1, 1.0), &Point::segment(0, 1, 3.0)).unwrap();
        assert_eq!(d, 2.0);
    }

    #[test]
    fn kind_mismatch_is_typed() {
        let s = MetricSpace::l2(2);
        assert!(matches!(
            s.distance(&Point::arc(1.0), &Point::coords([0.0, 0.0])),
            Err(MetricError::KindMismatch(_))
        ));
        assert!(matches!(
            s.distance(&Point::coords([1.0]), &Point::coords([0.0, 0.0])),
            Err(MetricError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn invalid_spaces_rejected() {
        assert!(MetricSpace::euclidean(2, 0.5).is_err());
        assert!(MetricSpace::euclidean(2, f64::INFINITY).is_err());
        assert!(MetricSpace::circle(0.0).is_err());
        // asymmetric
        assert!(MetricSpace::segment_extension(vec![vec![0.0, 1.0], vec![2.0, 0.0]]).is_err());
        // triangle violation
        let m = vec![vec![0.0, 1.0, 5.0], vec![1.0, 0.0, 1.0], vec![5.0, 1.0, 0.0]];
        assert!(MetricSpace::segment_extension(m).is_err());
        // zero off-diagonal
        assert!(MetricSpace::segment_extension(vec![vec![0.0, 0.0], vec![0.0, 0.0]]).is_err());
    }

    #[test]
    fn straight_segment_interpolation() {
        let s = MetricSpace::l2(2);
        let p = s
            .point_on_path(&Point::coords([0.0, 0.0]), &Point::coords([2.0, 0.0]), 0.5)
            .unwrap();
        assert_eq!(p, Point::coords([0.5, 0.0]));
    }

    #[test]
    fn circle_report_short_of_prediction() {
        let c = MetricSpace::circle(201.0).unwrap();
        let p = c.point_on_path(&Point::arc(0.0), &Point::arc(100.0), 99.5).unwrap();
        assert_eq!(p, Point::arc(99.5));
        // the other side of the prediction walks clockwise
        let q = c.point_on_path(&Point::arc(200.0), &Point::arc(100.0), 99.5).unwrap();
        assert_relative_eq!(c.distance(&q, &Point::arc(100.0)).unwrap(), 0.5, epsilon = 1e-12);
        assert_eq!(q, Point::arc(100.5));
    }

    #[test]
    fn circle_antipode_tie_goes_counterclockwise() {
        let c = MetricSpace::circle(10.0).unwrap();
        let p = c.point_on_path(&Point::arc(9.0), &Point::arc(4.0), 2.0).unwrap();
        assert_eq!(p, Point::arc(1.0));
    }

    #[test]
    fn endpoint_identities() {
        let spaces = [
            (MetricSpace::l2(2), Point::coords([0.0, 1.0]), Point::coords([3.0, -2.0])),
            (MetricSpace::circle(7.0).unwrap(), Point::arc(1.0), Point::arc(5.5)),
        ];
        for (s, a, b) in spaces {
            let d = s.distance(&a, &b).unwrap();
            assert_eq!(s.point_on_path(&a, &b, 0.0).unwrap(), a);
            assert_eq!(s.point_on_path(&a, &b, d).unwrap(), b);
        }
    }

    #[test]
    fn out_of_range_offset_is_typed() {
        let s = MetricSpace::l2(1);
        let r = s.point_on_path(&Point::coords([0.0]), &Point::coords([1.0]), 1.5);
        assert!(matches!(r, Err(MetricError::OffsetOutOfRange { .. })));
        let r = s.point_on_path(&Point::coords([0.0]), &Point::coords([1.0]), -0.1);
        assert!(matches!(r, Err(MetricError::OffsetOutOfRange { .. })));
    }

    #[test]
    fn segment_endpoints_canonicalize_to_anchors() {
        let s = MetricSpace::segment_extension(vec![vec![0.0, 4.0], vec![4.0, 0.0]]).unwrap();
        assert_eq!(s.canonicalize(&Point::segment(0, 1, 0.0)).unwrap(), Point::anchor(0));
        assert_eq!(s.canonicalize(&Point::segment(0, 1, 4.0)).unwrap(), Point::anchor(1));
        assert_eq!(s.canonicalize(&Point::segment(1, 0, 1.0)).unwrap(), Point::segment(0, 1, 3.0));
        assert_eq!(s.distance(&Point::segment(0, 1, 0.0), &Point::anchor(0)).unwrap(), 0.0);
    }

    #[test]
    fn segment_path_crosses_anchors() {
        let m = vec![
            vec![0.0, 2.0, 3.0],
            vec![2.0, 0.0, 2.0],
            vec![3.0, 2.0, 0.0],
        ];
        let s = MetricSpace::segment_extension(m).unwrap();
        let a = Point::segment(0, 1, 1.5); // 0.5 from anchor 1
        let b = Point::segment(1, 2, 1.0); // 1.0 from anchor 1
        let d = s.distance(&a, &b).unwrap();
        assert_relative_eq!(d, 1.5);
        let mid = s.point_on_path(&a, &b, 0.5).unwrap();
        assert_eq!(mid, Point::anchor(1));
        let p = s.point_on_path(&a, &b, 1.0).unwrap();
        assert_eq!(p, Point::segment(1, 2, 0.5));
    }

    #[test]
    fn l1_witness_violates_path_convexity() {
        let s = MetricSpace::euclidean(2, 1.0).unwrap();
        let (lhs, rhs) = path_convexity_sides(
            &s,
            &Point::coords([1.0, 0.0]),
            &Point::coords([0.0, 0.0]),
            &Point::coords([1.0, 1.0]),
            &Point::coords([0.0, 1.0]),
        )
        .unwrap();
        assert_eq!((lhs, rhs), (2.0, 1.0));
    }

    #[test]
    fn json_descriptors() {
        let s: MetricSpace = serde_json::from_str(r#"{"kind":"circle","L":201.0}"#).unwrap();
        assert_eq!(s, MetricSpace::circle(201.0).unwrap());
        let s: MetricSpace = serde_json::from_str(r#"{"kind":"euclidean","dim":2,"p":2}"#).unwrap();
        assert_eq!(s, MetricSpace::l2(2));
        let bad = serde_json::from_str::<MetricSpace>(r#"{"kind":"euclidean","dim":2,"p":0.5}"#);
        assert!(bad.is_err());
        let p: Point = serde_json::from_str(r#"{"segment":[0,2],"offset":1.5}"#).unwrap();
        assert_eq!(p, Point::segment(0, 2, 1.5));
        let p: Point = serde_json::from_str(r#"{"arc":3.0}"#).unwrap();
        assert_eq!(p, Point::arc(3.0));
        assert_eq!(serde_json::to_string(&Point::coords([1.0, 2.0])).unwrap(), r#"{"coords":[1.0,2.0]}"#);
    }
}
