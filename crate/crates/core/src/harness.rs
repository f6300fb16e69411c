//! Instance generation, the reference examples, and seeded experiment sweeps.

use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{self, AnalysisError, CheckReport};
use crate::equilibrium::{
    find_pne_dynamics, find_pne_enumerative, DynamicsOptions, EnumerationOptions, EquilibriumCertificate,
    FinderError,
};
use crate::instance::Instance;
use crate::mechanism::MechanismError;
use crate::metric::{path_convexity_sides, MetricError, MetricSpace, Point, SpaceKind};
use crate::par::{self, Execution};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Mechanism(#[from] MechanismError),
    #[error(transparent)]
    Finder(#[from] FinderError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("dynamics did not converge after {0} sweeps")]
    NonConvergence(usize),
}

/// Serialized instance: metric, points, prediction and optional mechanism
/// parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub metric: MetricSpace,
    pub locations: Vec<Point>,
    pub prediction: Point,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl InstanceSpec {
    pub fn from_instance(instance: &Instance) -> Self {
        Self {
            metric: instance.metric.clone(),
            locations: instance.locations.clone(),
            prediction: instance.prediction.clone(),
            delta: None,
            c: None,
            seed: None,
            label: None,
        }
    }

    pub fn instance(&self) -> Result<Instance, HarnessError> {
        Ok(Instance::new(self.metric.clone(), self.locations.clone(), self.prediction.clone())?)
    }

    /// `delta` if given, else `c` times the average prediction cost.
    pub fn resolve_delta(&self, instance: &Instance) -> Result<Option<f64>, HarnessError> {
        match (self.delta, self.c) {
            (Some(_), Some(_)) => Err(HarnessError::Params("give either delta or c, not both".into())),
            (Some(d), None) => Ok(Some(d)),
            (None, Some(c)) => Ok(Some(delta_from_c(instance, c)?)),
            (None, None) => Ok(None),
        }
    }
}

/// `delta = c * SC(prediction) / n`.
pub fn delta_from_c(instance: &Instance, c: f64) -> Result<f64, HarnessError> {
    if !(c.is_finite() && c >= 0.0) {
        return Err(MechanismError::BadC(c).into());
    }
    Ok(c * instance.prediction_cost() / instance.n() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GeneratorParams {
    /// Agents and prediction uniform in `[0, side]^dim` under the `p`-norm.
    UniformBox { n: usize, dim: usize, p: f64, side: f64 },
    /// Agents around `clusters` uniform centres with uniform jitter `spread`.
    Clustered {
        n: usize,
        dim: usize,
        p: f64,
        clusters: usize,
        spread: f64,
        side: f64,
    },
    /// One agent on the prediction, the rest together at distance `r`.
    AdversarialOmegaN { n: usize, r: f64 },
    /// Two agents one apart on a circle of length `2m + 1`, prediction
    /// opposite at distance `m` from both.
    CircleCounterexample { m: f64 },
    /// Agents and prediction uniform on a circle.
    CircleUniform { n: usize, circumference: f64 },
    /// Segment extension over `anchors` random planar points.
    SegmentRandom { n: usize, anchors: usize, side: f64 },
    Custom { spec: InstanceSpec },
}

fn box_point(rng: &mut ChaCha8Rng, dim: usize, side: f64) -> Point {
    Point::coords((0..dim).map(|_| rng.gen_range(0.0..=side)).collect::<Vec<_>>())
}

fn check_n(n: usize) -> Result<(), HarnessError> {
    if n == 0 {
        Err(HarnessError::Params("n must be positive".into()))
    } else {
        Ok(())
    }
}

/// Deterministic instance for the given kind and seed.
pub fn generate_instance(params: &GeneratorParams, seed: u64) -> Result<InstanceSpec, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (metric, locations, prediction, label) = match params {
        GeneratorParams::UniformBox { n, dim, p, side } => {
            check_n(*n)?;
            let metric = MetricSpace::euclidean(*dim, *p)?;
            let locs = (0..*n).map(|_| box_point(&mut rng, *dim, *side)).collect();
            let pred = box_point(&mut rng, *dim, *side);
            (metric, locs, pred, "uniform-box")
        }
        GeneratorParams::Clustered {
            n,
            dim,
            p,
            clusters,
            spread,
            side,
        } => {
            check_n(*n)?;
            if *clusters == 0 {
                return Err(HarnessError::Params("clusters must be positive".into()));
            }
            let metric = MetricSpace::euclidean(*dim, *p)?;
            let centres: Vec<Vec<f64>> = (0..*clusters)
                .map(|_| (0..*dim).map(|_| rng.gen_range(0.0..=*side)).collect())
                .collect();
            let locs = (0..*n)
                .map(|_| {
                    let c = &centres[rng.gen_range(0..*clusters)];
                    Point::coords(c.iter().map(|x| x + rng.gen_range(-*spread..=*spread)).collect::<Vec<_>>())
                })
                .collect();
            let pred = box_point(&mut rng, *dim, *side);
            (metric, locs, pred, "clustered")
        }
        GeneratorParams::AdversarialOmegaN { n, r } => {
            if *n < 2 {
                return Err(HarnessError::Params("needs at least two agents".into()));
            }
            let metric = MetricSpace::l2(2);
            let mut locs = vec![Point::coords(vec![0.0, 0.0])];
            locs.extend((1..*n).map(|_| Point::coords(vec![*r, 0.0])));
            (metric, locs, Point::coords(vec![0.0, 0.0]), "adversarial-omega-n")
        }
        GeneratorParams::CircleCounterexample { m } => {
            let metric = MetricSpace::circle(2.0 * m + 1.0)?;
            let locs = vec![Point::arc(0.0), Point::arc(2.0 * m)];
            (metric, locs, Point::arc(*m), "circle-counterexample")
        }
        GeneratorParams::CircleUniform { n, circumference } => {
            check_n(*n)?;
            let metric = MetricSpace::circle(*circumference)?;
            let locs = (0..*n).map(|_| metric.sample_point(&mut rng, 0.0)).collect();
            let pred = metric.sample_point(&mut rng, 0.0);
            (metric, locs, pred, "circle-uniform")
        }
        GeneratorParams::SegmentRandom { n, anchors, side } => {
            check_n(*n)?;
            if *anchors < 2 {
                return Err(HarnessError::Params("needs at least two anchors".into()));
            }
            let pts: Vec<[f64; 2]> = (0..*anchors)
                .map(|_| [rng.gen_range(0.0..=*side), rng.gen_range(0.0..=*side)])
                .collect();
            let matrix = pts
                .iter()
                .map(|a| pts.iter().map(|b| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()).collect())
                .collect();
            let metric = MetricSpace::segment_extension(matrix)?;
            let locs = (0..*n).map(|_| metric.sample_point(&mut rng, 0.0)).collect();
            let pred = metric.sample_point(&mut rng, 0.0);
            (metric, locs, pred, "segment-random")
        }
        GeneratorParams::Custom { spec } => {
            spec.instance()?;
            return Ok(spec.clone());
        }
    };
    let instance = Instance::new(metric, locations, prediction)?;
    let mut spec = InstanceSpec::from_instance(&instance);
    spec.seed = Some(seed);
    spec.label = Some(label.into());
    Ok(spec)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinderChoice {
    /// Enumeration up to [`ENUMERATION_LIMIT`] agents, dynamics beyond.
    Auto,
    Enumerative,
    Dynamics,
}

pub const ENUMERATION_LIMIT: usize = 8;

/// Certified equilibria for `instance`, and whether enumeration was used.
pub fn find_equilibria(
    instance: &Instance,
    delta: f64,
    finder: FinderChoice,
) -> Result<(Vec<EquilibriumCertificate>, &'static str), HarnessError> {
    let use_enum = match finder {
        FinderChoice::Auto => instance.n() <= ENUMERATION_LIMIT,
        FinderChoice::Enumerative => true,
        FinderChoice::Dynamics => false,
    };
    if use_enum {
        Ok((find_pne_enumerative(instance, delta, &EnumerationOptions::default())?, "enum"))
    } else {
        let opts = DynamicsOptions::default();
        match find_pne_dynamics(instance, delta, None, opts)? {
            Ok(c) => Ok((vec![c], "dyn")),
            Err(nc) => Err(HarnessError::NonConvergence(nc.iters)),
        }
    }
}

/// Summary of the three reference examples.
#[derive(Debug, Clone, Serialize)]
pub struct PaperExamplesReport {
    pub circle_m: f64,
    pub circle_social_cost: f64,
    pub circle_opt: f64,
    pub circle_poa: f64,
    pub circle_pass: bool,
    pub omega_n: Vec<(usize, f64)>,
    pub omega_pass: bool,
    pub l1_lhs: f64,
    pub l1_rhs: f64,
    pub l1_pass: bool,
}

impl PaperExamplesReport {
    pub fn pass(&self) -> bool {
        self.circle_pass && self.omega_pass && self.l1_pass
    }
}

/// Circle with `m = 100`, the one-agent-on-prediction family for
/// `n = 4, 10` with `r = 1000`, and the L1 path-convexity witness.
pub fn reproduce_paper_examples() -> Result<PaperExamplesReport, HarnessError> {
    let m = 100.0;
    let circle = generate_instance(&GeneratorParams::CircleCounterexample { m }, 0)?.instance()?;
    let eps = crate::tolerance::EPS_PNE * m;
    let cert = crate::equilibrium::verify_pne(&circle, &[0.5, 0.5], 0.0, eps)?
        .map_err(|v| HarnessError::Params(format!("circle profile rejected: {v:?}")))?;
    let opt = analysis::optimal_facility(&circle).value;
    let circle_poa = analysis::poa_with_opt(std::slice::from_ref(&cert), opt)?;
    let circle_pass = cert.interior == [0, 1]
        && (cert.social_cost - 2.0 * m).abs() <= 1e-6
        && (opt - 1.0).abs() <= 1e-12
        && (circle_poa - 2.0 * m).abs() <= 1e-6;

    let mut omega_n = Vec::new();
    let mut omega_pass = true;
    for n in [4usize, 10] {
        let inst = generate_instance(&GeneratorParams::AdversarialOmegaN { n, r: 1000.0 }, 0)?.instance()?;
        let (certs, _) = find_equilibria(&inst, 0.0, FinderChoice::Auto)?;
        let p = analysis::poa(&inst, &certs)?;
        omega_pass &= (p - (n as f64 - 1.0)).abs() <= 1e-6;
        omega_n.push((n, p));
    }

    let l1 = MetricSpace::euclidean(2, 1.0)?;
    let (l1_lhs, l1_rhs) = path_convexity_sides(
        &l1,
        &Point::coords(vec![1.0, 0.0]),
        &Point::coords(vec![0.0, 0.0]),
        &Point::coords(vec![1.0, 1.0]),
        &Point::coords(vec![0.0, 1.0]),
    )?;
    let l1_pass = (l1_lhs - 2.0).abs() <= 1e-12 && (l1_rhs - 1.0).abs() <= 1e-12;
    Ok(PaperExamplesReport {
        circle_m: m,
        circle_social_cost: cert.social_cost,
        circle_opt: opt,
        circle_poa,
        circle_pass,
        omega_n,
        omega_pass,
        l1_lhs,
        l1_rhs,
        l1_pass,
    })
}

/// Space family for sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepSpace {
    Line,
    L2,
    Lp { p: f64 },
    Circle,
    Segment,
}

impl SweepSpace {
    pub fn parse(s: &str) -> Result<Self, HarnessError> {
        match s {
            "line" => Ok(Self::Line),
            "l2" => Ok(Self::L2),
            "circle" => Ok(Self::Circle),
            "segment" => Ok(Self::Segment),
            other => other
                .strip_prefix('l')
                .and_then(|p| p.parse::<f64>().ok())
                .filter(|p| *p >= 1.0)
                .map(|p| Self::Lp { p })
                .ok_or_else(|| HarnessError::Params(format!("unknown space '{other}'"))),
        }
    }

    pub fn is_strictly_convex(&self) -> bool {
        match self {
            Self::Line | Self::L2 => true,
            Self::Lp { p } => *p > 1.0,
            Self::Circle | Self::Segment => false,
        }
    }

    fn generator(&self, n: usize, side: f64) -> GeneratorParams {
        match self {
            Self::Line => GeneratorParams::UniformBox { n, dim: 1, p: 2.0, side },
            Self::L2 => GeneratorParams::UniformBox { n, dim: 2, p: 2.0, side },
            Self::Lp { p } => GeneratorParams::UniformBox { n, dim: 2, p: *p, side },
            Self::Circle => GeneratorParams::CircleUniform {
                n,
                circumference: 4.0 * side,
            },
            Self::Segment => GeneratorParams::SegmentRandom { n, anchors: 4, side },
        }
    }
}

/// How the prediction is chosen in robustness sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdversarialPolicy {
    /// Euclidean: `(3 side, ..., 3 side)`. Circle: antipode of the optimum.
    /// Segment extension: the anchor with the largest social cost.
    FarCorner,
    /// A random point at distance `5 side` from the box centre (Euclidean),
    /// or a uniform random point otherwise.
    RandomDistant,
    /// The point opposite the optimum (circle); far corner elsewhere.
    Antipode,
}

impl AdversarialPolicy {
    pub fn label(self) -> &'static str {
        match self {
            Self::FarCorner => "far-corner",
            Self::RandomDistant => "random-distant",
            Self::Antipode => "antipode",
        }
    }

    pub fn parse(s: &str) -> Result<Self, HarnessError> {
        match s {
            "far-corner" => Ok(Self::FarCorner),
            "random-distant" => Ok(Self::RandomDistant),
            "antipode" => Ok(Self::Antipode),
            other => Err(HarnessError::Params(format!("unknown policy '{other}'"))),
        }
    }

    fn prediction(self, instance: &Instance, side: f64, rng: &mut ChaCha8Rng) -> Point {
        let metric = &instance.metric;
        match (metric.kind(), self) {
            (SpaceKind::Euclidean { dim, .. }, Self::FarCorner | Self::Antipode) => {
                Point::coords(vec![3.0 * side; *dim])
            }
            (SpaceKind::Euclidean { dim, p }, Self::RandomDistant) => {
                let dir: Vec<f64> = (0..*dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let norm = dir.iter().map(|v| v.abs().powf(*p)).sum::<f64>().powf(1.0 / p).max(1e-12);
                Point::coords(dir.iter().map(|v| side / 2.0 + 5.0 * side * v / norm).collect::<Vec<_>>())
            }
            (SpaceKind::Circle { circumference }, Self::FarCorner | Self::Antipode) => {
                let Point::Arc { arc } = analysis::optimal_facility(instance).facility else {
                    unreachable!()
                };
                metric
                    .canonicalize(&Point::arc(arc + circumference / 2.0))
                    .expect("valid arc")
            }
            (SpaceKind::SegmentExtension { .. }, Self::FarCorner | Self::Antipode) => metric
                .anchors()
                .into_iter()
                .max_by(|a, b| {
                    let sa: f64 = instance.locations.iter().map(|l| metric.distance(a, l).unwrap()).sum();
                    let sb: f64 = instance.locations.iter().map(|l| metric.distance(b, l).unwrap()).sum();
                    sa.total_cmp(&sb)
                })
                .expect("at least two anchors"),
            (_, Self::RandomDistant) => metric.sample_point(rng, side),
        }
    }
}

/// Sweep configuration shared by consistency and robustness runs.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub space: SweepSpace,
    pub n_values: Vec<usize>,
    pub c_values: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub side: f64,
    pub finder: FinderChoice,
    /// Consistency: move the prediction this fraction of the way toward a
    /// random agent on odd trials (0 keeps it at the optimum).
    pub perturb: f64,
    /// Robustness: policies cycled over trials.
    pub policies: Vec<AdversarialPolicy>,
    pub exec: Execution,
}

impl SweepConfig {
    pub fn new(space: SweepSpace, n_values: Vec<usize>, c_values: Vec<f64>, trials: usize, seed: u64) -> Self {
        Self {
            space,
            n_values,
            c_values,
            trials,
            seed,
            side: 10.0,
            finder: FinderChoice::Auto,
            perturb: 0.0,
            policies: vec![
                AdversarialPolicy::FarCorner,
                AdversarialPolicy::RandomDistant,
                AdversarialPolicy::Antipode,
            ],
            exec: Execution::Parallel,
        }
    }

    fn validate(&self) -> Result<(), HarnessError> {
        if self.n_values.is_empty() || self.n_values.contains(&0) {
            return Err(HarnessError::Params("n values must be positive".into()));
        }
        if self.c_values.is_empty() || self.c_values.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(HarnessError::Params("c values must be finite and nonnegative".into()));
        }
        if self.policies.is_empty() {
            return Err(HarnessError::Params("at least one prediction policy is needed".into()));
        }
        Ok(())
    }

    /// Trial parameters: `n` cycles fastest, then `c`.
    fn trial_params(&self, trial: usize) -> (usize, f64) {
        let n = self.n_values[trial % self.n_values.len()];
        let c = self.c_values[(trial / self.n_values.len()) % self.c_values.len()];
        (n, c)
    }
}

/// One trial of a sweep.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentRecord {
    pub instance_id: usize,
    pub space: String,
    pub n: usize,
    pub c: f64,
    pub gamma: f64,
    pub delta: f64,
    pub n_equilibria: usize,
    pub poa: f64,
    pub bound_consistency: f64,
    pub checks_passed: bool,
    pub finder: &'static str,
    pub policy: Option<&'static str>,
    pub opt_exact: bool,
    pub runtime_ms: f64,
    pub checks: Vec<CheckReport>,
    #[serde(skip)]
    pub instance: Instance,
    #[serde(skip)]
    pub certificates: Vec<EquilibriumCertificate>,
}

pub const CSV_HEADER: &str = "instance_id,space,n,c,gamma,delta,n_equilibria,poa,bound_consistency,checks_passed";

impl ExperimentRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.instance_id,
            self.space,
            self.n,
            self.c,
            self.gamma,
            self.delta,
            self.n_equilibria,
            self.poa,
            self.bound_consistency,
            self.checks_passed
        )
    }
}

/// Largest `PoA / (1 + 1/c^2)` and `PoA / (1 + 1/c^3)` seen, split by
/// whether the space is strictly convex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
pub struct Envelope {
    pub max_poa: f64,
    pub k2: Option<f64>,
    pub k3: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub records: Vec<ExperimentRecord>,
    pub envelope: Envelope,
}

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.records.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let _ = writeln!(out, "{}", r.csv_row());
        }
        out
    }

    /// Every check report as one JSON object per line.
    pub fn check_log(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            for c in &r.checks {
                let _ = writeln!(
                    out,
                    "{{\"instance_id\":{},\"report\":{}}}",
                    r.instance_id,
                    c.to_json_line()
                );
            }
        }
        out
    }

    pub fn all_passed(&self) -> bool {
        self.records.iter().all(|r| r.checks_passed)
    }
}

fn envelope(records: &[ExperimentRecord], strictly_convex: bool) -> Envelope {
    let mut env = Envelope::default();
    for r in records {
        env.max_poa = env.max_poa.max(r.poa);
        if r.c > 0.0 {
            if strictly_convex {
                let k = r.poa / (1.0 + 1.0 / (r.c * r.c));
                env.k2 = Some(env.k2.map_or(k, |m: f64| m.max(k)));
            } else {
                let k = r.poa / (1.0 + 1.0 / (r.c * r.c * r.c));
                env.k3 = Some(env.k3.map_or(k, |m: f64| m.max(k)));
            }
        }
    }
    env
}

fn evaluate(
    id: usize,
    instance: Instance,
    c: f64,
    finder: FinderChoice,
    policy: Option<&'static str>,
    consistency: bool,
    started: Instant,
) -> Result<ExperimentRecord, HarnessError> {
    let delta = delta_from_c(&instance, c)?;
    let (certs, finder_used) = find_equilibria(&instance, delta, finder)?;
    let extra: Vec<Point> = certs.iter().flat_map(|c| c.reports.iter().cloned()).collect();
    let opt = analysis::optimal_facility_with(&instance, &extra);
    let gamma = analysis::gamma_with_opt(&instance, opt.value)?;
    let poa = analysis::poa_with_opt(&certs, opt.value)?;
    let mut checks = Vec::new();
    if consistency {
        checks.push(analysis::check_consistency_bound(&instance, delta, &certs, opt.value)?);
    }
    for cert in &certs {
        checks.extend(analysis::run_battery(&instance, cert, c, opt.value)?);
    }
    checks.push(analysis::check_rd_approx(&instance, opt.value)?);
    checks.push(analysis::check_pairwise_average(&instance, opt.value));
    let checks_passed = analysis::all_pass(&checks) && poa >= 1.0 - 1e-9;
    Ok(ExperimentRecord {
        instance_id: id,
        space: instance.metric.label(),
        n: instance.n(),
        c,
        gamma,
        delta,
        n_equilibria: certs.len(),
        poa,
        bound_consistency: gamma * (1.0 + 2.0 * c),
        checks_passed,
        finder: finder_used,
        policy,
        opt_exact: opt.exact,
        runtime_ms: started.elapsed().as_secs_f64() * 1e3,
        checks,
        instance,
        certificates: certs,
    })
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ trial as u64)
}

/// Prediction at the computed optimum (moved toward a random agent on odd
/// trials when `perturb > 0`), `delta = c * average prediction cost`.
pub fn run_consistency_sweep(cfg: &SweepConfig) -> Result<SweepResult, HarnessError> {
    cfg.validate()?;
    let records = par::map_range(cfg.exec, cfg.trials, |trial| {
        let started = Instant::now();
        let (n, c) = cfg.trial_params(trial);
        let mut rng = trial_rng(cfg.seed, trial);
        let spec = generate_instance(&cfg.space.generator(n, cfg.side), rng.gen())?;
        let base = spec.instance()?;
        let o = analysis::optimal_facility(&base).facility;
        let pred = if cfg.perturb > 0.0 && trial % 2 == 1 {
            let target = &base.locations[rng.gen_range(0..n)];
            let d = base.metric.distance(&o, target)?;
            base.metric.point_on_path(&o, target, cfg.perturb * d)?
        } else {
            o
        };
        let instance = base.with_prediction(pred)?;
        evaluate(trial, instance, c, cfg.finder, None, true, started)
    });
    let records = records.into_iter().collect::<Result<Vec<_>, _>>()?;
    let envelope = envelope(&records, cfg.space.is_strictly_convex());
    Ok(SweepResult { records, envelope })
}

/// Prediction chosen by an adversarial policy (cycled over trials), full
/// check battery on every certificate.
pub fn run_robustness_sweep(cfg: &SweepConfig) -> Result<SweepResult, HarnessError> {
    cfg.validate()?;
    let records = par::map_range(cfg.exec, cfg.trials, |trial| {
        let started = Instant::now();
        let (n, c) = cfg.trial_params(trial);
        let mut rng = trial_rng(cfg.seed, trial);
        let spec = generate_instance(&cfg.space.generator(n, cfg.side), rng.gen())?;
        let base = spec.instance()?;
        let policy = cfg.policies[trial % cfg.policies.len()];
        let pred = policy.prediction(&base, cfg.side, &mut rng);
        let instance = base.with_prediction(pred)?;
        evaluate(trial, instance, c, cfg.finder, Some(policy.label()), false, started)
    });
    let records = records.into_iter().collect::<Result<Vec<_>, _>>()?;
    let envelope = envelope(&records, cfg.space.is_strictly_convex());
    Ok(SweepResult { records, envelope })
}

/// The one-agent-on-prediction family at `delta = 0` for each `n`, as
/// `(n, PoA)` pairs.
pub fn omega_n_trend(ns: &[usize], r: f64, exec: Execution) -> Result<Vec<(usize, f64)>, HarnessError> {
    par::map_slice(exec, ns, |&n| {
        let inst = generate_instance(&GeneratorParams::AdversarialOmegaN { n, r }, 0)?.instance()?;
        let (certs, _) = find_equilibria(&inst, 0.0, FinderChoice::Auto)?;
        Ok((n, analysis::poa(&inst, &certs)?))
    })
    .into_iter()
    .collect()
}
