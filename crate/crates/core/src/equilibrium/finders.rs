use serde::Serialize;
use thiserror::Error;

use super::{EquilibriumCertificate, Game, IndifferenceSolver};
use crate::instance::Instance;
use crate::mechanism::{HarmonicMean, MechanismError};
use crate::tolerance;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FinderError {
    #[error("{what}: {value} exceeds the limit {limit}")]
    SizeGuard {
        what: &'static str,
        value: usize,
        limit: usize,
    },
    #[error("no equilibrium found after exhausting all {partitions} partitions")]
    EmptyResult { partitions: usize },
    #[error(transparent)]
    Mechanism(#[from] MechanismError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnumerationOptions {
    pub max_agents: usize,
    pub solver: IndifferenceSolver,
    /// Starting points for interior agents, as fractions of `t_j`.
    pub start_fractions: Vec<f64>,
    /// Full product of start fractions up to this many interior agents;
    /// beyond it only the diagonal starts are tried.
    pub product_starts_up_to: usize,
}

impl Default for EnumerationOptions {
    fn default() -> Self {
        Self {
            max_agents: 10,
            solver: IndifferenceSolver::default(),
            start_fractions: vec![0.25, 0.5, 0.75],
            product_starts_up_to: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Prediction,
    Truthful,
    Interior,
}

/// Upper bound on `c_ij` over all reports of `j` on its path:
/// `max_y min(t_i + y, d_ij + t_j - y)`.
fn cross_upper(t_i: f64, t_j: f64, d_ij: f64) -> f64 {
    let crossing = (d_ij + t_j - t_i) / 2.0;
    if crossing <= 0.0 {
        t_i
    } else {
        (t_i + d_ij + t_j) / 2.0
    }
}

/// Upper bound on `kappa_i` given the slots of the other agents.
///
/// The truthful cost of `i` is `(A + sum_U w_k c_k) / (w_own + B + sum_U w_k)`
/// with fixed `A, B` from prediction/truthful agents. Replacing `c_k` by its
/// upper bound makes the ratio monotone in `X = sum_U w_k`, so the extreme
/// is at one end of the weight range.
fn kappa_upper(game: &Game<'_>, i: usize, slots: &[Option<Slot>]) -> f64 {
    let delta = game.delta;
    let t_i = game.t(i);
    let own_w = 1.0 / (t_i + delta);
    let (mut a, mut b, mut x_min, mut x_max, mut cu) = (0.0, 0.0, 0.0, 0.0, 0.0f64);
    let mut zero = false;
    for (k, slot) in slots.iter().enumerate() {
        if k == i {
            continue;
        }
        let t_k = game.t(k);
        let d_ik = game.geom.pairwise[i][k];
        match slot {
            Some(Slot::Truthful) => {
                if delta == 0.0 && t_k == 0.0 {
                    zero = true;
                    cu = cu.max(d_ik);
                    continue;
                }
                let w = 1.0 / (t_k + delta);
                a += w * d_ik;
                b += w;
            }
            Some(Slot::Prediction) => {
                if delta == 0.0 {
                    zero = true;
                    cu = cu.max(t_i);
                    continue;
                }
                let w = 1.0 / delta;
                a += w * t_i;
                b += w;
            }
            Some(Slot::Interior) | None => {
                cu = cu.max(cross_upper(t_i, t_k, d_ik));
                x_min += 1.0 / (t_k + delta);
                x_max += if delta == 0.0 { f64::INFINITY } else { 1.0 / delta };
            }
        }
    }
    let fixed_max = if b > 0.0 { a / b } else { 0.0 };
    let ratio = |x: f64| {
        if x.is_infinite() {
            cu
        } else {
            (a + cu * x) / (own_w + b + x)
        }
    };
    let mut bound = ratio(x_min).max(ratio(x_max));
    if zero || x_max.is_infinite() {
        bound = bound.max(cu).max(fixed_max);
    }
    bound - t_i - delta
}

/// Enumerates every assignment of agents to prediction / truthful /
/// interior reports, solves the indifference system for the interior set and
/// returns every distinct certified equilibrium.
pub fn find_pne_enumerative(
    instance: &Instance,
    delta: f64,
    opts: &EnumerationOptions,
) -> Result<Vec<EquilibriumCertificate>, FinderError> {
    let n = instance.n();
    if n > opts.max_agents {
        return Err(FinderError::SizeGuard {
            what: "agents for enumeration",
            value: n,
            limit: opts.max_agents,
        });
    }
    let game = Game::new(instance, delta)?;
    let eps = game.eps();
    let scale = game.geom.scale;

    // Per-agent admissible slots, pruned by a bound valid for any profile.
    let unknown = vec![None; n];
    let choices: Vec<Vec<Slot>> = (0..n)
        .map(|i| {
            if game.t(i) <= 0.0 || n == 1 || kappa_upper(&game, i, &unknown) < -eps {
                vec![Slot::Truthful]
            } else {
                vec![Slot::Prediction, Slot::Truthful, Slot::Interior]
            }
        })
        .collect();

    let mut found: Vec<EquilibriumCertificate> = Vec::new();
    let push = |cert: EquilibriumCertificate, found: &mut Vec<EquilibriumCertificate>| {
        let tol = tolerance::DISTINCT_REL * scale;
        let dup = found.iter().any(|c| {
            c.y.iter().zip(&cert.y).all(|(a, b)| (a - b).abs() <= tol)
        });
        if !dup {
            found.push(cert);
        }
    };

    let mut counter = vec![0usize; n];
    let mut partitions = 0usize;
    loop {
        partitions += 1;
        let slots: Vec<Option<Slot>> = (0..n).map(|i| Some(choices[i][counter[i]])).collect();
        try_partition(&game, &slots, eps, opts, &mut |c| push(c, &mut found));

        // Advance the mixed-radix counter.
        let mut k = 0;
        while k < n {
            counter[k] += 1;
            if counter[k] < choices[k].len() {
                break;
            }
            counter[k] = 0;
            k += 1;
        }
        if k == n {
            break;
        }
    }
    if found.is_empty() {
        return Err(FinderError::EmptyResult { partitions });
    }
    Ok(found)
}

fn try_partition(
    game: &Game<'_>,
    slots: &[Option<Slot>],
    eps: f64,
    opts: &EnumerationOptions,
    emit: &mut dyn FnMut(EquilibriumCertificate),
) {
    let n = game.n();
    // Agents reporting the prediction or an interior point need kappa >= -eps.
    for i in 0..n {
        if matches!(slots[i], Some(Slot::Prediction | Slot::Interior))
            && kappa_upper(game, i, slots) < -eps
        {
            return;
        }
    }
    let mut y: Vec<f64> = (0..n)
        .map(|i| match slots[i] {
            Some(Slot::Prediction) => 0.0,
            _ => game.t(i),
        })
        .collect();
    let interior: Vec<usize> = (0..n).filter(|&i| slots[i] == Some(Slot::Interior)).collect();
    if interior.is_empty() {
        if let Ok(c) = game.certify(&y, eps) {
            emit(c);
        }
        return;
    }
    // Placeholder interior values; kappa_j ignores y_j, so with a single
    // interior agent its equation only involves fixed agents.
    for &j in &interior {
        y[j] = 0.5 * game.t(j);
    }
    if interior.len() == 1 {
        let j = interior[0];
        let reports = game.reports(&y);
        if game.kappa(j, &y, &reports).abs() > eps {
            return;
        }
        for v in start_values(game, j, opts) {
            y[j] = v;
            if let Ok(c) = game.certify(&y, eps) {
                if c.interior.contains(&j) {
                    emit(c);
                }
            }
        }
        return;
    }
    for start in start_points(game, &interior, opts) {
        if let Some(sol) = opts.solver.solve(game, &y, &interior, &start) {
            let mut cand = y.clone();
            for (&j, &v) in interior.iter().zip(&sol) {
                cand[j] = v;
            }
            if let Ok(c) = game.certify(&cand, eps) {
                if c.interior.len() == interior.len() {
                    emit(c);
                }
            }
        }
    }
}

/// Per-agent start values: fractions of the path length and of the distance
/// to the nearest other agent, which sets the scale of the interior roots when
/// `delta` is small.
fn start_values(game: &Game<'_>, j: usize, opts: &EnumerationOptions) -> Vec<f64> {
    let t = game.t(j);
    let near = (0..game.n())
        .filter(|&k| k != j)
        .map(|k| game.geom.pairwise[j][k])
        .filter(|d| *d > 0.0)
        .fold(f64::INFINITY, f64::min);
    let mut out: Vec<f64> = opts.start_fractions.iter().map(|f| f * t).collect();
    if near.is_finite() && near < t {
        out.extend(opts.start_fractions.iter().map(|f| f * near));
    }
    out
}

fn start_points(game: &Game<'_>, interior: &[usize], opts: &EnumerationOptions) -> Vec<Vec<f64>> {
    let m = interior.len();
    let values: Vec<Vec<f64>> = interior.iter().map(|&j| start_values(game, j, opts)).collect();
    if m <= opts.product_starts_up_to {
        let mut out = vec![Vec::with_capacity(m)];
        for vals in &values {
            out = out
                .into_iter()
                .flat_map(|s| {
                    vals.iter().map(move |v| {
                        let mut s = s.clone();
                        s.push(*v);
                        s
                    })
                })
                .collect();
        }
        out
    } else {
        let width = values.iter().map(Vec::len).max().unwrap_or(0);
        (0..width)
            .map(|k| values.iter().map(|v| v[k.min(v.len() - 1)]).collect())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicsOptions {
    pub max_iters: usize,
    /// Initial move as a fraction of `t_i`.
    pub step: f64,
}

impl Default for DynamicsOptions {
    fn default() -> Self {
        Self {
            max_iters: 10_000,
            step: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Error)]
#[error("best-response dynamics did not converge after {iters} sweeps")]
pub struct NonConvergence {
    pub iters: usize,
    pub y: Vec<f64>,
}

/// Simultaneous damped best-response moves along each agent's path,
/// starting from `start` (truthful when `None`). An agent steps toward the
/// prediction when `kappa_i > eps` and toward its location when
/// `kappa_i < -eps`; the step halves each time the direction flips.
pub fn find_pne_dynamics(
    instance: &Instance,
    delta: f64,
    start: Option<&[f64]>,
    opts: DynamicsOptions,
) -> Result<Result<EquilibriumCertificate, NonConvergence>, FinderError> {
    let game = Game::new(instance, delta)?;
    let n = game.n();
    let eps = game.eps();
    let mut y: Vec<f64> = match start {
        Some(s) if s.len() == n => (0..n).map(|i| s[i].clamp(0.0, game.t(i))).collect(),
        Some(s) => {
            return Err(MechanismError::LengthMismatch {
                what: "start profile vs agents",
                expected: n,
                got: s.len(),
            }
            .into())
        }
        None => (0..n).map(|i| game.t(i)).collect(),
    };
    let mut step = vec![opts.step; n];
    let mut last_dir = vec![0i8; n];
    for iter in 0..opts.max_iters {
        let reports = game.reports(&y);
        let kappa = game.kappas(&y, &reports);
        let mut moved = false;
        for i in 0..n {
            let t = game.t(i);
            if t <= 0.0 {
                continue;
            }
            let dir: i8 = if kappa[i] > eps {
                -1
            } else if kappa[i] < -eps {
                1
            } else {
                0
            };
            if dir == 0 {
                continue;
            }
            if last_dir[i] != 0 && dir != last_dir[i] {
                step[i] *= 0.5;
            }
            last_dir[i] = dir;
            let next = (y[i] + f64::from(dir) * step[i] * t).clamp(0.0, t);
            if next != y[i] {
                y[i] = next;
                moved = true;
            }
        }
        if !moved || step.iter().all(|s| *s < 1e-14) {
            return Ok(match game.certify(&y, eps) {
                Ok(c) => Ok(c),
                Err(_) => Err(NonConvergence { iters: iter + 1, y }),
            });
        }
    }
    Ok(match game.certify(&y, eps) {
        Ok(c) => Ok(c),
        Err(_) => Err(NonConvergence {
            iters: opts.max_iters,
            y,
        }),
    })
}

/// Largest cost reduction agent `i` can get by moving to one of the
/// `grid_k + 1` evenly spaced points of its own path.
pub fn grid_deviation_gain(game: &Game<'_>, i: usize, y: &[f64], grid_k: usize) -> f64 {
    let reports = game.reports(y);
    let current = game.cost_on_path(i, y[i], y, &reports);
    let t = game.t(i);
    let best = (0..=grid_k)
        .map(|g| game.cost_on_path(i, t * g as f64 / grid_k as f64, y, &reports))
        .fold(f64::INFINITY, f64::min);
    (current - best).max(0.0)
}

/// True when no agent gains more than `eps` by a grid deviation.
pub fn is_grid_epsilon_pne(game: &Game<'_>, y: &[f64], grid_k: usize, eps: f64) -> bool {
    (0..game.n()).all(|i| grid_deviation_gain(game, i, y, grid_k) <= eps)
}

/// Every profile on the `(grid_k + 1)^n` grid of path positions at which no
/// agent gains more than `eps` by moving to another grid point of its path.
pub fn brute_force_epsilon_pne(
    instance: &Instance,
    delta: f64,
    grid_k: usize,
    eps: f64,
) -> Result<Vec<Vec<f64>>, FinderError> {
    let n = instance.n();
    if n > 4 {
        return Err(FinderError::SizeGuard {
            what: "agents for grid search",
            value: n,
            limit: 4,
        });
    }
    if grid_k == 0 || grid_k > 64 {
        return Err(FinderError::SizeGuard {
            what: "grid resolution",
            value: grid_k,
            limit: 64,
        });
    }
    let game = Game::new(instance, delta)?;
    let g = grid_k + 1;
    let pos = |j: usize, k: usize| game.t(j) * k as f64 / grid_k as f64;
    // cost[i][j][k]: distance from l_i to agent j's k-th grid report.
    let reports: Vec<Vec<_>> = (0..n)
        .map(|j| (0..g).map(|k| game.report(j, pos(j, k))).collect())
        .collect();
    let cost: Vec<Vec<Vec<f64>>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    (0..g)
                        .map(|k| {
                            instance
                                .metric
                                .distance_unchecked(&instance.locations[i], &reports[j][k])
                        })
                        .collect()
                })
                .collect()
        })
        .collect();

    // ok[i][others] is a bitmask over agent i's grid positions that are
    // within eps of its best grid response to `others`.
    let others_count = g.pow(n as u32 - 1);
    let mut ok: Vec<Vec<u128>> = vec![vec![0; others_count]; n];
    let mut costs = vec![0.0; g];
    for i in 0..n {
        for code in 0..others_count {
            let mut acc = HarmonicMean::new(delta);
            let mut c = code;
            for j in (0..n).filter(|&j| j != i) {
                let k = c % g;
                c /= g;
                acc.push(pos(j, k), cost[i][j][k]);
            }
            let mut best = f64::INFINITY;
            for (k, slot) in costs.iter_mut().enumerate() {
                let mut a = acc;
                a.push(pos(i, k), cost[i][i][k]);
                *slot = a.value();
                best = best.min(*slot);
            }
            let mut mask = 0u128;
            for (k, v) in costs.iter().enumerate() {
                if *v - best <= eps {
                    mask |= 1 << k;
                }
            }
            ok[i][code] = mask;
        }
    }
    let mut out = Vec::new();
    let total = g.pow(n as u32);
    let mut idx = vec![0usize; n];
    for code in 0..total {
        let mut c = code;
        for v in idx.iter_mut() {
            *v = c % g;
            c /= g;
        }
        let pass = (0..n).all(|i| {
            let mut oc = 0;
            let mut mul = 1;
            for j in (0..n).filter(|&j| j != i) {
                oc += idx[j] * mul;
                mul *= g;
            }
            ok[i][oc] >> idx[i] & 1 == 1
        });
        if pass {
            out.push((0..n).map(|j| pos(j, idx[j])).collect());
        }
    }
    Ok(out)
}
