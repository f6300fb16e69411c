use nalgebra::{DMatrix, DVector};

use super::Game;
use crate::metric::Point;
use crate::tolerance;

/// Solves the indifference system `kappa_j(y) = 0` for the interior agents
/// `j` of a fixed partition.
///
/// `kappa_j` does not depend on `y_j` itself, so a plain per-agent
/// relaxation has no handle on its own equation. The iteration instead takes
/// damped Newton steps `y <- y - a * J^{-1} kappa(y)` with a finite-difference
/// Jacobian, halving `a` until the residual shrinks, and falls back to a
/// Levenberg-Marquardt step when `J` is singular.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndifferenceSolver {
    pub damping: f64,
    pub max_iters: usize,
    /// Convergence once `max |kappa| <= tol * scale`.
    pub tol: f64,
}

impl Default for IndifferenceSolver {
    fn default() -> Self {
        Self {
            damping: 0.5,
            max_iters: 10_000,
            tol: tolerance::SOLVER_REL,
        }
    }
}

struct System<'g, 'a> {
    game: &'g Game<'a>,
    interior: &'g [usize],
    y: Vec<f64>,
    reports: Vec<Point>,
}

impl System<'_, '_> {
    fn set(&mut self, values: &[f64]) {
        for (&j, &v) in self.interior.iter().zip(values) {
            self.y[j] = v;
            self.reports[j] = self.game.report(j, v);
        }
    }

    fn residual(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.interior.len(),
            self.interior
                .iter()
                .map(|&j| self.game.kappa(j, &self.y, &self.reports)),
        )
    }
}

impl IndifferenceSolver {
    /// Returns interior values for `interior` (in order) solving the system,
    /// with every other agent held at `y_fixed`. `None` when the iteration
    /// stalls or the root leaves the open path interval.
    pub fn solve(
        &self,
        game: &Game<'_>,
        y_fixed: &[f64],
        interior: &[usize],
        start: &[f64],
    ) -> Option<Vec<f64>> {
        let m = interior.len();
        let scale = game.geom.scale;
        let target = self.tol * scale;
        let lo: Vec<f64> = interior.iter().map(|_| 0.0).collect();
        let hi: Vec<f64> = interior.iter().map(|&j| game.t(j)).collect();
        let mut sys = System {
            game,
            interior,
            y: y_fixed.to_vec(),
            reports: game.reports(y_fixed),
        };
        let mut x: Vec<f64> = start.to_vec();
        sys.set(&x);
        let mut f = sys.residual();
        let mut fnorm = f.amax();
        let mut iters = 0;
        while fnorm > target {
            iters += 1;
            if iters > self.max_iters {
                return None;
            }
            // Finite-difference Jacobian.
            let mut jac = DMatrix::<f64>::zeros(m, m);
            for k in 0..m {
                let h = 1e-7 * hi[k].max(1e-3 * scale);
                let mut xp = x.clone();
                let step = if xp[k] + h <= hi[k] { h } else { -h };
                xp[k] += step;
                sys.set(&xp);
                let fp = sys.residual();
                for r in 0..m {
                    jac[(r, k)] = (fp[r] - f[r]) / step;
                }
            }
            sys.set(&x);
            let dir = match jac.clone().lu().solve(&(-&f)) {
                Some(d) if d.iter().all(|v| v.is_finite()) => d,
                _ => {
                    let jt = jac.transpose();
                    let jtj = &jt * &jac;
                    let lambda = 1e-8 * jtj.amax().max(1e-300);
                    let reg = jtj + DMatrix::<f64>::identity(m, m) * lambda;
                    reg.lu().solve(&(-(&jt * &f)))?
                }
            };
            let mut alpha = 1.0;
            let mut accepted = false;
            while alpha > 1e-6 {
                let cand: Vec<f64> = (0..m)
                    .map(|k| (x[k] + alpha * dir[k]).clamp(lo[k], hi[k]))
                    .collect();
                sys.set(&cand);
                let fc = sys.residual();
                let nc = fc.amax();
                if nc < fnorm {
                    x = cand;
                    f = fc;
                    fnorm = nc;
                    accepted = true;
                    break;
                }
                alpha *= self.damping;
            }
            if !accepted {
                return None;
            }
        }
        let interior_ok = x
            .iter()
            .zip(&hi)
            .all(|(v, h)| *v > 1e-9 * h && *v < h * (1.0 - 1e-9));
        interior_ok.then_some(x)
    }
}
