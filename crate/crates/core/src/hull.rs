//! Convex-hull geometry for finite sets of probability vectors under the
//! total-variation metric. Everything reduces to small linear programs.

use microlp::{ComparisonOp, OptimizationDirection, Problem};

use crate::error::{Error, Result};
use crate::measure::tv_raw;

const BREAK_TOL: f64 = 1e-12;

fn lp_err(e: microlp::Error) -> Error {
    Error::Lp(e.to_string())
}

fn check_points(points: &[Vec<f64>]) -> Result<usize> {
    let dim = points
        .first()
        .map(|p| p.len())
        .ok_or_else(|| Error::Precondition("empty point set".into()))?;
    if dim == 0 || points.iter().any(|p| p.len() != dim) {
        return Err(Error::SupportMismatch);
    }
    Ok(dim)
}

/// TV distance from `point` to the convex hull of `points`.
pub fn hull_distance(points: &[Vec<f64>], point: &[f64]) -> Result<f64> {
    let dim = check_points(points)?;
    if point.len() != dim {
        return Err(Error::SupportMismatch);
    }
    if points.len() == 1 {
        return Ok(tv_raw(&points[0], point));
    }
    // min 1/2 sum (s+ + s-)  s.t.  sum_m theta_m m_k - point_k = s+_k - s-_k
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let theta: Vec<_> = points.iter().map(|_| lp.add_var(0.0, (0.0, 1.0))).collect();
    let plus: Vec<_> = (0..dim).map(|_| lp.add_var(0.5, (0.0, f64::INFINITY))).collect();
    let minus: Vec<_> = (0..dim).map(|_| lp.add_var(0.5, (0.0, f64::INFINITY))).collect();
    let simplex: Vec<_> = theta.iter().map(|&v| (v, 1.0)).collect();
    lp.add_constraint(simplex.as_slice(), ComparisonOp::Eq, 1.0);
    for k in 0..dim {
        let mut row: Vec<_> = theta.iter().zip(points).map(|(&v, m)| (v, m[k])).collect();
        row.push((plus[k], -1.0));
        row.push((minus[k], 1.0));
        lp.add_constraint(row.as_slice(), ComparisonOp::Eq, point[k]);
    }
    let sol = lp
        .solve()
        .map_err(lp_err)?
        .into_solution()
        .map_err(|e| Error::Lp(format!("{e:?}")))?;
    Ok(sol.objective().max(0.0))
}

fn breakpoints(points: &[Vec<f64>], k: usize) -> Vec<f64> {
    let mut vals: Vec<f64> = points.iter().map(|p| p[k]).collect();
    vals.sort_by(f64::total_cmp);
    vals.dedup_by(|a, b| (*a - *b).abs() <= BREAK_TOL);
    vals
}

/// Hausdorff distance (TV metric) between a finite point set and its convex
/// hull, i.e. the largest distance from a hull point to the nearest member.
///
/// Two-point supports use the closed form (half the widest gap on the
/// segment). Otherwise the hull is cut into boxes by the coordinate
/// breakpoints of the members; on each box every distance `|y_k - m_k|` is
/// linear and the inner maximin is a linear program. `max_cells` bounds the
/// number of programs solved.
pub fn covering_radius(points: &[Vec<f64>], max_cells: usize) -> Result<f64> {
    let dim = check_points(points)?;
    if points.len() == 1 {
        return Ok(0.0);
    }
    if dim == 2 {
        let bp = breakpoints(points, 0);
        let widest = bp.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        return Ok(widest / 2.0);
    }
    let cuts: Vec<Vec<(f64, f64)>> = (0..dim)
        .map(|k| {
            let bp = breakpoints(points, k);
            if bp.len() == 1 {
                vec![(bp[0], bp[0])]
            } else {
                bp.windows(2).map(|w| (w[0], w[1])).collect()
            }
        })
        .collect();
    // suffix maxima of interval upper ends, for pruning boxes that miss the simplex
    let mut hi_tail = vec![0.0; dim + 1];
    for k in (0..dim).rev() {
        hi_tail[k] = hi_tail[k + 1] + cuts[k].last().map(|c| c.1).unwrap_or(0.0);
    }
    let mut search = CellSearch {
        points,
        cuts: &cuts,
        hi_tail: &hi_tail,
        chosen: Vec::with_capacity(dim),
        solved: 0,
        max_cells,
        best: 0.0,
    };
    search.walk(0.0, 0.0)?;
    Ok(search.best)
}

struct CellSearch<'a> {
    points: &'a [Vec<f64>],
    cuts: &'a [Vec<(f64, f64)>],
    hi_tail: &'a [f64],
    chosen: Vec<(f64, f64)>,
    solved: usize,
    max_cells: usize,
    best: f64,
}

impl CellSearch<'_> {
    fn walk(&mut self, lo_sum: f64, hi_sum: f64) -> Result<()> {
        let k = self.chosen.len();
        if k == self.cuts.len() {
            if hi_sum < 1.0 - BREAK_TOL {
                return Ok(());
            }
            if self.box_bound() <= self.best + BREAK_TOL {
                return Ok(());
            }
            self.solved += 1;
            if self.solved > self.max_cells {
                return Err(Error::Budget(format!(
                    "covering radius needs more than {} cell programs",
                    self.max_cells
                )));
            }
            if let Some(v) = self.solve_cell()? {
                self.best = self.best.max(v);
            }
            return Ok(());
        }
        for c in 0..self.cuts[k].len() {
            let (lo, hi) = self.cuts[k][c];
            if lo_sum + lo > 1.0 + BREAK_TOL {
                break;
            }
            if hi_sum + hi + self.hi_tail[k + 1] < 1.0 - BREAK_TOL {
                continue;
            }
            self.chosen.push((lo, hi));
            self.walk(lo_sum + lo, hi_sum + hi)?;
            self.chosen.pop();
        }
        Ok(())
    }

    /// Upper bound on the nearest-member distance over the current box,
    /// ignoring the simplex: each distance is maximised at a box corner.
    fn box_bound(&self) -> f64 {
        self.points
            .iter()
            .map(|m| {
                0.5 * self
                    .chosen
                    .iter()
                    .zip(m)
                    .map(|(&(lo, hi), &mk)| (lo - mk).abs().max((hi - mk).abs()))
                    .sum::<f64>()
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Maximin over one box intersected with the hull. Returns the exact
    /// nearest-member distance at the maximiser, or `None` when the box
    /// misses the hull. Distance constraints are added lazily: a program over
    /// a subset of members overestimates, and is exact once the true nearest
    /// member at its maximiser is already in the subset.
    fn solve_cell(&self) -> Result<Option<f64>> {
        let points = self.points;
        let centre: Vec<f64> = self.chosen.iter().map(|&(lo, hi)| 0.5 * (lo + hi)).collect();
        let mut active = vec![nearest_index(points, &centre)];
        loop {
            let Some(y) = self.solve_restricted(&active)? else {
                return Ok(None);
            };
            let bound = active
                .iter()
                .map(|&m| tv_raw(&points[m], &y))
                .fold(f64::INFINITY, f64::min);
            let near = nearest_index(points, &y);
            let actual = tv_raw(&points[near], &y);
            if actual >= bound - BREAK_TOL || active.contains(&near) {
                return Ok(Some(actual));
            }
            active.push(near);
        }
    }

    fn solve_restricted(&self, active: &[usize]) -> Result<Option<Vec<f64>>> {
        let points = self.points;
        let dim = self.chosen.len();
        let mut lp = Problem::new(OptimizationDirection::Maximize);
        let theta: Vec<_> = points.iter().map(|_| lp.add_var(0.0, (0.0, 1.0))).collect();
        let t = lp.add_var(1.0, (0.0, f64::INFINITY));
        let simplex: Vec<_> = theta.iter().map(|&v| (v, 1.0)).collect();
        lp.add_constraint(simplex.as_slice(), ComparisonOp::Eq, 1.0);
        for (k, &(lo, hi)) in self.chosen.iter().enumerate() {
            let row: Vec<_> = theta.iter().zip(points).map(|(&v, m)| (v, m[k])).collect();
            if hi - lo <= BREAK_TOL {
                lp.add_constraint(row.as_slice(), ComparisonOp::Eq, lo);
            } else {
                lp.add_constraint(row.as_slice(), ComparisonOp::Ge, lo);
                lp.add_constraint(row.as_slice(), ComparisonOp::Le, hi);
            }
        }
        for target in active.iter().map(|&m| &points[m]) {
            // t <= 1/2 sum_k s_k (y_k - target_k), y = sum_m theta_m m
            let signs: Vec<f64> = (0..dim)
                .map(|k| {
                    if target[k] <= self.chosen[k].0 + BREAK_TOL {
                        0.5
                    } else {
                        -0.5
                    }
                })
                .collect();
            let mut row: Vec<_> = theta
                .iter()
                .zip(points)
                .map(|(&v, m)| (v, -(0..dim).map(|k| signs[k] * m[k]).sum::<f64>()))
                .collect();
            row.push((t, 1.0));
            let rhs = -(0..dim).map(|k| signs[k] * target[k]).sum::<f64>();
            lp.add_constraint(row.as_slice(), ComparisonOp::Le, rhs);
        }
        let sol = match lp.solve() {
            Ok(outcome) => outcome.into_solution().map_err(|e| Error::Lp(format!("{e:?}")))?,
            Err(microlp::Error::Infeasible) => return Ok(None),
            Err(e) => return Err(lp_err(e)),
        };
        Ok(Some(
            (0..dim)
                .map(|k| theta.iter().zip(points).map(|(&v, m)| sol.var_value(v) * m[k]).sum())
                .collect(),
        ))
    }
}

fn nearest_index(points: &[Vec<f64>], y: &[f64]) -> usize {
    let mut best = (0, f64::INFINITY);
    for (k, m) in points.iter().enumerate() {
        let d = tv_raw(m, y);
        if d < best.1 {
            best = (k, d);
        }
    }
    best.0
}

/// Maximum total mass that can be moved from `supplies` to `demands` along
/// the allowed edges (`allowed[s]` lists the demand nodes of supply `s`).
pub fn max_transport(supplies: &[f64], allowed: &[Vec<usize>], demands: &[f64]) -> Result<f64> {
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let mut by_demand: Vec<Vec<microlp::Variable>> = vec![Vec::new(); demands.len()];
    for (s, targets) in allowed.iter().enumerate() {
        let mut row = Vec::with_capacity(targets.len());
        for &d in targets {
            if d >= demands.len() {
                return Err(Error::IndexOutOfRange {
                    what: "action",
                    index: d,
                    len: demands.len(),
                });
            }
            let v = lp.add_var(1.0, (0.0, f64::INFINITY));
            row.push((v, 1.0));
            by_demand[d].push(v);
        }
        if !row.is_empty() {
            lp.add_constraint(row.as_slice(), ComparisonOp::Le, supplies[s]);
        }
    }
    for (d, vars) in by_demand.iter().enumerate() {
        if !vars.is_empty() {
            let row: Vec<_> = vars.iter().map(|&v| (v, 1.0)).collect();
            lp.add_constraint(row.as_slice(), ComparisonOp::Le, demands[d]);
        }
    }
    let sol = lp
        .solve()
        .map_err(lp_err)?
        .into_solution()
        .map_err(|e| Error::Lp(format!("{e:?}")))?;
    Ok(sol.objective())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn grid(n: usize) -> Vec<Vec<f64>> {
        (0..=n)
            .map(|j| vec![j as f64 / n as f64, 1.0 - j as f64 / n as f64])
            .collect()
    }

    /// Brute-force oracle: dense sampling of the hull by random convex weights
    /// and a fine lattice on the simplex.
    fn sampled_radius(points: &[Vec<f64>], steps: usize) -> f64 {
        let dim = points[0].len();
        assert_eq!(dim, 3);
        let mut best: f64 = 0.0;
        for a in 0..=steps {
            for b in 0..=(steps - a) {
                let y = vec![
                    a as f64 / steps as f64,
                    b as f64 / steps as f64,
                    (steps - a - b) as f64 / steps as f64,
                ];
                if hull_distance(points, &y).unwrap() <= 1e-9 {
                    best = best.max(tv_raw(&points[nearest_index(points, &y)], &y));
                }
            }
        }
        best
    }

    #[test]
    fn segment_closed_form() {
        for n in [1, 2, 4, 8, 16] {
            assert_eq!(covering_radius(&grid(n), 1000).unwrap(), 0.5 / n as f64);
        }
        assert_eq!(covering_radius(&[vec![0.3, 0.7]], 10).unwrap(), 0.0);
    }

    #[test]
    fn lp_route_agrees_on_segment() {
        // Embed the segment in three coordinates so the cell route runs.
        for n in [1, 2, 4] {
            let pts: Vec<Vec<f64>> = grid(n).into_iter().map(|p| vec![p[0], p[1], 0.0]).collect();
            let r = covering_radius(&pts, 10_000).unwrap();
            assert_abs_diff_eq!(r, 0.5 / n as f64, epsilon = 1e-12);
        }
    }

    #[test]
    fn triangle_vertices() {
        let pts = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        let r = covering_radius(&pts, 10_000).unwrap();
        let oracle = sampled_radius(&pts, 60);
        assert_abs_diff_eq!(r, 2.0 / 3.0, epsilon = 1e-9);
        assert!(r >= oracle - 1e-12);
        assert!(r - oracle < 0.02);
    }

    #[test]
    fn lattice_in_triangle() {
        let n = 2;
        let mut pts = Vec::new();
        for a in 0..=n {
            for b in 0..=(n - a) {
                pts.push(vec![a as f64 / 2.0, b as f64 / 2.0, (n - a - b) as f64 / 2.0]);
            }
        }
        let r = covering_radius(&pts, 10_000).unwrap();
        let oracle = sampled_radius(&pts, 48);
        assert!(r >= oracle - 1e-12);
        assert!(r - oracle < 0.03, "r={r} oracle={oracle}");
    }

    #[test]
    fn hull_distance_basics() {
        let seg = grid(1);
        assert_abs_diff_eq!(hull_distance(&seg, &[0.3, 0.7]).unwrap(), 0.0, epsilon = 1e-12);
        let pts = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]];
        assert_abs_diff_eq!(hull_distance(&pts, &[0.0, 0.0, 1.0]).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(hull_distance(&pts, &[0.5, 0.25, 0.25]).unwrap(), 0.25, epsilon = 1e-12);
    }

    #[test]
    fn transport_examples() {
        // two cells of weight 1/2, both may use either action
        let v = max_transport(&[0.5, 0.5], &[vec![0, 1], vec![0, 1]], &[0.25, 0.75]).unwrap();
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-12);
        let v = max_transport(&[0.5, 0.5], &[vec![0], vec![0]], &[0.25, 0.75]).unwrap();
        assert_abs_diff_eq!(v, 0.25, epsilon = 1e-12);
    }
}
