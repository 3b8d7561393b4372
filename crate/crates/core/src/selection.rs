//! Measurable selections of correspondences on finite probability spaces and
//! the sets of distributions they induce.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::correspondence::{ActionSet, Correspondence, MetricGrid, is_cell_constant};
use crate::error::{Error, Result};
use crate::hull;
use crate::measure::{Distribution, FiniteProbSpace, Labels, tv_raw};

/// Default cap on the number of selections enumerated exactly.
pub const DEFAULT_BUDGET: usize = 1_000_000;
/// Default seed for sampled distribution sets.
pub const DEFAULT_SEED: u64 = 0;
/// Most random selections drawn when a distribution set is sampled.
pub const SAMPLE_CAP: usize = 10_000;
/// Cap on cell programs solved by [`convexification_gap`].
pub const GAP_CELL_CAP: usize = 200_000;

const DEDUP_SCALE: f64 = 1e12;
const IMPROVE_TOL: f64 = 1e-15;

/// A map from atoms to actions, constant on sigma cells.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Selection {
    actions: Labels,
    choice: Vec<usize>,
}

impl Selection {
    pub fn new(actions: Labels, choice: Vec<usize>) -> Result<Self> {
        if let Some(&a) = choice.iter().find(|&&a| a >= actions.len()) {
            return Err(Error::IndexOutOfRange {
                what: "action",
                index: a,
                len: actions.len(),
            });
        }
        Ok(Self { actions, choice })
    }

    /// Builds the atom-level map from one action per cell.
    pub fn from_cells(space: &FiniteProbSpace, actions: Labels, per_cell: &[usize]) -> Result<Self> {
        if per_cell.len() != space.num_cells() {
            return Err(Error::Precondition("one action per cell required".into()));
        }
        let choice = space.cell_assignment().iter().map(|&c| per_cell[c]).collect();
        Self::new(actions, choice)
    }

    pub fn actions(&self) -> &Labels {
        &self.actions
    }

    pub fn choice(&self) -> &[usize] {
        &self.choice
    }

    pub fn action_at(&self, atom: usize) -> usize {
        self.choice[atom]
    }

    pub fn pushforward(&self, space: &FiniteProbSpace) -> Result<Distribution> {
        if self.choice.len() != space.len() {
            return Err(Error::Precondition("selection and space differ in size".into()));
        }
        space.pushforward(&self.actions, |t| Some(self.choice[t]))
    }

    pub fn is_measurable(&self, space: &FiniteProbSpace) -> bool {
        self.choice.len() == space.len()
            && (0..space.len()).all(|t| {
                let first = space.cell_members(space.cell_of(t))[0];
                self.choice[first] == self.choice[t]
            })
    }

    /// Measurable and `choice(t) ∈ F(t)` on every atom of positive weight;
    /// null atoms are unconstrained.
    pub fn is_selection_of(&self, f: &Correspondence, space: &FiniteProbSpace) -> bool {
        f.len() == space.len()
            && self.is_measurable(space)
            && (0..space.len()).all(|t| space.weight(t) == 0.0 || f.value(t).contains(&self.choice[t]))
    }

    /// Atoms of zero weight whose choice lies outside `F`.
    pub fn unconstrained_atoms(&self, f: &Correspondence, space: &FiniteProbSpace) -> Vec<usize> {
        (0..space.len())
            .filter(|&t| space.weight(t) == 0.0 && !f.value(t).contains(&self.choice[t]))
            .collect()
    }
}

/// Value of `f` on each sigma cell of `space`.
pub fn cell_values(f: &Correspondence, space: &FiniteProbSpace) -> Result<Vec<ActionSet>> {
    if f.len() != space.len() {
        return Err(Error::DomainMismatch);
    }
    if !is_cell_constant(space.cell_assignment(), f.values()) {
        return Err(Error::NotMeasurable);
    }
    let mut out = vec![ActionSet::new(); space.num_cells()];
    let mut seen = vec![false; space.num_cells()];
    for t in 0..space.len() {
        let c = space.cell_of(t);
        if !seen[c] {
            seen[c] = true;
            out[c] = f.value(t).clone();
        }
    }
    Ok(out)
}

/// Number of selections, saturating at `u128::MAX`.
pub fn selection_count(values: &[ActionSet]) -> u128 {
    values.iter().fold(1u128, |acc, v| acc.saturating_mul(v.len() as u128))
}

/// Odometer over one action per cell, lowest indices first, last cell
/// varying fastest.
#[derive(Debug, Clone)]
pub struct CellOdometer {
    options: Vec<Vec<usize>>,
    digits: Vec<usize>,
    done: bool,
}

impl CellOdometer {
    pub fn new(values: &[ActionSet]) -> Self {
        let options: Vec<Vec<usize>> = values.iter().map(|v| v.iter().copied().collect()).collect();
        let done = options.iter().any(|o| o.is_empty());
        Self {
            digits: vec![0; options.len()],
            options,
            done,
        }
    }
}

impl Iterator for CellOdometer {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let current = self.digits.iter().zip(&self.options).map(|(&d, o)| o[d]).collect();
        let mut k = self.digits.len();
        loop {
            if k == 0 {
                self.done = true;
                break;
            }
            k -= 1;
            self.digits[k] += 1;
            if self.digits[k] < self.options[k].len() {
                break;
            }
            self.digits[k] = 0;
        }
        Some(current)
    }
}

/// Streams every measurable selection of `f`: one action per sigma cell, so
/// the stream has `Π |F(cell)|` items and is empty iff some value is empty.
pub fn enumerate_selections<'a>(
    f: &Correspondence,
    space: &'a FiniteProbSpace,
) -> Result<impl Iterator<Item = Selection> + 'a> {
    let values = cell_values(f, space)?;
    let actions = f.codomain().clone();
    Ok(CellOdometer::new(&values).map(move |per_cell| Selection {
        actions: actions.clone(),
        choice: space.cell_assignment().iter().map(|&c| per_cell[c]).collect(),
    }))
}

/// The distributions induced by selections of a correspondence.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionSet {
    support: Labels,
    members: Vec<Distribution>,
    exact: bool,
}

fn dedup_key(mass: &[f64]) -> Vec<i64> {
    mass.iter().map(|m| (m * DEDUP_SCALE).round() as i64).collect()
}

impl DistributionSet {
    /// Deduplicates and orders members (lexicographically by mass, larger
    /// mass on earlier actions first).
    pub fn from_members(support: Labels, members: Vec<Vec<f64>>, exact: bool) -> Self {
        let mut seen = HashSet::new();
        let mut kept: Vec<Vec<f64>> = members.into_iter().filter(|m| seen.insert(dedup_key(m))).collect();
        kept.sort_by(|a, b| {
            b.iter()
                .zip(a.iter())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        Self {
            members: kept
                .into_iter()
                .map(|m| Distribution::from_raw(support.clone(), m))
                .collect(),
            support,
            exact,
        }
    }

    pub fn support(&self) -> &Labels {
        &self.support
    }

    pub fn members(&self) -> &[Distribution] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    fn mass_vectors(&self) -> Vec<Vec<f64>> {
        self.members.iter().map(|m| m.mass().to_vec()).collect()
    }

    /// Index of a member within `tol` (tv) of `target`, lowest index first.
    pub fn position_within(&self, target: &Distribution, tol: f64) -> Option<usize> {
        self.members.iter().position(|m| tv_raw(m.mass(), target.mass()) <= tol)
    }

    pub fn contains(&self, target: &Distribution, tol: f64) -> bool {
        self.position_within(target, tol).is_some()
    }

    /// Member closest to `target` in tv; ties go to the lowest index.
    pub fn nearest(&self, target: &Distribution) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (k, m) in self.members.iter().enumerate() {
            let d = tv_raw(m.mass(), target.mass());
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((k, d));
            }
        }
        best
    }
}

/// Distribution set `{λ f⁻¹ : f a measurable selection of F}`.
///
/// The set is built as a Minkowski sum over cells, deduplicating after every
/// cell, which yields the same set as pushing forward every selection. It is
/// exact whenever no intermediate set exceeds `budget` members (always the
/// case when `Π |F(cell)| <= budget`). Otherwise it is sampled with `seed`
/// and topped up with the greedy extreme selections.
pub fn distribution_set(
    f: &Correspondence,
    space: &FiniteProbSpace,
    budget: usize,
    seed: u64,
) -> Result<DistributionSet> {
    let values = cell_values(f, space)?;
    let support = f.codomain().clone();
    let dim = support.len();
    if values.iter().any(|v| v.is_empty()) {
        return Ok(DistributionSet::from_members(support, Vec::new(), true));
    }
    let weights = space.cell_weights();
    if let Some(members) = minkowski_members(&values, &weights, dim, budget) {
        return Ok(DistributionSet::from_members(support, members, true));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let options: Vec<Vec<usize>> = values.iter().map(|v| v.iter().copied().collect()).collect();
    let induce = |per_cell: &dyn Fn(usize) -> usize| {
        let mut m = vec![0.0; dim];
        for (c, w) in weights.iter().enumerate() {
            m[per_cell(c)] += w;
        }
        m
    };
    let mut members = Vec::new();
    for preferred in 0..dim {
        members.push(induce(&|c| {
            if values[c].contains(&preferred) {
                preferred
            } else {
                options[c][0]
            }
        }));
    }
    members.push(induce(&|c| *options[c].last().unwrap()));
    for _ in 0..budget.min(SAMPLE_CAP) {
        let picks: Vec<usize> = options.iter().map(|o| o[rng.gen_range(0..o.len())]).collect();
        members.push(induce(&|c| picks[c]));
    }
    Ok(DistributionSet::from_members(support, members, false))
}

fn minkowski_members(values: &[ActionSet], weights: &[f64], dim: usize, budget: usize) -> Option<Vec<Vec<f64>>> {
    let mut frontier: Vec<Vec<f64>> = vec![vec![0.0; dim]];
    for (c, v) in values.iter().enumerate() {
        if weights[c] == 0.0 {
            continue;
        }
        let mut seen = HashSet::new();
        let mut next = Vec::with_capacity(frontier.len() * v.len());
        for m in &frontier {
            for &a in v {
                let mut grown = m.clone();
                grown[a] += weights[c];
                if seen.insert(dedup_key(&grown)) {
                    next.push(grown);
                }
            }
        }
        if next.len() > budget {
            return None;
        }
        frontier = next;
    }
    Some(frontier)
}

/// Hausdorff distance (tv) between an exact distribution set and its convex
/// hull; zero iff the set is already convex.
pub fn convexification_gap(set: &DistributionSet) -> Result<f64> {
    if !set.exact {
        return Err(Error::SampledSet);
    }
    if set.members.len() <= 1 {
        return Ok(0.0);
    }
    hull::covering_radius(&set.mass_vectors(), GAP_CELL_CAP)
}

/// Finite exact sets are compact; nonemptiness is the checkable part.
pub fn is_compact_closed(set: &DistributionSet) -> Result<bool> {
    if !set.exact {
        return Err(Error::SampledSet);
    }
    Ok(!set.members.is_empty())
}

/// TV distance from `target` to the convex hull of the distribution set of
/// `f`. The hull is the sum over cells of `weight(cell) * conv F(cell)`, so
/// the distance is one minus the largest mass transportable from cells to
/// actions under the target's capacities.
pub fn hull_distance(f: &Correspondence, space: &FiniteProbSpace, target: &Distribution) -> Result<f64> {
    if f.codomain() != target.support() {
        return Err(Error::SupportMismatch);
    }
    let values = cell_values(f, space)?;
    let allowed: Vec<Vec<usize>> = values.iter().map(|v| v.iter().copied().collect()).collect();
    let moved = hull::max_transport(&space.cell_weights(), &allowed, target.mass())?;
    Ok((1.0 - moved).max(0.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Purification {
    pub selection: Selection,
    pub distribution: Distribution,
    /// TV distance between the induced distribution and the target.
    pub error: f64,
    /// `max(tol, w_max / 2 * |Y|)` with `w_max` the heaviest sigma cell.
    pub bound: f64,
}

/// Realizes a point of the convex hull of `D_F` by a pure selection.
///
/// Cells are filled greedily in order of decreasing weight, each taking the
/// allowed action with the largest remaining deficit. Then single-cell
/// reassignments and exchange chains among equal-weight cells are applied
/// while they strictly reduce the error. On uniform spaces the chains make
/// the result optimal, so grid-representable targets are hit exactly.
pub fn purify(f: &Correspondence, space: &FiniteProbSpace, target: &Distribution, tol: f64) -> Result<Purification> {
    if f.codomain() != target.support() {
        return Err(Error::SupportMismatch);
    }
    let values = cell_values(f, space)?;
    if let Some(c) = values.iter().position(|v| v.is_empty()) {
        return Err(Error::EmptyValue(space.cell_label(c).to_string()));
    }
    let outside = hull_distance(f, space, target)?;
    if outside > tol {
        return Err(Error::TargetOutsideHull { distance: outside });
    }
    let weights = space.cell_weights();
    let goal = target.mass();
    let dim = goal.len();

    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
    let mut assigned = vec![0.0; dim];
    let mut per_cell = vec![0usize; values.len()];
    for &c in &order {
        let mut best = None;
        for &a in &values[c] {
            let deficit = goal[a] - assigned[a];
            if best.is_none_or(|(_, d)| deficit > d) {
                best = Some((a, deficit));
            }
        }
        let a = best.expect("nonempty value").0;
        per_cell[c] = a;
        assigned[a] += weights[c];
    }

    loop {
        if improve_single(&values, &weights, goal, &mut per_cell, &mut assigned) {
            continue;
        }
        if improve_chain(&values, &weights, goal, &mut per_cell, &mut assigned) {
            continue;
        }
        break;
    }

    let selection = Selection::from_cells(space, f.codomain().clone(), &per_cell)?;
    let distribution = selection.pushforward(space)?;
    let error = tv_raw(distribution.mass(), goal);
    let bound = tol.max(space.max_cell_weight() / 2.0 * dim as f64);
    Ok(Purification {
        selection,
        distribution,
        error,
        bound,
    })
}

fn improve_single(
    values: &[ActionSet],
    weights: &[f64],
    goal: &[f64],
    per_cell: &mut [usize],
    assigned: &mut [f64],
) -> bool {
    let current = tv_raw(assigned, goal);
    let mut best: Option<(usize, usize, f64)> = None;
    for (c, v) in values.iter().enumerate() {
        if weights[c] == 0.0 {
            continue;
        }
        let from = per_cell[c];
        for &to in v.iter().filter(|&&a| a != from) {
            assigned[from] -= weights[c];
            assigned[to] += weights[c];
            let err = tv_raw(assigned, goal);
            assigned[from] += weights[c];
            assigned[to] -= weights[c];
            if err < current - IMPROVE_TOL && best.is_none_or(|(_, _, e)| err < e) {
                best = Some((c, to, err));
            }
        }
    }
    match best {
        Some((c, to, _)) => {
            assigned[per_cell[c]] -= weights[c];
            assigned[to] += weights[c];
            per_cell[c] = to;
            true
        }
        None => false,
    }
}

/// Moves one unit of weight `w` along a path of actions `u -> ... -> v`,
/// each step reassigning a distinct cell of weight `w`. Intermediate actions
/// keep their totals, so only the endpoints change.
fn improve_chain(
    values: &[ActionSet],
    weights: &[f64],
    goal: &[f64],
    per_cell: &mut [usize],
    assigned: &mut [f64],
) -> bool {
    let dim = goal.len();
    let current = tv_raw(assigned, goal);
    let mut classes: Vec<f64> = weights.iter().copied().filter(|w| *w > 0.0).collect();
    classes.sort_by(|a, b| b.total_cmp(a));
    classes.dedup();
    for w in classes {
        let in_class: Vec<usize> = (0..values.len()).filter(|&c| weights[c] == w).collect();
        for source in 0..dim {
            if assigned[source] - goal[source] <= IMPROVE_TOL {
                continue;
            }
            // BFS over actions; parent[v] = (previous action, cell moved)
            let mut parent: Vec<Option<(usize, usize)>> = vec![None; dim];
            let mut visited = vec![false; dim];
            visited[source] = true;
            let mut queue = std::collections::VecDeque::from([source]);
            while let Some(u) = queue.pop_front() {
                for &c in &in_class {
                    if per_cell[c] != u {
                        continue;
                    }
                    for &v in &values[c] {
                        if visited[v] {
                            continue;
                        }
                        visited[v] = true;
                        parent[v] = Some((u, c));
                        queue.push_back(v);
                        if goal[v] - assigned[v] > IMPROVE_TOL {
                            assigned[source] -= w;
                            assigned[v] += w;
                            let err = tv_raw(assigned, goal);
                            if err < current - IMPROVE_TOL {
                                let mut at = v;
                                while let Some((prev, cell)) = parent[at] {
                                    per_cell[cell] = at;
                                    at = prev;
                                }
                                return true;
                            }
                            assigned[source] += w;
                            assigned[v] -= w;
                        }
                    }
                }
            }
        }
    }
    false
}

/// Finite upper-semicontinuity check for `x ↦ D_{F_x}` over a parameter grid:
/// for every pair of parameters closer than `delta`, each member of
/// `D_{F_x'}` must lie within `eps` (tv) of some member of `D_{F_x}`.
/// `family[x]` is `F(·, x)`; `dominating` is the bound `H` with
/// `F(t, x) ⊆ H(t)`.
pub fn dmap_usc_check(
    params: &MetricGrid,
    family: &[Correspondence],
    dominating: Option<&Correspondence>,
    space: &FiniteProbSpace,
    delta: f64,
    eps: f64,
    budget: usize,
) -> Result<bool> {
    let sets = dmap_sets(params, family, dominating, space, delta, budget)?;
    Ok(params
        .close_pairs(delta)
        .all(|(x, near)| absorbed(&sets[near], &sets[x], eps)))
}

/// The same check restricted to pairs whose base point is `at`.
#[allow(clippy::too_many_arguments)]
pub fn dmap_usc_check_at(
    params: &MetricGrid,
    family: &[Correspondence],
    dominating: Option<&Correspondence>,
    space: &FiniteProbSpace,
    at: usize,
    delta: f64,
    eps: f64,
    budget: usize,
) -> Result<bool> {
    if at >= params.len() {
        return Err(Error::IndexOutOfRange {
            what: "parameter",
            index: at,
            len: params.len(),
        });
    }
    let sets = dmap_sets(params, family, dominating, space, delta, budget)?;
    Ok(params
        .close_pairs(delta)
        .filter(|&(x, _)| x == at)
        .all(|(x, near)| absorbed(&sets[near], &sets[x], eps)))
}

fn absorbed(inner: &DistributionSet, outer: &DistributionSet, eps: f64) -> bool {
    inner
        .members
        .iter()
        .all(|m| outer.members.iter().any(|n| tv_raw(m.mass(), n.mass()) <= eps))
}

fn dmap_sets(
    params: &MetricGrid,
    family: &[Correspondence],
    dominating: Option<&Correspondence>,
    space: &FiniteProbSpace,
    delta: f64,
    budget: usize,
) -> Result<Vec<DistributionSet>> {
    if delta.is_nan() || delta <= 0.0 {
        return Err(Error::NonPositiveDelta(delta));
    }
    let h = dominating.ok_or(Error::MissingDominating)?;
    if family.len() != params.len() {
        return Err(Error::Precondition("one correspondence per parameter required".into()));
    }
    for (x, f) in family.iter().enumerate() {
        if f.len() != h.len() {
            return Err(Error::DomainMismatch);
        }
        if let Some(t) = (0..f.len()).find(|&t| !f.value(t).is_subset(h.value(t))) {
            return Err(Error::NotDominated { param: x, point: t });
        }
    }
    family
        .iter()
        .map(|f| distribution_set(f, space, budget, DEFAULT_SEED))
        .collect()
}
