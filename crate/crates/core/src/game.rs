//! Finite games with private information: types, shocks, constrained pure
//! strategies, expected payoffs and pure Nash equilibria.
//!
//! The joint space is laid out as `(z_1, x_1, z_2, x_2, ...)`: player `i`
//! observes coordinate `2i` (type) and is paid according to `2i + 1` (shock).

use std::collections::HashSet;

use serde::Serialize;

use crate::correspondence::{ActionSet, Correspondence};
use crate::error::{Error, Result};
use crate::measure::{Coordinate, Distribution, FiniteProbSpace, IndependenceReport, Labels, ProductSpace, labels};
use crate::selection::{CellOdometer, Selection, cell_values, selection_count};

pub const DEFAULT_EPS: f64 = 1e-9;
pub const DEFAULT_BUDGET: usize = 1_000_000;
pub const DEFAULT_MAX_ITERATIONS: usize = 1_000;

/// Type atoms with their sigma cells. Distinct cells may share a label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeSpec {
    pub atoms: Vec<String>,
    pub cell_of: Vec<usize>,
    pub cell_labels: Vec<String>,
}

impl TypeSpec {
    /// Every type in its own cell, labelled by the type.
    pub fn finest(atoms: Vec<String>) -> Self {
        Self {
            cell_of: (0..atoms.len()).collect(),
            cell_labels: atoms.clone(),
            atoms,
        }
    }

    /// Types sharing a label share a cell.
    pub fn from_labels(atoms: Vec<String>, labels: &[String]) -> Result<Self> {
        let uniform = vec![1.0 / atoms.len().max(1) as f64; atoms.len()];
        let space = FiniteProbSpace::with_cell_labels(atoms, uniform, labels)?;
        Ok(Self::of(&space))
    }

    pub fn of(space: &FiniteProbSpace) -> Self {
        Self {
            atoms: space.atoms().to_vec(),
            cell_of: space.cell_assignment().to_vec(),
            cell_labels: space.cell_labels().to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn space(&self, weights: Vec<f64>) -> Result<FiniteProbSpace> {
        FiniteProbSpace::from_parts(
            self.atoms.clone(),
            weights,
            self.cell_of.clone(),
            self.cell_labels.clone(),
        )
    }
}

/// Input description of one player.
#[derive(Debug, Clone, PartialEq)]
pub struct PlayerSpec {
    pub name: String,
    pub types: TypeSpec,
    pub shocks: Vec<String>,
    pub actions: Vec<String>,
    /// `D_i(z)` for each type.
    pub constraint: Vec<ActionSet>,
    /// `u_i(a, x)` at `flat(a) * |X_i| + x`, action profiles in row-major
    /// order with the last player varying fastest.
    pub payoff: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Player {
    name: String,
    types: FiniteProbSpace,
    shocks: Labels,
    actions: Labels,
    constraint: Correspondence,
    payoff: Vec<f64>,
}

impl Player {
    pub fn name(&self) -> &str {
        &self.name
    }

    /// Type atoms and sigma cells, weighted by the type marginal.
    pub fn types(&self) -> &FiniteProbSpace {
        &self.types
    }

    pub fn shocks(&self) -> &Labels {
        &self.shocks
    }

    pub fn actions(&self) -> &Labels {
        &self.actions
    }

    pub fn constraint(&self) -> &Correspondence {
        &self.constraint
    }

    pub fn payoff(&self) -> &[f64] {
        &self.payoff
    }

    fn to_spec(&self) -> PlayerSpec {
        PlayerSpec {
            name: self.name.clone(),
            types: TypeSpec::of(&self.types),
            shocks: self.shocks.to_vec(),
            actions: self.actions.to_vec(),
            constraint: self.constraint.values().to_vec(),
            payoff: self.payoff.clone(),
        }
    }
}

/// One pure strategy per player.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StrategyProfile {
    selections: Vec<Selection>,
}

impl StrategyProfile {
    pub fn new(selections: Vec<Selection>) -> Self {
        Self { selections }
    }

    pub fn selections(&self) -> &[Selection] {
        &self.selections
    }

    pub fn selection(&self, i: usize) -> &Selection {
        &self.selections[i]
    }

    pub fn len(&self) -> usize {
        self.selections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selections.is_empty()
    }

    pub fn with_selection(&self, i: usize, selection: Selection) -> Self {
        let mut selections = self.selections.clone();
        selections[i] = selection;
        Self { selections }
    }
}

/// Checks a profile against per-player type spaces and constraints.
pub(crate) fn check_profile(profile: &StrategyProfile, players: &[(&FiniteProbSpace, &Correspondence)]) -> Result<()> {
    if profile.len() != players.len() {
        return Err(Error::InvalidProfile(format!(
            "{} strategies for {} players",
            profile.len(),
            players.len()
        )));
    }
    for (i, (space, d)) in players.iter().enumerate() {
        let g = profile.selection(i);
        if g.actions() != d.codomain() {
            return Err(Error::InvalidProfile(format!("player {i}: action labels differ")));
        }
        if !g.is_measurable(space) {
            return Err(Error::InvalidProfile(format!(
                "player {i}: strategy is not constant on type cells"
            )));
        }
        if !g.is_selection_of(d, space) {
            let t = (0..space.len())
                .find(|&t| space.weight(t) > 0.0 && !d.value(t).contains(&g.action_at(t)))
                .unwrap_or(0);
            return Err(Error::InvalidProfile(format!(
                "player {i}: action at type {} violates the constraint",
                space.atoms()[t]
            )));
        }
    }
    Ok(())
}

/// Odometer over every profile: players in order, cells in order, last
/// digit fastest.
pub(crate) struct ProfileOdometer {
    inner: CellOdometer,
    splits: Vec<usize>,
    spaces: Vec<(FiniteProbSpace, Labels)>,
}

impl ProfileOdometer {
    pub(crate) fn new(per_player: Vec<(FiniteProbSpace, Labels, Vec<ActionSet>)>) -> Self {
        let mut all = Vec::new();
        let mut splits = Vec::new();
        let mut spaces = Vec::new();
        for (space, actions, values) in per_player {
            splits.push(values.len());
            all.extend(values);
            spaces.push((space, actions));
        }
        Self {
            inner: CellOdometer::new(&all),
            splits,
            spaces,
        }
    }
}

impl Iterator for ProfileOdometer {
    type Item = StrategyProfile;

    fn next(&mut self) -> Option<StrategyProfile> {
        let digits = self.inner.next()?;
        let mut rest = &digits[..];
        let mut selections = Vec::with_capacity(self.splits.len());
        for ((space, actions), &n) in self.spaces.iter().zip(&self.splits) {
            let (head, tail) = rest.split_at(n);
            rest = tail;
            selections.push(Selection::from_cells(space, actions.clone(), head).expect("cell count matches"));
        }
        Some(StrategyProfile { selections })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NashReport {
    pub is_nash: bool,
    /// Largest payoff gain from a unilateral deviation, over all players.
    pub max_gain: f64,
    pub gains: Vec<f64>,
    /// Player attaining `max_gain` when positive; lowest index on ties.
    pub worst_player: Option<usize>,
    /// Whether the whole deviation space was searched. Always true: payoffs
    /// are additive over type cells, so the best deviation is found cell by
    /// cell.
    pub complete: bool,
    #[serde(skip)]
    pub best_responses: Vec<Selection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NashConfig {
    pub budget: usize,
    pub eps: f64,
    pub max_iterations: usize,
}

impl Default for NashConfig {
    fn default() -> Self {
        Self {
            budget: DEFAULT_BUDGET,
            eps: DEFAULT_EPS,
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchStrategy {
    Exhaustive,
    BestResponse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BestResponseStop {
    Converged,
    Cycle,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NashSearch {
    pub profile: Option<StrategyProfile>,
    pub strategy: SearchStrategy,
    /// True when every profile was scanned, so absence is conclusive.
    pub complete: bool,
    pub profiles_checked: u64,
    pub stop: Option<BestResponseStop>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlayerAudit {
    /// Largest atom of the type marginal; zero would mean atomless.
    pub atomicity: f64,
    /// Others' types against own (type, shock).
    pub independence: IndependenceReport,
    /// Finite action sets are discrete, so payoffs are continuous in actions.
    pub continuity: bool,
    /// `E[h_i]` with `h_i(ω) = max_a |u_i(a, χ_i(ω))|`.
    pub integrable_bound_mean: f64,
    pub integrable_bound_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GameAudit {
    pub players: Vec<PlayerAudit>,
    pub atomless: bool,
    pub independent: bool,
    pub continuous: bool,
    pub uniformly_integrable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrivateInfoGame {
    players: Vec<Player>,
    joint: ProductSpace,
    /// Number of joint action profiles.
    profile_size: usize,
}

/// Factor labels of the joint space for the given players.
pub fn joint_factors(specs: &[PlayerSpec]) -> Vec<Labels> {
    specs
        .iter()
        .flat_map(|p| [labels(&p.types.atoms), labels(&p.shocks)])
        .collect()
}

impl PrivateInfoGame {
    pub fn new(specs: Vec<PlayerSpec>, joint: ProductSpace) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::InvalidSpace("a game needs at least one player".into()));
        }
        if joint.factors() != joint_factors(&specs).as_slice() {
            return Err(Error::InvalidSpace(
                "joint factors must be (types, shocks) of each player in order".into(),
            ));
        }
        let profile_size = specs
            .iter()
            .try_fold(1usize, |acc, p| acc.checked_mul(p.actions.len()))
            .ok_or_else(|| Error::Payoff("action profile space too large".into()))?;
        let mut players = Vec::with_capacity(specs.len());
        for (i, spec) in specs.into_iter().enumerate() {
            if spec.actions.is_empty() {
                return Err(Error::InvalidSpace(format!("player {}: no actions", spec.name)));
            }
            let expected = profile_size * spec.shocks.len();
            if spec.payoff.len() != expected {
                return Err(Error::Payoff(format!(
                    "player {}: {} payoff entries, expected {expected}",
                    spec.name,
                    spec.payoff.len()
                )));
            }
            if spec.payoff.iter().any(|u| !u.is_finite()) {
                return Err(Error::Payoff(format!("player {}: non-finite payoff", spec.name)));
            }
            let marginal = joint.marginal(Coordinate::Type.index(i))?;
            let types = spec.types.space(marginal.mass().to_vec())?;
            let actions = labels(&spec.actions);
            let constraint = Correspondence::new(spec.types.atoms.clone(), actions.clone(), spec.constraint)?
                .with_partition(types.cell_assignment().to_vec())?;
            constraint.require_nonempty()?;
            cell_values(&constraint, &types)?;
            players.push(Player {
                name: spec.name,
                types,
                shocks: labels(&spec.shocks),
                actions,
                constraint,
                payoff: spec.payoff,
            });
        }
        Ok(Self {
            players,
            joint,
            profile_size,
        })
    }

    pub fn players(&self) -> &[Player] {
        &self.players
    }

    pub fn player(&self, i: usize) -> &Player {
        &self.players[i]
    }

    pub fn num_players(&self) -> usize {
        self.players.len()
    }

    pub fn joint(&self) -> &ProductSpace {
        &self.joint
    }

    pub fn specs(&self) -> Vec<PlayerSpec> {
        self.players.iter().map(Player::to_spec).collect()
    }

    fn flat_actions(&self, actions: &[usize]) -> usize {
        actions
            .iter()
            .zip(&self.players)
            .fold(0, |acc, (&a, p)| acc * p.actions.len() + a)
    }

    /// `u_i(a, x)` for an action profile `a`.
    pub fn payoff(&self, i: usize, actions: &[usize], shock: usize) -> f64 {
        let p = &self.players[i];
        p.payoff[self.flat_actions(actions) * p.shocks.len() + shock]
    }

    pub fn validate_profile(&self, profile: &StrategyProfile) -> Result<()> {
        let players: Vec<_> = self.players.iter().map(|p| (&p.types, &p.constraint)).collect();
        check_profile(profile, &players)
    }

    /// Pushforward of each type marginal under the profile.
    pub fn induced_distributions(&self, profile: &StrategyProfile) -> Result<Vec<Distribution>> {
        self.validate_profile(profile)?;
        self.players
            .iter()
            .zip(profile.selections())
            .map(|(p, g)| g.pushforward(&p.types))
            .collect()
    }

    /// `U_i(g) = Σ_ω μ(ω) u_i(g_1(τ_1 ω), ..., g_n(τ_n ω), χ_i(ω))`.
    pub fn expected_payoff(&self, profile: &StrategyProfile, i: usize) -> Result<f64> {
        self.validate_profile(profile)?;
        if i >= self.players.len() {
            return Err(Error::IndexOutOfRange {
                what: "player",
                index: i,
                len: self.players.len(),
            });
        }
        let mut actions = vec![0; self.players.len()];
        let mut total = 0.0;
        for (omega, w) in self.joint.atoms() {
            if w == 0.0 {
                continue;
            }
            for (j, a) in actions.iter_mut().enumerate() {
                *a = profile.selection(j).action_at(omega[Coordinate::Type.index(j)]);
            }
            total += w * self.payoff(i, &actions, omega[Coordinate::Shock.index(i)]);
        }
        Ok(total)
    }

    /// `V[z][a]`: contribution of type `z` to `U_i` when it plays `a` and the
    /// others follow the profile. `U_i` is the sum of `V[z][g_i(z)]`.
    fn deviation_values(&self, profile: &StrategyProfile, i: usize) -> Vec<Vec<f64>> {
        let p = &self.players[i];
        let mut values = vec![vec![0.0; p.actions.len()]; p.types.len()];
        let mut actions = vec![0; self.players.len()];
        for (omega, w) in self.joint.atoms() {
            if w == 0.0 {
                continue;
            }
            for (j, a) in actions.iter_mut().enumerate() {
                *a = profile.selection(j).action_at(omega[Coordinate::Type.index(j)]);
            }
            let z = omega[Coordinate::Type.index(i)];
            let x = omega[Coordinate::Shock.index(i)];
            for (a, v) in values[z].iter_mut().enumerate() {
                actions[i] = a;
                *v += w * self.payoff(i, &actions, x);
            }
        }
        values
    }

    /// Best deviation of player `i` and its gain. Ties keep the current
    /// action, then go to the lowest action index.
    fn best_response(&self, profile: &StrategyProfile, i: usize) -> (Selection, f64) {
        let p = &self.players[i];
        let values = self.deviation_values(profile, i);
        let current = profile.selection(i);
        let cells = cell_values(&p.constraint, &p.types).expect("validated at construction");
        let mut per_cell = Vec::with_capacity(cells.len());
        let mut gain = 0.0;
        for (c, allowed) in cells.iter().enumerate() {
            let members = p.types.cell_members(c);
            let cell_value = |a: usize| members.iter().map(|&z| values[z][a]).sum::<f64>();
            let now = current.action_at(members[0]);
            let now_value = cell_value(now);
            let mut best = (now, now_value);
            for &a in allowed {
                let v = cell_value(a);
                if v > best.1 {
                    best = (a, v);
                }
            }
            per_cell.push(best.0);
            gain += best.1 - now_value;
        }
        let selection = Selection::from_cells(&p.types, p.actions.clone(), &per_cell).expect("cell count matches");
        (selection, gain)
    }

    /// Checks every unilateral deviation over the full selection space.
    pub fn is_nash(&self, profile: &StrategyProfile, eps: f64) -> Result<NashReport> {
        self.validate_profile(profile)?;
        let mut gains = Vec::with_capacity(self.players.len());
        let mut best_responses = Vec::with_capacity(self.players.len());
        for i in 0..self.players.len() {
            let (g, gain) = self.best_response(profile, i);
            gains.push(gain);
            best_responses.push(g);
        }
        let max_gain = gains.iter().copied().fold(0.0, f64::max);
        let worst_player = if max_gain > 0.0 {
            gains.iter().position(|&g| g == max_gain)
        } else {
            None
        };
        Ok(NashReport {
            is_nash: max_gain <= eps,
            max_gain,
            gains,
            worst_player,
            complete: true,
            best_responses,
        })
    }

    /// `Π_i |meas(Z_i, D_i)|`, saturating.
    pub fn profile_count(&self) -> u128 {
        self.players.iter().fold(1u128, |acc, p| {
            let cells = cell_values(&p.constraint, &p.types).expect("validated at construction");
            acc.saturating_mul(selection_count(&cells))
        })
    }

    /// Every pure profile in lexicographic order (player 1's first cell
    /// varies slowest).
    pub fn profiles(&self) -> impl Iterator<Item = StrategyProfile> + use<> {
        ProfileOdometer::new(
            self.players
                .iter()
                .map(|p| {
                    let cells = cell_values(&p.constraint, &p.types).expect("validated at construction");
                    (p.types.clone(), p.actions.clone(), cells)
                })
                .collect(),
        )
    }

    /// The profile choosing the lowest allowed action in every cell.
    pub fn first_profile(&self) -> StrategyProfile {
        self.profiles().next().expect("constraints are nonempty")
    }

    pub fn find_nash(&self, config: &NashConfig) -> NashSearch {
        if self.profile_count() <= config.budget as u128 {
            let mut checked = 0u64;
            for profile in self.profiles() {
                checked += 1;
                if self.is_nash(&profile, config.eps).is_ok_and(|r| r.is_nash) {
                    return NashSearch {
                        profile: Some(profile),
                        strategy: SearchStrategy::Exhaustive,
                        complete: true,
                        profiles_checked: checked,
                        stop: None,
                    };
                }
            }
            return NashSearch {
                profile: None,
                strategy: SearchStrategy::Exhaustive,
                complete: true,
                profiles_checked: checked,
                stop: None,
            };
        }
        self.best_response_search(config)
    }

    /// Round-robin best responses from the first profile; stops at a profile
    /// no player improves, at the first revisited profile, or at the
    /// iteration limit.
    pub fn best_response_search(&self, config: &NashConfig) -> NashSearch {
        let mut profile = self.first_profile();
        let mut visited = HashSet::from([profile.clone()]);
        let mut checked = 1u64;
        let mut stop = BestResponseStop::IterationLimit;
        'rounds: for _ in 0..config.max_iterations {
            let mut changed = false;
            for i in 0..self.players.len() {
                let (g, gain) = self.best_response(&profile, i);
                if gain > config.eps {
                    profile = profile.with_selection(i, g);
                    checked += 1;
                    changed = true;
                    if !visited.insert(profile.clone()) {
                        stop = BestResponseStop::Cycle;
                        break 'rounds;
                    }
                }
            }
            if !changed {
                stop = BestResponseStop::Converged;
                break;
            }
        }
        let confirmed =
            stop == BestResponseStop::Converged && self.is_nash(&profile, config.eps).is_ok_and(|r| r.is_nash);
        NashSearch {
            profile: confirmed.then_some(profile),
            strategy: SearchStrategy::BestResponse,
            complete: false,
            profiles_checked: checked,
            stop: Some(stop),
        }
    }

    /// Per-player report on the hypotheses of the pure-equilibrium existence
    /// result: atomless types, independence of others' types from own
    /// (type, shock), continuity, and an integrable payoff bound.
    pub fn audit(&self, tol: f64) -> Result<GameAudit> {
        let n = self.players.len();
        let mut players = Vec::with_capacity(n);
        for i in 0..n {
            let p = &self.players[i];
            let mut grouping: Vec<Vec<usize>> = (0..n)
                .filter(|&j| j != i)
                .map(|j| vec![Coordinate::Type.index(j)])
                .collect();
            grouping.push(vec![Coordinate::Type.index(i), Coordinate::Shock.index(i)]);
            let independence = self.joint.is_mutually_independent(&grouping, tol)?;
            let shock_marginal = self.joint.marginal(Coordinate::Shock.index(i))?;
            let bound: Vec<f64> = (0..p.shocks.len())
                .map(|x| {
                    (0..self.profile_size)
                        .map(|a| p.payoff[a * p.shocks.len() + x].abs())
                        .fold(0.0, f64::max)
                })
                .collect();
            let integrable_bound_mean = bound.iter().zip(shock_marginal.mass()).map(|(h, w)| h * w).sum();
            let integrable_bound_max = bound.iter().copied().fold(0.0, f64::max);
            players.push(PlayerAudit {
                atomicity: p.types.atomicity_level(),
                independence,
                continuity: true,
                integrable_bound_mean,
                integrable_bound_max,
            });
        }
        Ok(GameAudit {
            atomless: players.iter().all(|p| p.atomicity == 0.0),
            independent: players.iter().all(|p| p.independence.independent),
            continuous: true,
            uniformly_integrable: players.iter().all(|p| p.integrable_bound_max.is_finite()),
            players,
        })
    }

    /// Splits every type into `k` equally likely sub-types, each in its own
    /// sub-cell; constraints and payoffs are inherited. The joint weight of
    /// each state is spread uniformly over the `k^n` sub-type combinations.
    pub fn refine_types(&self, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::ZeroRefinement);
        }
        if k == 1 {
            return Ok(self.clone());
        }
        let mut specs = Vec::with_capacity(self.players.len());
        for p in &self.players {
            let refined = p.types.refine(k)?;
            let spec = p.to_spec();
            specs.push(PlayerSpec {
                types: TypeSpec::of(&refined),
                constraint: (0..refined.len()).map(|t| spec.constraint[t / k].clone()).collect(),
                ..spec
            });
        }
        let factors = joint_factors(&specs);
        let coords: Vec<usize> = (0..self.players.len()).map(|j| Coordinate::Type.index(j)).collect();
        let entries = spread_joint(&self.joint, &coords, k);
        let joint = ProductSpace::new(factors, &entries)?;
        Self::new(specs, joint)
    }
}

/// Joint entries after splitting each listed coordinate's labels into `k`
/// sub-labels (`c * k + j`), spreading each state's weight uniformly over the
/// `k^m` combinations.
pub(crate) fn spread_joint(joint: &ProductSpace, coords: &[usize], k: usize) -> Vec<(Vec<usize>, f64)> {
    let m = coords.len();
    let share = 1.0 / (k as f64).powi(m as i32);
    let mut entries = Vec::new();
    for (omega, w) in joint.atoms() {
        if w == 0.0 {
            continue;
        }
        let mut digits = vec![0usize; m];
        loop {
            let mut refined = omega.clone();
            for (&c, d) in coords.iter().zip(&digits) {
                refined[c] = omega[c] * k + d;
            }
            entries.push((refined, w * share));
            let mut pos = m;
            while pos > 0 {
                pos -= 1;
                digits[pos] += 1;
                if digits[pos] < k {
                    break;
                }
                digits[pos] = 0;
            }
            if digits.iter().all(|&d| d == 0) {
                break;
            }
        }
    }
    entries
}
