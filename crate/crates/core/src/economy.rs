//! Abstract economies with private information.
//!
//! Each player has types `Z_i` with sigma cells, finite actions `A_i`, a
//! measurable constraint `D_i`, and three parameterized correspondences
//! given as predicates: the feasibility correspondence `α_i`, the preference
//! correspondence `P_i`, and an optional selector `G_i` of `α_i ∩ P_i`. All
//! three read the type only through its cell, and the distribution profile
//! `λ = (λ_1, ..., λ_n)` through linear functionals.
//!
//! Equilibria are searched through the switching correspondence
//! `F_i = α_i` on `U_i = {α_i ∩ P_i = ∅}` and `α_i ∩ P_i` (or `G_i`) off it,
//! and the map `Φ(λ) = Π_i D_{F_i(·, λ)}`.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::correspondence::{ActionSet, Correspondence};
use crate::dsl::{Assignment, Closedness, CorrespondenceSpec};
use crate::error::{Error, Result};
use crate::game::{ProfileOdometer, StrategyProfile, TypeSpec, check_profile, spread_joint};
use crate::measure::{Distribution, FiniteProbSpace, Labels, ProductSpace, labels, tv_raw};
use crate::selection::{self, DistributionSet, cell_values, enumerate_selections, purify};

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_BUDGET: usize = 1_000_000;
pub const DEFAULT_MAX_ITERATIONS: usize = 1_000;
pub const DEFAULT_MESH: f64 = 1.0 / 16.0;
pub const DEFAULT_GRID_CAP: usize = 20_000;
/// Most iterative-search starting points.
pub const MAX_STARTS: usize = 256;
/// Violations kept verbatim in audit reports; the rest are only counted.
pub const VIOLATION_SAMPLE: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Which {
    Alpha,
    Preference,
    Selector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EconomyPlayerSpec {
    pub name: String,
    pub types: TypeSpec,
    pub actions: Vec<String>,
    pub constraint: Vec<ActionSet>,
    pub alpha: CorrespondenceSpec,
    pub preference: CorrespondenceSpec,
    pub selector: Option<CorrespondenceSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EconomyPlayer {
    name: String,
    types: FiniteProbSpace,
    actions: Labels,
    constraint: Correspondence,
    alpha: CorrespondenceSpec,
    preference: CorrespondenceSpec,
    selector: Option<CorrespondenceSpec>,
}

impl EconomyPlayer {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn types(&self) -> &FiniteProbSpace {
        &self.types
    }

    pub fn actions(&self) -> &Labels {
        &self.actions
    }

    pub fn constraint(&self) -> &Correspondence {
        &self.constraint
    }

    pub fn spec(&self, which: Which) -> Option<&CorrespondenceSpec> {
        match which {
            Which::Alpha => Some(&self.alpha),
            Which::Preference => Some(&self.preference),
            Which::Selector => self.selector.as_ref(),
        }
    }

    fn to_spec(&self) -> EconomyPlayerSpec {
        EconomyPlayerSpec {
            name: self.name.clone(),
            types: TypeSpec::of(&self.types),
            actions: self.actions.to_vec(),
            constraint: self.constraint.values().to_vec(),
            alpha: self.alpha.clone(),
            preference: self.preference.clone(),
            selector: self.selector.clone(),
        }
    }
}

/// Per-type record of the two equilibrium conditions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypeCheck {
    pub type_index: usize,
    pub weight: f64,
    pub action: usize,
    /// Condition 1: the chosen action is feasible.
    pub in_alpha: bool,
    /// Condition 2: no feasible action is preferred.
    pub intersection_empty: bool,
}

impl TypeCheck {
    /// Null types are unconstrained.
    pub fn passes(&self) -> bool {
        self.weight == 0.0 || (self.in_alpha && self.intersection_empty)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub player: usize,
    pub type_index: usize,
    /// 1: action outside `α_i`; 2: `α_i ∩ P_i` nonempty.
    pub condition: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verification {
    pub lambdas: Vec<Distribution>,
    pub checks: Vec<Vec<TypeCheck>>,
    pub violations: Vec<Violation>,
}

impl Verification {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumCertificate {
    pub profile: StrategyProfile,
    /// Type marginals pushed forward by the profile.
    pub lambdas: Vec<Distribution>,
    pub checks: Vec<Vec<TypeCheck>>,
}

impl EquilibriumCertificate {
    /// Recomputes the induced distributions and both conditions from the
    /// profile alone.
    pub fn reverify(&self, economy: &EconomyInstance) -> Result<bool> {
        let fresh = economy.verify(&self.profile)?;
        Ok(fresh.is_valid()
            && fresh.lambdas.len() == self.lambdas.len()
            && fresh
                .lambdas
                .iter()
                .zip(&self.lambdas)
                .all(|(a, b)| tv_raw(a.mass(), b.mass()) <= DEFAULT_TOL)
            && self.checks.iter().flatten().all(TypeCheck::passes))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyChoice {
    Auto,
    Exhaustive,
    Iterative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EconomyConfig {
    pub budget: usize,
    pub tol: f64,
    pub seed: u64,
    pub max_iterations: usize,
    pub strategy: StrategyChoice,
}

impl Default for EconomyConfig {
    fn default() -> Self {
        Self {
            budget: DEFAULT_BUDGET,
            tol: DEFAULT_TOL,
            seed: selection::DEFAULT_SEED,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            strategy: StrategyChoice::Auto,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EquilibriumStrategy {
    Exhaustive,
    Iterative,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPoint {
    pub lambdas: Vec<Distribution>,
    /// Whether the extracted profile passed verification.
    pub certified: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumSearch {
    pub certificate: Option<EquilibriumCertificate>,
    pub strategy: EquilibriumStrategy,
    /// Every candidate was examined with exact sets, so absence is
    /// conclusive.
    pub complete: bool,
    pub candidates_examined: u64,
    pub fixed_points: Vec<FixedPoint>,
}

/// A finite set of distribution profiles `λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaGrid {
    pub points: Vec<Vec<Distribution>>,
    pub kind: GridKind,
    /// False when the grid was cut at its cap.
    pub complete: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    /// Products of the exact distribution sets of the constraints.
    Exact,
    /// Mesh points of the convex hulls of those sets.
    Hull,
}

/// Distance between profiles: the largest per-player tv distance.
pub fn profile_distance(a: &[Distribution], b: &[Distribution]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| tv_raw(x.mass(), y.mass()))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct UiMember {
    pub type_index: usize,
    pub grid_index: usize,
    /// Every grid point within `delta` is also a member for this type.
    pub open: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UiReport {
    pub members: Vec<UiMember>,
    pub grid_points: usize,
    pub all_open: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuditConfig {
    pub budget: usize,
    pub mesh: f64,
    /// Neighbourhood radius on the grid; defaults to 1.5 mesh.
    pub delta: Option<f64>,
    pub grid_cap: usize,
    pub seed: u64,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            budget: DEFAULT_BUDGET,
            mesh: DEFAULT_MESH,
            delta: None,
            grid_cap: DEFAULT_GRID_CAP,
            seed: selection::DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridInfo {
    pub kind: GridKind,
    pub points: usize,
    pub complete: bool,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtomlessAudit {
    pub atomicity: Vec<f64>,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintAudit {
    pub measurable: bool,
    pub nonempty: bool,
    /// Number of members of each distribution set (or sample).
    pub distribution_set_sizes: Vec<usize>,
    pub exact: bool,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrespondenceAudit {
    pub closedness: Vec<Closedness>,
    /// (cell, grid point) pairs with an empty value.
    pub empty_points: usize,
    /// Grid pairs closer than delta where the nearby value is not contained
    /// in the base value.
    pub usc_violations: usize,
    pub nonempty: bool,
    pub usc: bool,
    pub holds: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ExclusionViolation {
    pub profile_index: u64,
    pub player: usize,
    pub type_index: usize,
    pub action: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExclusionAudit {
    pub against: Which,
    pub profiles_scanned: u64,
    pub complete: bool,
    pub violations: u64,
    pub examples: Vec<ExclusionViolation>,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OpennessAudit {
    pub members: Vec<usize>,
    pub open_members: Vec<usize>,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectorAudit {
    /// Grid points where some selector action lies outside `α_i ∩ P_i`.
    pub inclusion_violations: usize,
    pub inclusion: bool,
    pub nonempty: bool,
    pub usc: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EconomyAudit {
    pub grid: GridInfo,
    pub atomless: AtomlessAudit,
    pub constraint: ConstraintAudit,
    pub alpha: CorrespondenceAudit,
    pub preference: CorrespondenceAudit,
    pub exclusion: ExclusionAudit,
    pub openness: OpennessAudit,
    pub selector: Option<SelectorAudit>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EconomyInstance {
    players: Vec<EconomyPlayer>,
    joint: ProductSpace,
    use_selector: bool,
}

impl EconomyInstance {
    pub fn new(specs: Vec<EconomyPlayerSpec>, joint: ProductSpace) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::InvalidSpace("an economy needs at least one player".into()));
        }
        let factors: Vec<Labels> = specs.iter().map(|p| labels(&p.types.atoms)).collect();
        if joint.factors() != factors.as_slice() {
            return Err(Error::InvalidSpace(
                "joint factors must be the players' types in order".into(),
            ));
        }
        let mut players = Vec::with_capacity(specs.len());
        for (i, spec) in specs.into_iter().enumerate() {
            if spec.actions.is_empty() {
                return Err(Error::InvalidSpace(format!("player {}: no actions", spec.name)));
            }
            let n = spec.actions.len();
            for (which, s) in [
                (Which::Alpha, Some(&spec.alpha)),
                (Which::Preference, Some(&spec.preference)),
                (Which::Selector, spec.selector.as_ref()),
            ] {
                if let Some(s) = s
                    && s.predicates().len() != n
                {
                    return Err(Error::Precondition(format!(
                        "player {}: {:?} needs one predicate per action",
                        spec.name, which
                    )));
                }
            }
            let marginal = joint.marginal(i)?;
            let types = spec.types.space(marginal.mass().to_vec())?;
            let actions = labels(&spec.actions);
            let constraint = Correspondence::new(spec.types.atoms.clone(), actions.clone(), spec.constraint)?
                .with_partition(types.cell_assignment().to_vec())?;
            constraint.require_nonempty()?;
            cell_values(&constraint, &types)?;
            players.push(EconomyPlayer {
                name: spec.name,
                types,
                actions,
                constraint,
                alpha: spec.alpha,
                preference: spec.preference,
                selector: spec.selector,
            });
        }
        Ok(Self {
            players,
            joint,
            use_selector: false,
        })
    }

    /// Switches to using the selectors off `U_i`; every player needs one.
    pub fn with_selector(mut self, on: bool) -> Result<Self> {
        if on && self.players.iter().any(|p| p.selector.is_none()) {
            return Err(Error::Precondition(
                "selector mode needs a selector for every player".into(),
            ));
        }
        self.use_selector = on;
        Ok(self)
    }

    pub fn uses_selector(&self) -> bool {
        self.use_selector
    }

    pub fn players(&self) -> &[EconomyPlayer] {
        &self.players
    }

    pub fn player(&self, i: usize) -> &EconomyPlayer {
        &self.players[i]
    }

    pub fn num_players(&self) -> usize {
        self.players.len()
    }

    pub fn joint(&self) -> &ProductSpace {
        &self.joint
    }

    pub fn specs(&self) -> Vec<EconomyPlayerSpec> {
        self.players.iter().map(EconomyPlayer::to_spec).collect()
    }

    fn check_player(&self, i: usize) -> Result<()> {
        if i >= self.players.len() {
            return Err(Error::IndexOutOfRange {
                what: "player",
                index: i,
                len: self.players.len(),
            });
        }
        Ok(())
    }

    fn check_lambdas(&self, lambdas: &[Distribution]) -> Result<()> {
        if lambdas.len() != self.players.len() {
            return Err(Error::Precondition(format!(
                "{} distributions for {} players",
                lambdas.len(),
                self.players.len()
            )));
        }
        if lambdas
            .iter()
            .zip(&self.players)
            .any(|(l, p)| l.support() != &p.actions)
        {
            return Err(Error::SupportMismatch);
        }
        Ok(())
    }

    fn eval_cell(&self, which: Which, i: usize, cell: usize, lambdas: &[Distribution]) -> Result<ActionSet> {
        let p = &self.players[i];
        let spec = p
            .spec(which)
            .ok_or_else(|| Error::Precondition(format!("player {} has no selector", p.name)))?;
        Ok(spec.eval(&Assignment {
            zcell: p.types.cell_label(cell),
            lambdas,
        }))
    }

    /// `α_i`, `P_i` or `G_i` at `(z, λ)`.
    pub fn eval_correspondence(&self, which: Which, i: usize, z: usize, lambdas: &[Distribution]) -> Result<ActionSet> {
        self.check_player(i)?;
        self.check_lambdas(lambdas)?;
        let p = &self.players[i];
        if z >= p.types.len() {
            return Err(Error::IndexOutOfRange {
                what: "type",
                index: z,
                len: p.types.len(),
            });
        }
        self.eval_cell(which, i, p.types.cell_of(z), lambdas)
    }

    /// Whether `(z, λ)` lies in `U_i`, where `α_i ∩ P_i` is empty.
    pub fn in_u(&self, i: usize, z: usize, lambdas: &[Distribution]) -> Result<bool> {
        let alpha = self.eval_correspondence(Which::Alpha, i, z, lambdas)?;
        let pref = self.eval_correspondence(Which::Preference, i, z, lambdas)?;
        Ok(alpha.is_disjoint(&pref))
    }

    fn switch_cell(&self, i: usize, cell: usize, lambdas: &[Distribution]) -> Result<ActionSet> {
        let alpha = self.eval_cell(Which::Alpha, i, cell, lambdas)?;
        let pref = self.eval_cell(Which::Preference, i, cell, lambdas)?;
        if alpha.is_disjoint(&pref) {
            return Ok(alpha);
        }
        if self.use_selector {
            self.eval_cell(Which::Selector, i, cell, lambdas)
        } else {
            Ok(alpha.intersection(&pref).copied().collect())
        }
    }

    /// `F_i(z, λ)`: `α_i` on `U_i`, otherwise `α_i ∩ P_i` (or `G_i` in
    /// selector mode). An empty value means the instance breaks the
    /// nonemptiness hypotheses and is reported as an error.
    pub fn switch_f(&self, i: usize, z: usize, lambdas: &[Distribution]) -> Result<ActionSet> {
        self.check_player(i)?;
        self.check_lambdas(lambdas)?;
        let p = &self.players[i];
        if z >= p.types.len() {
            return Err(Error::IndexOutOfRange {
                what: "type",
                index: z,
                len: p.types.len(),
            });
        }
        let value = self.switch_cell(i, p.types.cell_of(z), lambdas)?;
        if value.is_empty() {
            return Err(Error::Hypothesis(format!(
                "switching correspondence of player {} is empty at type {}",
                p.name,
                p.types.atoms()[z]
            )));
        }
        Ok(value)
    }

    /// `F_i(·, λ) ∩ D_i` as a correspondence on types. Null cells carry `D_i`
    /// since they do not affect distributions.
    pub fn switch_correspondence(&self, i: usize, lambdas: &[Distribution]) -> Result<Correspondence> {
        self.check_player(i)?;
        self.check_lambdas(lambdas)?;
        let p = &self.players[i];
        let weights = p.types.cell_weights();
        let mut per_cell = Vec::with_capacity(weights.len());
        for (c, w) in weights.iter().enumerate() {
            let d = p.constraint.value(p.types.cell_members(c)[0]);
            if *w == 0.0 {
                per_cell.push(d.clone());
            } else {
                per_cell.push(self.switch_cell(i, c, lambdas)?.intersection(d).copied().collect());
            }
        }
        Correspondence::new(
            p.types.atoms().to_vec(),
            p.actions.clone(),
            (0..p.types.len())
                .map(|t| per_cell[p.types.cell_of(t)].clone())
                .collect(),
        )
    }

    /// Distribution set of `D_i` under the type marginal.
    pub fn build_dd(&self, i: usize, budget: usize, seed: u64) -> Result<DistributionSet> {
        self.check_player(i)?;
        let p = &self.players[i];
        selection::distribution_set(&p.constraint, &p.types, budget, seed)
    }

    /// `Φ(λ)`: per player, the distribution set of the switching
    /// correspondence restricted to the constraint.
    pub fn phi(&self, lambdas: &[Distribution], budget: usize, seed: u64) -> Result<Vec<DistributionSet>> {
        (0..self.players.len())
            .map(|i| {
                let f = self.switch_correspondence(i, lambdas)?;
                selection::distribution_set(&f, &self.players[i].types, budget, seed)
            })
            .collect()
    }

    fn constraint_pairs(&self) -> Vec<(&FiniteProbSpace, &Correspondence)> {
        self.players.iter().map(|p| (&p.types, &p.constraint)).collect()
    }

    pub fn validate_profile(&self, profile: &StrategyProfile) -> Result<()> {
        check_profile(profile, &self.constraint_pairs())
    }

    /// Induced distributions and per-type records of both equilibrium
    /// conditions.
    pub fn verify(&self, profile: &StrategyProfile) -> Result<Verification> {
        self.validate_profile(profile)?;
        let lambdas = self
            .players
            .iter()
            .zip(profile.selections())
            .map(|(p, g)| g.pushforward(&p.types))
            .collect::<Result<Vec<_>>>()?;
        let mut checks = Vec::with_capacity(self.players.len());
        let mut violations = Vec::new();
        for (i, p) in self.players.iter().enumerate() {
            let mut by_cell: Vec<Option<(ActionSet, bool)>> = vec![None; p.types.num_cells()];
            let mut player_checks = Vec::with_capacity(p.types.len());
            for z in 0..p.types.len() {
                let c = p.types.cell_of(z);
                if by_cell[c].is_none() {
                    let alpha = self.eval_cell(Which::Alpha, i, c, &lambdas)?;
                    let pref = self.eval_cell(Which::Preference, i, c, &lambdas)?;
                    let empty = alpha.is_disjoint(&pref);
                    by_cell[c] = Some((alpha, empty));
                }
                let (alpha, empty) = by_cell[c].as_ref().expect("filled above");
                let action = profile.selection(i).action_at(z);
                let check = TypeCheck {
                    type_index: z,
                    weight: p.types.weight(z),
                    action,
                    in_alpha: alpha.contains(&action),
                    intersection_empty: *empty,
                };
                if check.weight > 0.0 {
                    if !check.in_alpha {
                        violations.push(Violation {
                            player: i,
                            type_index: z,
                            condition: 1,
                        });
                    }
                    if !check.intersection_empty {
                        violations.push(Violation {
                            player: i,
                            type_index: z,
                            condition: 2,
                        });
                    }
                }
                player_checks.push(check);
            }
            checks.push(player_checks);
        }
        Ok(Verification {
            lambdas,
            checks,
            violations,
        })
    }

    pub fn is_equilibrium(&self, profile: &StrategyProfile) -> Result<Option<EquilibriumCertificate>> {
        let v = self.verify(profile)?;
        Ok(v.is_valid().then(|| EquilibriumCertificate {
            profile: profile.clone(),
            lambdas: v.lambdas,
            checks: v.checks,
        }))
    }

    /// `Π_i |meas(Z_i, D_i)|`, saturating.
    pub fn profile_count(&self) -> u128 {
        self.players.iter().fold(1u128, |acc, p| {
            let cells = cell_values(&p.constraint, &p.types).expect("validated at construction");
            acc.saturating_mul(selection::selection_count(&cells))
        })
    }

    /// Every profile of constraint selections, player 1's first cell slowest.
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

    /// Every profile of unconstrained measurable strategies.
    fn free_profiles(&self) -> (u128, ProfileOdometer) {
        let mut count = 1u128;
        let per_player = self
            .players
            .iter()
            .map(|p| {
                let all: ActionSet = (0..p.actions.len()).collect();
                let cells = vec![all; p.types.num_cells()];
                count = count.saturating_mul(selection::selection_count(&cells));
                (p.types.clone(), p.actions.clone(), cells)
            })
            .collect();
        (count, ProfileOdometer::new(per_player))
    }

    /// Tuples of the exact (or sampled) distribution sets of the
    /// constraints, at most `cap` of them.
    pub fn exact_grid(&self, budget: usize, seed: u64, cap: usize) -> Result<LambdaGrid> {
        let sets = (0..self.players.len())
            .map(|i| self.build_dd(i, budget, seed))
            .collect::<Result<Vec<_>>>()?;
        let exact = sets.iter().all(DistributionSet::is_exact);
        let per_player: Vec<Vec<Distribution>> = sets.into_iter().map(|s| s.members().to_vec()).collect();
        let (points, complete) = product_points(&per_player, cap);
        Ok(LambdaGrid {
            points,
            kind: GridKind::Exact,
            complete: complete && exact,
        })
    }

    /// Mesh points (coordinates in multiples of `mesh`) lying in the convex
    /// hull of each player's constraint distribution set, and their
    /// products, at most `cap` of them.
    pub fn hull_grid(&self, mesh: f64, cap: usize) -> Result<LambdaGrid> {
        if !(mesh > 0.0 && mesh <= 1.0) {
            return Err(Error::Precondition(format!("mesh must lie in (0, 1], got {mesh}")));
        }
        let steps = (1.0 / mesh).round().max(1.0) as usize;
        let mut per_player = Vec::with_capacity(self.players.len());
        let mut complete = true;
        for p in &self.players {
            let mut points = Vec::new();
            let mut parts = vec![0usize; p.actions.len()];
            compositions(steps, 0, &mut parts, &mut |c| {
                if points.len() >= cap {
                    complete = false;
                    return;
                }
                let mass: Vec<f64> = c.iter().map(|&k| k as f64 / steps as f64).collect();
                let d = Distribution::from_raw(p.actions.clone(), mass);
                if selection::hull_distance(&p.constraint, &p.types, &d).is_ok_and(|h| h <= 1e-12) {
                    points.push(d);
                }
            });
            per_player.push(points);
        }
        let (points, all) = product_points(&per_player, cap);
        Ok(LambdaGrid {
            points,
            kind: GridKind::Hull,
            complete: complete && all,
        })
    }

    /// `U_i` over a grid, with the openness diagnostic.
    pub fn build_ui(&self, i: usize, grid: &[Vec<Distribution>], delta: f64) -> Result<UiReport> {
        self.check_player(i)?;
        let p = &self.players[i];
        let table = self.u_table(i, grid)?;
        let neighbours = grid_neighbours(grid, delta);
        let mut members = Vec::new();
        for z in 0..p.types.len() {
            let c = p.types.cell_of(z);
            for (g, near) in neighbours.iter().enumerate() {
                if table[c][g] {
                    members.push(UiMember {
                        type_index: z,
                        grid_index: g,
                        open: near.iter().all(|&h| table[c][h]),
                    });
                }
            }
        }
        Ok(UiReport {
            all_open: members.iter().all(|m| m.open),
            grid_points: grid.len(),
            members,
        })
    }

    /// `table[cell][g]`: whether `(cell, grid[g])` lies in `U_i`.
    fn u_table(&self, i: usize, grid: &[Vec<Distribution>]) -> Result<Vec<Vec<bool>>> {
        let alpha = self.value_table(Which::Alpha, i, grid)?;
        let pref = self.value_table(Which::Preference, i, grid)?;
        Ok(alpha
            .iter()
            .zip(&pref)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x.is_disjoint(y)).collect())
            .collect())
    }

    fn value_table(&self, which: Which, i: usize, grid: &[Vec<Distribution>]) -> Result<Vec<Vec<ActionSet>>> {
        let p = &self.players[i];
        (0..p.types.num_cells())
            .map(|c| {
                grid.iter()
                    .map(|l| {
                        self.check_lambdas(l)?;
                        self.eval_cell(which, i, c, l)
                    })
                    .collect()
            })
            .collect()
    }

    /// Searches for an equilibrium through fixed points of `Φ`.
    ///
    /// Exhaustive strategy: every tuple of the exact constraint distribution
    /// sets is tested for `λ_i ∈ Φ_i(λ)`. Iterative strategy: from extreme
    /// tuples, `λ_i` moves to its nearest member of `Φ_i(λ)` until nothing
    /// moves, a tuple repeats, or the iteration limit is hit. Fixed points
    /// are turned into profiles and verified before being returned.
    pub fn find_equilibrium(&self, config: &EconomyConfig) -> Result<EquilibriumSearch> {
        let sets = (0..self.players.len())
            .map(|i| self.build_dd(i, config.budget, config.seed))
            .collect::<Result<Vec<_>>>()?;
        let exact = sets.iter().all(DistributionSet::is_exact);
        let tuples = sets.iter().fold(1u128, |acc, s| acc.saturating_mul(s.len() as u128));
        let exhaustive = match config.strategy {
            StrategyChoice::Exhaustive => true,
            StrategyChoice::Iterative => false,
            StrategyChoice::Auto => exact && tuples <= config.budget as u128,
        };
        let members: Vec<Vec<Distribution>> = sets.iter().map(|s| s.members().to_vec()).collect();
        if exhaustive {
            self.scan_fixed_points(&members, exact, config)
        } else {
            self.iterate_fixed_points(&members, config)
        }
    }

    fn scan_fixed_points(
        &self,
        members: &[Vec<Distribution>],
        exact: bool,
        config: &EconomyConfig,
    ) -> Result<EquilibriumSearch> {
        let mut search = EquilibriumSearch {
            certificate: None,
            strategy: EquilibriumStrategy::Exhaustive,
            complete: exact,
            candidates_examined: 0,
            fixed_points: Vec::new(),
        };
        let (points, complete) = product_points(members, config.budget);
        search.complete &= complete;
        for lambdas in points {
            search.candidates_examined += 1;
            let (is_fixed, all_exact) = self.is_fixed_point(&lambdas, config)?;
            search.complete &= all_exact;
            if is_fixed {
                self.record_fixed_point(lambdas, config, &mut search)?;
            }
        }
        Ok(search)
    }

    fn iterate_fixed_points(&self, members: &[Vec<Distribution>], config: &EconomyConfig) -> Result<EquilibriumSearch> {
        let mut search = EquilibriumSearch {
            certificate: None,
            strategy: EquilibriumStrategy::Iterative,
            complete: false,
            candidates_examined: 0,
            fixed_points: Vec::new(),
        };
        let extremes: Vec<Vec<Distribution>> = members.iter().map(|m| extreme_members(m)).collect();
        let (starts, _) = product_points(&extremes, MAX_STARTS);
        let mut seen_fixed = HashSet::new();
        for start in starts {
            let mut lambdas = start;
            let mut visited = HashSet::new();
            for _ in 0..config.max_iterations {
                search.candidates_examined += 1;
                if !visited.insert(profile_key(&lambdas)) {
                    break;
                }
                let phi = self.phi(&lambdas, config.budget, config.seed)?;
                if phi.iter().any(DistributionSet::is_empty) {
                    break;
                }
                let next: Vec<Distribution> = phi
                    .iter()
                    .zip(&lambdas)
                    .map(|(set, l)| {
                        let (k, _) = set.nearest(l).expect("nonempty");
                        set.members()[k].clone()
                    })
                    .collect();
                if profile_distance(&next, &lambdas) <= config.tol {
                    if seen_fixed.insert(profile_key(&lambdas)) {
                        self.record_fixed_point(lambdas, config, &mut search)?;
                    }
                    break;
                }
                lambdas = next;
            }
        }
        Ok(search)
    }

    /// Whether `λ_i ∈ Φ_i(λ)` for every player, and whether every set used
    /// was exact.
    fn is_fixed_point(&self, lambdas: &[Distribution], config: &EconomyConfig) -> Result<(bool, bool)> {
        let mut all_exact = true;
        for (i, l) in lambdas.iter().enumerate() {
            let f = self.switch_correspondence(i, lambdas)?;
            let set = selection::distribution_set(&f, &self.players[i].types, config.budget, config.seed)?;
            all_exact &= set.is_exact();
            if !set.contains(l, config.tol) {
                return Ok((false, all_exact));
            }
        }
        Ok((true, all_exact))
    }

    fn record_fixed_point(
        &self,
        lambdas: Vec<Distribution>,
        config: &EconomyConfig,
        search: &mut EquilibriumSearch,
    ) -> Result<()> {
        let certificate = match self.extract_profile(&lambdas, config)? {
            Some(profile) => self.is_equilibrium(&profile)?,
            None => None,
        };
        search.fixed_points.push(FixedPoint {
            lambdas,
            certified: certificate.is_some(),
        });
        if search.certificate.is_none() {
            search.certificate = certificate;
        }
        Ok(())
    }

    /// Per player, the first selection of `F_i(·, λ*) ∩ D_i` inducing `λ_i*`;
    /// purification when enumeration finds none within the budget.
    fn extract_profile(&self, lambdas: &[Distribution], config: &EconomyConfig) -> Result<Option<StrategyProfile>> {
        let mut selections = Vec::with_capacity(self.players.len());
        for (i, target) in lambdas.iter().enumerate() {
            let p = &self.players[i];
            let f = self.switch_correspondence(i, lambdas)?;
            let found = enumerate_selections(&f, &p.types)?.take(config.budget).find(|g| {
                g.pushforward(&p.types)
                    .is_ok_and(|d| tv_raw(d.mass(), target.mass()) <= config.tol)
            });
            match found {
                Some(g) => selections.push(g),
                None => match purify(&f, &p.types, target, config.tol) {
                    Ok(pure) if pure.error <= config.tol => selections.push(pure.selection),
                    Ok(_) | Err(Error::TargetOutsideHull { .. }) | Err(Error::EmptyValue(_)) => return Ok(None),
                    Err(e) => return Err(e),
                },
            }
        }
        Ok(Some(StrategyProfile::new(selections)))
    }

    /// Finite-scale report on the existence hypotheses: atomless types,
    /// measurable nonempty constraints, usc and nonempty `α_i` and `P_i` over
    /// a grid, the exclusion `g_i(z) ∉ P_i` (or `G_i`) over strategy
    /// profiles, openness of `U_i`, and the selector inclusion in selector
    /// mode. Hypotheses are reported separately; no conflict between them is
    /// resolved here.
    pub fn audit(&self, config: &AuditConfig) -> Result<EconomyAudit> {
        let hull = self.hull_grid(config.mesh, config.grid_cap)?;
        let grid = if hull.complete && !hull.points.is_empty() {
            hull
        } else {
            self.exact_grid(config.budget, config.seed, config.grid_cap)?
        };
        let delta = config.delta.unwrap_or(1.5 * config.mesh);
        let neighbours = grid_neighbours(&grid.points, delta);

        let atomicity: Vec<f64> = self.players.iter().map(|p| p.types.atomicity_level()).collect();
        let atomless = AtomlessAudit {
            holds: atomicity.iter().all(|&a| a == 0.0),
            atomicity,
        };

        let dd = (0..self.players.len())
            .map(|i| self.build_dd(i, config.budget, config.seed))
            .collect::<Result<Vec<_>>>()?;
        let nonempty = dd.iter().all(|s| !s.is_empty());
        let constraint = ConstraintAudit {
            measurable: true,
            nonempty,
            distribution_set_sizes: dd.iter().map(DistributionSet::len).collect(),
            exact: dd.iter().all(DistributionSet::is_exact),
            holds: nonempty,
        };

        let mut tables = Vec::with_capacity(self.players.len());
        for i in 0..self.players.len() {
            let alpha = self.value_table(Which::Alpha, i, &grid.points)?;
            let pref = self.value_table(Which::Preference, i, &grid.points)?;
            let sel = if self.players[i].selector.is_some() {
                Some(self.value_table(Which::Selector, i, &grid.points)?)
            } else {
                None
            };
            tables.push((alpha, pref, sel));
        }
        let alpha = self.correspondence_audit(Which::Alpha, tables.iter().map(|t| &t.0), &neighbours);
        let preference = self.correspondence_audit(Which::Preference, tables.iter().map(|t| &t.1), &neighbours);

        let mut members = Vec::new();
        let mut open_members = Vec::new();
        for (alpha_t, pref_t, _) in &tables {
            let u: Vec<Vec<bool>> = alpha_t
                .iter()
                .zip(pref_t)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x.is_disjoint(y)).collect())
                .collect();
            let mut m = 0;
            let mut o = 0;
            for row in &u {
                for (g, near) in neighbours.iter().enumerate() {
                    if row[g] {
                        m += 1;
                        if near.iter().all(|&h| row[h]) {
                            o += 1;
                        }
                    }
                }
            }
            members.push(m);
            open_members.push(o);
        }
        let openness = OpennessAudit {
            holds: members == open_members,
            members,
            open_members,
        };

        let selector = if self.players.iter().all(|p| p.selector.is_some()) {
            let mut inclusion_violations = 0;
            let mut nonempty = true;
            for (alpha_t, pref_t, sel_t) in &tables {
                let sel_t = sel_t.as_ref().expect("checked above");
                for ((a_row, p_row), s_row) in alpha_t.iter().zip(pref_t).zip(sel_t) {
                    for ((a, p), s) in a_row.iter().zip(p_row).zip(s_row) {
                        if s.iter().any(|x| !a.contains(x) || !p.contains(x)) {
                            inclusion_violations += 1;
                        }
                        nonempty &= !s.is_empty();
                    }
                }
            }
            let usc = self
                .correspondence_audit(
                    Which::Selector,
                    tables.iter().map(|t| t.2.as_ref().expect("checked above")),
                    &neighbours,
                )
                .usc;
            Some(SelectorAudit {
                inclusion_violations,
                inclusion: inclusion_violations == 0,
                nonempty,
                usc,
            })
        } else {
            None
        };

        let exclusion = self.exclusion_audit(config.budget)?;

        Ok(EconomyAudit {
            grid: GridInfo {
                kind: grid.kind,
                points: grid.points.len(),
                complete: grid.complete,
                delta,
            },
            atomless,
            constraint,
            alpha,
            preference,
            exclusion,
            openness,
            selector,
        })
    }

    fn correspondence_audit<'a>(
        &self,
        which: Which,
        tables: impl Iterator<Item = &'a Vec<Vec<ActionSet>>>,
        neighbours: &[Vec<usize>],
    ) -> CorrespondenceAudit {
        let mut empty_points = 0;
        let mut usc_violations = 0;
        for table in tables {
            for row in table {
                empty_points += row.iter().filter(|v| v.is_empty()).count();
                for (g, near) in neighbours.iter().enumerate() {
                    usc_violations += near.iter().filter(|&&h| !row[h].is_subset(&row[g])).count();
                }
            }
        }
        let closedness = self
            .players
            .iter()
            .filter_map(|p| p.spec(which).map(CorrespondenceSpec::closedness))
            .collect();
        CorrespondenceAudit {
            closedness,
            empty_points,
            usc_violations,
            nonempty: empty_points == 0,
            usc: usc_violations == 0,
            holds: empty_points == 0 && usc_violations == 0,
        }
    }

    /// Scans measurable strategy profiles (unconstrained) for types whose
    /// own action lies in `P_i` (or `G_i`) at the induced distributions.
    fn exclusion_audit(&self, budget: usize) -> Result<ExclusionAudit> {
        let against = if self.use_selector {
            Which::Selector
        } else {
            Which::Preference
        };
        let (count, profiles) = self.free_profiles();
        let mut scanned = 0u64;
        let mut violations = 0u64;
        let mut examples = Vec::new();
        for profile in profiles.take(budget) {
            let lambdas = self
                .players
                .iter()
                .zip(profile.selections())
                .map(|(p, g)| g.pushforward(&p.types))
                .collect::<Result<Vec<_>>>()?;
            for (i, p) in self.players.iter().enumerate() {
                let weights = p.types.cell_weights();
                for (c, w) in weights.iter().enumerate() {
                    if *w == 0.0 {
                        continue;
                    }
                    let z = p.types.cell_members(c)[0];
                    let action = profile.selection(i).action_at(z);
                    if self.eval_cell(against, i, c, &lambdas)?.contains(&action) {
                        violations += 1;
                        if examples.len() < VIOLATION_SAMPLE {
                            examples.push(ExclusionViolation {
                                profile_index: scanned,
                                player: i,
                                type_index: z,
                                action,
                            });
                        }
                    }
                }
            }
            scanned += 1;
        }
        Ok(ExclusionAudit {
            against,
            profiles_scanned: scanned,
            complete: scanned as u128 == count,
            violations,
            examples,
            holds: violations == 0,
        })
    }

    /// Splits every type into `k` equally likely sub-types in their own
    /// sub-cells (keeping the parent cell's label), inheriting constraints
    /// and predicates.
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
            specs.push(EconomyPlayerSpec {
                types: TypeSpec::of(&refined),
                constraint: (0..refined.len()).map(|t| spec.constraint[t / k].clone()).collect(),
                ..spec
            });
        }
        let factors = specs.iter().map(|p| labels(&p.types.atoms)).collect();
        let coords: Vec<usize> = (0..self.players.len()).collect();
        let joint = ProductSpace::new(factors, &spread_joint(&self.joint, &coords, k))?;
        Self::new(specs, joint)?.with_selector(self.use_selector)
    }
}

fn profile_key(lambdas: &[Distribution]) -> Vec<i64> {
    lambdas
        .iter()
        .flat_map(|l| l.mass().iter().map(|m| (m * 1e12).round() as i64))
        .collect()
}

/// Members with the most mass on each action, lowest index first.
fn extreme_members(members: &[Distribution]) -> Vec<Distribution> {
    let Some(first) = members.first() else {
        return Vec::new();
    };
    let mut picked: Vec<usize> = Vec::new();
    for a in 0..first.mass().len() {
        let mut best = 0;
        for (k, m) in members.iter().enumerate() {
            if m.mass()[a] > members[best].mass()[a] {
                best = k;
            }
        }
        if !picked.contains(&best) {
            picked.push(best);
        }
    }
    picked.into_iter().map(|k| members[k].clone()).collect()
}

/// Cartesian product in odometer order (first player slowest), at most
/// `cap` tuples. The flag is false when the product was cut.
fn product_points(per_player: &[Vec<Distribution>], cap: usize) -> (Vec<Vec<Distribution>>, bool) {
    if per_player.iter().any(Vec::is_empty) {
        return (Vec::new(), true);
    }
    let mut digits = vec![0usize; per_player.len()];
    let mut out = Vec::new();
    loop {
        if out.len() >= cap {
            return (out, false);
        }
        out.push(digits.iter().zip(per_player).map(|(&d, m)| m[d].clone()).collect());
        let mut k = digits.len();
        loop {
            if k == 0 {
                return (out, true);
            }
            k -= 1;
            digits[k] += 1;
            if digits[k] < per_player[k].len() {
                break;
            }
            digits[k] = 0;
        }
    }
}

/// Calls `f` with every way to write `total` as an ordered sum of
/// `parts.len()` nonnegative integers, lexicographically descending.
fn compositions(total: usize, at: usize, parts: &mut [usize], f: &mut dyn FnMut(&[usize])) {
    if at + 1 == parts.len() {
        parts[at] = total;
        f(parts);
        return;
    }
    for k in (0..=total).rev() {
        parts[at] = k;
        compositions(total - k, at + 1, parts, f);
    }
}

/// For each grid point, the other points closer than `delta`.
fn grid_neighbours(grid: &[Vec<Distribution>], delta: f64) -> Vec<Vec<usize>> {
    (0..grid.len())
        .map(|g| {
            (0..grid.len())
                .filter(|&h| h != g && profile_distance(&grid[g], &grid[h]) < delta)
                .collect()
        })
        .collect()
}
