//! Instance files: JSON schema, loading into core models, and the
//! normalized form used for hashing and round-tripping.

use std::collections::BTreeMap;
use std::path::Path;

use privecon_core::correspondence::ActionSet;
use privecon_core::dsl::{CorrespondenceSpec, Scope};
use privecon_core::economy::{EconomyInstance, EconomyPlayerSpec, StrategyChoice};
use privecon_core::game::{PlayerSpec, PrivateInfoGame, StrategyProfile, TypeSpec, joint_factors};
use privecon_core::measure::{Labels, ProductSpace, labels};
use privecon_core::selection::Selection;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Game,
    Economy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub kind: Kind,
    pub players: Vec<PlayerBlock>,
    pub mu: MuSpec,
    #[serde(default)]
    pub solver: SolverConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlayerBlock {
    pub name: String,
    pub types: Vec<TypeEntry>,
    pub actions: Vec<String>,
    /// Sigma cell label to allowed actions.
    #[serde(rename = "D")]
    pub constraint: BTreeMap<String, Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shocks: Option<Vec<ShockEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payoff: Option<Vec<PayoffEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<BTreeMap<String, String>>,
    #[serde(rename = "P", default, skip_serializing_if = "Option::is_none")]
    pub preference: Option<BTreeMap<String, String>>,
    #[serde(rename = "G", default, skip_serializing_if = "Option::is_none")]
    pub selector: Option<BTreeMap<String, String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TypeEntry {
    pub id: String,
    /// Sigma cell label; defaults to the type's own id.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell: Option<String>,
    /// Marginal weight, used only when `mu` is `"product"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShockEntry {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PayoffEntry {
    /// One action per player, in player order.
    pub actions: Vec<String>,
    /// May be omitted when the player has a single shock.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shock: Option<String>,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MuKeyword {
    Product,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MuSpec {
    Keyword(MuKeyword),
    Atoms(Vec<MuAtom>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MuAtom {
    /// Games: `(type, shock)` per player, or one type per player when every
    /// shock space is a singleton. Economies: one type per player.
    pub atom: Vec<String>,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub budget: usize,
    pub tol: f64,
    pub eps: f64,
    pub refine: usize,
    pub theorem4: bool,
    pub seed: u64,
    pub max_iterations: usize,
    pub mesh: f64,
    pub audit_delta: Option<f64>,
    pub grid_cap: usize,
    pub strategy: StrategyChoice,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            budget: privecon_core::economy::DEFAULT_BUDGET,
            tol: privecon_core::economy::DEFAULT_TOL,
            eps: privecon_core::game::DEFAULT_EPS,
            refine: 1,
            theorem4: false,
            seed: 0,
            max_iterations: privecon_core::economy::DEFAULT_MAX_ITERATIONS,
            mesh: privecon_core::economy::DEFAULT_MESH,
            audit_delta: None,
            grid_cap: privecon_core::economy::DEFAULT_GRID_CAP,
            strategy: StrategyChoice::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Game(PrivateInfoGame),
    Economy(EconomyInstance),
}

impl Model {
    pub fn kind(&self) -> Kind {
        match self {
            Model::Game(_) => Kind::Game,
            Model::Economy(_) => Kind::Economy,
        }
    }

    pub fn player_names(&self) -> Vec<String> {
        match self {
            Model::Game(g) => g.players().iter().map(|p| p.name().to_string()).collect(),
            Model::Economy(e) => e.players().iter().map(|p| p.name().to_string()).collect(),
        }
    }

    pub fn type_atoms(&self, i: usize) -> &[String] {
        match self {
            Model::Game(g) => g.player(i).types().atoms(),
            Model::Economy(e) => e.player(i).types().atoms(),
        }
    }

    pub fn actions(&self, i: usize) -> &Labels {
        match self {
            Model::Game(g) => g.player(i).actions(),
            Model::Economy(e) => e.player(i).actions(),
        }
    }

    pub fn num_players(&self) -> usize {
        match self {
            Model::Game(g) => g.num_players(),
            Model::Economy(e) => e.num_players(),
        }
    }

    pub fn refine(&self, k: usize) -> Result<Self, CliError> {
        Ok(match self {
            Model::Game(g) => Model::Game(g.refine_types(k)?),
            Model::Economy(e) => Model::Economy(e.refine_types(k)?),
        })
    }
}

/// A loaded instance and its normalized file form.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub model: Model,
    pub solver: SolverConfig,
    pub normalized: InstanceFile,
}

impl Instance {
    /// SHA-256 of the compact normalized JSON.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(&self.normalized).expect("instance serializes");
        Sha256::digest(text.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn normalized_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(&self.normalized).expect("instance serializes");
        text.push('\n');
        text
    }
}

pub fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn load(path: &Path) -> Result<Instance, CliError> {
    parse(&read_file(path)?)
}

/// Deserializes with JSON-pointer error locations.
pub fn from_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let pointer = pointer_of(e.path());
        CliError::Schema {
            pointer,
            message: e.into_inner().to_string(),
        }
    })
}

fn pointer_of(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } => out.push_str(&key.replace('~', "~0").replace('/', "~1")),
            Segment::Enum { variant } => out.push_str(variant),
            Segment::Unknown => out.push('?'),
        }
    }
    out
}

pub fn parse(text: &str) -> Result<Instance, CliError> {
    let file: InstanceFile = from_json(text)?;
    build(&file)
}

fn semantic(msg: impl Into<String>) -> CliError {
    CliError::Semantic(msg.into())
}

fn index_of(list: &[String], name: &str, what: &str, at: &str) -> Result<usize, CliError> {
    list.iter()
        .position(|x| x == name)
        .ok_or_else(|| semantic(format!("{at}: unknown {what} `{name}`")))
}

fn check_unique(list: &[String], what: &str, at: &str) -> Result<(), CliError> {
    for (k, x) in list.iter().enumerate() {
        if list[..k].contains(x) {
            return Err(semantic(format!("{at}: duplicate {what} `{x}`")));
        }
    }
    if list.is_empty() {
        return Err(semantic(format!("{at}: no {what}s declared")));
    }
    Ok(())
}

struct Common {
    types: TypeSpec,
    actions: Vec<String>,
    constraint: Vec<ActionSet>,
}

fn common(p: &PlayerBlock, at: &str) -> Result<Common, CliError> {
    let atoms: Vec<String> = p.types.iter().map(|t| t.id.clone()).collect();
    check_unique(&atoms, "type", at)?;
    check_unique(&p.actions, "action", at)?;
    let cell_labels: Vec<String> = p
        .types
        .iter()
        .map(|t| t.cell.clone().unwrap_or_else(|| t.id.clone()))
        .collect();
    let types = TypeSpec::from_labels(atoms, &cell_labels)?;
    for cell in p.constraint.keys() {
        if !types.cell_labels.contains(cell) {
            return Err(semantic(format!("{at}/D: unknown cell `{cell}`")));
        }
    }
    let mut per_cell = Vec::with_capacity(types.cell_labels.len());
    for cell in &types.cell_labels {
        let allowed = p
            .constraint
            .get(cell)
            .ok_or_else(|| semantic(format!("{at}/D: no entry for cell `{cell}`")))?;
        let set = allowed
            .iter()
            .map(|a| index_of(&p.actions, a, "action", &format!("{at}/D/{cell}")))
            .collect::<Result<ActionSet, _>>()?;
        if set.is_empty() {
            return Err(semantic(format!("{at}/D/{cell}: empty constraint value")));
        }
        per_cell.push(set);
    }
    let constraint = types.cell_of.iter().map(|&c| per_cell[c].clone()).collect();
    Ok(Common {
        types,
        actions: p.actions.clone(),
        constraint,
    })
}

fn weights_or_uniform(ws: Vec<Option<f64>>, at: &str) -> Result<Vec<f64>, CliError> {
    if ws.iter().all(Option::is_none) {
        let n = ws.len() as f64;
        return Ok(vec![1.0 / n; ws.len()]);
    }
    ws.into_iter()
        .map(|w| w.ok_or_else(|| semantic(format!("{at}: weights must be given for all or none"))))
        .collect()
}

fn joint_from(
    file: &InstanceFile,
    factors: Vec<Labels>,
    factor_weights: impl Fn() -> Result<Vec<Vec<f64>>, CliError>,
    expand: impl Fn(&[String]) -> Option<Vec<String>>,
) -> Result<ProductSpace, CliError> {
    match &file.mu {
        MuSpec::Keyword(MuKeyword::Product) => {
            let ws = factor_weights()?;
            let parts: Vec<(Labels, Vec<f64>)> = factors.into_iter().zip(ws).collect();
            Ok(ProductSpace::product(&parts)?)
        }
        MuSpec::Atoms(atoms) => {
            let mut entries = Vec::with_capacity(atoms.len());
            for (k, a) in atoms.iter().enumerate() {
                let at = format!("/mu/{k}");
                let full = expand(&a.atom)
                    .ok_or_else(|| semantic(format!("{at}/atom: expected {} coordinates", factors.len())))?;
                let tuple = full
                    .iter()
                    .zip(&factors)
                    .map(|(name, f)| {
                        f.iter()
                            .position(|x| x == name)
                            .ok_or_else(|| semantic(format!("{at}/atom: unknown label `{name}`")))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                entries.push((tuple, a.weight));
            }
            Ok(ProductSpace::new(factors, &entries)?)
        }
    }
}

fn compile(
    map: &BTreeMap<String, String>,
    actions: &[String],
    scope: &Scope,
    at: &str,
) -> Result<CorrespondenceSpec, CliError> {
    CorrespondenceSpec::compile(actions, map, scope).map_err(|(action, e)| CliError::Dsl(format!("{at}/{action}: {e}")))
}

fn build(file: &InstanceFile) -> Result<Instance, CliError> {
    if file.players.is_empty() {
        return Err(semantic("/players: at least one player required"));
    }
    let names: Vec<String> = file.players.iter().map(|p| p.name.clone()).collect();
    check_unique(&names, "player", "/players")?;
    if file.solver.refine == 0 {
        return Err(semantic("/solver/refine: must be at least 1"));
    }
    let model = match file.kind {
        Kind::Game => Model::Game(build_game(file)?),
        Kind::Economy => Model::Economy(build_economy(file)?),
    };
    let normalized = normalize(&model, &file.solver);
    Ok(Instance {
        model,
        solver: file.solver,
        normalized,
    })
}

fn build_game(file: &InstanceFile) -> Result<PrivateInfoGame, CliError> {
    let n = file.players.len();
    let all_actions: Vec<&Vec<String>> = file.players.iter().map(|p| &p.actions).collect();
    let mut specs = Vec::with_capacity(n);
    for (i, p) in file.players.iter().enumerate() {
        let at = format!("/players/{i}");
        if p.alpha.is_some() || p.preference.is_some() || p.selector.is_some() {
            return Err(semantic(format!("{at}: game players take no alpha/P/G")));
        }
        let c = common(p, &at)?;
        let shocks: Vec<String> = match &p.shocks {
            Some(s) => s.iter().map(|x| x.id.clone()).collect(),
            None => vec!["none".into()],
        };
        check_unique(&shocks, "shock", &format!("{at}/shocks"))?;
        let size: usize = all_actions.iter().map(|a| a.len()).product::<usize>() * shocks.len();
        let mut table: Vec<Option<f64>> = vec![None; size];
        for (k, e) in p.payoff.as_deref().unwrap_or_default().iter().enumerate() {
            let eat = format!("{at}/payoff/{k}");
            if e.actions.len() != n {
                return Err(semantic(format!("{eat}/actions: expected {n} actions")));
            }
            let mut flat = 0;
            for (j, a) in e.actions.iter().enumerate() {
                flat = flat * all_actions[j].len() + index_of(all_actions[j], a, "action", &eat)?;
            }
            let x = match &e.shock {
                Some(s) => index_of(&shocks, s, "shock", &eat)?,
                None if shocks.len() == 1 => 0,
                None => return Err(semantic(format!("{eat}: shock required"))),
            };
            let slot = &mut table[flat * shocks.len() + x];
            if slot.is_some() {
                return Err(semantic(format!("{eat}: duplicate payoff entry")));
            }
            *slot = Some(e.value);
        }
        let payoff = table
            .into_iter()
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| semantic(format!("{at}/payoff: payoff table missing an entry")))?;
        specs.push(PlayerSpec {
            name: p.name.clone(),
            types: c.types,
            shocks,
            actions: c.actions,
            constraint: c.constraint,
            payoff,
        });
    }
    let singleton_shocks = specs.iter().all(|s| s.shocks.len() == 1);
    let shock_names: Vec<String> = specs.iter().map(|s| s.shocks[0].clone()).collect();
    let joint = joint_from(
        file,
        joint_factors(&specs),
        || {
            file.players
                .iter()
                .enumerate()
                .flat_map(|(i, p)| {
                    let at = format!("/players/{i}");
                    let types = weights_or_uniform(p.types.iter().map(|t| t.weight).collect(), &format!("{at}/types"));
                    let shocks = match &p.shocks {
                        Some(s) => weights_or_uniform(s.iter().map(|x| x.weight).collect(), &format!("{at}/shocks")),
                        None => Ok(vec![1.0]),
                    };
                    [types, shocks]
                })
                .collect()
        },
        |atom| {
            if atom.len() == 2 * n {
                Some(atom.to_vec())
            } else if atom.len() == n && singleton_shocks {
                Some(
                    atom.iter()
                        .zip(&shock_names)
                        .flat_map(|(z, x)| [z.clone(), x.clone()])
                        .collect(),
                )
            } else {
                None
            }
        },
    )?;
    Ok(PrivateInfoGame::new(specs, joint)?)
}

fn build_economy(file: &InstanceFile) -> Result<EconomyInstance, CliError> {
    let n = file.players.len();
    let mut commons = Vec::with_capacity(n);
    for (i, p) in file.players.iter().enumerate() {
        let at = format!("/players/{i}");
        if p.shocks.is_some() || p.payoff.is_some() {
            return Err(semantic(format!("{at}: economy players take no shocks or payoff")));
        }
        commons.push(common(p, &at)?);
    }
    let scope_actions: Vec<Vec<String>> = commons.iter().map(|c| c.actions.clone()).collect();
    let mut specs = Vec::with_capacity(n);
    for (i, (p, c)) in file.players.iter().zip(commons).enumerate() {
        let at = format!("/players/{i}");
        let scope = Scope {
            actions: scope_actions.clone(),
            cells: c.types.cell_labels.clone(),
        };
        let alpha = p
            .alpha
            .as_ref()
            .ok_or_else(|| semantic(format!("{at}: missing alpha")))?;
        let preference = p
            .preference
            .as_ref()
            .ok_or_else(|| semantic(format!("{at}: missing P")))?;
        specs.push(EconomyPlayerSpec {
            name: p.name.clone(),
            alpha: compile(alpha, &c.actions, &scope, &format!("{at}/alpha"))?,
            preference: compile(preference, &c.actions, &scope, &format!("{at}/P"))?,
            selector: p
                .selector
                .as_ref()
                .map(|g| compile(g, &c.actions, &scope, &format!("{at}/G")))
                .transpose()?,
            types: c.types,
            actions: c.actions,
            constraint: c.constraint,
        });
    }
    let factors: Vec<Labels> = specs.iter().map(|s| labels(&s.types.atoms)).collect();
    let joint = joint_from(
        file,
        factors,
        || {
            file.players
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    weights_or_uniform(
                        p.types.iter().map(|t| t.weight).collect(),
                        &format!("/players/{i}/types"),
                    )
                })
                .collect()
        },
        |atom| (atom.len() == n).then(|| atom.to_vec()),
    )?;
    Ok(EconomyInstance::new(specs, joint)?.with_selector(file.solver.theorem4)?)
}

/// The canonical file form: explicit cells, constraint per cell, dense
/// payoff entries, canonical predicate text, explicit positive-weight atoms
/// of `mu`, and a fully specified solver block.
pub fn normalize(model: &Model, solver: &SolverConfig) -> InstanceFile {
    let mut players = Vec::new();
    let mu;
    match model {
        Model::Game(g) => {
            let sizes: Vec<usize> = g.players().iter().map(|p| p.actions().len()).collect();
            for (i, p) in g.players().iter().enumerate() {
                let mut payoff = Vec::with_capacity(p.payoff().len());
                let profiles: usize = sizes.iter().product();
                for flat in 0..profiles {
                    let mut rest = flat;
                    let mut acts = vec![String::new(); sizes.len()];
                    for j in (0..sizes.len()).rev() {
                        acts[j] = g.player(j).actions()[rest % sizes[j]].clone();
                        rest /= sizes[j];
                    }
                    for (x, shock) in p.shocks().iter().enumerate() {
                        payoff.push(PayoffEntry {
                            actions: acts.clone(),
                            shock: Some(shock.clone()),
                            value: p.payoff()[flat * p.shocks().len() + x],
                        });
                    }
                }
                let _ = i;
                players.push(PlayerBlock {
                    shocks: Some(
                        p.shocks()
                            .iter()
                            .map(|x| ShockEntry {
                                id: x.clone(),
                                weight: None,
                            })
                            .collect(),
                    ),
                    payoff: Some(payoff),
                    alpha: None,
                    preference: None,
                    selector: None,
                    ..block(p.name(), p.types(), p.actions(), p.constraint().values())
                });
            }
            mu = atoms_of(g.joint());
        }
        Model::Economy(e) => {
            use privecon_core::economy::Which;
            let texts = |spec: Option<&CorrespondenceSpec>, actions: &Labels| {
                spec.map(|s| {
                    actions
                        .iter()
                        .cloned()
                        .zip(s.predicates().iter().map(|p| p.print_canonical()))
                        .collect::<BTreeMap<_, _>>()
                })
            };
            for p in e.players() {
                players.push(PlayerBlock {
                    shocks: None,
                    payoff: None,
                    alpha: texts(p.spec(Which::Alpha), p.actions()),
                    preference: texts(p.spec(Which::Preference), p.actions()),
                    selector: texts(p.spec(Which::Selector), p.actions()),
                    ..block(p.name(), p.types(), p.actions(), p.constraint().values())
                });
            }
            mu = atoms_of(e.joint());
        }
    }
    InstanceFile {
        kind: model.kind(),
        players,
        mu: MuSpec::Atoms(mu),
        solver: *solver,
    }
}

fn block(
    name: &str,
    types: &privecon_core::FiniteProbSpace,
    actions: &Labels,
    constraint: &[ActionSet],
) -> PlayerBlock {
    let mut d = BTreeMap::new();
    for (t, values) in constraint.iter().enumerate() {
        d.entry(types.cell_label(types.cell_of(t)).to_string())
            .or_insert_with(|| values.iter().map(|&a| actions[a].clone()).collect());
    }
    PlayerBlock {
        name: name.to_string(),
        types: (0..types.len())
            .map(|t| TypeEntry {
                id: types.atoms()[t].clone(),
                cell: Some(types.cell_label(types.cell_of(t)).to_string()),
                weight: None,
            })
            .collect(),
        actions: actions.to_vec(),
        constraint: d,
        shocks: None,
        payoff: None,
        alpha: None,
        preference: None,
        selector: None,
    }
}

fn atoms_of(joint: &ProductSpace) -> Vec<MuAtom> {
    joint
        .atoms()
        .filter(|(_, w)| *w > 0.0)
        .map(|(tuple, weight)| MuAtom {
            atom: tuple
                .iter()
                .enumerate()
                .map(|(f, &k)| joint.factor(f)[k].clone())
                .collect(),
            weight,
        })
        .collect()
}

/// Profile file: player name to (type id to action).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileFile {
    pub strategies: BTreeMap<String, BTreeMap<String, String>>,
}

pub fn load_profile(path: &Path, model: &Model) -> Result<StrategyProfile, CliError> {
    let file: ProfileFile = from_json(&read_file(path)?)?;
    profile_from(&file, model)
}

pub fn profile_from(file: &ProfileFile, model: &Model) -> Result<StrategyProfile, CliError> {
    let names = model.player_names();
    if let Some(extra) = file.strategies.keys().find(|k| !names.contains(k)) {
        return Err(semantic(format!("/strategies: unknown player `{extra}`")));
    }
    let mut selections = Vec::with_capacity(names.len());
    for (i, name) in names.iter().enumerate() {
        let at = format!("/strategies/{name}");
        let map = file
            .strategies
            .get(name)
            .ok_or_else(|| semantic(format!("{at}: missing strategy")))?;
        let types = model.type_atoms(i);
        let actions = model.actions(i);
        if let Some(extra) = map.keys().find(|k| !types.contains(k)) {
            return Err(semantic(format!("{at}: unknown type `{extra}`")));
        }
        let choice = types
            .iter()
            .map(|t| {
                let a = map
                    .get(t)
                    .ok_or_else(|| semantic(format!("{at}: no action for type `{t}`")))?;
                index_of(actions, a, "action", &format!("{at}/{t}"))
            })
            .collect::<Result<Vec<_>, _>>()?;
        selections.push(Selection::new(actions.clone(), choice)?);
    }
    Ok(StrategyProfile::new(selections))
}

pub fn profile_to_file(profile: &StrategyProfile, model: &Model) -> ProfileFile {
    let names = model.player_names();
    ProfileFile {
        strategies: names
            .into_iter()
            .enumerate()
            .map(|(i, name)| {
                let g = profile.selection(i);
                let map = model
                    .type_atoms(i)
                    .iter()
                    .enumerate()
                    .map(|(t, id)| (id.clone(), g.actions()[g.action_at(t)].clone()))
                    .collect();
                (name, map)
            })
            .collect(),
    }
}
