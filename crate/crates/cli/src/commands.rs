use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use privecon_core::Distribution;
use privecon_core::economy::{AuditConfig, EconomyConfig};
use privecon_core::game::NashConfig;
use privecon_core::selection::{convexification_gap, distribution_set, purify};
use serde_json::{Value, json};

use crate::error::CliError;
use crate::instance::{self, Instance, Model, SolverConfig};
use crate::props;
use crate::report;

#[derive(Debug, Parser)]
#[command(
    name = "privecon",
    version,
    about = "Pure-strategy equilibria of finite private-information games and economies"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Global {
    /// Instance file (JSON).
    #[arg(long, global = true)]
    pub instance: Option<PathBuf>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Override the solver seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Override the enumeration budget.
    #[arg(long, global = true)]
    pub budget: Option<usize>,
    /// Refine every type into `k` equally likely sub-types before running.
    #[arg(long, global = true)]
    pub refine: Option<usize>,
    /// Use each player's selector `G` off the region where `alpha ∩ P` is empty.
    #[arg(long, global = true)]
    pub theorem4: bool,
    /// Include wall-clock timing in the report (breaks byte determinism).
    #[arg(long, global = true)]
    pub timing: bool,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Search an economy for an equilibrium.
    Solve,
    /// Search a game for a pure Nash equilibrium.
    SolveGame,
    /// Check a supplied profile.
    Verify {
        #[arg(long)]
        profile: PathBuf,
    },
    /// Report on each existence hypothesis.
    Audit,
    /// Find a selection of a player's constraint inducing a target distribution.
    Purify {
        #[arg(long)]
        player: String,
        /// `a=0.3,b=0.7` or a JSON object of action masses.
        #[arg(long)]
        target: String,
    },
    /// Run the randomized invariant suites.
    Props {
        #[arg(long, default_value_t = 100)]
        cases: usize,
    },
    /// Atomicity, convexification gap and equilibrium existence per refinement level.
    RefineStudy {
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
        ks: Vec<usize>,
    },
    /// Print the normalized instance.
    Normalize,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::SolveGame => "solve-game",
            Command::Verify { .. } => "verify",
            Command::Audit => "audit",
            Command::Purify { .. } => "purify",
            Command::Props { .. } => "props",
            Command::RefineStudy { .. } => "refine-study",
            Command::Normalize => "normalize",
        }
    }
}

/// Runs a parsed command and returns the rendered output.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    let start = Instant::now();
    let g = &cli.global;
    if let Command::Props { cases } = cli.command {
        let seed = g.seed.unwrap_or(0);
        let mut v = json!({
            "command": "props",
            "config": {"cases": cases, "seed": seed},
            "result": props::run_all(cases, seed),
        });
        if g.timing {
            v["timing_ms"] = json!(start.elapsed().as_secs_f64() * 1e3);
        }
        return Ok(report::render(&v));
    }
    let path = g
        .instance
        .as_ref()
        .ok_or_else(|| CliError::Semantic("--instance is required".into()))?;
    let inst = instance::load(path)?;
    if let Command::Normalize = cli.command {
        return Ok(inst.normalized_json());
    }
    let (model, solver) = effective(&inst, g)?;
    let result = match &cli.command {
        Command::Solve => solve(&model, &solver)?,
        Command::SolveGame => solve_game(&model, &solver)?,
        Command::Verify { profile } => verify(&model, &solver, &instance::load_profile(profile, &model)?)?,
        Command::Audit => audit(&model, &solver)?,
        Command::Purify { player, target } => purify_cmd(&model, &solver, player, target)?,
        Command::RefineStudy { ks } => refine_study(&inst.model, &solver, solver.theorem4, ks)?,
        Command::Props { .. } | Command::Normalize => unreachable!("handled above"),
    };
    let mut v = json!({
        "command": cli.command.name(),
        "instance": inst.hash(),
        "config": solver,
        "result": result,
    });
    if g.timing {
        v["timing_ms"] = json!(start.elapsed().as_secs_f64() * 1e3);
    }
    Ok(report::render(&v))
}

/// Applies the command-line overrides to the loaded instance.
pub fn effective(inst: &Instance, g: &Global) -> Result<(Model, SolverConfig), CliError> {
    let mut solver = inst.solver;
    if let Some(s) = g.seed {
        solver.seed = s;
    }
    if let Some(b) = g.budget {
        solver.budget = b;
    }
    if let Some(k) = g.refine {
        if k == 0 {
            return Err(CliError::Semantic("--refine must be at least 1".into()));
        }
        solver.refine = k;
    }
    solver.theorem4 |= g.theorem4;
    let model = with_selector(inst.model.refine(solver.refine)?, solver.theorem4)?;
    Ok((model, solver))
}

fn with_selector(model: Model, on: bool) -> Result<Model, CliError> {
    Ok(match model {
        Model::Economy(e) if on => Model::Economy(e.with_selector(true)?),
        other => other,
    })
}

fn expect_kind(model: &Model, want: instance::Kind, command: &str) -> Result<(), CliError> {
    if model.kind() == want {
        Ok(())
    } else {
        Err(CliError::Semantic(format!(
            "`{command}` needs a {} instance",
            match want {
                instance::Kind::Game => "game",
                instance::Kind::Economy => "economy",
            }
        )))
    }
}

pub fn economy_config(solver: &SolverConfig) -> EconomyConfig {
    EconomyConfig {
        budget: solver.budget,
        tol: solver.tol,
        seed: solver.seed,
        max_iterations: solver.max_iterations,
        strategy: solver.strategy,
    }
}

pub fn nash_config(solver: &SolverConfig) -> NashConfig {
    NashConfig {
        budget: solver.budget,
        eps: solver.eps,
        max_iterations: solver.max_iterations,
    }
}

pub fn solve(model: &Model, solver: &SolverConfig) -> Result<Value, CliError> {
    expect_kind(model, instance::Kind::Economy, "solve")?;
    let Model::Economy(e) = model else { unreachable!() };
    let search = e.find_equilibrium(&economy_config(solver))?;
    Ok(report::equilibrium_search(model, &search))
}

pub fn solve_game(model: &Model, solver: &SolverConfig) -> Result<Value, CliError> {
    expect_kind(model, instance::Kind::Game, "solve-game")?;
    let Model::Game(g) = model else { unreachable!() };
    let search = g.find_nash(&nash_config(solver));
    let nash = search.profile.as_ref().map(|p| g.is_nash(p, solver.eps)).transpose()?;
    Ok(report::nash_search(model, &search, nash.as_ref()))
}

pub fn verify(
    model: &Model,
    solver: &SolverConfig,
    profile: &privecon_core::game::StrategyProfile,
) -> Result<Value, CliError> {
    match model {
        Model::Economy(e) => Ok(report::verification(model, &e.verify(profile)?)),
        Model::Game(g) => Ok(report::nash_report(model, &g.is_nash(profile, solver.eps)?)),
    }
}

pub fn audit(model: &Model, solver: &SolverConfig) -> Result<Value, CliError> {
    match model {
        Model::Game(g) => Ok(report::game_audit(model, &g.audit(solver.tol)?)),
        Model::Economy(e) => {
            let config = AuditConfig {
                budget: solver.budget,
                mesh: solver.mesh,
                delta: solver.audit_delta,
                grid_cap: solver.grid_cap,
                seed: solver.seed,
            };
            Ok(report::economy_audit(model, &e.audit(&config)?))
        }
    }
}

/// Parses `a=0.3,b=0.7` or a JSON object into a distribution over `actions`.
pub fn parse_target(text: &str, actions: &privecon_core::Labels) -> Result<Distribution, CliError> {
    let map: BTreeMap<String, f64> = if text.trim_start().starts_with('{') {
        instance::from_json(text)?
    } else {
        text.split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|pair| {
                let (k, v) = pair
                    .split_once('=')
                    .ok_or_else(|| CliError::Semantic(format!("target entry `{pair}` is not `action=mass`")))?;
                let v: f64 = v
                    .trim()
                    .parse()
                    .map_err(|_| CliError::Semantic(format!("target mass `{v}` is not a number")))?;
                Ok((k.trim().to_string(), v))
            })
            .collect::<Result<_, CliError>>()?
    };
    if let Some(k) = map.keys().find(|k| !actions.contains(k)) {
        return Err(CliError::Semantic(format!("target: unknown action `{k}`")));
    }
    let mass = actions.iter().map(|a| map.get(a).copied().unwrap_or(0.0)).collect();
    Ok(Distribution::new(actions.clone(), mass)?)
}

pub fn purify_cmd(model: &Model, solver: &SolverConfig, player: &str, target: &str) -> Result<Value, CliError> {
    let i = model
        .player_names()
        .iter()
        .position(|n| n == player)
        .ok_or_else(|| CliError::Semantic(format!("unknown player `{player}`")))?;
    let (space, f) = match model {
        Model::Game(g) => (g.player(i).types(), g.player(i).constraint()),
        Model::Economy(e) => (e.player(i).types(), e.player(i).constraint()),
    };
    let target = parse_target(target, f.codomain())?;
    let p = purify(f, space, &target, solver.tol)?;
    let types = model.type_atoms(i);
    Ok(json!({
        "player": player,
        "target": report::distribution(&target),
        "selection": types
            .iter()
            .enumerate()
            .map(|(t, id)| (id.clone(), json!(f.codomain()[p.selection.action_at(t)])))
            .collect::<serde_json::Map<_, _>>(),
        "distribution": report::distribution(&p.distribution),
        "error": p.error,
        "bound": p.bound,
    }))
}

/// Per refinement level: the largest atom weight, the convexification gap
/// of each player's constraint distribution set, and whether a pure
/// equilibrium was found.
pub fn refine_study(base: &Model, solver: &SolverConfig, theorem4: bool, ks: &[usize]) -> Result<Value, CliError> {
    let mut rows = Vec::with_capacity(ks.len());
    for &k in ks {
        if k == 0 {
            return Err(CliError::Semantic("refine-study: k must be at least 1".into()));
        }
        let model = with_selector(base.refine(k)?, theorem4)?;
        let n = model.num_players();
        let mut atomicity = 0.0f64;
        let mut gaps = Vec::with_capacity(n);
        for i in 0..n {
            let (space, set) = match &model {
                Model::Game(g) => {
                    let p = g.player(i);
                    (
                        p.types(),
                        distribution_set(p.constraint(), p.types(), solver.budget, solver.seed)?,
                    )
                }
                Model::Economy(e) => (e.player(i).types(), e.build_dd(i, solver.budget, solver.seed)?),
            };
            atomicity = atomicity.max(space.atomicity_level());
            gaps.push(convexification_gap(&set)?);
        }
        let (found, complete) = match &model {
            Model::Game(g) => {
                let s = g.find_nash(&nash_config(solver));
                (s.profile.is_some(), s.complete)
            }
            Model::Economy(e) => {
                let s = e.find_equilibrium(&economy_config(solver))?;
                (s.certificate.is_some(), s.complete)
            }
        };
        let names = model.player_names();
        rows.push(json!({
            "k": k,
            "atomicity": atomicity,
            "gap": gaps.iter().copied().fold(0.0, f64::max),
            "gaps": names.into_iter().zip(&gaps).map(|(n, g)| (n, json!(g))).collect::<serde_json::Map<_, _>>(),
            "equilibrium_found": found,
            "search_complete": complete,
        }));
    }
    Ok(json!({ "rows": rows }))
}
