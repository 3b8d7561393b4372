//! Randomized invariant suites behind the `props` command. Each case draws
//! a fresh instance from a per-suite seed and checks one property against
//! either a brute-force oracle or a structural identity.

use std::collections::BTreeSet;

use privecon_core::correspondence::{ActionSet, Correspondence};
use privecon_core::dsl::{parse, random_predicate};
use privecon_core::economy::{EconomyInstance, Which};
use privecon_core::game::{PrivateInfoGame, StrategyProfile};
use privecon_core::measure::{Distribution, FiniteProbSpace};
use privecon_core::selection::{
    Selection, cell_values, convexification_gap, distribution_set, enumerate_selections, purify, selection_count,
};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::Value;

use crate::generate::{self, EconomyShape, GameShape};

pub type Case = fn(&mut ChaCha8Rng) -> Result<(), String>;

#[derive(Debug, Clone, Serialize)]
pub struct SuiteResult {
    pub name: &'static str,
    pub cases: usize,
    pub passed: usize,
    pub failed: usize,
    pub first_failure: Option<String>,
}

pub fn suites() -> Vec<(&'static str, Case)> {
    vec![
        ("selection_existence", selection_existence),
        ("distribution_set_membership", distribution_set_membership),
        ("gap_monotone_under_refinement", gap_monotone),
        ("purify_bound", purify_bound),
        ("expected_payoff_oracle", payoff_oracle),
        ("nash_search_oracle", nash_oracle),
        ("certificate_reverify", certificate_reverify),
        ("switch_inclusion", switch_inclusion),
        ("phi_constant_without_preferences", phi_constant),
        ("glue_modulus", glue_modulus),
        ("dsl_round_trip", dsl_round_trip),
    ]
}

pub fn run_suite(index: usize, name: &'static str, case: Case, cases: usize, seed: u64) -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ index as u64);
    let mut failed = 0;
    let mut first_failure = None;
    for k in 0..cases {
        if let Err(msg) = case(&mut rng) {
            failed += 1;
            first_failure.get_or_insert_with(|| format!("case {k}: {msg}"));
        }
    }
    SuiteResult {
        name,
        cases,
        passed: cases - failed,
        failed,
        first_failure,
    }
}

pub fn run_all(cases: usize, seed: u64) -> Value {
    let results: Vec<SuiteResult> = suites()
        .into_iter()
        .enumerate()
        .map(|(k, (name, case))| run_suite(k, name, case, cases, seed))
        .collect();
    let passed: usize = results.iter().map(|r| r.passed).sum();
    let failed: usize = results.iter().map(|r| r.failed).sum();
    serde_json::json!({ "suites": results, "passed": passed, "failed": failed })
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond { Ok(()) } else { Err(msg()) }
}

fn core<T>(r: privecon_core::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

/// Nonempty selection stream iff every cell value is nonempty, and the
/// stream length is the product of the value sizes.
pub fn selection_existence(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let n = rng.gen_range(1..=6);
    let space = generate::random_space(rng, n, 4);
    let m = rng.gen_range(1..=3);
    let f = generate::random_correspondence(rng, &space, m, 0.15);
    let values = core(cell_values(&f, &space))?;
    let expected: usize = values.iter().map(BTreeSet::len).product();
    let sels: Vec<Selection> = core(enumerate_selections(&f, &space))?.collect();
    ensure(sels.len() == expected, || {
        format!("{} selections, expected {expected}", sels.len())
    })?;
    ensure(selection_count(&values) == expected as u128, || {
        "selection_count disagrees".into()
    })?;
    ensure(!sels.is_empty() == values.iter().all(|v| !v.is_empty()), || {
        "existence mismatch".into()
    })?;
    ensure(sels.iter().all(|g| g.is_selection_of(&f, &space)), || {
        "non-selection emitted".into()
    })
}

/// Every pushforward of an enumerated selection lies in the exact set, and
/// every member is realised by some selection.
pub fn distribution_set_membership(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let n = rng.gen_range(1..=5);
    let space = generate::random_space(rng, n, 5);
    let m = rng.gen_range(1..=3);
    let f = generate::random_correspondence(rng, &space, m, 0.0);
    let set = core(distribution_set(&f, &space, 1_000_000, 0))?;
    ensure(set.is_exact(), || "small set not exact".into())?;
    let mut hit = vec![false; set.len()];
    for g in core(enumerate_selections(&f, &space))? {
        let d = core(g.pushforward(&space))?;
        let k = set
            .position_within(&d, 1e-12)
            .ok_or_else(|| format!("pushforward {:?} missing", d.mass()))?;
        hit[k] = true;
    }
    ensure(hit.iter().all(|&h| h), || "member without selection".into())
}

fn finest_full(rng: &mut ChaCha8Rng, n: usize, m: usize) -> (FiniteProbSpace, Correspondence) {
    let atoms = generate::names("t", n);
    let space = FiniteProbSpace::new(atoms, generate::dyadic_weights(rng, n, 3)).expect("valid");
    let f = generate::random_correspondence(rng, &space, m, 0.0);
    (space, f)
}

/// Refining a space only adds distribution-set members without moving the
/// hull, so the gap cannot grow.
pub fn gap_monotone(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let n = rng.gen_range(1..=3);
    let m = rng.gen_range(2..=3);
    let (space, f) = finest_full(rng, n, m);
    let mut last = f64::INFINITY;
    for k in [1, 2, 4] {
        let s = core(space.refine(k))?;
        let values: Vec<ActionSet> = (0..s.len()).map(|t| f.value(t / k).clone()).collect();
        let fk = core(Correspondence::new(s.atoms().to_vec(), f.codomain().clone(), values))?;
        let gap = core(convexification_gap(&core(distribution_set(&fk, &s, 1_000_000, 0))?))?;
        ensure(gap <= last + 1e-9, || format!("gap rose to {gap} from {last} at k={k}"))?;
        last = gap;
    }
    Ok(())
}

/// On ten uniform atoms: error within `|Y|/20` for hull targets and zero
/// for targets some selection realises.
pub fn purify_bound(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let space = FiniteProbSpace::uniform(10).expect("valid");
    let m = rng.gen_range(2..=4);
    let f = generate::random_correspondence(rng, &space, m, 0.0);
    let set = core(distribution_set(&f, &space, 1_000_000, 0))?;
    let members = set.members();
    let grid_target = members[rng.gen_range(0..members.len())].clone();
    let p = core(purify(&f, &space, &grid_target, 1e-12))?;
    ensure(p.error <= 1e-12, || format!("grid target error {}", p.error))?;
    let mut mass = vec![0.0; m];
    let picks = rng.gen_range(1..=4);
    let ws = generate::dyadic_weights(rng, picks, 3);
    for w in ws {
        let d = &members[rng.gen_range(0..members.len())];
        for (x, y) in mass.iter_mut().zip(d.mass()) {
            *x += w * y;
        }
    }
    let target = core(Distribution::new(f.codomain().clone(), mass))?;
    let p = core(purify(&f, &space, &target, 1e-12))?;
    let bound = m as f64 / 20.0;
    ensure(p.error <= bound + 1e-12, || format!("error {} above {bound}", p.error))?;
    ensure(p.selection.is_selection_of(&f, &space), || {
        "purified map not a selection".into()
    })
}

/// Every measurable constraint selection of a player, by per-cell choices.
pub fn oracle_strategies(space: &FiniteProbSpace, d: &Correspondence) -> Vec<Vec<usize>> {
    let cells = space.num_cells();
    let mut options: Vec<Vec<usize>> = vec![Vec::new(); cells];
    for t in 0..space.len() {
        if options[space.cell_of(t)].is_empty() {
            options[space.cell_of(t)] = d.value(t).iter().copied().collect();
        }
    }
    let mut out = vec![Vec::new()];
    for opts in &options {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<usize>| {
                opts.iter().map(move |&a| {
                    let mut p = prefix.clone();
                    p.push(a);
                    p
                })
            })
            .collect();
    }
    out.into_iter()
        .map(|per_cell| (0..space.len()).map(|t| per_cell[space.cell_of(t)]).collect())
        .collect()
}

/// `Σ_ω μ(ω) u_i(g(τ ω), χ_i ω)` coded directly over the joint's dense
/// weights, decoding tuples by hand.
pub fn oracle_payoff(game: &PrivateInfoGame, choice: &[Vec<usize>], i: usize) -> f64 {
    let joint = game.joint();
    let sizes: Vec<usize> = joint.factors().iter().map(|f| f.len()).collect();
    let mut total = 0.0;
    for (flat, &w) in joint.weights().iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let mut omega = vec![0; sizes.len()];
        let mut rest = flat;
        for f in (0..sizes.len()).rev() {
            omega[f] = rest % sizes[f];
            rest /= sizes[f];
        }
        let mut index = 0;
        for (j, p) in game.players().iter().enumerate() {
            index = index * p.actions().len() + choice[j][omega[2 * j]];
        }
        let p = game.player(i);
        total += w * p.payoff()[index * p.shocks().len() + omega[2 * i + 1]];
    }
    total
}

fn to_profile(game: &PrivateInfoGame, choice: &[Vec<usize>]) -> StrategyProfile {
    StrategyProfile::new(
        choice
            .iter()
            .enumerate()
            .map(|(j, c)| Selection::new(game.player(j).actions().clone(), c.clone()).expect("valid"))
            .collect(),
    )
}

fn all_choices(per_player: &[Vec<Vec<usize>>]) -> Vec<Vec<Vec<usize>>> {
    let mut out = vec![Vec::new()];
    for options in per_player {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<Vec<usize>>| {
                options.iter().map(move |o| {
                    let mut p = prefix.clone();
                    p.push(o.clone());
                    p
                })
            })
            .collect();
    }
    out
}

/// Profiles (as per-player choice vectors) that no unilateral deviation
/// improves by more than `eps`, found by scanning everything.
pub fn oracle_nash(game: &PrivateInfoGame, eps: f64) -> Vec<Vec<Vec<usize>>> {
    let per_player: Vec<Vec<Vec<usize>>> = game
        .players()
        .iter()
        .map(|p| oracle_strategies(p.types(), p.constraint()))
        .collect();
    all_choices(&per_player)
        .into_iter()
        .filter(|choice| {
            (0..per_player.len()).all(|i| {
                let base = oracle_payoff(game, choice, i);
                per_player[i].iter().all(|alt| {
                    let mut dev = choice.clone();
                    dev[i] = alt.clone();
                    oracle_payoff(game, &dev, i) <= base + eps
                })
            })
        })
        .collect()
}

pub fn payoff_oracle(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let game = generate::random_game(rng, GameShape::default());
    let per_player: Vec<Vec<Vec<usize>>> = game
        .players()
        .iter()
        .map(|p| oracle_strategies(p.types(), p.constraint()))
        .collect();
    let choice: Vec<Vec<usize>> = per_player
        .iter()
        .map(|o| o[rng.gen_range(0..o.len())].clone())
        .collect();
    let profile = to_profile(&game, &choice);
    for i in 0..game.num_players() {
        let got = core(game.expected_payoff(&profile, i))?;
        let want = oracle_payoff(&game, &choice, i);
        ensure((got - want).abs() <= 1e-12, || format!("player {i}: {got} vs {want}"))?;
    }
    Ok(())
}

pub fn nash_oracle(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let shape = GameShape {
        max_profiles: 64,
        ..GameShape::default()
    };
    let game = generate::random_game(rng, shape);
    let config = privecon_core::game::NashConfig {
        eps: 0.0,
        ..Default::default()
    };
    let search = game.find_nash(&config);
    let oracle = oracle_nash(&game, 0.0);
    ensure(search.profile.is_some() == !oracle.is_empty(), || {
        format!("search found {}, oracle {}", search.profile.is_some(), oracle.len())
    })?;
    if let Some(p) = &search.profile {
        ensure(core(game.is_nash(p, 0.0))?.is_nash, || {
            "returned profile fails is_nash".into()
        })?;
        let choice: Vec<Vec<usize>> = p.selections().iter().map(|g| g.choice().to_vec()).collect();
        ensure(oracle.contains(&choice), || "returned profile not in oracle set".into())?;
    }
    Ok(())
}

/// Both equilibrium conditions evaluated directly for every constraint
/// profile; returns the equilibrium profiles.
pub fn oracle_equilibria(eco: &EconomyInstance) -> Vec<Vec<Vec<usize>>> {
    let per_player: Vec<Vec<Vec<usize>>> = eco
        .players()
        .iter()
        .map(|p| oracle_strategies(p.types(), p.constraint()))
        .collect();
    all_choices(&per_player)
        .into_iter()
        .filter(|choice| {
            let lambdas: Vec<Distribution> = eco
                .players()
                .iter()
                .zip(choice)
                .map(|(p, c)| {
                    let mut mass = vec![0.0; p.actions().len()];
                    for (t, &a) in c.iter().enumerate() {
                        mass[a] += p.types().weight(t);
                    }
                    Distribution::new(p.actions().clone(), mass).expect("valid")
                })
                .collect();
            eco.players().iter().enumerate().all(|(i, p)| {
                (0..p.types().len()).filter(|&z| p.types().weight(z) > 0.0).all(|z| {
                    let alpha = eco.eval_correspondence(Which::Alpha, i, z, &lambdas).expect("valid");
                    let pref = eco
                        .eval_correspondence(Which::Preference, i, z, &lambdas)
                        .expect("valid");
                    alpha.contains(&choice[i][z]) && alpha.is_disjoint(&pref)
                })
            })
        })
        .collect()
}

pub fn certificate_reverify(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let eco = generate::random_economy(rng, EconomyShape::default());
    let search = core(eco.find_equilibrium(&Default::default()))?;
    let oracle = oracle_equilibria(&eco);
    if search.complete {
        ensure(search.certificate.is_some() == !oracle.is_empty(), || {
            format!("search found {}, oracle {}", search.certificate.is_some(), oracle.len())
        })?;
    }
    if let Some(c) = &search.certificate {
        ensure(core(c.reverify(&eco))?, || "certificate fails reverify".into())?;
        ensure(core(eco.is_equilibrium(&c.profile))?.is_some(), || {
            "profile fails is_equilibrium".into()
        })?;
    }
    Ok(())
}

fn random_lambdas(rng: &mut ChaCha8Rng, eco: &EconomyInstance) -> Vec<Distribution> {
    eco.players()
        .iter()
        .map(|p| {
            let m = p.actions().len();
            let w = generate::dyadic_weights(rng, m + 1, 5);
            Distribution::new(p.actions().clone(), {
                let mut v = w[..m].to_vec();
                v[0] += w[m];
                v
            })
            .expect("valid")
        })
        .collect()
}

/// `switch_F ⊆ α` at random evaluation points.
pub fn switch_inclusion(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let eco = generate::random_economy(rng, EconomyShape::default());
    for _ in 0..10 {
        let lambdas = random_lambdas(rng, &eco);
        let i = rng.gen_range(0..eco.num_players());
        let z = rng.gen_range(0..eco.player(i).types().len());
        let alpha = core(eco.eval_correspondence(Which::Alpha, i, z, &lambdas))?;
        match eco.switch_f(i, z, &lambdas) {
            Ok(s) => ensure(s.is_subset(&alpha), || format!("switch {s:?} not in alpha {alpha:?}"))?,
            // empty alpha is a hypothesis failure, not an inclusion failure
            Err(privecon_core::Error::Hypothesis(_)) => {}
            Err(e) => return Err(e.to_string()),
        }
    }
    Ok(())
}

/// With `P ≡ ∅` every point lies in `U_i`, so the switch is `α`; taking
/// `α` unconstrained leaves `Φ` equal to the constraint distribution sets
/// at every `λ`.
pub fn phi_constant(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let shape = EconomyShape {
        p_trivial: 1.0,
        ..EconomyShape::default()
    };
    let mut eco = generate::random_economy(rng, shape);
    let mut specs = eco.specs();
    for s in &mut specs {
        s.alpha = privecon_core::dsl::CorrespondenceSpec::all(s.actions.len());
    }
    eco = core(EconomyInstance::new(specs, eco.joint().clone()))?;
    let base: Vec<_> = (0..eco.num_players())
        .map(|i| eco.build_dd(i, 1_000_000, 0))
        .collect::<privecon_core::Result<_>>()
        .map_err(|e| e.to_string())?;
    for _ in 0..5 {
        let lambdas = random_lambdas(rng, &eco);
        let phi = core(eco.phi(&lambdas, 1_000_000, 0))?;
        ensure(phi == base, || "phi differs from constraint sets".into())?;
    }
    Ok(())
}

/// Gluing usc pieces along a region keeps usc below the region's
/// separation; likewise for lsc.
pub fn glue_modulus(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let n = rng.gen_range(2..=8);
    let (f1, f2, region) = generate::random_glue_triple(rng, n, 3);
    let glued = core(Correspondence::glue(&f1, &f2, &region))?;
    let sep = f1.metric().expect("has metric").separation(&region);
    let usc = core(f1.max_usc_modulus())?.min(core(f2.max_usc_modulus())?);
    let delta = usc.min(sep);
    ensure(core(glued.usc_modulus(delta))?, || format!("usc fails at {delta}"))?;
    let lsc = core(f1.max_lsc_modulus())?.min(core(f2.max_lsc_modulus())?);
    let delta = lsc.min(sep);
    ensure(core(glued.lsc_modulus(delta))?, || format!("lsc fails at {delta}"))
}

pub fn dsl_round_trip(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let depth = rng.gen_range(0..=4);
    let e = random_predicate(rng, depth);
    let text = e.print_canonical();
    let back = parse(&text).map_err(|err| format!("`{text}`: {err}"))?;
    ensure(back == e, || format!("`{text}` reparsed differently"))
}
