//! Acceptance suite: one PASS/FAIL line per criterion. Oracles here are
//! coded independently of the library's evaluators.

mod common;

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::Instant;

use privecon_cli::generate::{self, EconomyShape, GameShape};
use privecon_cli::instance::{self, Model};
use privecon_core::correspondence::{ActionSet, Correspondence};
use privecon_core::dsl::{CorrespondenceSpec, parse, random_predicate};
use privecon_core::economy::{EconomyInstance, Which};
use privecon_core::game::{NashConfig, PrivateInfoGame, StrategyProfile};
use privecon_core::measure::{Distribution, FiniteProbSpace};
use privecon_core::selection::{
    Selection, convexification_gap, distribution_set, enumerate_selections, hull_distance, purify,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond { Ok(()) } else { Err(msg()) }
}

fn core<T>(r: privecon_core::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

// ---------------------------------------------------------------- oracles

/// All measurable selections of `d` over `space`, as per-atom action lists.
fn oracle_selections(space: &FiniteProbSpace, d: &Correspondence) -> Vec<Vec<usize>> {
    let mut per_cell: Vec<Option<Vec<usize>>> = vec![None; space.num_cells()];
    for t in 0..space.len() {
        per_cell[space.cell_of(t)].get_or_insert_with(|| d.value(t).iter().copied().collect());
    }
    let per_cell: Vec<Vec<usize>> = per_cell.into_iter().map(Option::unwrap_or_default).collect();
    let total: usize = per_cell.iter().map(Vec::len).product();
    (0..total)
        .map(|mut code| {
            let mut choice = vec![0; per_cell.len()];
            for c in (0..per_cell.len()).rev() {
                choice[c] = per_cell[c][code % per_cell[c].len()];
                code /= per_cell[c].len();
            }
            (0..space.len()).map(|t| choice[space.cell_of(t)]).collect()
        })
        .collect()
}

fn product_of(lists: &[Vec<Vec<usize>>]) -> Vec<Vec<Vec<usize>>> {
    let total: usize = lists.iter().map(Vec::len).product();
    (0..total)
        .map(|mut code| {
            let mut pick = vec![Vec::new(); lists.len()];
            for j in (0..lists.len()).rev() {
                pick[j] = lists[j][code % lists[j].len()].clone();
                code /= lists[j].len();
            }
            pick
        })
        .collect()
}

/// Σ over every state of the joint of weight × payoff, walking states with
/// an odometer and reading the raw payoff table.
fn brute_payoff(game: &PrivateInfoGame, choice: &[Vec<usize>], i: usize) -> f64 {
    let joint = game.joint();
    let sizes: Vec<usize> = joint.factors().iter().map(|f| f.len()).collect();
    let mut omega = vec![0usize; sizes.len()];
    let mut total = 0.0;
    'states: loop {
        let w = joint.weights()[joint.flat_index(&omega).expect("in range")];
        if w != 0.0 {
            let mut row = 0;
            for (j, p) in game.players().iter().enumerate() {
                row = row * p.actions().len() + choice[j][omega[2 * j]];
            }
            let me = game.player(i);
            total += w * me.payoff()[row * me.shocks().len() + omega[2 * i + 1]];
        }
        for f in (0..sizes.len()).rev() {
            omega[f] += 1;
            if omega[f] < sizes[f] {
                continue 'states;
            }
            omega[f] = 0;
        }
        break;
    }
    total
}

fn brute_nash(game: &PrivateInfoGame) -> Vec<Vec<Vec<usize>>> {
    let options: Vec<Vec<Vec<usize>>> = game
        .players()
        .iter()
        .map(|p| oracle_selections(p.types(), p.constraint()))
        .collect();
    product_of(&options)
        .into_iter()
        .filter(|choice| {
            (0..options.len()).all(|i| {
                let base = brute_payoff(game, choice, i);
                options[i].iter().all(|alt| {
                    let mut dev = choice.clone();
                    dev[i] = alt.clone();
                    brute_payoff(game, &dev, i) <= base
                })
            })
        })
        .collect()
}

fn pushforward_by_hand(space: &FiniteProbSpace, actions: &privecon_core::Labels, choice: &[usize]) -> Distribution {
    let mut mass = vec![0.0; actions.len()];
    for (t, &a) in choice.iter().enumerate() {
        mass[a] += space.weight(t);
    }
    Distribution::new(actions.clone(), mass).expect("valid")
}

/// Profiles satisfying both equilibrium conditions at every positive-weight
/// type, by scanning all constraint profiles.
fn brute_equilibria(eco: &EconomyInstance) -> Vec<Vec<Vec<usize>>> {
    let options: Vec<Vec<Vec<usize>>> = eco
        .players()
        .iter()
        .map(|p| oracle_selections(p.types(), p.constraint()))
        .collect();
    product_of(&options)
        .into_iter()
        .filter(|choice| {
            let lambdas: Vec<Distribution> = eco
                .players()
                .iter()
                .zip(choice)
                .map(|(p, c)| pushforward_by_hand(p.types(), p.actions(), c))
                .collect();
            eco.players().iter().enumerate().all(|(i, p)| {
                (0..p.types().len()).all(|z| {
                    if p.types().weight(z) == 0.0 {
                        return true;
                    }
                    let alpha = eco.eval_correspondence(Which::Alpha, i, z, &lambdas).expect("eval");
                    let pref = eco
                        .eval_correspondence(Which::Preference, i, z, &lambdas)
                        .expect("eval");
                    alpha.contains(&choice[i][z]) && alpha.intersection(&pref).next().is_none()
                })
            })
        })
        .collect()
}

fn to_profile(actions: &[privecon_core::Labels], choice: &[Vec<usize>]) -> StrategyProfile {
    StrategyProfile::new(
        actions
            .iter()
            .zip(choice)
            .map(|(a, c)| Selection::new(a.clone(), c.clone()).expect("valid"))
            .collect(),
    )
}

// ---------------------------------------------------------------- criteria

fn c1_convexification() -> Outcome {
    for n in [1usize, 2, 4, 8, 16] {
        let (space, f) = generate::canonical_family(n);
        let set = core(distribution_set(&f, &space, 1_000_000, 0))?;
        // oracle: every selection's mass on `a`, then half the widest gap
        let mut masses: Vec<f64> = oracle_selections(&space, &f)
            .iter()
            .map(|c| c.iter().filter(|&&a| a == 0).count() as f64 / n as f64)
            .collect();
        masses.sort_by(f64::total_cmp);
        masses.dedup();
        let oracle = masses.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max) / 2.0;
        let gap = core(convexification_gap(&set))?;
        let want = 1.0 / (2.0 * n as f64);
        check(gap == want && oracle == want, || {
            format!("n={n}: gap {gap}, oracle {oracle}, want {want}")
        })?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for case in 0..100 {
        let n = rng.gen_range(1..=3);
        let m = rng.gen_range(2..=3);
        let space =
            FiniteProbSpace::new(generate::names("t", n), generate::dyadic_weights(&mut rng, n, 3)).expect("valid");
        let f = generate::random_correspondence(&mut rng, &space, m, 0.0);
        let mut last = f64::INFINITY;
        for k in [1, 2, 4] {
            let s = core(space.refine(k))?;
            let values: Vec<ActionSet> = (0..s.len()).map(|t| f.value(t / k).clone()).collect();
            let fk = core(Correspondence::new(s.atoms().to_vec(), f.codomain().clone(), values))?;
            let gap = core(convexification_gap(&core(distribution_set(&fk, &s, 1_000_000, 0))?))?;
            check(gap <= last + 1e-12, || {
                format!("family {case}: gap {gap} > {last} at k={k}")
            })?;
            last = gap;
        }
    }
    Ok("gaps 1/(2n) for n=1..16; monotone on 100 families".into())
}

fn c2_selection_existence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let mut empty_cases = 0;
    for case in 0..1000 {
        let n = rng.gen_range(1..=6);
        let space = generate::random_space(&mut rng, n, 4);
        let m = rng.gen_range(1..=3);
        let f = generate::random_correspondence(&mut rng, &space, m, 0.15);
        let mut product = 1usize;
        let mut seen = BTreeSet::new();
        for t in 0..space.len() {
            if seen.insert(space.cell_of(t)) {
                product *= f.value(t).len();
            }
        }
        let count = core(enumerate_selections(&f, &space))?.count();
        let all_nonempty = f.values().iter().all(|v| !v.is_empty());
        if !all_nonempty {
            empty_cases += 1;
        }
        check(count == product, || {
            format!("case {case}: {count} selections, expected {product}")
        })?;
        check((count > 0) == all_nonempty, || {
            format!("case {case}: existence mismatch")
        })?;
    }
    Ok(format!("1000 correspondences ({empty_cases} with an empty value)"))
}

fn random_choice(rng: &mut ChaCha8Rng, game: &PrivateInfoGame) -> Vec<Vec<usize>> {
    game.players()
        .iter()
        .map(|p| {
            let opts = oracle_selections(p.types(), p.constraint());
            opts[rng.gen_range(0..opts.len())].clone()
        })
        .collect()
}

fn c3_payoff_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let mut worst: f64 = 0.0;
    for case in 0..500 {
        let game = generate::random_game(&mut rng, GameShape::default());
        let choice = random_choice(&mut rng, &game);
        let actions: Vec<_> = game.players().iter().map(|p| p.actions().clone()).collect();
        let profile = to_profile(&actions, &choice);
        for i in 0..game.num_players() {
            let got = core(game.expected_payoff(&profile, i))?;
            let want = brute_payoff(&game, &choice, i);
            let d = (got - want).abs();
            worst = worst.max(d);
            check(d <= 1e-12, || format!("game {case}, player {i}: {got} vs {want}"))?;
        }
    }
    Ok(format!("500 games, max |Δ| = {worst:e}"))
}

fn c4_nash_search() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let shape = GameShape {
        max_profiles: 64,
        ..GameShape::default()
    };
    let small = GameShape {
        max_types: 1,
        max_shocks: 1,
        ..shape
    };
    let config = NashConfig {
        eps: 0.0,
        ..NashConfig::default()
    };
    let mut with_eq = 0;
    for case in 0..200 {
        // odd cases are small complete-information games, where pure equilibria often fail to exist
        let game = loop {
            let g = generate::random_game(&mut rng, if case % 2 == 0 { shape } else { small });
            if case % 2 == 0 || g.num_players() >= 2 {
                break g;
            }
        };
        let oracle = brute_nash(&game);
        let search = game.find_nash(&config);
        check(search.profile.is_some() == !oracle.is_empty(), || {
            format!(
                "game {case}: search {}, oracle {}",
                search.profile.is_some(),
                oracle.len()
            )
        })?;
        if let Some(p) = &search.profile {
            with_eq += 1;
            check(core(game.is_nash(p, 0.0))?.is_nash, || {
                format!("game {case}: returned profile fails is_nash")
            })?;
            let choice: Vec<Vec<usize>> = p.selections().iter().map(|g| g.choice().to_vec()).collect();
            check(oracle.contains(&choice), || {
                format!("game {case}: returned profile unknown to oracle")
            })?;
        }
    }
    for (name, expect) in [("game_pennies", false), ("game_dominant", true)] {
        let inst = instance::load(&common::instances_dir().join(format!("{name}.json"))).map_err(|e| e.to_string())?;
        let Model::Game(game) = inst.model else {
            return Err(format!("{name} is not a game"));
        };
        let found = game.find_nash(&config).profile.is_some();
        let oracle = !brute_nash(&game).is_empty();
        check(found == expect && oracle == expect, || {
            format!("{name}: search {found}, oracle {oracle}, expected {expect}")
        })?;
    }
    Ok(format!(
        "200 random games, {with_eq} with a pure equilibrium; pennies has none, dominant has one"
    ))
}

fn c5_equilibrium_pipeline() -> Outcome {
    let mut economies = Vec::new();
    for path in common::golden_instances() {
        let inst = instance::load(&path).map_err(|e| e.to_string())?;
        if let Model::Economy(e) = inst.model {
            let name = path.file_stem().unwrap().to_string_lossy().into_owned();
            economies.push((format!("{name}@2"), e.refine_types(2).map_err(|e| e.to_string())?));
            economies.push((name, e));
        }
    }
    let library = economies.len() / 2;
    check(library >= 10, || format!("only {library} hand-built economies"))?;
    let mut found = 0;
    for (name, eco) in &economies {
        let oracle = brute_equilibria(eco);
        let search = core(eco.find_equilibrium(&Default::default()))?;
        check(search.complete, || format!("{name}: search incomplete"))?;
        check(search.certificate.is_some() == !oracle.is_empty(), || {
            format!(
                "{name}: search {}, oracle {}",
                search.certificate.is_some(),
                oracle.len()
            )
        })?;
        if let Some(c) = &search.certificate {
            found += 1;
            check(core(c.reverify(eco))?, || format!("{name}: certificate fails reverify"))?;
            let choice: Vec<Vec<usize>> = c.profile.selections().iter().map(|g| g.choice().to_vec()).collect();
            check(oracle.contains(&choice), || {
                format!("{name}: certified profile unknown to oracle")
            })?;
        }
    }
    Ok(format!(
        "{library} economies (+{library} refined), {found}/{} with a certificate",
        economies.len()
    ))
}

fn random_lambdas(rng: &mut ChaCha8Rng, eco: &EconomyInstance) -> Vec<Distribution> {
    eco.players()
        .iter()
        .map(|p| {
            let m = p.actions().len();
            let cuts = generate::dyadic_weights(rng, m + 1, 5);
            let mut mass = cuts[..m].to_vec();
            mass[0] += cuts[m];
            Distribution::new(p.actions().clone(), mass).expect("valid")
        })
        .collect()
}

fn c6_switching() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    let mut evaluated = 0;
    let mut skipped = 0;
    while evaluated < 10_000 {
        let eco = generate::random_economy(&mut rng, EconomyShape::default());
        for _ in 0..10 {
            let lambdas = random_lambdas(&mut rng, &eco);
            let i = rng.gen_range(0..eco.num_players());
            let z = rng.gen_range(0..eco.player(i).types().len());
            let alpha = core(eco.eval_correspondence(Which::Alpha, i, z, &lambdas))?;
            match eco.switch_f(i, z, &lambdas) {
                Ok(s) => {
                    evaluated += 1;
                    check(s.is_subset(&alpha), || {
                        format!("switch {s:?} not within alpha {alpha:?}")
                    })?;
                }
                Err(privecon_core::Error::Hypothesis(_)) => skipped += 1,
                Err(e) => return Err(e.to_string()),
            }
        }
    }
    let shape = EconomyShape {
        p_trivial: 1.0,
        ..EconomyShape::default()
    };
    for case in 0..100 {
        let base = generate::random_economy(&mut rng, shape);
        let mut specs = base.specs();
        for s in &mut specs {
            s.alpha = CorrespondenceSpec::all(s.actions.len());
        }
        let eco = core(EconomyInstance::new(specs, base.joint().clone()))?;
        let constant = (0..eco.num_players())
            .map(|i| eco.build_dd(i, 1_000_000, 0))
            .collect::<privecon_core::Result<Vec<_>>>()
            .map_err(|e| e.to_string())?;
        for _ in 0..10 {
            let lambdas = random_lambdas(&mut rng, &eco);
            let phi = core(eco.phi(&lambdas, 1_000_000, 0))?;
            check(phi == constant, || {
                format!("economy {case}: phi differs from the constraint sets")
            })?;
        }
    }
    Ok(format!(
        "{evaluated} switch evaluations ({skipped} empty-alpha points skipped); phi constant on 100 economies"
    ))
}

fn c7_purification() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    let space = FiniteProbSpace::uniform(10).expect("valid");
    let mut worst_ratio: f64 = 0.0;
    let mut grid_targets = 0;
    for case in 0..100 {
        let m = rng.gen_range(2..=4);
        let f = generate::random_correspondence(&mut rng, &space, m, 0.0);
        let set = core(distribution_set(&f, &space, 1_000_000, 0))?;
        let members = set.members();
        let mut mass = vec![0.0; m];
        let k = rng.gen_range(1..=5);
        let ws = generate::dyadic_weights(&mut rng, k, 4);
        for w in ws {
            let d = &members[rng.gen_range(0..members.len())];
            for (x, y) in mass.iter_mut().zip(d.mass()) {
                *x += w * y;
            }
        }
        let target = core(Distribution::new(f.codomain().clone(), mass))?;
        let p = core(purify(&f, &space, &target, 1e-12))?;
        let bound = m as f64 / 20.0;
        worst_ratio = worst_ratio.max(p.error / bound);
        check(p.error <= bound + 1e-12, || {
            format!("case {case}: error {} > {bound}", p.error)
        })?;
        check(p.selection.is_selection_of(&f, &space), || {
            format!("case {case}: not a selection")
        })?;
        // grid targets: masses in tenths that lie in the hull
        for _ in 0..5 {
            let mut counts = vec![0usize; m];
            for _ in 0..10 {
                counts[rng.gen_range(0..m)] += 1;
            }
            let grid = core(Distribution::new(
                f.codomain().clone(),
                counts.iter().map(|&c| c as f64 / 10.0).collect(),
            ))?;
            if core(hull_distance(&f, &space, &grid))? > 1e-12 {
                continue;
            }
            grid_targets += 1;
            let p = core(purify(&f, &space, &grid, 1e-12))?;
            check(p.error <= 1e-12, || {
                format!("case {case}: grid target error {}", p.error)
            })?;
        }
    }
    Ok(format!(
        "100 hull targets (worst error/bound {worst_ratio:.3}); {grid_targets} grid targets exact"
    ))
}

/// `G(x') ⊆ G(x)` whenever `d(x, x') < delta`, checked pair by pair.
fn usc_by_hand(g: &Correspondence, delta: f64) -> bool {
    let grid = g.metric().expect("metric");
    (0..g.len())
        .all(|x| (0..g.len()).all(|y| x == y || grid.distance(x, y) >= delta || g.value(y).is_subset(g.value(x))))
}

fn lsc_by_hand(g: &Correspondence, delta: f64) -> bool {
    let grid = g.metric().expect("metric");
    (0..g.len())
        .all(|x| (0..g.len()).all(|y| x == y || grid.distance(x, y) >= delta || g.value(x).is_subset(g.value(y))))
}

fn c8_gluing() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(108);
    let mut nontrivial = 0;
    for case in 0..1000 {
        let n = rng.gen_range(2..=8);
        let (f1, f2, region) = generate::random_glue_triple(&mut rng, n, 3);
        let glued = core(Correspondence::glue(&f1, &f2, &region))?;
        let sep = f1.metric().expect("metric").separation(&region);
        let du = core(f1.max_usc_modulus())?.min(core(f2.max_usc_modulus())?).min(sep);
        let dl = core(f1.max_lsc_modulus())?.min(core(f2.max_lsc_modulus())?).min(sep);
        if du.is_finite() && du > 1.0 {
            nontrivial += 1;
        }
        check(core(glued.usc_modulus(du))? && usc_by_hand(&glued, du), || {
            format!("case {case}: usc fails at {du}")
        })?;
        check(core(glued.lsc_modulus(dl))? && lsc_by_hand(&glued, dl), || {
            format!("case {case}: lsc fails at {dl}")
        })?;
    }
    Ok(format!(
        "1000 triples ({nontrivial} with a usc modulus beyond the grid spacing)"
    ))
}

fn c9_independence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(109);
    let shape = GameShape {
        p_correlated: 0.0,
        ..GameShape::default()
    };
    for case in 0..100 {
        let game = generate::random_game(&mut rng, shape);
        let audit = core(game.audit(1e-12))?;
        for p in &audit.players {
            check(
                p.independence.atom_deviation == 0.0 && p.independence.tv_deviation == 0.0,
                || format!("product game {case}: deviation {:?}", p.independence),
            )?;
        }
    }
    let inst =
        instance::load(&common::instances_dir().join("game_correlated_coins.json")).map_err(|e| e.to_string())?;
    let Model::Game(game) = inst.model else {
        return Err("correlated coins is not a game".into());
    };
    let audit = core(game.audit(1e-12))?;
    for p in &audit.players {
        let d = p.independence;
        check(d.atom_deviation == 0.25 && d.tv_deviation == 0.5, || {
            format!(
                "correlated coins deviation {} (tv {})",
                d.atom_deviation, d.tv_deviation
            )
        })?;
    }
    Ok("100 product games at 0; correlated coins at 0.25 per atom (tv 0.5)".into())
}

fn c10_dsl_and_golden() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(110);
    for case in 0..10_000 {
        let depth = rng.gen_range(0..=4);
        let e = random_predicate(&mut rng, depth);
        let text = e.print_canonical();
        let back = parse(&text).map_err(|err| format!("case {case}: `{text}`: {err}"))?;
        check(back == e, || format!("case {case}: `{text}` reparsed differently"))?;
    }
    let runs = common::golden_runs();
    let mut compared = 0;
    for (name, args) in &runs {
        let first = common::run_args(args).map_err(|e| format!("{name}: {e}"))?;
        let second = common::run_args(args).map_err(|e| format!("{name}: {e}"))?;
        check(first == second, || format!("{name}: reports differ between runs"))?;
        if let Ok(stored) = std::fs::read_to_string(common::expected_path(name)) {
            compared += 1;
            check(stored == first, || {
                format!("{name}: report differs from the stored copy")
            })?;
        }
    }
    check(compared == runs.len(), || {
        format!("{} of {} stored reports missing", runs.len() - compared, runs.len())
    })?;
    Ok(format!(
        "10000 round-trips; {} golden reports byte-identical across runs and to stored copies",
        runs.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("convexification gap", c1_convexification),
        ("selection existence and count", c2_selection_existence),
        ("expected payoff oracle", c3_payoff_oracle),
        ("Nash search soundness and completeness", c4_nash_search),
        ("equilibrium pipeline", c5_equilibrium_pipeline),
        ("switching correspondence", c6_switching),
        ("purification bound", c7_purification),
        ("gluing modulus", c8_gluing),
        ("independence audit", c9_independence),
        ("DSL round-trip and golden determinism", c10_dsl_and_golden),
    ];
    let mut failures = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {:>2}  {name}: {detail} [{secs:.1}s]", k + 1),
            Err(why) => {
                failures += 1;
                println!("FAIL  {:>2}  {name}: {why} [{secs:.1}s]", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
