//! Random instance generators shared by `props` and the test suites.
//! Weights are dyadic so sums and payoff expectations stay exact.

use std::collections::BTreeSet;

use privecon_core::correspondence::{ActionSet, Correspondence, MetricGrid};
use privecon_core::dsl::{CorrespondenceSpec, Expr, random_predicate};
use privecon_core::economy::{EconomyInstance, EconomyPlayerSpec};
use privecon_core::game::{PlayerSpec, PrivateInfoGame, TypeSpec, joint_factors};
use privecon_core::measure::{FiniteProbSpace, Labels, ProductSpace, labels};
use rand::Rng;

/// `n` positive weights, multiples of `1/2^bits`, summing to 1.
pub fn dyadic_weights<R: Rng + ?Sized>(rng: &mut R, n: usize, bits: u32) -> Vec<f64> {
    let total = 1u64 << bits;
    assert!(n as u64 <= total, "too many atoms for {bits} bits");
    let mut counts = vec![1u64; n];
    for _ in 0..total - n as u64 {
        counts[rng.gen_range(0..n)] += 1;
    }
    counts.into_iter().map(|c| c as f64 / total as f64).collect()
}

pub fn names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|k| format!("{prefix}{k}")).collect()
}

/// Random cell partition of `n` atoms into at most `max_cells` cells named
/// `c0..`, returned as labels in first-use order.
pub fn random_cells<R: Rng + ?Sized>(rng: &mut R, n: usize, max_cells: usize) -> Vec<String> {
    let mut used = 0;
    (0..n)
        .map(|_| {
            let c = rng.gen_range(0..=used.min(max_cells - 1));
            if c == used {
                used += 1;
            }
            format!("c{c}")
        })
        .collect()
}

pub fn random_space<R: Rng + ?Sized>(rng: &mut R, n: usize, max_cells: usize) -> FiniteProbSpace {
    let cells = random_cells(rng, n, max_cells);
    FiniteProbSpace::with_cell_labels(names("t", n), dyadic_weights(rng, n, 6), &cells)
        .expect("generated space is valid")
}

/// Random subset of `0..m`, empty with probability `p_empty`, else nonempty.
pub fn random_set<R: Rng + ?Sized>(rng: &mut R, m: usize, p_empty: f64) -> ActionSet {
    if rng.gen_bool(p_empty) {
        return ActionSet::new();
    }
    loop {
        let s: ActionSet = (0..m).filter(|_| rng.gen_bool(0.5)).collect();
        if !s.is_empty() {
            return s;
        }
    }
}

/// Cell-measurable correspondence on `space` into `m` actions.
pub fn random_correspondence<R: Rng + ?Sized>(
    rng: &mut R,
    space: &FiniteProbSpace,
    m: usize,
    p_empty: f64,
) -> Correspondence {
    let per_cell: Vec<ActionSet> = (0..space.num_cells()).map(|_| random_set(rng, m, p_empty)).collect();
    Correspondence::new(
        space.atoms().to_vec(),
        labels(&names("a", m)),
        space.cell_assignment().iter().map(|&c| per_cell[c].clone()).collect(),
    )
    .expect("generated correspondence is valid")
}

/// `n` uniform finest atoms, two actions, full values.
pub fn canonical_family(n: usize) -> (FiniteProbSpace, Correspondence) {
    let space = FiniteProbSpace::uniform(n).expect("n > 0");
    let f = Correspondence::new(
        space.atoms().to_vec(),
        labels(&["a", "b"]),
        vec![[0, 1].into_iter().collect(); n],
    )
    .expect("valid");
    (space, f)
}

#[derive(Debug, Clone, Copy)]
pub struct GameShape {
    pub max_players: usize,
    pub max_types: usize,
    pub max_shocks: usize,
    pub max_actions: usize,
    /// Upper bound on the number of pure strategy profiles.
    pub max_profiles: u128,
    /// Probability of a correlated (non-product) joint.
    pub p_correlated: f64,
}

impl Default for GameShape {
    fn default() -> Self {
        Self {
            max_players: 3,
            max_types: 3,
            max_shocks: 2,
            max_actions: 3,
            max_profiles: u128::MAX,
            p_correlated: 0.5,
        }
    }
}

/// Random game with integer payoffs in `-5..=5` and dyadic joint weights.
pub fn random_game<R: Rng + ?Sized>(rng: &mut R, shape: GameShape) -> PrivateInfoGame {
    loop {
        let n = rng.gen_range(1..=shape.max_players);
        let action_counts: Vec<usize> = (0..n).map(|_| rng.gen_range(1..=shape.max_actions)).collect();
        let profiles: usize = action_counts.iter().product();
        let mut specs = Vec::with_capacity(n);
        for (i, &m) in action_counts.iter().enumerate() {
            let nt = rng.gen_range(1..=shape.max_types);
            let nx = rng.gen_range(1..=shape.max_shocks);
            let cells = random_cells(rng, nt, nt);
            let types = TypeSpec::from_labels(names("t", nt), &cells).expect("valid");
            let per_cell: Vec<ActionSet> = (0..types.cell_labels.len()).map(|_| random_set(rng, m, 0.0)).collect();
            specs.push(PlayerSpec {
                name: format!("p{}", i + 1),
                constraint: types.cell_of.iter().map(|&c| per_cell[c].clone()).collect(),
                types,
                shocks: names("x", nx),
                actions: names("a", m),
                payoff: (0..profiles * nx).map(|_| rng.gen_range(-5..=5) as f64).collect(),
            });
        }
        let factors = joint_factors(&specs);
        let joint = if rng.gen_bool(shape.p_correlated) {
            random_joint(rng, factors)
        } else {
            let parts: Vec<(Labels, Vec<f64>)> = factors
                .into_iter()
                .map(|f| {
                    let w = dyadic_weights(rng, f.len(), 4);
                    (f, w)
                })
                .collect();
            ProductSpace::product(&parts).expect("valid")
        };
        let game = PrivateInfoGame::new(specs, joint).expect("generated game is valid");
        if game.profile_count() <= shape.max_profiles {
            return game;
        }
    }
}

/// Joint on the full product with random dyadic weights, some atoms null.
/// Every factor label keeps positive marginal mass.
pub fn random_joint<R: Rng + ?Sized>(rng: &mut R, factors: Vec<Labels>) -> ProductSpace {
    let size: usize = factors.iter().map(|f| f.len()).product();
    loop {
        let live: Vec<usize> = (0..size).filter(|_| rng.gen_bool(0.6)).collect();
        if live.is_empty() {
            continue;
        }
        let ws = dyadic_weights(rng, live.len(), 10);
        let mut dense = vec![0.0; size];
        for (&k, w) in live.iter().zip(ws) {
            dense[k] = w;
        }
        let joint = ProductSpace::from_dense(factors.clone(), dense).expect("valid");
        let covered = (0..factors.len()).all(|f| {
            joint
                .marginal(f)
                .map(|m| m.mass().iter().all(|&w| w > 0.0))
                .unwrap_or(false)
        });
        if covered {
            return joint;
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EconomyShape {
    pub max_players: usize,
    pub max_types: usize,
    pub max_actions: usize,
    pub depth: u32,
    /// Probability that a player's `P` is identically false.
    pub p_trivial: f64,
}

impl Default for EconomyShape {
    fn default() -> Self {
        Self {
            max_players: 2,
            max_types: 2,
            max_actions: 2,
            depth: 2,
            p_trivial: 0.2,
        }
    }
}

/// Random economy whose predicates reference players `1..=3`, actions
/// `a0..a3`, and cells `c0..c3`; unknown references read as mass 0.
pub fn random_economy<R: Rng + ?Sized>(rng: &mut R, shape: EconomyShape) -> EconomyInstance {
    let n = rng.gen_range(1..=shape.max_players);
    let mut specs = Vec::with_capacity(n);
    for i in 0..n {
        let m = rng.gen_range(1..=shape.max_actions);
        let nt = rng.gen_range(1..=shape.max_types);
        let cells = random_cells(rng, nt, nt);
        let types = TypeSpec::from_labels(names("t", nt), &cells).expect("valid");
        let per_cell: Vec<ActionSet> = (0..types.cell_labels.len()).map(|_| random_set(rng, m, 0.0)).collect();
        let preds = |rng: &mut R| -> Vec<Expr> { (0..m).map(|_| random_predicate(rng, shape.depth)).collect() };
        let alpha = CorrespondenceSpec::new(preds(rng));
        let preference = if rng.gen_bool(shape.p_trivial) {
            CorrespondenceSpec::none(m)
        } else {
            CorrespondenceSpec::new(preds(rng))
        };
        specs.push(EconomyPlayerSpec {
            name: format!("p{}", i + 1),
            constraint: types.cell_of.iter().map(|&c| per_cell[c].clone()).collect(),
            types,
            actions: names("a", m),
            alpha,
            preference,
            selector: None,
        });
    }
    let parts: Vec<(Labels, Vec<f64>)> = specs
        .iter()
        .map(|s| {
            let w = dyadic_weights(rng, s.types.len(), 4);
            (labels(&s.types.atoms), w)
        })
        .collect();
    let joint = ProductSpace::product(&parts).expect("valid");
    EconomyInstance::new(specs, joint).expect("generated economy is valid")
}

/// A random line grid of `n` points with integer positions in `0..4n`.
pub fn random_line<R: Rng + ?Sized>(rng: &mut R, n: usize) -> MetricGrid {
    let mut pos = BTreeSet::new();
    while pos.len() < n {
        pos.insert(rng.gen_range(0..4 * n as u32));
    }
    let positions: Vec<f64> = pos.into_iter().map(f64::from).collect();
    MetricGrid::line(&positions).expect("distinct positions")
}

/// `(F1, F2, A)` on a shared random line grid with `F2 ⊆ F1` on `A`.
pub fn random_glue_triple<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    m: usize,
) -> (Correspondence, Correspondence, BTreeSet<usize>) {
    let grid = random_line(rng, n);
    let domain = grid.points().to_vec();
    let ys = labels(&names("a", m));
    let v1: Vec<ActionSet> = (0..n).map(|_| random_set(rng, m, 0.1)).collect();
    let region: BTreeSet<usize> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
    let v2: Vec<ActionSet> = (0..n)
        .map(|x| {
            let s = random_set(rng, m, 0.1);
            if region.contains(&x) {
                s.intersection(&v1[x]).copied().collect()
            } else {
                s
            }
        })
        .collect();
    let f1 = Correspondence::new(domain.clone(), ys.clone(), v1)
        .and_then(|f| f.with_metric(grid.clone()))
        .expect("valid");
    let f2 = Correspondence::new(domain, ys, v2)
        .and_then(|f| f.with_metric(grid))
        .expect("valid");
    (f1, f2, region)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dyadic_weights_sum_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 1..20 {
            let w = dyadic_weights(&mut rng, n, 6);
            assert_eq!(w.iter().sum::<f64>(), 1.0);
            assert!(w.iter().all(|&x| x > 0.0));
        }
    }

    #[test]
    fn games_respect_profile_cap() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let shape = GameShape {
            max_profiles: 64,
            ..GameShape::default()
        };
        for _ in 0..50 {
            assert!(random_game(&mut rng, shape).profile_count() <= 64);
        }
    }

    #[test]
    fn glue_triples_meet_containment() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let (f1, f2, a) = random_glue_triple(&mut rng, 6, 3);
            assert!(Correspondence::glue(&f1, &f2, &a).is_ok());
        }
    }
}
