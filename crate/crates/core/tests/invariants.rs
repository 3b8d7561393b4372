use privecon_core::dsl::{parse, random_predicate};
use privecon_core::hull::{covering_radius, hull_distance, max_transport};
use privecon_core::measure::labels;
use privecon_core::selection::{cell_values, distribution_set, enumerate_selections, selection_count};
use privecon_core::{ActionSet, Correspondence, Distribution, FiniteProbSpace};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Positive integer counts turned into weights that sum to 1.
fn weights(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1u32..16, n).prop_map(|c| {
        let total: u32 = c.iter().sum();
        c.into_iter().map(|x| f64::from(x) / f64::from(total)).collect()
    })
}

fn distribution(m: usize) -> impl Strategy<Value = Distribution> {
    weights(m).prop_map(move |w| {
        let names: Vec<String> = (0..m).map(|k| format!("a{k}")).collect();
        Distribution::new(labels(&names), w).unwrap()
    })
}

/// A space with up to 5 atoms, a cell labelling, and a correspondence
/// into 3 actions constant on cells.
fn space_and_correspondence() -> impl Strategy<Value = (FiniteProbSpace, Correspondence)> {
    (1usize..=5).prop_flat_map(|n| {
        (
            weights(n),
            prop::collection::vec(0usize..3, n),
            prop::collection::vec(prop::collection::btree_set(0usize..3, 0..=3), 3),
        )
            .prop_map(move |(w, cells, per_cell)| {
                let atoms: Vec<String> = (0..n).map(|k| format!("t{k}")).collect();
                let cell_names: Vec<String> = cells.iter().map(|c| format!("c{c}")).collect();
                let space = FiniteProbSpace::with_cell_labels(atoms.clone(), w, &cell_names).unwrap();
                let values: Vec<ActionSet> = cells.iter().map(|&c| per_cell[c].clone()).collect();
                let f = Correspondence::new(atoms, labels(&["a", "b", "c"]), values).unwrap();
                (space, f)
            })
    })
}

proptest! {
    #[test]
    fn tv_is_a_metric(p in distribution(3), q in distribution(3), r in distribution(3)) {
        let pq = p.tv_distance(&q).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&pq));
        prop_assert_eq!(pq, q.tv_distance(&p).unwrap());
        prop_assert_eq!(p.tv_distance(&p).unwrap(), 0.0);
        let via = pq + q.tv_distance(&r).unwrap();
        prop_assert!(p.tv_distance(&r).unwrap() <= via + 1e-12);
    }

    #[test]
    fn refinement_splits_weight_evenly(w in weights(4), k in 1usize..5) {
        let atoms: Vec<String> = (0..4).map(|i| format!("t{i}")).collect();
        let space = FiniteProbSpace::new(atoms, w).unwrap();
        let fine = space.refine(k).unwrap();
        prop_assert_eq!(fine.len(), 4 * k);
        let total: f64 = fine.weights().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!((fine.atomicity_level() - space.atomicity_level() / k as f64).abs() < 1e-12);
    }

    #[test]
    fn selections_are_counted_and_measurable((space, f) in space_and_correspondence()) {
        let values = cell_values(&f, &space).unwrap();
        let selections: Vec<_> = enumerate_selections(&f, &space).unwrap().collect();
        prop_assert_eq!(selections.len() as u128, selection_count(&values));
        for s in &selections {
            prop_assert!(s.is_measurable(&space));
            prop_assert!(s.is_selection_of(&f, &space));
            let d = s.pushforward(&space).unwrap();
            prop_assert!((d.mass().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn every_pushforward_is_a_member((space, f) in space_and_correspondence()) {
        let set = distribution_set(&f, &space, 1_000_000, 0).unwrap();
        prop_assert!(set.is_exact());
        for s in enumerate_selections(&f, &space).unwrap() {
            prop_assert!(set.contains(&s.pushforward(&space).unwrap(), 1e-9));
        }
    }

    #[test]
    fn members_lie_in_their_hull(points in prop::collection::vec(distribution(3), 1..6), c in distribution(2)) {
        let raw: Vec<Vec<f64>> = points.iter().map(|d| d.mass().to_vec()).collect();
        for p in &raw {
            prop_assert!(hull_distance(&raw, p).unwrap() < 1e-9);
        }
        if raw.len() >= 2 {
            let mix: Vec<f64> = (0..3).map(|k| c.mass()[0] * raw[0][k] + c.mass()[1] * raw[1][k]).collect();
            prop_assert!(hull_distance(&raw, &mix).unwrap() < 1e-9);
        }
        let radius = covering_radius(&raw, 20_000).unwrap();
        prop_assert!((0.0..=1.0 + 1e-9).contains(&radius));
    }

    #[test]
    fn transport_is_bounded(
        supplies in prop::collection::vec(0.0f64..1.0, 1..4),
        demands in prop::collection::vec(0.0f64..1.0, 1..4),
        mask in prop::collection::vec(any::<bool>(), 16),
    ) {
        let allowed: Vec<Vec<usize>> = (0..supplies.len())
            .map(|s| (0..demands.len()).filter(|&d| mask[s * 4 + d]).collect())
            .collect();
        let moved = max_transport(&supplies, &allowed, &demands).unwrap();
        prop_assert!(moved >= -1e-9);
        prop_assert!(moved <= supplies.iter().sum::<f64>() + 1e-9);
        prop_assert!(moved <= demands.iter().sum::<f64>() + 1e-9);
    }

    #[test]
    fn printed_predicates_reparse(seed in any::<u64>(), depth in 0u32..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = random_predicate(&mut rng, depth);
        let text = e.print_canonical();
        prop_assert_eq!(parse(&text).unwrap(), e);
        prop_assert_eq!(parse(&text).unwrap().print_canonical(), text);
    }
}
