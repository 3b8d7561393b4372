use privecon_cli::generate::{self, EconomyShape, GameShape};
use privecon_core::Error;
use privecon_core::economy::Which;
use privecon_core::game::NashConfig;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn found_nash_profiles_have_no_profitable_deviation(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let game = generate::random_game(&mut rng, GameShape { max_profiles: 256, ..GameShape::default() });
        let search = game.find_nash(&NashConfig::default());
        prop_assert!(search.complete);
        if let Some(p) = search.profile {
            let report = game.is_nash(&p, 1e-12).unwrap();
            prop_assert!(report.is_nash);
            prop_assert!(report.max_gain <= 1e-12);
        }
    }

    #[test]
    fn payoffs_are_bounded_by_the_table(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let game = generate::random_game(&mut rng, GameShape::default());
        let profile = game.profiles().next().unwrap();
        for i in 0..game.num_players() {
            let u = game.expected_payoff(&profile, i).unwrap();
            let table = game.player(i).payoff();
            let lo = table.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = table.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(lo - 1e-12 <= u && u <= hi + 1e-12);
        }
    }

    #[test]
    fn certificates_reverify(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let eco = generate::random_economy(&mut rng, EconomyShape::default());
        let search = eco.find_equilibrium(&Default::default()).unwrap();
        if let Some(c) = &search.certificate {
            prop_assert!(c.reverify(&eco).unwrap());
        }
    }

    #[test]
    fn switch_stays_within_alpha(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let eco = generate::random_economy(&mut rng, EconomyShape::default());
        let search = eco.find_equilibrium(&Default::default()).unwrap();
        for fp in &search.fixed_points {
            for i in 0..eco.num_players() {
                for z in 0..eco.player(i).types().len() {
                    let alpha = eco.eval_correspondence(Which::Alpha, i, z, &fp.lambdas).unwrap();
                    match eco.switch_f(i, z, &fp.lambdas) {
                        Ok(s) => prop_assert!(s.is_subset(&alpha)),
                        Err(Error::Hypothesis(_)) => prop_assert!(alpha.is_empty()),
                        Err(e) => return Err(TestCaseError::fail(e.to_string())),
                    }
                }
            }
        }
    }
}
