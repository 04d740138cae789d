mod common;

use breatherlab::timestep::Scheme;
use proptest::prelude::*;

#[test]
fn comparison_holds_for_100_seeded_pairs() {
    let (count, worst) = common::comparison_campaign(0..100);
    assert_eq!(count, 100);
    assert!(worst <= 1e-10, "{worst}");
}

#[test]
fn evolution_is_deterministic() {
    assert!(common::evolution_deterministic());
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn constants_are_fixed_points(c in -5.0f64..5.0, log_dt in -8.0f64..1.0, be in any::<bool>()) {
        let scheme = if be { Scheme::BackwardEuler } else { Scheme::CrankNicolson };
        prop_assert!(common::constant_preserved(c, 10f64.powf(log_dt), scheme));
    }

    #[test]
    fn csv_round_trip(vals in prop::collection::vec(-1e6f64..1e6, 9..60), t in 0.0f64..5.0) {
        let dir = tempfile::tempdir().unwrap();
        prop_assert!(common::csv_round_trip(&vals, t, dir.path()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn aligned_translation_is_exact(k in 1usize..60) {
        prop_assert!(common::translation_equivariant(k));
    }

    #[test]
    fn parity_is_preserved(n_half in 20usize..200, amp in 0.1f64..3.0) {
        prop_assert!(common::parity_preserved(n_half, amp));
    }

    #[test]
    fn seeded_pairs_stay_ordered(seed in 1000u64..1_000_000) {
        let (_, worst) = common::comparison_campaign(seed..seed + 1);
        prop_assert!(worst <= 1e-10);
    }
}
