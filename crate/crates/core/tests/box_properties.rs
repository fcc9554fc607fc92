mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use superquantum::box_model::{
    agreement_probabilities, chsh, chsh_variants, classify_locality, classify_locality_lp,
    check_no_signalling, make_local_deterministic, AliceSetting, BipartiteBox, BobSetting,
    CorrelationTable, Locality, Outcome,
};

fn table() -> impl Strategy<Value = CorrelationTable> {
    prop::array::uniform4(-1.0f64..=1.0).prop_map(|c| CorrelationTable::from_array(c).unwrap())
}

proptest! {
    #[test]
    fn chsh_is_linear(t1 in table(), t2 in table(), alpha in 0.0f64..=1.0) {
        let mixed = t1.mix(alpha, &t2);
        let expected = alpha * chsh(&t1) + (1.0 - alpha) * chsh(&t2);
        prop_assert!((chsh(&mixed) - expected).abs() < 1e-12);
    }

    #[test]
    fn isotropic_boxes_are_nonsignalling_and_reproduce_the_table(t in table()) {
        let bx = BipartiteBox::isotropic(&t);
        prop_assert!(check_no_signalling(&bx, 1e-12).ok);
        let back = bx.correlations().to_array();
        for (a, b) in back.iter().zip(t.to_array()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        for x in AliceSetting::BOTH {
            for y in BobSetting::BOTH {
                prop_assert!((bx.alice_plus(x, y) - 0.5).abs() < 1e-12);
                prop_assert!((bx.bob_plus(x, y) - 0.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn box_json_round_trips(t in table()) {
        let bx = BipartiteBox::isotropic(&t);
        let json = serde_json::to_string(&bx).unwrap();
        let back: BipartiteBox = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(back, bx);
    }

    #[test]
    fn agreement_probabilities_split_the_correlation(c in -1.0f64..=1.0) {
        let p = agreement_probabilities(c).unwrap();
        prop_assert!((p.p_plus() - p.p_minus() - c).abs() < 1e-15);
        prop_assert!((p.p_plus() + p.p_minus() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn chsh_variants_are_symmetric_under_relabelling(t in table()) {
        let mut v = chsh_variants(&t);
        let flipped = CorrelationTable::from_array(t.to_array().map(|c| -c)).unwrap();
        let mut w = chsh_variants(&flipped);
        v.sort_by(f64::total_cmp);
        w.sort_by(f64::total_cmp);
        for (a, b) in v.iter().zip(&w) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn classifier_agrees_with_hull_membership_on_random_tables() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut local = 0;
    for _ in 0..1000 {
        let t = common::random_table(&mut rng);
        let cls = classify_locality(&t);
        assert_eq!(cls, classify_locality_lp(&t), "{t:?}");
        local += usize::from(cls == Locality::Local);
    }
    // both classes are exercised
    assert!(local > 100 && local < 900, "{local}");
}

#[test]
fn tilted_family_threshold_on_a_101_point_grid() {
    for k in 0..=100 {
        let c = k as f64 / 100.0;
        let t = CorrelationTable::tilted(c).unwrap();
        let expect = if c <= 0.5 { Locality::Local } else { Locality::Nonlocal };
        assert_eq!(classify_locality(&t), expect, "C = {c}");
        assert_eq!(classify_locality_lp(&t), expect, "C = {c}");
    }
}

#[test]
fn deterministic_boxes_are_local_vertices() {
    let both = [Outcome::Plus, Outcome::Minus];
    for ia in both {
        for iap in both {
            for jb in both {
                for jbp in both {
                    let bx = make_local_deterministic(ia, iap, jb, jbp);
                    let t = bx.correlations();
                    assert_eq!(classify_locality(&t), Locality::Local);
                    assert_eq!(chsh(&t).abs(), 2.0);
                    assert!(check_no_signalling(&bx, 0.0).ok);
                }
            }
        }
    }
}

#[test]
fn signalling_boxes_are_representable_and_flagged() {
    // Bob's b outcome copies Alice's setting: P(j = + | a) = 1, P(j = + | a') = 0.
    let mut pmf = [[[[0.0; 2]; 2]; 2]; 2];
    pmf[0][0][0][0] = 0.5;
    pmf[0][0][1][0] = 0.5;
    pmf[1][0][0][1] = 0.5;
    pmf[1][0][1][1] = 0.5;
    for row in pmf.iter_mut() {
        row[1] = [[0.25; 2]; 2];
    }
    let bx = BipartiteBox::from_pmf(pmf).unwrap();
    let report = check_no_signalling(&bx, 1e-12);
    assert!(!report.ok);
    assert_eq!(report.max_deviation, 1.0);
}
