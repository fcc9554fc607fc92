mod common;

use proptest::prelude::*;

use superquantum::box_model::AliceSetting;
use superquantum::coupling::{
    closed_form_bounds, coupling_bounds, extremal_coupling, per_pair_variance, validate_coupling,
    Combination, Objective, COUPLING_TOL,
};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lp_matches_frechet_closed_forms(c1 in -1.0f64..=1.0, c2 in -1.0f64..=1.0) {
        let lp = coupling_bounds(c1, c2).unwrap();
        let cf = closed_form_bounds(c1, c2).unwrap();
        prop_assert!((lp.min_disagree - cf.min_disagree).abs() < 1e-9);
        prop_assert!((lp.max_disagree - cf.max_disagree).abs() < 1e-9);
        prop_assert!((lp.min_var_sum - cf.min_var_sum).abs() < 1e-9);
        prop_assert!((lp.max_var_sum - cf.max_var_sum).abs() < 1e-9);
    }

    #[test]
    fn extremal_couplings_satisfy_every_constraint(
        c1 in -1.0f64..=1.0,
        c2 in -1.0f64..=1.0,
        max in any::<bool>(),
    ) {
        let obj = if max { Objective::MaxDisagree } else { Objective::MinDisagree };
        let k = extremal_coupling(AliceSetting::A, c1, c2, obj).unwrap();
        let report = validate_coupling(&k, (c1, c2), COUPLING_TOL);
        prop_assert!(report.ok, "{:?}", report);
        let total = per_pair_variance(&k, Combination::Sum) + per_pair_variance(&k, Combination::Difference);
        prop_assert!((total - 4.0).abs() < 1e-12);
    }

    #[test]
    fn max_disagreement_shrinks_as_targets_align(c in 0.0f64..=0.99, dc in 0.001f64..=0.01) {
        let lo = coupling_bounds(c, c).unwrap();
        let hi = coupling_bounds(c + dc, c + dc).unwrap();
        prop_assert!(hi.max_disagree <= lo.max_disagree + 1e-12);
        let lo = coupling_bounds(c, -c).unwrap();
        let hi = coupling_bounds(c + dc, -(c + dc)).unwrap();
        prop_assert!(hi.min_disagree >= lo.min_disagree - 1e-12);
    }
}

#[test]
fn grid_oracle_agrees_with_lp_on_off_diagonal_targets() {
    for (c1, c2) in [(0.3, -0.6), (-0.2, -0.2), (0.9, 0.1), (-0.5, 0.75)] {
        let lp = coupling_bounds(c1, c2).unwrap();
        let (lo, hi) = common::brute_force_disagreement(c1, c2, 1e-3).unwrap();
        assert!((lp.min_disagree - lo).abs() <= 2e-3 + 1e-12, "({c1}, {c2}): {lp:?} vs {lo}");
        assert!((lp.max_disagree - hi).abs() <= 2e-3 + 1e-12, "({c1}, {c2}): {lp:?} vs {hi}");
        // grid points are feasible couplings, so they never beat the LP
        assert!(lo >= lp.min_disagree - 1e-9 && hi <= lp.max_disagree + 1e-9);
    }
}

#[test]
fn negative_symmetric_targets_follow_the_lp() {
    let lp = coupling_bounds(-0.2, -0.2).unwrap();
    assert!((lp.max_disagree - 0.8).abs() < 1e-12);
    assert!(lp.min_disagree.abs() < 1e-12);
}
