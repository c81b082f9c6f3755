use lzc_core::contour::i_squared_identity;
use lzc_core::model::{transition_matrix, transition_matrix_with_cut, MIXED_CASE_CUT_SIDE};
use lzc_core::propagator::{numeric_transition_matrix, IntegrationSettings};
use lzc_core::sampling::ParamSampler;
use lzc_core::special::CutSide;
use lzc_core::{ModelParams, SlopeCase};

fn oracle(p: &ModelParams) -> lzc_core::TransitionMatrix {
    numeric_transition_matrix(p, &IntegrationSettings::for_params(p, 1e-3))
        .unwrap()
        .0
}

#[test]
fn branch_calibration_on_mixed_grid() {
    assert_eq!(MIXED_CASE_CUT_SIDE, CutSide::BelowCut);
    let mut worst_above = 0.0f64;
    for i in 0..10 {
        let x = i as f64 / 9.0;
        let p = ModelParams::new(
            0.2 + 1.5 * x,
            0.3 + 0.9 * x,
            1.1 - 0.7 * x,
            -0.15 - 0.6 * x,
            0.9 - 0.5 * x,
        )
        .unwrap();
        assert_eq!(p.case(), SlopeCase::Mixed);
        let o = oracle(&p);
        let below = transition_matrix_with_cut(&p, CutSide::BelowCut).unwrap();
        let above = transition_matrix_with_cut(&p, CutSide::AboveCut).unwrap();
        assert!(
            below.max_abs_diff(&o) <= 2e-3,
            "{p}: {}",
            below.max_abs_diff(&o)
        );
        worst_above = worst_above.max(above.max_abs_diff(&o));
    }
    // The other side is clearly wrong somewhere on the grid.
    assert!(worst_above > 1e-2, "{worst_above}");
}

#[test]
fn i_squared_identity_on_random_case1_draws() {
    let mut s = ParamSampler::new(11);
    for _ in 0..20 {
        let p = s.draw(SlopeCase::BothPositive);
        let (lhs, rhs) = i_squared_identity(&p).unwrap();
        assert!((lhs - rhs).abs() <= 1e-6 * rhs, "{p}: {lhs} vs {rhs}");
    }
}

#[test]
fn zero_k2_matches_oracle() {
    for (g1, g2, b1, b2) in [(0.7, 0.4, 0.3, 0.8), (0.5, 0.9, -0.6, -0.2)] {
        let p = ModelParams::new(0.0, g1, g2, b1, b2).unwrap();
        let d = transition_matrix(&p).unwrap().max_abs_diff(&oracle(&p));
        assert!(d <= 2e-3, "{p}: {d}");
    }
}

#[test]
fn strong_coupling_matches_oracle() {
    for (k2, g1, g2, b1, b2) in [
        (0.2, 5.0, 1.0, -0.15, 0.15),
        (0.15, 1.5, 6.15, -0.15, -0.1),
        (0.5, 4.0, 2.4, -0.15, 0.3),
        // 2F1 factors here exceed the f64 range; only their products are finite.
        (0.0, 12.0, 12.0, -0.2, 0.2),
    ] {
        let p = ModelParams::new(k2, g1, g2, b1, b2).unwrap();
        let d = transition_matrix(&p).unwrap().max_abs_diff(&oracle(&p));
        assert!(d <= 2e-3, "{p}: {d}");
    }
}
