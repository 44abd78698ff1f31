mod common;

use std::f64::consts::TAU;

use cocycle_core::avalanche::{
    ap_blocks, ap_check, ap_check_matrices, random_suite, AvalancheError, ScaledMatrix, SuiteFactor, DEFAULT_C_TEST,
};
use cocycle_core::cocycle::scaled_product;
use cocycle_core::precise::{ap_check_precise, cocycle_blocks, to_f64, Context};
use cocycle_core::{Frequency, Gauge, JacobiModel, Mat2, TrigPolynomial, C64};
use common::{amo, power_norm};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn factor_strategy(n: usize) -> impl Strategy<Value = Vec<SuiteFactor>> {
    prop::collection::vec((0.0f64..TAU, 1.0f64..6.0, 0.0f64..TAU), n).prop_map(|v| {
        v.into_iter()
            .map(|(l, g, r)| SuiteFactor {
                left_angle: l,
                gamma: 10f64.powf(g),
                right_angle: r,
            })
            .collect()
    })
}

#[test]
fn diagonal_suite_example() {
    let r = ap_check_matrices(&[Mat2::diag(100.0, 0.01); 5], DEFAULT_C_TEST).unwrap();
    assert!(r.hypotheses_hold());
    assert_eq!(r.lhs_residual, 0.0);
    assert!((r.gamma_bound - 100.0).abs() < 1e-12);
}

#[test]
fn too_small_blocks_fail_size() {
    let r = ap_check_matrices(&[Mat2::diag(2.0, 0.5); 3], DEFAULT_C_TEST).unwrap();
    assert!(!r.size_ok);
    assert!(!r.hypotheses_hold());
}

#[test]
fn suites_need_three_blocks() {
    let e = ap_check_matrices(&[Mat2::identity(); 2], DEFAULT_C_TEST).unwrap_err();
    assert!(matches!(e, AvalancheError::InvalidInput(_)));
    assert!(ap_check_matrices(&[Mat2::identity(); 3], 0.0).is_err());
}

#[test]
fn scaled_matrix_norm_matches_power_iteration() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for f in random_suite(&mut rng, 50, 1e5) {
        let m = f.matrix();
        let s = ScaledMatrix::from_matrix(m);
        assert!((s.log_norm() - power_norm(&m).ln()).abs() < 1e-12);
        assert!((s.log_norm() - f.gamma.ln()).abs() < 1e-12);
    }
}

#[test]
fn double_and_extended_precision_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut ctx = Context::new(256);
    for _ in 0..20 {
        let suite = random_suite(&mut rng, 6, 1e3);
        let double = ap_check_matrices(&suite.iter().map(|f| f.matrix()).collect::<Vec<_>>(), DEFAULT_C_TEST).unwrap();
        let blocks: Vec<_> = suite.iter().map(|f| ctx.suite_factor(f)).collect();
        let precise = ap_check_precise(&mut ctx, &blocks, DEFAULT_C_TEST).unwrap();
        assert_eq!(precise.precision_bits, 256);
        assert!((double.log_gamma - precise.log_gamma).abs() < 1e-12);
        assert!((double.max_gap - precise.max_gap).abs() < 1e-9);
        assert!((double.lhs_residual - precise.lhs_residual).abs() < 1e-9);
        assert!(precise.det_ok);
    }
}

#[test]
fn minimal_cocycle_suite() {
    let m = amo(10.0);
    let blocks = ap_blocks(&m, 0.21, 0.5, 50, 3, Gauge::Unimodular).unwrap();
    assert_eq!(blocks.len(), 3);
    for b in &blocks {
        assert!(b.log_abs_det.abs() < 1e-9);
    }
    assert!(ap_blocks(&m, 0.21, 0.5, 50, 2, Gauge::Unimodular).is_err());
    assert!(ap_blocks(&m, 0.21, 0.5, 0, 3, Gauge::Unimodular).is_err());
}

#[test]
fn blocks_compose_to_the_long_product() {
    let m = amo(3.0);
    let (x, e, n, k) = (0.77, -1.2, 40u64, 6usize);
    let blocks = ap_blocks(&m, x, e, n, k, Gauge::Unimodular).unwrap();
    let mut prod = Mat2::identity();
    let mut s = 0.0;
    for b in &blocks {
        prod = b.unit * prod;
        let nrm = prod.spectral_norm();
        s += b.log_scale + nrm.ln();
        prod = prod.scale(1.0 / nrm);
    }
    let whole = scaled_product(&m, x, e, n * k as u64, Gauge::Unimodular).unwrap();
    assert!((s - whole.log_norm()).abs() < 1e-8 * (n * k as u64) as f64);
}

#[test]
fn singular_block_is_identified() {
    // a(x) = sin(2πx); with ω = 1/4 the step at k = 3 reads a(1) = 0
    let a = TrigPolynomial::new(&[(1, C64::new(0.0, -0.5)), (-1, C64::new(0.0, 0.5))], 0.5).unwrap();
    let v = TrigPolynomial::cosine(1.0, 0.5).unwrap();
    let m = JacobiModel::new(1.0, a, 2.0, v, &Frequency::rational(1, 4).unwrap()).unwrap();
    let err = ap_blocks(&m, 0.0, 0.0, 2, 4, Gauge::Unimodular).unwrap_err();
    assert!(matches!(err, AvalancheError::SingularBlock { block: 2, .. }), "{err:?}");
    let mut ctx = Context::new(128);
    let err = cocycle_blocks(&mut ctx, &m, 0.0, 0.0, 2, 4, Gauge::Unimodular).unwrap_err();
    assert!(matches!(err, AvalancheError::SingularBlock { block: 2, .. }), "{err:?}");
}

#[test]
fn extended_blocks_match_double_blocks() {
    let m = JacobiModel::new(
        1.3,
        TrigPolynomial::new(&[(0, C64::new(1.0, 0.0)), (1, C64::new(0.2, 0.1))], 0.5).unwrap(),
        4.0,
        TrigPolynomial::cosine(1.0, 0.5).unwrap(),
        &Frequency::sqrt2_minus_1(),
    )
    .unwrap();
    let double = ap_blocks(&m, 0.4, 0.3, 30, 4, Gauge::Unimodular).unwrap();
    let mut ctx = Context::new(256);
    let ext = cocycle_blocks(&mut ctx, &m, 0.4, 0.3, 30, 4, Gauge::Unimodular).unwrap();
    for (d, e) in double.iter().zip(&ext) {
        let ln = to_f64(&ctx.log_norm(e));
        assert!((d.log_norm() - ln).abs() < 1e-9, "{} vs {ln}", d.log_norm());
        let det = ctx.det(e);
        let abs = to_f64(&det.re).hypot(to_f64(&det.im));
        assert!((abs - 1.0).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn commuting_diagonal_suites_telescope(gs in prop::collection::vec(1.5f64..40.0, 3..12)) {
        let ms: Vec<Mat2> = gs.iter().map(|&g| Mat2::diag(g, 1.0 / g)).collect();
        let r = ap_check_matrices(&ms, DEFAULT_C_TEST).unwrap();
        prop_assert!(r.lhs_residual <= 1e-12);
        prop_assert!(r.max_gap.abs() <= 1e-12);
    }

    #[test]
    fn rotations_leave_the_report_unchanged(f in factor_strategy(5), t in 0.0f64..TAU, l in 0.0f64..TAU, r0 in 0.0f64..TAU) {
        let ms: Vec<Mat2> = f.iter().map(|s| SuiteFactor { gamma: s.gamma.min(1e2), ..*s }.matrix()).collect();
        let u = Mat2::rotation(t);
        let ut = u.transpose();
        let mut moved: Vec<Mat2> = ms.iter().map(|m| u * *m * ut).collect();
        let last = moved.len() - 1;
        moved[last] = Mat2::rotation(l) * moved[last];
        moved[0] = moved[0] * Mat2::rotation(r0);
        let a = ap_check_matrices(&ms, DEFAULT_C_TEST).unwrap();
        let b = ap_check_matrices(&moved, DEFAULT_C_TEST).unwrap();
        prop_assert!((a.log_gamma - b.log_gamma).abs() <= 1e-12);
        // a large pair cancellation costs about e^gap in relative accuracy
        let tol = if a.gap_ok { 1e-12 } else { 1e-12 * a.max_gap.exp() };
        prop_assert!((a.max_gap - b.max_gap).abs() <= tol);
        prop_assert!((a.lhs_residual - b.lhs_residual).abs() <= tol);
        // det_ok sits at rounding level for f64 entries of size γ, so compare the value
        let g2 = ms.iter().map(|m| m.spectral_norm().powi(2)).fold(1.0, f64::max);
        prop_assert!((a.max_abs_det - b.max_abs_det).abs() <= 1e-14 * g2);
        prop_assert_eq!(a.size_ok, b.size_ok);
        if (a.max_gap - 0.5 * a.log_gamma).abs() > 1e-6 {
            prop_assert_eq!(a.gap_ok, b.gap_ok);
        }
    }

    #[test]
    fn residual_is_nonnegative_and_finite(seed in any::<u64>(), n in 3usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let suite = random_suite(&mut rng, n, 1e4);
        let blocks: Vec<ScaledMatrix> = suite.iter().map(|f| ScaledMatrix::from_matrix(f.matrix())).collect();
        let r = ap_check(&blocks, DEFAULT_C_TEST).unwrap();
        prop_assert!(r.lhs_residual >= 0.0 && r.lhs_residual.is_finite());
        prop_assert!(r.log_gamma >= ((n + 1) as f64).ln() - 1e-9);
    }
}
