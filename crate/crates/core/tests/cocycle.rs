mod common;

use cocycle_core::cocycle::{d_log, one_step, orbit_zero_scan, scaled_product, scaled_products, CocycleError};
use cocycle_core::{Frequency, Gauge, JacobiModel, Mat2, TrigPolynomial, C64};
use common::{amo, free_model, naive_product, power_norm, random_model};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[test]
fn free_step_is_a_rotation() {
    let m = free_model();
    let (raw, ana) = one_step(&m, c(0.3, 0.0), 0.0).unwrap();
    assert!(raw.max_abs_diff(&Mat2::real(0.0, -1.0, 1.0, 0.0)) < 1e-15);
    assert_eq!(raw, ana);
    for n in [1, 7, 100, 1000] {
        let p = scaled_product(&m, 0.17, 0.0, n, Gauge::Raw).unwrap();
        assert!(p.u_n().abs() < 1e-14);
    }
}

#[test]
fn analytic_determinant_is_exp_d() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let m = random_model(&mut rng);
        let z = c(rng.gen(), rng.gen_range(-0.3..0.3));
        let (_, ma) = one_step(&m, z, rng.gen_range(-5.0..5.0)).unwrap();
        // d from its own formula
        let la = m.lambda_a();
        let d = (la * la * m.a().eval(z + m.omega()) * m.a_tilde().eval(z)).norm().ln();
        let det = ma.det().norm();
        assert!((det / d.exp() - 1.0).abs() < 1e-12);
        assert!((d_log(&m, z) - d).abs() < 1e-12);
    }
}

#[test]
fn cancellation_in_top_left_entry() {
    let m = JacobiModel::schrodinger(1.0, TrigPolynomial::cosine(1.0, 0.5).unwrap(), &Frequency::golden()).unwrap();
    let (_, ma) = one_step(&m, c(0.0, 0.0), 2.0).unwrap();
    assert_eq!(ma.a, c(0.0, 0.0));
}

#[test]
fn unimodular_hopping_gives_constant_d() {
    let a = TrigPolynomial::new(&[(1, c(1.0, 0.0))], 0.5).unwrap();
    let v = TrigPolynomial::cosine(1.0, 0.5).unwrap();
    let m = JacobiModel::new(1.7, a, 3.0, v, &Frequency::golden()).unwrap();
    for i in 0..32 {
        let x = i as f64 / 32.0;
        assert!((d_log(&m, c(x, 0.0)) - 2.0 * 1.7f64.ln()).abs() < 1e-13);
    }
}

#[test]
fn mean_of_d_is_twice_the_drift() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..5 {
        let m = random_model(&mut rng);
        let n = 4096;
        let mean: f64 = (0..n).map(|i| d_log(&m, c(i as f64 / n as f64, 0.0))).sum::<f64>() / n as f64;
        // drift by an independent midpoint rule at a different resolution
        let k = 3001;
        let drift: f64 = (0..k)
            .map(|i| (m.lambda_a() * m.a().eval_real((i as f64 + 0.5) / k as f64).norm()).ln())
            .sum::<f64>()
            / k as f64;
        assert!((mean - 2.0 * drift).abs() < 1e-8, "{mean} vs {}", 2.0 * drift);
        assert!((m.constants().drift - drift).abs() < 1e-8);
    }
}

#[test]
fn drift_is_stable_under_refinement() {
    use cocycle_core::cocycle::drift_on_grid;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let m = random_model(&mut rng);
    let (d1, _) = drift_on_grid(m.lambda_a(), m.a(), 512);
    let (d2, _) = drift_on_grid(m.lambda_a(), m.a(), 1024);
    assert!((d1 - d2).abs() < 1e-6);
}

#[test]
fn raw_gauge_rejects_zero_of_a() {
    // a(x) = sin(2πx); a(1/2) rounds to ~1e-16, while step k = 3 reads a(1) = 0 exactly
    let a = TrigPolynomial::new(&[(1, c(0.0, -0.5)), (-1, c(0.0, 0.5))], 0.5).unwrap();
    let v = TrigPolynomial::cosine(1.0, 0.5).unwrap();
    let f = Frequency::rational(1, 4).unwrap();
    let m = JacobiModel::new(1.0, a, 1.0, v, &f).unwrap();
    let err = scaled_product(&m, 0.0, 0.3, 4, Gauge::Raw).unwrap_err();
    assert!(matches!(err, CocycleError::SingularStep { k: 3, .. }), "{err:?}");
    assert!(scaled_product(&m, 0.0, 0.3, 4, Gauge::Unimodular).is_err());
    assert!(scaled_product(&m, 0.0, 0.3, 4, Gauge::Analytic).is_ok());
    assert_eq!(orbit_zero_scan(&m, 0.0, 3, 1e-12), vec![0, 2]);
    assert!(orbit_zero_scan(&m, 0.0, 3, 0.0).is_empty());
    assert!(orbit_zero_scan(&amo(2.0), 0.1, 50, 1e-12).is_empty());
}

#[test]
fn empty_product_is_an_error() {
    assert_eq!(scaled_product(&amo(2.0), 0.1, 0.0, 0, Gauge::Raw), Err(CocycleError::EmptyProduct));
}

#[test]
fn renormalised_product_matches_plain_multiplication() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..30 {
        let m = random_model(&mut rng);
        let x: f64 = rng.gen();
        let e = rng.gen_range(-3.0..3.0);
        let n = rng.gen_range(1..25);
        for (gauge, uni) in [(Gauge::Analytic, false), (Gauge::Unimodular, true)] {
            let p = scaled_product(&m, x, e, n, gauge).unwrap();
            let naive = naive_product(&m, x, e, n, uni);
            let oracle = power_norm(&naive).ln();
            assert!((p.log_norm() - oracle).abs() < 1e-9 * n as f64, "{} vs {oracle}", p.log_norm());
            let rebuilt = p.matrix();
            let scale = naive.frobenius_sq().sqrt();
            assert!(rebuilt.max_abs_diff(&naive) < 1e-10 * scale);
        }
    }
}

#[test]
fn unit_matrices_have_norm_one() {
    let m = amo(10.0);
    let p = scaled_product(&m, 0.3, 1.0, 2000, Gauge::Unimodular).unwrap();
    assert!((p.unit.spectral_norm() - 1.0).abs() <= 1e-12);
    assert!(p.log_scale.is_finite() && p.log_scale > 2000.0);
}

#[test]
fn analytic_exponent_bounded_by_m0() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..10 {
        let m = random_model(&mut rng);
        let (lo, hi) = m.constants().energy_window;
        for _ in 0..10 {
            let e = rng.gen_range(lo..=hi);
            let p = scaled_product(&m, rng.gen(), e, rng.gen_range(1..200), Gauge::Analytic).unwrap();
            assert!(p.u_n() <= m.constants().m0 + 1e-9);
        }
    }
}

#[test]
fn window_and_m0_for_the_textbook_case() {
    let m = JacobiModel::schrodinger(2.0, TrigPolynomial::cosine(1.0, 0.5).unwrap(), &Frequency::golden()).unwrap();
    let k = m.constants();
    assert!((k.energy_window.0 + 6.0).abs() < 1e-12 && (k.energy_window.1 - 6.0).abs() < 1e-12);
    assert!((k.m0 - 11f64.ln()).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gauge_identity(seed in any::<u64>(), x in 0.0f64..1.0, n in 1u64..300) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_model(&mut rng);
        let e = rng.gen_range(-5.0..5.0);
        let u = scaled_product(&m, x, e, n, Gauge::Unimodular).unwrap();
        let a = scaled_product(&m, x, e, n, Gauge::Analytic).unwrap();
        let lhs = u.log_norm();
        let rhs = -0.5 * a.sum_d + a.log_norm();
        prop_assert!((lhs - rhs).abs() <= 1e-8 * n as f64);
        prop_assert!(u.u_n() >= -1e-9);
    }

    #[test]
    fn cocycle_property(seed in any::<u64>(), x in 0.0f64..1.0, n in 1u64..150, k in 1u64..150) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_model(&mut rng);
        let e = rng.gen_range(-5.0..5.0);
        let first = scaled_product(&m, x, e, n, Gauge::Unimodular).unwrap();
        let second = scaled_product(&m, m.rotation().point(x, n), e, k, Gauge::Unimodular).unwrap();
        let whole = scaled_product(&m, x, e, n + k, Gauge::Unimodular).unwrap();
        let composed = first.then(&second).unwrap();
        prop_assert!((composed.log_norm() - whole.log_norm()).abs() <= 1e-9 * (n + k) as f64);
        prop_assert!((composed.sum_d - whole.sum_d).abs() <= 1e-9 * (n + k) as f64);
    }

    #[test]
    fn determinant_telemetry(seed in any::<u64>(), x in 0.0f64..1.0, n in 1u64..300) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_model(&mut rng);
        let e = rng.gen_range(-5.0..5.0);
        let ps = scaled_products(&m, x, e, n, &[Gauge::Analytic, Gauge::Unimodular]).unwrap();
        let direct: f64 = (1..=n).map(|k| d_log(&m, c(m.rotation().point(x, k), 0.0))).sum();
        prop_assert!((ps[0].log_abs_det - direct).abs() <= 1e-8 * n as f64);
        prop_assert!(ps[1].log_abs_det.abs() <= 1e-9 * n as f64);
        if ps[1].log_scale < 5.0 {
            prop_assert!((ps[1].det_abs_direct() - 1.0).abs() < 1e-9);
        }
    }
}
