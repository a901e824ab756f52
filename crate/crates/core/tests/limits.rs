use std::f64::consts::PI;

use num_complex::Complex64;
use permchar_core::class_fn::{ClassKind, SpectralFunction};
use permchar_core::limits::*;
use permchar_core::multiplier::{MultiplierModel, UnitAngle};
use permchar_core::numeric::expected_cycle_count;
use permchar_core::quadrature::{midpoint_rule, singular_quadrature};
use proptest::prelude::*;

const PI2_12: f64 = PI * PI / 12.0;

fn harmonic(n: usize) -> f64 {
    (1..=n).map(|k| 1.0 / k as f64).sum()
}

#[test]
fn quadrature_matches_riemann_sums() {
    let cp = SpectralFunction::char_poly();
    let sp = SpectralFunction::sym_part();
    let integrands: Vec<(Box<dyn Fn(f64) -> f64>, Vec<f64>)> = vec![
        (Box::new(|x| cp.log_abs(x)), vec![0.0]),
        (Box::new(|x| cp.log_abs(x).powi(2)), vec![0.0]),
        (Box::new(|x| cp.arg(x)), vec![0.0]),
        (Box::new(|x| cp.arg(x).powi(2)), vec![0.0]),
        (Box::new(|x| sp.log_abs(x).powi(2)), vec![0.0]),
    ];
    for (u, splits) in &integrands {
        let q = singular_quadrature(u, splits, 1e-12).unwrap();
        let r = midpoint_rule(u, 0.0, 1.0, 1_000_000);
        assert!((q - r).abs() <= 1e-4, "{q} vs {r}");
    }
}

#[test]
fn quadrature_examples() {
    assert!((singular_quadrature(|_| 1.0, &[], 1e-12).unwrap() - 1.0).abs() < 1e-14);
    let cp = SpectralFunction::char_poly();
    assert!(singular_quadrature(|x| cp.log_abs(x), &[0.0], 1e-12).unwrap().abs() < 1e-8);
    assert!((singular_quadrature(|x| cp.log_abs(x).powi(2), &[0.0], 1e-12).unwrap() - PI2_12).abs() < 1e-6);
}

#[test]
fn normalization_examples() {
    let c = limit_constants(&SpectralFunction::char_poly()).unwrap();
    // log n = 1 is not reachable with integer n; check the formula at n = 3
    let s = normalization(3, 1.0, &c, Part::Re);
    assert!((s * s / 3f64.ln() - PI2_12).abs() < 1e-6);
    let k = limit_constants(&SpectralFunction::constant(Complex64::new(3.0, 0.0)).unwrap()).unwrap();
    let s = normalization(1000, 2.0, &k, Part::Re);
    assert!((s - (2.0 * 3f64.ln().powi(2) * 1000f64.ln()).sqrt()).abs() < 1e-10);
    assert_eq!(normalization(1000, 2.0, &k, Part::Im), 0.0);
}

#[test]
fn constant_centering_tracks_expected_cycle_count() {
    // E[A_n] = ln c sum theta/(theta+i-1) and the centering theta ln c ln n differ by O(1)
    let c = 2.5f64;
    let k = limit_constants(&SpectralFunction::constant(Complex64::new(c, 0.0)).unwrap()).unwrap();
    for theta in [0.5, 1.0, 3.0] {
        let gaps: Vec<f64> = [100, 10_000, 1_000_000]
            .iter()
            .map(|&n| c.ln() * expected_cycle_count(n, theta) - centering(n, theta, &k).re)
            .collect();
        assert!((gaps[2] - gaps[1]).abs() < 0.01 * (1.0 + gaps[1].abs()), "{gaps:?}");
    }
}

#[test]
fn v_n_for_uniform_multipliers_is_harmonic() {
    let spec = StatisticSpec::LogZ { model: MultiplierModel::Uniform, x: UnitAngle::new(0.41).unwrap(), part: Part::Re };
    for n in [1, 10, 1000] {
        assert!((v_n(&spec, n).unwrap().value - PI2_12 * harmonic(n)).abs() < 1e-8);
    }
    // per-m quadrature agrees too
    for m in [1, 3, 17] {
        assert!((spec.moment(m, 2.0).unwrap() - PI2_12).abs() < 1e-9);
    }
}

#[test]
fn v_n_of_unit_statistic() {
    let one = StatisticSpec::Constant(1.0);
    assert!((v_n(&one, 4).unwrap().value - 25.0 / 12.0).abs() < 1e-15);
    let zero = v_n(&StatisticSpec::Constant(0.0), 1000).unwrap();
    assert_eq!(zero.value, 0.0);
    assert!(!zero.grows);
}

#[test]
fn lyapunov_ratios_decrease_for_acceptance_statistics() {
    let x = UnitAngle::new(std::f64::consts::SQRT_2 - 1.0).unwrap();
    let specs = [
        StatisticSpec::Constant(1.0),
        StatisticSpec::LogZ { model: MultiplierModel::Uniform, x, part: Part::Re },
        StatisticSpec::LogZ { model: MultiplierModel::Uniform, x, part: Part::Im },
        StatisticSpec::LogZ { model: MultiplierModel::Trivial, x, part: Part::Re },
        StatisticSpec::LogZ { model: MultiplierModel::Trivial, x, part: Part::Im },
    ];
    for spec in &specs {
        let r = lyapunov_check(spec, &[100, 1000, 10_000], 3.0, 1.0).unwrap();
        assert!(r.decreasing, "{spec:?}: {:?}", r.rows);
    }
}

#[test]
fn lyapunov_regime_gate() {
    let one = StatisticSpec::Constant(1.0);
    assert!(matches!(lyapunov_check(&one, &[10], 2.4, 0.4), Err(permchar_core::Error::RegimeViolation(_))));
    assert!(lyapunov_check(&one, &[10], 2.6, 0.4).is_ok());
}

#[test]
fn w1_and_w2_agree_for_uniform_multipliers() {
    let f = SpectralFunction::sym_part();
    let x = UnitAngle::new(0.2).unwrap();
    let mk = |kind| StatisticSpec::ClassTerm { f: f.clone(), kind, model: MultiplierModel::Uniform, x, part: Part::Re };
    let (a, b) = (mk(ClassKind::W1), mk(ClassKind::W2));
    for m in [1, 4] {
        assert!((a.moment(m, 2.0).unwrap() - b.moment(m, 2.0).unwrap()).abs() < 1e-12);
    }
}

fn builtin(i: usize, c: f64) -> SpectralFunction {
    match i {
        0 => SpectralFunction::char_poly(),
        1 => SpectralFunction::sym_part(),
        2 => SpectralFunction::antisym_part(),
        _ => SpectralFunction::constant(Complex64::from_polar(c, c)).unwrap(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn covariance_is_symmetric_psd(choice in prop::collection::vec((0usize..4, 0.2f64..3.0), 1..5), theta in 0.1f64..5.0) {
        let fs: Vec<SpectralFunction> = choice.iter().map(|(i, c)| builtin(*i, *c)).collect();
        let cov = covariance_matrix(&fs, theta).unwrap();
        prop_assert!(cov.is_symmetric());
        prop_assert!(cov.min_eigenvalue() >= -1e-10, "{}", cov.min_eigenvalue());
        let consts = limit_constants(&fs[0]).unwrap();
        prop_assert!(consts.v_r >= 0.0 && consts.v_i >= 0.0);
    }
}
