use permchar_core::harness::*;
use permchar_core::multiplier::{JointModelSpec, ModelSpec};
use permchar_core::Error;

const SQRT2: f64 = std::f64::consts::SQRT_2 - 1.0;
const SQRT3: f64 = 0.732_050_807_568_877_2;

fn config(kind: StatisticKind, points: Vec<f64>, model: ModelSpec) -> ExperimentConfig {
    ExperimentConfig {
        version: CONFIG_VERSION,
        n: 500,
        theta: 1.0,
        points,
        functions: vec![],
        model: JointModelSpec::Independent { models: vec![model] },
        kind,
        num_samples: 200,
        master_seed: 11,
        centering: Centering::None,
        workers: None,
        record_timing: false,
    }
}

#[test]
fn json_output_is_byte_identical_across_worker_counts() {
    let mut cfg = config(StatisticKind::Multipoint, vec![SQRT2, SQRT3], ModelSpec::Uniform);
    let outputs: Vec<String> = [1, 2, 7]
        .iter()
        .map(|&w| {
            cfg.workers = Some(w);
            let mut r = run_experiment(&cfg).unwrap();
            r.config.workers = None;
            serde_json::to_string(&r).unwrap()
        })
        .collect();
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}

#[test]
fn sample_layout_matches_config() {
    let cfg = config(StatisticKind::Multipoint, vec![SQRT2, SQRT3], ModelSpec::Uniform);
    let r = run_experiment(&cfg).unwrap();
    assert_eq!(r.d, 2);
    assert_eq!(r.samples.len(), cfg.num_samples);
    assert!(r.samples.iter().all(|s| s.len() == 4));
    assert_eq!(r.summary.covariance.len(), 4);
    assert_eq!(r.singular_rejections, 0);
    assert!(r.wall_time_secs.is_none());
}

#[test]
fn config_round_trips_and_rejects_unknown_fields() {
    let cfg = config(StatisticKind::W2, vec![0.3], ModelSpec::Discrete { rho: 4, probs: Some(vec![0.25; 4]), coeffs: None });
    let json = serde_json::to_string(&cfg).unwrap();
    assert_eq!(serde_json::from_str::<ExperimentConfig>(&json).unwrap(), cfg);
    let mut v: serde_json::Value = serde_json::from_str(&json).unwrap();
    v["extra"] = serde_json::json!(1);
    assert!(serde_json::from_value::<ExperimentConfig>(v).is_err());
}

#[test]
fn trivial_model_needs_certified_points() {
    // no preset certificate for 0.123
    let cfg = config(StatisticKind::Logz, vec![0.123], ModelSpec::Trivial);
    assert!(matches!(cfg.validate(), Err(Error::RegimeViolation(_))));
    let ok = config(StatisticKind::Multipoint, vec![SQRT2, SQRT3], ModelSpec::Trivial);
    assert!(ok.validate().is_ok());
}

#[test]
fn mixed_and_shared_models() {
    let mut cfg = config(StatisticKind::Multipoint, vec![SQRT2, SQRT3], ModelSpec::Uniform);
    cfg.model = JointModelSpec::Independent { models: vec![ModelSpec::Uniform, ModelSpec::Trivial] };
    assert!(matches!(cfg.validate(), Err(Error::RegimeViolation(_))));
    cfg.model = JointModelSpec::Shared { model: ModelSpec::Uniform };
    let r = run_experiment(&cfg).unwrap();
    assert!(r.exploratory);
}

#[test]
fn invalid_configs() {
    let mut cfg = config(StatisticKind::Logz, vec![SQRT2], ModelSpec::Uniform);
    cfg.num_samples = 0;
    assert!(cfg.validate().is_err());
    let mut cfg = config(StatisticKind::Multipoint, vec![SQRT2, SQRT2], ModelSpec::Uniform);
    assert!(cfg.validate().is_err());
    cfg.points = vec![SQRT2];
    assert!(cfg.validate().is_err());
    let mut cfg = config(StatisticKind::Logz, vec![SQRT2], ModelSpec::Uniform);
    cfg.theta = -1.0;
    assert!(cfg.validate().is_err());
    cfg.theta = 1.0;
    cfg.version = 99;
    assert!(cfg.validate().is_err());
}

#[test]
fn variance_trend_at_n_thousand() {
    let mut cfg = config(StatisticKind::Logz, vec![SQRT2], ModelSpec::Uniform);
    cfg.n = 1000;
    cfg.num_samples = 4000;
    cfg.master_seed = 2;
    let r = run_experiment(&cfg).unwrap();
    let v = r.summary.variances[0];
    assert!((0.7..=1.3).contains(&v), "{v}");
    // Re and Im at one point are asymptotically independent
    assert!(r.summary.covariance[0][1].abs() <= 0.08);
    assert_eq!(r.singular_rejections, 0);
}

#[test]
fn w1_with_sym_part_runs_under_uniform_model() {
    let mut cfg = config(StatisticKind::W1, vec![SQRT2], ModelSpec::Uniform);
    cfg.functions = vec!["sympart".into()];
    cfg.centering = Centering::Theoretical;
    let r = run_experiment(&cfg).unwrap();
    assert!(r.samples.iter().flatten().all(|v| v.is_finite()));
}
