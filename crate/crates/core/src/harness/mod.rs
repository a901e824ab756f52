//! Seeded, reproducible Monte Carlo experiments for the central limit theorems.

mod stats;

pub use stats::{column_means, empirical_cov, ks_normal, ks_statistic, ks_two_sample};

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::class_fn::{multipoint_log_z, multipoint_w, ClassKind, ComplexLogValue, SpectralFunction};
use crate::equidistribution::{nearest_integer_distance, preset_certificate};
use crate::error::{Error, Result};
use crate::limits::{limit_constants, LimitConstants};
use crate::multiplier::{JointModelSpec, JointMultiplierModel, ModelSpec, MultiplierModel, UnitAngle};
use crate::numeric::expected_cycle_count;
use crate::permutation::{cycle_counts_from_chain, sample_feller_chain_sparse, CycleType, EwensParameter};

pub const CONFIG_VERSION: u32 = 1;

/// Zeros of `f` count as roots of unity when `||q z|| <= ROOT_OF_UNITY_TOL` for some `q <= ROOT_OF_UNITY_MAX_ORDER`.
pub const ROOT_OF_UNITY_MAX_ORDER: i64 = 1000;
pub const ROOT_OF_UNITY_TOL: f64 = 1e-9;

/// Independent, reproducible stream for sample `index`.
pub fn derive_stream(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatisticKind {
    /// `log Z_n(x)` at one point.
    Logz,
    W1,
    W2,
    /// `log Z_n` at two or more points with a joint multiplier law.
    Multipoint,
    /// Number of cycles, the statistic with `X = 1`.
    CycleCount,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Centering {
    /// Subtract `theta (m_R + i m_I) log n`, or the exact mean for cycle counts.
    Theoretical,
    /// Subtract the sample mean.
    Empirical,
    #[default]
    None,
}

fn default_model() -> JointModelSpec {
    JointModelSpec::Independent { models: vec![ModelSpec::Uniform] }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub n: usize,
    pub theta: f64,
    #[serde(default)]
    pub points: Vec<f64>,
    /// Spectral function labels for w1/w2; one label is used at every point.
    #[serde(default)]
    pub functions: Vec<String>,
    #[serde(default = "default_model")]
    pub model: JointModelSpec,
    pub kind: StatisticKind,
    pub num_samples: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub centering: Centering,
    /// Thread count hint; never changes results.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default)]
    pub record_timing: bool,
}

/// A validated configuration with its limit constants.
#[derive(Debug, Clone)]
pub struct Experiment {
    config: ExperimentConfig,
    theta: EwensParameter,
    points: Vec<UnitAngle>,
    functions: Vec<SpectralFunction>,
    joint: Option<JointMultiplierModel>,
    constants: Vec<LimitConstants>,
    exploratory: bool,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<Experiment> {
        if self.version != CONFIG_VERSION {
            return Err(Error::InvalidArgument(format!(
                "unsupported config version {}; expected {CONFIG_VERSION}",
                self.version
            )));
        }
        let theta = EwensParameter::new(self.theta)?;
        if self.n < 2 {
            return Err(Error::InvalidArgument(format!("n = {} must be at least 2", self.n)));
        }
        if self.num_samples < 1 {
            return Err(Error::InvalidArgument("num_samples must be at least 1".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::InvalidArgument("workers must be positive".into()));
        }
        if self.kind == StatisticKind::CycleCount {
            if !self.points.is_empty() || !self.functions.is_empty() {
                return Err(Error::InvalidArgument("cycle_count takes no points or functions".into()));
            }
            return Ok(Experiment {
                config: self.clone(),
                theta,
                points: vec![],
                functions: vec![],
                joint: None,
                constants: vec![],
                exploratory: false,
            });
        }
        let points: Vec<UnitAngle> = self.points.iter().map(|p| UnitAngle::new(*p)).collect::<Result<_>>()?;
        let d = points.len();
        match self.kind {
            StatisticKind::Logz | StatisticKind::W1 | StatisticKind::W2 if d == 0 => {
                return Err(Error::InvalidArgument("at least one point is required".into()))
            }
            StatisticKind::Logz if d != 1 => {
                return Err(Error::InvalidArgument(format!("logz takes one point, got {d}; use multipoint")))
            }
            StatisticKind::Multipoint if d < 2 => {
                return Err(Error::InvalidArgument(format!("multipoint needs at least two points, got {d}")))
            }
            _ => {}
        }
        for i in 0..d {
            for j in 0..i {
                if points[i] == points[j] {
                    return Err(Error::InvalidArgument(format!("points {j} and {i} coincide")));
                }
            }
        }
        let functions = match self.kind {
            StatisticKind::Logz | StatisticKind::Multipoint => {
                if !self.functions.is_empty() {
                    return Err(Error::InvalidArgument("functions apply to w1 and w2 only".into()));
                }
                vec![SpectralFunction::char_poly(); d]
            }
            _ => match self.functions.len() {
                0 => vec![SpectralFunction::char_poly(); d],
                1 => vec![SpectralFunction::from_label(&self.functions[0])?; d],
                k if k == d => self.functions.iter().map(|l| SpectralFunction::from_label(l)).collect::<Result<_>>()?,
                k => return Err(Error::InvalidArgument(format!("{k} functions for {d} points"))),
            },
        };
        let joint = self.model.build(d)?;
        let exploratory = check_regime(&points, &functions, &joint)?;
        let constants = functions.iter().map(limit_constants).collect::<Result<_>>()?;
        Ok(Experiment {
            config: self.clone(),
            theta,
            points,
            functions,
            joint: Some(joint),
            constants,
            exploratory,
        })
    }
}

fn is_lattice(m: &MultiplierModel) -> bool {
    matches!(m, MultiplierModel::Trivial | MultiplierModel::DiscreteRoots(_))
}

fn is_root_of_unity(angle: f64) -> bool {
    (1..=ROOT_OF_UNITY_MAX_ORDER).any(|q| nearest_integer_distance(q as f64 * angle) <= ROOT_OF_UNITY_TOL)
}

/// Checks the hypotheses of the limit theorems. Returns `true` for the
/// exploratory shared-multiplier configuration, which has no theorem.
fn check_regime(points: &[UnitAngle], fs: &[SpectralFunction], joint: &JointMultiplierModel) -> Result<bool> {
    let d = points.len();
    if let JointMultiplierModel::Shared { .. } = joint {
        if d > 1 {
            log::warn!("one multiplier shared by {d} points: exploratory configuration, no limit theorem applies");
            return Ok(true);
        }
    }
    let lattice: Vec<bool> = (0..d).map(|j| is_lattice(joint.marginal(j))).collect();
    if lattice.iter().any(|l| *l) != lattice.iter().all(|l| *l) {
        return Err(Error::RegimeViolation(
            "multipliers must be all absolutely continuous or all supported on roots of unity".into(),
        ));
    }
    if !lattice[0] {
        return Ok(false);
    }
    for (j, f) in fs.iter().enumerate() {
        if let Some(z) = f.zero_angles().iter().find(|z| !is_root_of_unity(**z)) {
            return Err(Error::RegimeViolation(format!(
                "function {} at point {j} has a zero at angle {z}, which is not a root of unity",
                f.label()
            )));
        }
    }
    for (j, x) in points.iter().enumerate() {
        if preset_certificate(&[x.value()]).is_none() {
            return Err(Error::RegimeViolation(format!(
                "point {j} (phi = {}) has no finite-type certificate; discrete multipliers need one",
                x.value()
            )));
        }
    }
    for j in 0..d {
        for l in 0..j {
            if preset_certificate(&[points[l].value(), points[j].value()]).is_none() {
                return Err(Error::RegimeViolation(format!(
                    "points {l} and {j} are not certified pairwise of finite type"
                )));
            }
        }
    }
    Ok(false)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    /// Per coordinate `(Re_1, Im_1, ..., Re_d, Im_d)` of the normalized samples.
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
    pub ks: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    /// Means of the raw, uncentered and unscaled statistics.
    pub raw_means: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub d: usize,
    pub exploratory: bool,
    pub centers: Vec<f64>,
    pub scales: Vec<f64>,
    /// Normalized statistics, `2d` reals per sample.
    pub samples: Vec<Vec<f64>>,
    pub summary: Summary,
    pub singular_rejections: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_secs: Option<f64>,
}

impl Experiment {
    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn constants(&self) -> &[LimitConstants] {
        &self.constants
    }

    pub fn is_exploratory(&self) -> bool {
        self.exploratory
    }

    fn dim(&self) -> usize {
        self.points.len().max(1)
    }

    /// Most singular samples tolerated: 0.1% of the requested count.
    pub fn rejection_cap(&self) -> usize {
        self.config.num_samples / 1000
    }

    fn evaluate(&self, ct: &CycleType, rng: &mut ChaCha8Rng) -> Result<Vec<ComplexLogValue>> {
        let joint = self.joint.as_ref();
        match self.config.kind {
            StatisticKind::CycleCount => Ok(vec![ComplexLogValue::new(ct.num_cycles() as f64, 0.0)]),
            StatisticKind::Logz | StatisticKind::Multipoint => {
                multipoint_log_z(ct, &self.points, joint.expect("validated"), rng)
            }
            StatisticKind::W1 => {
                multipoint_w(ct, ClassKind::W1, &self.functions, &self.points, joint.expect("validated"), rng)
            }
            StatisticKind::W2 => {
                multipoint_w(ct, ClassKind::W2, &self.functions, &self.points, joint.expect("validated"), rng)
            }
        }
    }

    /// Raw statistic for sample `index`, resampling singular draws on the same stream.
    fn sample(&self, index: usize) -> Result<(Vec<f64>, usize)> {
        let mut rng = derive_stream(self.config.master_seed, index as u64);
        let cap = self.rejection_cap();
        let mut rejected = 0;
        loop {
            let chain = sample_feller_chain_sparse(self.config.n, self.theta, &mut rng);
            let ct = cycle_counts_from_chain(&chain);
            match self.evaluate(&ct, &mut rng) {
                Ok(v) => return Ok((v.iter().flat_map(|c| [c.re, c.im]).collect(), rejected)),
                Err(Error::SingularSample { .. }) => {
                    rejected += 1;
                    if rejected > cap {
                        return Err(Error::TooManySingular { rejected, requested: self.config.num_samples });
                    }
                }
                Err(e) => return Err(e),
            }
        }
    }

    fn theoretical_centers(&self) -> Vec<f64> {
        let (n, theta) = (self.config.n, self.config.theta);
        if self.config.kind == StatisticKind::CycleCount {
            return vec![expected_cycle_count(n, theta), 0.0];
        }
        let ln_n = (n as f64).ln();
        self.constants.iter().flat_map(|c| [theta * c.m_r * ln_n, theta * c.m_i * ln_n]).collect()
    }

    /// `sqrt(theta V log n)` per coordinate; 1 where the limit variance vanishes.
    pub fn scales(&self) -> Vec<f64> {
        let (n, theta) = (self.config.n as f64, self.config.theta);
        let variances: Vec<f64> = if self.config.kind == StatisticKind::CycleCount {
            vec![1.0, 0.0]
        } else {
            self.constants.iter().flat_map(|c| [c.v_r, c.v_i]).collect()
        };
        variances
            .iter()
            .map(|v| {
                let s = (theta * v * n.ln()).sqrt();
                if s > 0.0 {
                    s
                } else {
                    1.0
                }
            })
            .collect()
    }

    pub fn run(&self) -> Result<ExperimentResult> {
        let start = Instant::now();
        let count = self.config.num_samples;
        let draw = || (0..count).into_par_iter().map(|i| self.sample(i)).collect::<Vec<_>>();
        let drawn = match self.config.workers {
            Some(w) => rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
                .install(draw),
            None => draw(),
        };
        let mut raw = Vec::with_capacity(count);
        let mut rejected = 0;
        for r in drawn {
            let (v, k) = r?;
            rejected += k;
            raw.push(v);
        }
        if rejected > self.rejection_cap() {
            return Err(Error::TooManySingular { rejected, requested: count });
        }
        let raw_means = column_means(&raw);
        let centers = match self.config.centering {
            Centering::Theoretical => self.theoretical_centers(),
            Centering::Empirical => raw_means.clone(),
            Centering::None => vec![0.0; 2 * self.dim()],
        };
        let scales = self.scales();
        let samples: Vec<Vec<f64>> = raw
            .iter()
            .map(|r| r.iter().zip(&centers).zip(&scales).map(|((x, c), s)| (x - c) / s).collect())
            .collect();
        let summary = summarize(&samples, raw_means)?;
        let wall_time_secs = self.config.record_timing.then(|| start.elapsed().as_secs_f64());
        Ok(ExperimentResult {
            config: self.config.clone(),
            d: self.dim(),
            exploratory: self.exploratory,
            centers,
            scales,
            samples,
            summary,
            singular_rejections: rejected,
            wall_time_secs,
        })
    }
}

fn summarize(samples: &[Vec<f64>], raw_means: Vec<f64>) -> Result<Summary> {
    let means = column_means(samples);
    if samples.len() < 2 {
        let k = means.len();
        return Ok(Summary {
            means,
            variances: vec![f64::NAN; k],
            ks: vec![f64::NAN; k],
            covariance: vec![vec![f64::NAN; k]; k],
            raw_means,
        });
    }
    let covariance = empirical_cov(samples)?;
    let variances = (0..covariance.len()).map(|i| covariance[i][i]).collect();
    let ks = (0..means.len())
        .map(|c| ks_normal(&samples.iter().map(|r| r[c]).collect::<Vec<_>>()))
        .collect::<Result<_>>()?;
    Ok(Summary { means, variances, ks, covariance, raw_means })
}

/// Validates and runs.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?.run()
}
