//! Unit-circle multipliers `z`, their m-fold products `T`, and joint d-point laws.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::frac;

/// Points on the validation grid used to check a Fourier density is nonnegative.
pub const DENSITY_GRID: usize = 4096;

const PROB_TOL: f64 = 1e-12;

/// An angle `phi` in `[0, 1)` standing for `e^{2 pi i phi}`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct UnitAngle(f64);

impl UnitAngle {
    pub const ZERO: UnitAngle = UnitAngle(0.0);

    pub fn new(phi: f64) -> Result<Self> {
        if phi.is_finite() && (0.0..1.0).contains(&phi) {
            Ok(Self(phi))
        } else {
            Err(Error::InvalidArgument(format!("angle {phi} is not in [0, 1)")))
        }
    }

    /// Fractional part of any finite real.
    pub fn wrap(x: f64) -> Self {
        Self(frac(x))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::from_polar(1.0, TAU * self.0)
    }
}

impl TryFrom<f64> for UnitAngle {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<UnitAngle> for f64 {
    fn from(a: UnitAngle) -> f64 {
        a.0
    }
}

/// Absolutely continuous law with density `g(phi) = sum_j c_j e^{2 pi i j phi}`,
/// so `c_j = E[e^{-2 pi i j phi}]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierDensity {
    coeffs: BTreeMap<i64, Complex64>,
    envelope: f64,
}

impl FourierDensity {
    /// Validates `c_0 = 1`, Hermitian symmetry, `|c_j| < 1` off zero and a
    /// nonnegative density on a [`DENSITY_GRID`]-point grid. Coefficients not
    /// listed are zero; listing only `j > 0` fills in `c_{-j} = conj(c_j)`.
    pub fn new(coeffs: impl IntoIterator<Item = (i64, Complex64)>) -> Result<Self> {
        let mut map: BTreeMap<i64, Complex64> = BTreeMap::new();
        for (j, c) in coeffs {
            if !(c.re.is_finite() && c.im.is_finite()) {
                return Err(Error::InvalidModel(format!("coefficient c_{j} is not finite")));
            }
            if map.insert(j, c).is_some() {
                return Err(Error::InvalidModel(format!("coefficient c_{j} given twice")));
            }
        }
        let c0 = *map.entry(0).or_insert(Complex64::new(1.0, 0.0));
        if (c0 - 1.0).norm() > PROB_TOL {
            return Err(Error::InvalidModel(format!("c_0 must be 1, got {c0}")));
        }
        let positive: Vec<(i64, Complex64)> = map.iter().filter(|(j, _)| **j > 0).map(|(j, c)| (*j, *c)).collect();
        for (j, c) in positive {
            let mirror = *map.entry(-j).or_insert(c.conj());
            if (mirror - c.conj()).norm() > PROB_TOL {
                return Err(Error::InvalidModel(format!("c_{{-{j}}} must be the conjugate of c_{j}")));
            }
        }
        let negative: Vec<(i64, Complex64)> = map.iter().filter(|(j, _)| **j < 0).map(|(j, c)| (*j, *c)).collect();
        for (j, c) in negative {
            map.entry(-j).or_insert(c.conj());
        }
        map.retain(|j, c| *j == 0 || c.norm() > 0.0);
        for (j, c) in &map {
            if *j != 0 && c.norm() >= 1.0 {
                return Err(Error::InvalidModel(format!("|c_{j}| = {} must be < 1", c.norm())));
            }
        }
        let envelope = map.values().map(|c| c.norm()).sum();
        let density = Self { coeffs: map, envelope };
        for k in 0..DENSITY_GRID {
            let g = density.density(k as f64 / DENSITY_GRID as f64);
            if g < -PROB_TOL {
                return Err(Error::InvalidModel(format!(
                    "density is negative ({g:.3e}) at phi = {}",
                    k as f64 / DENSITY_GRID as f64
                )));
            }
        }
        Ok(density)
    }

    /// Real-valued density `g(phi)`.
    pub fn density(&self, phi: f64) -> f64 {
        self.coeffs
            .iter()
            .map(|(j, c)| (c * Complex64::from_polar(1.0, TAU * (*j as f64) * phi)).re)
            .sum()
    }

    pub fn coeff(&self, j: i64) -> Complex64 {
        self.coeffs.get(&j).copied().unwrap_or_default()
    }

    pub fn coeffs(&self) -> &BTreeMap<i64, Complex64> {
        &self.coeffs
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let phi: f64 = rng.random();
            if rng.random::<f64>() * self.envelope <= self.density(phi) {
                return phi;
            }
        }
    }
}

/// Law supported on the `rho`-th roots of unity.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteRoots {
    rho: usize,
    probs: Vec<f64>,
    cumulative: Vec<f64>,
}

impl DiscreteRoots {
    pub fn new(rho: usize, probs: Vec<f64>) -> Result<Self> {
        if rho == 0 || probs.len() != rho {
            return Err(Error::InvalidModel(format!("need rho >= 1 and rho probabilities, got rho = {rho}, {} values", probs.len())));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidModel("probabilities must be nonnegative".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidModel(format!("probabilities sum to {total}, not 1")));
        }
        let mut acc = 0.0;
        let cumulative = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(Self { rho, probs, cumulative })
    }

    pub fn from_fourier(rho: usize, coeffs: &[Complex64]) -> Result<Self> {
        Self::new(rho, discrete_probs_from_fourier(rho, coeffs)?)
    }

    pub fn rho(&self) -> usize {
        self.rho
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Forward transform `c_j = sum_k p_k e^{-2 pi i j k / rho}`.
    pub fn fourier_coeffs(&self) -> Vec<Complex64> {
        (0..self.rho as i64).map(|j| self.coeff(j)).collect()
    }

    pub fn coeff(&self, j: i64) -> Complex64 {
        let rho = self.rho as i64;
        self.probs
            .iter()
            .enumerate()
            .map(|(k, p)| p * Complex64::from_polar(1.0, -TAU * ((j * k as i64).rem_euclid(rho)) as f64 / rho as f64))
            .sum()
    }

    fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        self.cumulative.iter().position(|c| u < *c).unwrap_or_else(|| {
            // rounding left the last cumulative value just below 1
            self.probs.iter().rposition(|p| *p > 0.0).unwrap_or(0)
        })
    }
}

/// Inverse DFT `p_k = (1/rho) sum_j c_j e^{2 pi i j k / rho}`.
pub fn discrete_probs_from_fourier(rho: usize, coeffs: &[Complex64]) -> Result<Vec<f64>> {
    if rho == 0 || coeffs.len() != rho {
        return Err(Error::InvalidCoefficients(format!(
            "need rho >= 1 and rho coefficients, got rho = {rho}, {} values",
            coeffs.len()
        )));
    }
    if (coeffs[0] - 1.0).norm() > PROB_TOL {
        return Err(Error::InvalidCoefficients(format!("c_0 must be 1, got {}", coeffs[0])));
    }
    let n = rho as f64;
    let mut probs = Vec::with_capacity(rho);
    for k in 0..rho {
        let p: Complex64 = coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| c * Complex64::from_polar(1.0, TAU * ((j * k) % rho) as f64 / n))
            .sum::<Complex64>()
            / n;
        if p.im.abs() > PROB_TOL || p.re < -PROB_TOL {
            return Err(Error::InvalidCoefficients(format!("probability of root {k} is {p}")));
        }
        probs.push(p.re.max(0.0));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > PROB_TOL {
        return Err(Error::InvalidCoefficients(format!("probabilities sum to {total}")));
    }
    Ok(probs)
}

/// Distribution of a single multiplier `z`.
#[derive(Debug, Clone, PartialEq)]
pub enum MultiplierModel {
    Trivial,
    Uniform,
    FourierDensity(FourierDensity),
    DiscreteRoots(DiscreteRoots),
}

impl MultiplierModel {
    pub fn sample_z<R: Rng + ?Sized>(&self, rng: &mut R) -> UnitAngle {
        match self {
            MultiplierModel::Trivial => UnitAngle::ZERO,
            MultiplierModel::Uniform => UnitAngle::wrap(rng.random::<f64>()),
            MultiplierModel::FourierDensity(g) => UnitAngle::wrap(g.sample(rng)),
            MultiplierModel::DiscreteRoots(d) => UnitAngle::wrap(d.sample_index(rng) as f64 / d.rho as f64),
        }
    }

    /// Angle of `T = z_1 ... z_m` for independent draws, by direct summation.
    pub fn sample_t<R: Rng + ?Sized>(&self, m: usize, rng: &mut R) -> UnitAngle {
        assert!(m >= 1, "cycle length must be positive");
        match self {
            MultiplierModel::Trivial => UnitAngle::ZERO,
            MultiplierModel::DiscreteRoots(d) => {
                let k: usize = (0..m).map(|_| d.sample_index(rng)).sum();
                UnitAngle::wrap((k % d.rho) as f64 / d.rho as f64)
            }
            _ => {
                let mut acc = 0.0;
                for _ in 0..m {
                    acc = frac(acc + self.sample_z(rng).value());
                }
                UnitAngle::wrap(acc)
            }
        }
    }

    /// `E[e^{-2 pi i j z}]`.
    pub fn fourier_coeff(&self, j: i64) -> Complex64 {
        match self {
            MultiplierModel::Trivial => Complex64::new(1.0, 0.0),
            MultiplierModel::Uniform => Complex64::new(if j == 0 { 1.0 } else { 0.0 }, 0.0),
            MultiplierModel::FourierDensity(g) => g.coeff(j),
            MultiplierModel::DiscreteRoots(d) => d.coeff(j),
        }
    }

    pub fn is_trivial(&self) -> bool {
        matches!(self, MultiplierModel::Trivial)
    }
}

/// Coefficients `j -> c_j^m` of the m-fold convolution `g^{*m}`.
pub fn convolved_density_coeffs(density: &FourierDensity, m: usize) -> BTreeMap<i64, Complex64> {
    density.coeffs.iter().map(|(j, c)| (*j, c.powu(m as u32))).collect()
}

/// Joint law of `(z_1, ..., z_d)` used at d points.
#[derive(Debug, Clone, PartialEq)]
pub enum JointMultiplierModel {
    /// Independent coordinates with the given marginals.
    IndependentProduct(Vec<MultiplierModel>),
    /// Two coordinates on roots of unity of orders `rho[0]`, `rho[1]`, with
    /// joint probabilities given by a two-dimensional inverse DFT of `coeffs`.
    PairwiseDiscrete(PairwiseDiscrete),
    /// One draw shared by all `d` coordinates.
    Shared { model: MultiplierModel, d: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseDiscrete {
    rho: [usize; 2],
    joint: DiscreteRoots,
    marginals: [MultiplierModel; 2],
}

impl PairwiseDiscrete {
    /// `coeffs[a][b]` for `0 <= a < rho[0]`, `0 <= b < rho[1]`. Requires
    /// `sum_a |c_{a,b}| < 1` for `b != 0` and `sum_b |c_{a,b}| < 1` for `a != 0`.
    pub fn new(rho: [usize; 2], coeffs: &[Vec<Complex64>]) -> Result<Self> {
        let [r1, r2] = rho;
        if r1 == 0 || r2 == 0 || coeffs.len() != r1 || coeffs.iter().any(|row| row.len() != r2) {
            return Err(Error::InvalidCoefficients(format!("coefficient table must be {r1} x {r2}")));
        }
        for b in 1..r2 {
            let s: f64 = (0..r1).map(|a| coeffs[a][b].norm()).sum();
            if s >= 1.0 {
                return Err(Error::InvalidCoefficients(format!("sum_a |c_(a,{b})| = {s} is not < 1")));
            }
        }
        for (a, row) in coeffs.iter().enumerate().skip(1) {
            let s: f64 = row.iter().map(|c| c.norm()).sum();
            if s >= 1.0 {
                return Err(Error::InvalidCoefficients(format!("sum_b |c_({a},b)| = {s} is not < 1")));
            }
        }
        if (coeffs[0][0] - 1.0).norm() > PROB_TOL {
            return Err(Error::InvalidCoefficients("c_(0,0) must be 1".into()));
        }
        let norm = (r1 * r2) as f64;
        let mut probs = Vec::with_capacity(r1 * r2);
        for k1 in 0..r1 {
            for k2 in 0..r2 {
                let mut p = Complex64::default();
                for (a, row) in coeffs.iter().enumerate() {
                    for (b, c) in row.iter().enumerate() {
                        let angle = ((a * k1) % r1) as f64 / r1 as f64 + ((b * k2) % r2) as f64 / r2 as f64;
                        p += c * Complex64::from_polar(1.0, TAU * angle);
                    }
                }
                p /= norm;
                if p.im.abs() > PROB_TOL || p.re < -PROB_TOL {
                    return Err(Error::InvalidCoefficients(format!("probability of atom ({k1}, {k2}) is {p}")));
                }
                probs.push(p.re.max(0.0));
            }
        }
        let joint = DiscreteRoots::new(r1 * r2, probs)?;
        let p = joint.probs();
        let m1 = (0..r1).map(|k1| (0..r2).map(|k2| p[k1 * r2 + k2]).sum()).collect();
        let m2 = (0..r2).map(|k2| (0..r1).map(|k1| p[k1 * r2 + k2]).sum()).collect();
        let marginals = [
            MultiplierModel::DiscreteRoots(DiscreteRoots::new(r1, normalize(m1))?),
            MultiplierModel::DiscreteRoots(DiscreteRoots::new(r2, normalize(m2))?),
        ];
        Ok(Self { rho, joint, marginals })
    }

    /// Joint probability of the atom `(e^{2 pi i k1/rho_1}, e^{2 pi i k2/rho_2})`.
    pub fn prob(&self, k1: usize, k2: usize) -> f64 {
        self.joint.probs()[k1 * self.rho[1] + k2]
    }

    pub fn rho(&self) -> [usize; 2] {
        self.rho
    }

    fn sample_indices<R: Rng + ?Sized>(&self, rng: &mut R) -> [usize; 2] {
        let k = self.joint.sample_index(rng);
        [k / self.rho[1], k % self.rho[1]]
    }
}

fn normalize(v: Vec<f64>) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

/// One per-cycle joint draw: the first multiplier vector and the product of `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointCycleDraw {
    pub z: Vec<UnitAngle>,
    pub t: Vec<UnitAngle>,
}

impl JointMultiplierModel {
    pub fn dim(&self) -> usize {
        match self {
            JointMultiplierModel::IndependentProduct(ms) => ms.len(),
            JointMultiplierModel::PairwiseDiscrete(_) => 2,
            JointMultiplierModel::Shared { d, .. } => *d,
        }
    }

    pub fn marginal(&self, j: usize) -> &MultiplierModel {
        match self {
            JointMultiplierModel::IndependentProduct(ms) => &ms[j],
            JointMultiplierModel::PairwiseDiscrete(p) => &p.marginals[j],
            JointMultiplierModel::Shared { model, .. } => model,
        }
    }

    /// One joint vector `z`.
    pub fn sample_z<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<UnitAngle> {
        match self {
            JointMultiplierModel::IndependentProduct(ms) => ms.iter().map(|m| m.sample_z(rng)).collect(),
            JointMultiplierModel::PairwiseDiscrete(p) => {
                let k = p.sample_indices(rng);
                (0..2).map(|j| UnitAngle::wrap(k[j] as f64 / p.rho[j] as f64)).collect()
            }
            JointMultiplierModel::Shared { model, d } => vec![model.sample_z(rng); *d],
        }
    }

    /// `m` independent joint vectors, multiplied componentwise.
    pub fn sample_t<R: Rng + ?Sized>(&self, m: usize, rng: &mut R) -> Vec<UnitAngle> {
        match self {
            JointMultiplierModel::IndependentProduct(ms) if ms.len() == 1 => vec![ms[0].sample_t(m, rng)],
            _ => self.sample_joint_cycle(m, rng).t,
        }
    }

    pub fn sample_joint_cycle<R: Rng + ?Sized>(&self, m: usize, rng: &mut R) -> JointCycleDraw {
        assert!(m >= 1, "cycle length must be positive");
        let z = self.sample_z(rng);
        let mut acc: Vec<f64> = z.iter().map(|a| a.value()).collect();
        for _ in 1..m {
            for (s, a) in acc.iter_mut().zip(self.sample_z(rng)) {
                *s = frac(*s + a.value());
            }
        }
        JointCycleDraw { z, t: acc.into_iter().map(UnitAngle::wrap).collect() }
    }
}

/// JSON description of a [`MultiplierModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelSpec {
    Trivial,
    Uniform,
    /// `coeffs` lists `[j, re, im]`; negative indices default to conjugates.
    Fourier { coeffs: Vec<(i64, f64, f64)> },
    /// Either `probs` or the Fourier `coeffs` (`[re, im]`, index 0..rho).
    Discrete {
        rho: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        probs: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        coeffs: Option<Vec<(f64, f64)>>,
    },
}

impl ModelSpec {
    pub fn build(&self) -> Result<MultiplierModel> {
        Ok(match self {
            ModelSpec::Trivial => MultiplierModel::Trivial,
            ModelSpec::Uniform => MultiplierModel::Uniform,
            ModelSpec::Fourier { coeffs } => MultiplierModel::FourierDensity(FourierDensity::new(
                coeffs.iter().map(|(j, re, im)| (*j, Complex64::new(*re, *im))),
            )?),
            ModelSpec::Discrete { rho, probs, coeffs } => match (probs, coeffs) {
                (Some(p), None) => MultiplierModel::DiscreteRoots(DiscreteRoots::new(*rho, p.clone())?),
                (None, Some(c)) => {
                    let c: Vec<Complex64> = c.iter().map(|(re, im)| Complex64::new(*re, *im)).collect();
                    MultiplierModel::DiscreteRoots(DiscreteRoots::from_fourier(*rho, &c)?)
                }
                _ => {
                    return Err(Error::InvalidModel(
                        "discrete model needs exactly one of probs or coeffs".into(),
                    ))
                }
            },
        })
    }
}

/// JSON description of a [`JointMultiplierModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum JointModelSpec {
    Independent { models: Vec<ModelSpec> },
    PairwiseDiscrete { rho: [usize; 2], coeffs: Vec<Vec<(f64, f64)>> },
    Shared { model: ModelSpec },
}

impl JointModelSpec {
    pub fn build(&self, d: usize) -> Result<JointMultiplierModel> {
        let joint = match self {
            JointModelSpec::Independent { models } => {
                let models = if models.len() == 1 && d > 1 { vec![models[0].clone(); d] } else { models.clone() };
                JointMultiplierModel::IndependentProduct(models.iter().map(ModelSpec::build).collect::<Result<_>>()?)
            }
            JointModelSpec::PairwiseDiscrete { rho, coeffs } => {
                let c: Vec<Vec<Complex64>> = coeffs
                    .iter()
                    .map(|row| row.iter().map(|(re, im)| Complex64::new(*re, *im)).collect())
                    .collect();
                JointMultiplierModel::PairwiseDiscrete(PairwiseDiscrete::new(*rho, &c)?)
            }
            JointModelSpec::Shared { model } => JointMultiplierModel::Shared { model: model.build()?, d },
        };
        if joint.dim() != d {
            return Err(Error::InvalidModel(format!("joint model has {} coordinates but {d} points were given", joint.dim())));
        }
        Ok(joint)
    }
}
