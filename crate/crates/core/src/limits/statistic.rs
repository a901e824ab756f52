use serde::{Deserialize, Serialize};

use crate::class_fn::{ClassKind, SpectralFunction};
use crate::error::{Error, Result};
use crate::multiplier::{convolved_density_coeffs, discrete_probs_from_fourier, MultiplierModel, UnitAngle};
use crate::numeric::{frac, CompensatedSum};
use crate::quadrature::integrate_split;

use super::split_points;

const MOMENT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    Re,
    Im,
}

/// The summand `X_{m,k}` of `A_n = sum_m sum_k X_{m,k}`, a real or imaginary
/// part of one cycle's contribution.
#[derive(Debug, Clone)]
pub enum StatisticSpec {
    /// `X_{m,k} = c` for every cycle.
    Constant(f64),
    /// `log(1 - x^{-m} T)` with `T` the product of `m` multipliers.
    LogZ { model: MultiplierModel, x: UnitAngle, part: Part },
    /// `log f(x^m z)` (w1) or `log f(x^m T)` (w2).
    ClassTerm { f: SpectralFunction, kind: ClassKind, model: MultiplierModel, x: UnitAngle, part: Part },
}

/// Law of the angle added to `m phi`.
enum AngleLaw {
    Point,
    Uniform,
    Atoms(Vec<f64>),
    Density(Vec<(i64, num_complex::Complex64)>),
}

impl StatisticSpec {
    fn parts(&self) -> Option<(SpectralFunction, f64, &MultiplierModel, UnitAngle, Part, bool)> {
        match self {
            StatisticSpec::Constant(_) => None,
            StatisticSpec::LogZ { model, x, part } => Some((SpectralFunction::char_poly(), -1.0, model, *x, *part, true)),
            StatisticSpec::ClassTerm { f, kind, model, x, part } => {
                Some((f.clone(), 1.0, model, *x, *part, *kind == ClassKind::W2))
            }
        }
    }

    /// Whether `E|X_{m,1}|^p` does not depend on `m`.
    pub fn is_m_invariant(&self) -> bool {
        match self {
            StatisticSpec::Constant(_) => true,
            StatisticSpec::LogZ { model, .. } | StatisticSpec::ClassTerm { model, .. } => {
                matches!(model, MultiplierModel::Uniform)
            }
        }
    }

    /// `E|X_{m,1}|^p`. Discrete laws are exact finite sums over the atoms;
    /// uniform and density laws use quadrature split at the singular and
    /// arg-jump angles of the integrand.
    pub fn moment(&self, m: usize, p: f64) -> Result<f64> {
        if m == 0 {
            return Err(Error::InvalidArgument("cycle length must be positive".into()));
        }
        let Some((f, sign, model, x, part, product)) = self.parts() else {
            let StatisticSpec::Constant(c) = self else { unreachable!() };
            return Ok(c.abs().powf(p));
        };
        let law = angle_law(model, m, product)?;
        let base = m as f64 * x.value();
        let value = |a: f64| -> f64 {
            let v = match f.log_at(base + sign * a) {
                Some(l) => match part {
                    Part::Re => l.re,
                    Part::Im => l.im,
                },
                None => match part {
                    Part::Re => f64::NEG_INFINITY,
                    Part::Im => 0.0,
                },
            };
            v.abs().powf(p)
        };
        match law {
            AngleLaw::Point => Ok(value(0.0)),
            AngleLaw::Atoms(probs) => {
                let rho = probs.len() as f64;
                let s: CompensatedSum =
                    probs.iter().enumerate().filter(|(_, q)| **q > 0.0).map(|(k, q)| q * value(k as f64 / rho)).collect();
                Ok(s.value())
            }
            AngleLaw::Uniform => {
                let splits = shifted_splits(&f, base, sign);
                integrate_split(value, 0.0, 1.0, &splits, MOMENT_TOL)
            }
            AngleLaw::Density(coeffs) => {
                let splits = shifted_splits(&f, base, sign);
                let g = |a: f64| -> f64 {
                    coeffs
                        .iter()
                        .map(|(j, c)| (c * num_complex::Complex64::from_polar(1.0, std::f64::consts::TAU * *j as f64 * a)).re)
                        .sum::<f64>()
                        .max(0.0)
                };
                integrate_split(|a| value(a) * g(a), 0.0, 1.0, &splits, MOMENT_TOL)
            }
        }
    }

    /// `E|X_{m,1}|^p` for `m = 1..=n`, computing m-invariant moments once.
    pub fn moments(&self, n: usize, p: f64) -> Result<Vec<f64>> {
        if self.is_m_invariant() && n > 0 {
            return Ok(vec![self.moment(1, p)?; n]);
        }
        (1..=n).map(|m| self.moment(m, p)).collect()
    }
}

/// Angles `a` in `[0, 1)` where `base + sign * a` meets a split point of `f`.
fn shifted_splits(f: &SpectralFunction, base: f64, sign: f64) -> Vec<f64> {
    let mut s: Vec<f64> = split_points(f).into_iter().map(|z| frac(sign * (z - base))).collect();
    // the branch of log f is discontinuous where base + sign a crosses an integer
    s.push(frac(-sign * base));
    s
}

fn angle_law(model: &MultiplierModel, m: usize, product: bool) -> Result<AngleLaw> {
    Ok(match model {
        MultiplierModel::Trivial => AngleLaw::Point,
        MultiplierModel::Uniform => AngleLaw::Uniform,
        MultiplierModel::DiscreteRoots(d) if !product || m == 1 => AngleLaw::Atoms(d.probs().to_vec()),
        MultiplierModel::DiscreteRoots(d) => {
            let c: Vec<_> = d.fourier_coeffs().iter().map(|c| c.powu(m as u32)).collect();
            AngleLaw::Atoms(discrete_probs_from_fourier(d.rho(), &c)?)
        }
        MultiplierModel::FourierDensity(g) if !product || m == 1 => {
            AngleLaw::Density(g.coeffs().iter().map(|(j, c)| (*j, *c)).collect())
        }
        MultiplierModel::FourierDensity(g) => AngleLaw::Density(convolved_density_coeffs(g, m).into_iter().collect()),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VnReport {
    pub n: usize,
    pub value: f64,
    /// Whether the second half of the sum still contributes at least half
    /// of what a constant-moment harmonic sum would, and the sum is positive.
    pub grows: bool,
}

/// `V_n = sum_{m <= n} (1/m) E[X_{m,1}^2]`.
pub fn v_n(spec: &StatisticSpec, n: usize) -> Result<VnReport> {
    let moments = spec.moments(n, 2.0)?;
    let partial = harmonic_partial_sums(&moments);
    let value = partial.last().copied().unwrap_or(0.0);
    let grows = if n >= 4 && value > 0.0 {
        let half = partial[n / 2 - 1];
        let expected = value / (n as f64).ln() * (n as f64 / (n / 2) as f64).ln();
        value - half >= 0.5 * expected
    } else {
        false
    };
    Ok(VnReport { n, value, grows })
}

fn harmonic_partial_sums(moments: &[f64]) -> Vec<f64> {
    let mut acc = CompensatedSum::new();
    moments
        .iter()
        .enumerate()
        .map(|(i, e)| {
            acc.add(e / (i + 1) as f64);
            acc.value()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovRow {
    pub n: usize,
    pub v_n: f64,
    pub moment_sum: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovReport {
    pub p: f64,
    pub theta: f64,
    pub rows: Vec<LyapunovRow>,
    /// Ratios strictly decrease along the grid.
    pub decreasing: bool,
}

/// Tabulates `sum_{m<=n} (1/m) E|X_{m,1}|^p / V_n^{p/2}` over `ns`.
/// Requires `p > max(1/theta, 2)`.
pub fn lyapunov_check(spec: &StatisticSpec, ns: &[usize], p: f64, theta: f64) -> Result<LyapunovReport> {
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(Error::InvalidTheta(theta));
    }
    let floor = (1.0 / theta).max(2.0);
    if !(p > floor) {
        return Err(Error::RegimeViolation(format!("moment order p = {p} must exceed max(1/theta, 2) = {floor}")));
    }
    let n_max = ns.iter().copied().max().unwrap_or(0);
    let v = harmonic_partial_sums(&spec.moments(n_max, 2.0)?);
    let mp = harmonic_partial_sums(&spec.moments(n_max, p)?);
    let rows: Vec<LyapunovRow> = ns
        .iter()
        .filter(|n| **n > 0)
        .map(|&n| {
            let (v_n, moment_sum) = (v[n - 1], mp[n - 1]);
            LyapunovRow { n, v_n, moment_sum, ratio: moment_sum / v_n.powf(p / 2.0) }
        })
        .collect();
    let decreasing = rows.windows(2).all(|w| w[1].ratio < w[0].ratio);
    Ok(LyapunovReport { p, theta, rows, decreasing })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiplier::{DiscreteRoots, FourierDensity};
    use crate::quadrature::tanh_sinh;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    const PI2_12: f64 = PI * PI / 12.0;

    fn harmonic(n: usize) -> f64 {
        (1..=n).map(|k| 1.0 / k as f64).sum()
    }

    fn uniform_logz() -> StatisticSpec {
        StatisticSpec::LogZ { model: MultiplierModel::Uniform, x: UnitAngle::new(0.3).unwrap(), part: Part::Re }
    }

    #[test]
    fn constant_statistic() {
        let one = StatisticSpec::Constant(1.0);
        assert!((v_n(&one, 4).unwrap().value - 25.0 / 12.0).abs() < 1e-15);
        let r = v_n(&one, 1_000_000).unwrap();
        assert!(r.grows);
        // H_n = ln n + gamma + 1/(2n) + O(n^-2)
        assert!((r.value - 1e6f64.ln() - 0.5772156649015329 - 5e-7).abs() < 1e-9);
        let zero = v_n(&StatisticSpec::Constant(0.0), 100).unwrap();
        assert_eq!(zero.value, 0.0);
        assert!(!zero.grows);
    }

    #[test]
    fn uniform_logz_moments_are_m_invariant() {
        let s = uniform_logz();
        for m in [1, 2, 7] {
            assert!((s.moment(m, 2.0).unwrap() - PI2_12).abs() < 1e-9);
        }
        let r = v_n(&s, 50).unwrap();
        assert!((r.value - PI2_12 * harmonic(50)).abs() < 1e-8);
    }

    #[test]
    fn trivial_logz_is_pointwise() {
        let x = UnitAngle::new(2f64.sqrt() - 1.0).unwrap();
        let s = StatisticSpec::LogZ { model: MultiplierModel::Trivial, x, part: Part::Im };
        for m in 1..5 {
            let psi = frac(m as f64 * x.value());
            let want = SpectralFunction::char_poly().log_at(psi).unwrap().im.abs().powi(2);
            assert!((s.moment(m, 2.0).unwrap() - want).abs() < 1e-15);
        }
    }

    #[test]
    fn discrete_w2_uses_convolved_law() {
        // z = +-1 with equal mass: T_2 is always 1, so w2 at phi = 0.25 sees f(e^{2 pi i 0.5})
        let d = DiscreteRoots::new(2, vec![0.5, 0.5]).unwrap();
        let s = StatisticSpec::ClassTerm {
            f: SpectralFunction::char_poly(),
            kind: ClassKind::W2,
            model: MultiplierModel::DiscreteRoots(d),
            x: UnitAngle::new(0.125).unwrap(),
            part: Part::Re,
        };
        let f = SpectralFunction::char_poly();
        let m1 = 0.5 * (f.log_abs(0.125).powi(2) + f.log_abs(0.625).powi(2));
        assert!((s.moment(1, 2.0).unwrap() - m1).abs() < 1e-14);
        let m2 = 0.5 * (f.log_abs(0.25).powi(2) + f.log_abs(0.75).powi(2));
        assert!((s.moment(2, 2.0).unwrap() - m2).abs() < 1e-12);
    }

    #[test]
    fn density_moment_against_direct_quadrature() {
        let c1 = Complex64::new(0.3, 0.1);
        let g = FourierDensity::new([(1, c1)]).unwrap();
        let s = StatisticSpec::ClassTerm {
            f: SpectralFunction::char_poly(),
            kind: ClassKind::W1,
            model: MultiplierModel::FourierDensity(g.clone()),
            x: UnitAngle::new(0.2).unwrap(),
            part: Part::Re,
        };
        let f = SpectralFunction::char_poly();
        // the singularity sits at a = 0.8
        let u = |a: f64| f.log_abs(0.2 + a).powi(2) * g.density(a);
        let want = tanh_sinh(u, 0.0, 0.8, 1e-12).unwrap() + tanh_sinh(u, 0.8, 1.0, 1e-12).unwrap();
        assert!((s.moment(1, 2.0).unwrap() - want).abs() < 1e-9);
        // with c_1 = 0 the density is uniform and the moment is pi^2/12
        let flat = StatisticSpec::ClassTerm {
            f,
            kind: ClassKind::W2,
            model: MultiplierModel::FourierDensity(FourierDensity::new([(1, Complex64::new(0.0, 0.0))]).unwrap()),
            x: UnitAngle::new(0.2).unwrap(),
            part: Part::Re,
        };
        assert!((flat.moment(3, 2.0).unwrap() - PI2_12).abs() < 1e-9);
    }

    #[test]
    fn lyapunov_examples() {
        let one = StatisticSpec::Constant(1.0);
        let r = lyapunov_check(&one, &[10, 100, 1000], 3.0, 1.0).unwrap();
        assert!(r.decreasing);
        for row in &r.rows {
            assert!((row.ratio - harmonic(row.n).powf(-0.5)).abs() < 1e-12);
        }
        let r = lyapunov_check(&uniform_logz(), &[100, 1000, 10_000], 3.0, 1.0).unwrap();
        assert!(r.decreasing);
        assert!(matches!(lyapunov_check(&one, &[10], 2.4, 0.4), Err(Error::RegimeViolation(_))));
        assert!(matches!(lyapunov_check(&one, &[10], 2.0, 1.0), Err(Error::RegimeViolation(_))));
    }
}
