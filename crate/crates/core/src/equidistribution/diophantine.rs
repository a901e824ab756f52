use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{frac, ols_slope, CompensatedSum};

/// `||q . phi||` below this is treated as an exact rational relation.
pub const RESONANCE_TOL: f64 = 1e-12;

/// Largest search range for two-dimensional certificates.
pub const FINITE_TYPE_2D_MAX_H: usize = 4000;

/// Distance to the nearest integer.
pub fn nearest_integer_distance(a: f64) -> f64 {
    let f = frac(a);
    f.min(1.0 - f)
}

/// Upper bound for the star discrepancy of the Kronecker sequence of `phis`:
/// `3^d (2/(H+1) + (1/n) sum_{0 < |q|_inf <= H} 1/(r(q) ||q . phi||))`,
/// `r(q) = prod max(1, |q_i|)`.
pub fn etk_bound(phis: &[f64], n: usize, h: usize) -> Result<f64> {
    if h == 0 || n == 0 {
        return Err(Error::InvalidArgument("need H >= 1 and n >= 1".into()));
    }
    let d = phis.len();
    let fr: Vec<f64> = phis.iter().map(|p| frac(*p)).collect();
    let mut sum = CompensatedSum::new();
    let mut err = None;
    // every q and -q give the same term: enumerate half the lattice, count twice
    for_each_half_lattice(d, h, |q| {
        if err.is_some() {
            return;
        }
        let dot: f64 = q.iter().zip(&fr).map(|(qi, p)| *qi as f64 * p).sum();
        let dist = nearest_integer_distance(dot);
        if dist < RESONANCE_TOL {
            err = Some(Error::ResonantFrequency { q: q.to_vec() });
            return;
        }
        let r: f64 = q.iter().map(|qi| (qi.unsigned_abs() as f64).max(1.0)).product();
        sum.add(2.0 / (r * dist));
    })?;
    if let Some(e) = err {
        return Err(e);
    }
    Ok(3f64.powi(d as i32) * (2.0 / (h as f64 + 1.0) + sum.value() / n as f64))
}

/// Calls `f` on every `q` in `Z^d` with `0 < |q|_inf <= h` whose first
/// nonzero coordinate is positive, in lexicographic order.
fn for_each_half_lattice(d: usize, h: usize, mut f: impl FnMut(&[i64])) -> Result<()> {
    let h = h as i64;
    match d {
        1 => (1..=h).for_each(|q| f(&[q])),
        2 => {
            for q2 in 1..=h {
                f(&[0, q2]);
            }
            for q1 in 1..=h {
                for q2 in -h..=h {
                    f(&[q1, q2]);
                }
            }
        }
        d => return Err(Error::DimensionUnsupported(d)),
    }
    Ok(())
}

/// Constants with `||q . phi|| >= k / |q|_inf^gamma` on the searched range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiniteTypeCertificate {
    pub k: f64,
    pub gamma: f64,
    pub h_searched: usize,
    pub preset: bool,
}

impl FiniteTypeCertificate {
    /// False when the search found an exact rational relation.
    pub fn is_valid(&self) -> bool {
        self.k > 0.0 && self.gamma.is_finite()
    }

    /// Shrink parameter `delta = k / n^gamma`.
    pub fn delta(&self, n: usize) -> f64 {
        self.k / (n as f64).powf(self.gamma)
    }

    /// Checks the inequality for every `q` with `|q|_inf <= h`.
    pub fn verify(&self, phis: &[f64], h: usize) -> Result<bool> {
        let fr: Vec<f64> = phis.iter().map(|p| frac(*p)).collect();
        let mut ok = true;
        for_each_half_lattice(fr.len(), h, |q| {
            let dot: f64 = q.iter().zip(&fr).map(|(qi, p)| *qi as f64 * p).sum();
            let norm = q.iter().map(|qi| qi.unsigned_abs()).max().unwrap_or(0) as f64;
            if nearest_integer_distance(dot) < self.k / norm.powf(self.gamma) {
                ok = false;
            }
        })?;
        Ok(ok)
    }
}

struct Preset {
    phis: &'static [f64],
    k: f64,
    gamma: f64,
}

const SQRT2_FRAC: f64 = std::f64::consts::SQRT_2 - 1.0;
const SQRT3_FRAC: f64 = 0.732_050_807_568_877_2;
const GOLDEN_FRAC: f64 = 0.618_033_988_749_894_8;

/// Builtin certificates, checked exhaustively in tests. Quadratic irrationals
/// are badly approximable (`gamma = 1`); for the pair the exponent must
/// exceed 2 by Dirichlet's theorem.
const PRESETS: &[Preset] = &[
    Preset { phis: &[SQRT2_FRAC], k: 0.25, gamma: 1.0 },
    Preset { phis: &[GOLDEN_FRAC], k: 0.3, gamma: 1.0 },
    Preset { phis: &[SQRT3_FRAC], k: 0.2, gamma: 1.0 },
    Preset { phis: &[SQRT2_FRAC, SQRT3_FRAC], k: 0.03, gamma: 2.5 },
];

/// Search range the presets were verified on.
pub const PRESET_H: usize = 2000;

/// Builtin certificate for these angles (compared mod 1), in either order for pairs.
pub fn preset_certificate(phis: &[f64]) -> Option<FiniteTypeCertificate> {
    let fr: Vec<f64> = phis.iter().map(|p| frac(*p)).collect();
    let close = |a: &[f64], b: &[f64]| a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12);
    let mut rev = fr.clone();
    rev.reverse();
    PRESETS.iter().find(|p| close(p.phis, &fr) || close(p.phis, &rev)).map(|p| FiniteTypeCertificate {
        k: p.k,
        gamma: p.gamma,
        h_searched: PRESET_H,
        preset: true,
    })
}

/// Preset certificate if one exists, otherwise an empirical search.
pub fn finite_type_certificate(phis: &[f64], h_max: usize) -> Result<FiniteTypeCertificate> {
    match preset_certificate(phis) {
        Some(c) => Ok(c),
        None => finite_type_estimate(phis, h_max),
    }
}

/// Exhaustive search of `||q . phi||` over `0 < |q|_inf <= h_max`.
///
/// `gamma` is the negated log-log slope of the record minima of the running
/// minimum (clamped below at 1); `k = min ||q . phi|| |q|_inf^gamma`. An
/// exact relation gives `k = 0`.
pub fn finite_type_estimate(phis: &[f64], h_max: usize) -> Result<FiniteTypeCertificate> {
    if h_max < 2 {
        return Err(Error::InvalidArgument("need H_max >= 2".into()));
    }
    let d = phis.len();
    if d == 2 && h_max > FINITE_TYPE_2D_MAX_H {
        return Err(Error::SizeLimit { what: "H_max", value: h_max, limit: FINITE_TYPE_2D_MAX_H });
    }
    let fr: Vec<f64> = phis.iter().map(|p| frac(*p)).collect();
    // minimum distance at each level |q|_inf = h
    let mut level_min = vec![f64::INFINITY; h_max + 1];
    for_each_half_lattice(d, h_max, |q| {
        let dot: f64 = q.iter().zip(&fr).map(|(qi, p)| *qi as f64 * p).sum();
        let norm = q.iter().map(|qi| qi.unsigned_abs()).max().unwrap_or(0) as usize;
        let dist = nearest_integer_distance(dot);
        if dist < level_min[norm] {
            level_min[norm] = dist;
        }
    })?;
    let (mut lx, mut ly) = (Vec::new(), Vec::new());
    let mut running = f64::INFINITY;
    let mut exact_hit = false;
    for (h, &m) in level_min.iter().enumerate().skip(1) {
        if m < RESONANCE_TOL {
            exact_hit = true;
            break;
        }
        if m < running {
            running = m;
            lx.push((h as f64).ln());
            ly.push(m.ln());
        }
    }
    let gamma = if lx.len() >= 2 { (-ols_slope(&lx, &ly)).max(1.0) } else { 1.0 };
    let k = if exact_hit {
        0.0
    } else {
        level_min
            .iter()
            .enumerate()
            .skip(1)
            .map(|(h, m)| m * (h as f64).powf(gamma))
            .fold(f64::INFINITY, f64::min)
    };
    Ok(FiniteTypeCertificate { k, gamma, h_searched: h_max, preset: false })
}

/// Fitted exponent only (the negated slope before clamping), for diagnostics.
pub fn record_minima_slope(phis: &[f64], h_max: usize) -> Result<f64> {
    let fr: Vec<f64> = phis.iter().map(|p| frac(*p)).collect();
    let mut running = f64::INFINITY;
    let (mut lx, mut ly) = (Vec::new(), Vec::new());
    let mut level_min = vec![f64::INFINITY; h_max + 1];
    for_each_half_lattice(fr.len(), h_max, |q| {
        let dot: f64 = q.iter().zip(&fr).map(|(qi, p)| *qi as f64 * p).sum();
        let norm = q.iter().map(|qi| qi.unsigned_abs()).max().unwrap_or(0) as usize;
        level_min[norm] = level_min[norm].min(nearest_integer_distance(dot));
    })?;
    for (h, &m) in level_min.iter().enumerate().skip(1) {
        if m < running && m > 0.0 {
            running = m;
            lx.push((h as f64).ln());
            ly.push(m.ln());
        }
    }
    Ok(-ols_slope(&lx, &ly))
}
