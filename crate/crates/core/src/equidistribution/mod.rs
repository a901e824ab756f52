//! Kronecker sequences, star discrepancy, Diophantine certificates and
//! Koksma-Hlawka error bounds.

mod diophantine;
mod discrepancy;
mod koksma;
mod variation;

pub use diophantine::{
    etk_bound, finite_type_certificate, finite_type_estimate, nearest_integer_distance, preset_certificate,
    record_minima_slope, FiniteTypeCertificate, FINITE_TYPE_2D_MAX_H, PRESET_H, RESONANCE_TOL,
};
pub use discrepancy::{
    star_discrepancy_1d, star_discrepancy_2d, star_discrepancy_exact, star_discrepancy_grid_oracle,
    EXACT_1D_MAX_N, EXACT_2D_MAX_N,
};
pub use koksma::{abs_integral, kh_error_bound_1d, kh_error_bound_product, tail_mass, KhBound};
pub use variation::total_variation;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{frac, CompensatedSum};

/// `n` points in `[0, 1)^d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSequence {
    d: usize,
    coords: Vec<f64>,
}

impl PointSequence {
    pub fn new(d: usize, points: Vec<Vec<f64>>) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        let mut coords = Vec::with_capacity(d * points.len());
        for (i, p) in points.into_iter().enumerate() {
            if p.len() != d {
                return Err(Error::InvalidArgument(format!("point {i} has {} coordinates, expected {d}", p.len())));
            }
            if let Some(x) = p.iter().find(|x| !(0.0..1.0).contains(*x)) {
                return Err(Error::InvalidArgument(format!("point {i} has coordinate {x} outside [0, 1)")));
            }
            coords.extend(p);
        }
        Ok(Self { d, coords })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.d..(i + 1) * self.d]
    }

    pub fn coordinate(&self, j: usize) -> Vec<f64> {
        self.coords.iter().skip(j).step_by(self.d).copied().collect()
    }
}

/// Points `(<m phi_1>, ..., <m phi_d>)` for `m = 1..=n`.
pub fn kronecker(phis: &[f64], n: usize) -> PointSequence {
    let d = phis.len();
    let mut coords = Vec::with_capacity(d * n);
    for m in 1..=n {
        coords.extend(phis.iter().map(|p| frac(m as f64 * p)));
    }
    PointSequence { d, coords }
}

/// `(1/n) sum_m h(x_m)`, refusing points that sit exactly on a singular angle
/// in any coordinate.
pub fn weighted_sum<F: Fn(&[f64]) -> Complex64>(seq: &PointSequence, singular_angles: &[f64], h: F) -> Result<Complex64> {
    let singular: Vec<f64> = singular_angles.iter().map(|a| frac(*a)).collect();
    let (mut re, mut im) = (CompensatedSum::new(), CompensatedSum::new());
    for i in 0..seq.len() {
        let p = seq.point(i);
        if p.iter().any(|x| singular.contains(x)) {
            return Err(Error::SingularPointHit { index: i });
        }
        let v = h(p);
        re.add(v.re);
        im.add(v.im);
    }
    let n = seq.len() as f64;
    Ok(Complex64::new(re.value() / n, im.value() / n))
}

/// Discrepancy summary for a point sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyReport {
    pub n: usize,
    pub d: usize,
    pub exact: f64,
    pub etk: Option<f64>,
    pub kh_bound: Option<f64>,
    pub delta: Option<f64>,
}
