use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::integrate_split;

use super::discrepancy::{star_discrepancy_1d, star_discrepancy_exact};
use super::variation::total_variation;
use super::PointSequence;

const VARIATION_TOL: f64 = 1e-10;
const QUAD_TOL: f64 = 1e-11;
const SIGN_SCAN: usize = 4096;

/// Terms of the Koksma-Hlawka bound on the box `[delta, 1 - delta]^d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KhBound {
    pub delta: f64,
    /// Corner and edge terms, `sum_k delta^{d-k} sum_F int_F |h|`.
    pub boundary: f64,
    /// `sum_F D_n^*(F) V(h|F)` over positive faces.
    pub discrepancy_terms: f64,
    /// Star discrepancy of the whole sequence in `[0, 1]^d`.
    pub discrepancy: f64,
    /// Variation of `h` on the box (Vitali variation for products).
    pub variation: f64,
    pub bound: f64,
}

fn check_inside(seq: &PointSequence, delta: f64) -> Result<()> {
    if !(0.0..0.5).contains(&delta) {
        return Err(Error::InvalidArgument(format!("delta = {delta} is not in [0, 1/2)")));
    }
    for i in 0..seq.len() {
        if seq.point(i).iter().any(|x| *x < delta || *x > 1.0 - delta) {
            return Err(Error::PointOutsideBox { index: i, delta });
        }
    }
    Ok(())
}

/// `|(1/n) sum h(x_m) - int_delta^{1-delta} h| <= delta (|h(delta)| + |h(1-delta)|) + D_n^* V(h)`.
pub fn kh_error_bound_1d<F: Fn(f64) -> f64>(h: F, seq: &PointSequence, delta: f64) -> Result<KhBound> {
    if seq.dim() != 1 {
        return Err(Error::DimensionUnsupported(seq.dim()));
    }
    check_inside(seq, delta)?;
    let discrepancy = star_discrepancy_exact(seq)?;
    let variation = total_variation(&h, delta, 1.0 - delta, VARIATION_TOL)?;
    let boundary = delta * (h(delta).abs() + h(1.0 - delta).abs());
    let discrepancy_terms = discrepancy * variation;
    Ok(KhBound { delta, boundary, discrepancy_terms, discrepancy, variation, bound: boundary + discrepancy_terms })
}

/// Bound for `h(u, v) = h1(u) h2(v)` on `[delta, 1 - delta]^2`: four corners,
/// four edges, the two positive edges `u = 1 - delta`, `v = 1 - delta` with
/// the one-dimensional discrepancies of the coordinate sequences, and the
/// interior with the Vitali variation `V(h1) V(h2)`.
pub fn kh_error_bound_product<F1, F2>(h1: F1, h2: F2, seq: &PointSequence, delta: f64) -> Result<KhBound>
where
    F1: Fn(f64) -> f64,
    F2: Fn(f64) -> f64,
{
    if seq.dim() != 2 {
        return Err(Error::DimensionUnsupported(seq.dim()));
    }
    check_inside(seq, delta)?;
    let (lo, hi) = (delta, 1.0 - delta);
    let ends1 = h1(lo).abs() + h1(hi).abs();
    let ends2 = h2(lo).abs() + h2(hi).abs();
    let corners = delta * delta * ends1 * ends2;
    let edges = delta * (ends2 * abs_integral(&h1, lo, hi)? + ends1 * abs_integral(&h2, lo, hi)?);
    let v1 = total_variation(&h1, lo, hi, VARIATION_TOL)?;
    let v2 = total_variation(&h2, lo, hi, VARIATION_TOL)?;
    let d1 = star_discrepancy_1d(&seq.coordinate(0));
    let d2 = star_discrepancy_1d(&seq.coordinate(1));
    let discrepancy = star_discrepancy_exact(seq)?;
    let discrepancy_terms = d1 * v1 * h2(hi).abs() + d2 * v2 * h1(hi).abs() + discrepancy * v1 * v2;
    let boundary = corners + edges;
    Ok(KhBound {
        delta,
        boundary,
        discrepancy_terms,
        discrepancy,
        variation: v1 * v2,
        bound: boundary + discrepancy_terms,
    })
}

/// `int_a^b |h|`, split at the sign changes of `h` found on a grid.
pub fn abs_integral<F: Fn(f64) -> f64>(h: &F, a: f64, b: f64) -> Result<f64> {
    let splits = sign_changes(h, a, b);
    integrate_split(|x| h(x).abs(), a, b, &splits, QUAD_TOL)
}

/// `int_0^delta |h| + int_{1-delta}^1 |h|`: the mass the box leaves out.
pub fn tail_mass<F: Fn(f64) -> f64>(h: &F, delta: f64) -> Result<f64> {
    Ok(abs_integral(h, 0.0, delta)? + abs_integral(h, 1.0 - delta, 1.0)?)
}

fn sign_changes<F: Fn(f64) -> f64>(h: &F, a: f64, b: f64) -> Vec<f64> {
    let step = (b - a) / SIGN_SCAN as f64;
    let mut out = Vec::new();
    let mut prev_x = a + 0.5 * step;
    let mut prev = h(prev_x);
    for i in 1..SIGN_SCAN {
        let x = a + (i as f64 + 0.5) * step;
        let y = h(x);
        if prev.is_finite() && y.is_finite() && (prev < 0.0) != (y < 0.0) {
            let (mut lo, mut hi) = (prev_x, x);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if (h(mid) < 0.0) == (prev < 0.0) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            out.push(0.5 * (lo + hi));
        }
        prev = y;
        prev_x = x;
    }
    out
}
