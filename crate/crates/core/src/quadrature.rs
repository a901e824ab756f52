//! Tanh-sinh (double exponential) quadrature for integrands with
//! integrable endpoint singularities.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

/// Refinement levels tried before giving up.
pub const MAX_LEVEL: usize = 12;

const T_MAX: f64 = 4.0;

/// Abscissa offsets from the nearer endpoint, as fractions of the half-width,
/// with weights. Each node is `(c, w)` where the node sits at distance
/// `c * half_width` from an endpoint (`c` in `(0, 1]`).
fn nodes(t: f64) -> Option<(f64, f64)> {
    let u = FRAC_PI_2 * t.sinh();
    let e = (2.0 * u.abs()).exp();
    // 1 - tanh|u| = 2 / (e^{2|u|} + 1), exact near the endpoint
    let c = 2.0 / (e + 1.0);
    if c < 1e-300 || !c.is_finite() {
        return None;
    }
    let ch = u.cosh();
    let w = FRAC_PI_2 * t.cosh() / (ch * ch);
    Some((c, w))
}

/// `int_a^b f` by tanh-sinh, refined until successive levels agree to
/// `tol * max(1, |I|)`. Non-finite evaluations (at the endpoints of a
/// singularity) are skipped.
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidArgument(format!("bad interval [{a}, {b}]")));
    }
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let eval = |t: f64, acc: &mut CompensatedSum| {
        if t == 0.0 {
            let v = f(mid);
            if v.is_finite() {
                acc.add(FRAC_PI_2 * v);
            }
            return;
        }
        if let Some((c, w)) = nodes(t) {
            let d = half * c;
            let x = if t > 0.0 { b - d } else { a + d };
            if x > a && x < b {
                let v = f(x);
                if v.is_finite() {
                    acc.add(w * v);
                }
            }
        }
    };
    let mut sum = CompensatedSum::new();
    let mut h = 1.0;
    let mut k = 0i64;
    while (k as f64) * h <= T_MAX {
        let t = k as f64 * h;
        eval(t, &mut sum);
        if k > 0 {
            eval(-t, &mut sum);
        }
        k += 1;
    }
    let mut prev = half * h * sum.value();
    for _ in 1..=MAX_LEVEL {
        h *= 0.5;
        let mut k = 1i64;
        while (k as f64) * h <= T_MAX {
            let t = k as f64 * h;
            eval(t, &mut sum);
            eval(-t, &mut sum);
            k += 2;
        }
        let cur = half * h * sum.value();
        if (cur - prev).abs() <= tol * cur.abs().max(1.0) {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::NonConvergence(format!(
        "tanh-sinh on [{a}, {b}] did not reach tolerance {tol:e} within {MAX_LEVEL} levels"
    )))
}

/// `int_0^1 u`, split at the given singular angles (taken mod 1) and at 0
/// and 1, with tanh-sinh on every piece.
pub fn singular_quadrature<F: Fn(f64) -> f64>(u: F, singular_angles: &[f64], tol: f64) -> Result<f64> {
    integrate_split(u, 0.0, 1.0, singular_angles, tol)
}

/// `int_a^b u` split at the interior points of `splits`.
pub fn integrate_split<F: Fn(f64) -> f64>(u: F, a: f64, b: f64, splits: &[f64], tol: f64) -> Result<f64> {
    let mut cuts: Vec<f64> = splits.iter().copied().filter(|s| *s > a && *s < b).collect();
    cuts.push(a);
    cuts.push(b);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut total = CompensatedSum::new();
    for w in cuts.windows(2) {
        total.add(tanh_sinh(&u, w[0], w[1], tol)?);
    }
    Ok(total.value())
}

/// Midpoint Riemann sum with `n` cells, used as an independent check.
pub fn midpoint_rule<F: Fn(f64) -> f64>(u: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let s: CompensatedSum = (0..n).map(|i| u(a + (i as f64 + 0.5) * h)).collect();
    s.value() * h
}
