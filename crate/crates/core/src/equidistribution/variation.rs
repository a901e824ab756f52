use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

const INITIAL_GRID: usize = 256;
const MAX_GRID: usize = 1 << 22;

/// Total variation of a piecewise monotone `h` on `[a, b]`.
///
/// Extrema are located as sign changes of the differences on a uniform grid
/// and refined by golden-section search; the variation is the sum of the
/// jumps between consecutive breakpoints. The grid doubles until two
/// estimates agree within `tol * max(1, V)`.
pub fn total_variation<F: Fn(f64) -> f64>(h: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(a <= b) {
        return Err(Error::InvalidArgument(format!("bad interval [{a}, {b}]")));
    }
    if a == b {
        return Ok(0.0);
    }
    let mut grid = INITIAL_GRID;
    let mut prev = monotone_pieces_variation(&h, a, b, grid);
    while grid < MAX_GRID {
        grid *= 2;
        let cur = monotone_pieces_variation(&h, a, b, grid);
        if (cur - prev).abs() <= tol * cur.abs().max(1.0) {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::NonConvergence(format!("variation on [{a}, {b}] not stable at {MAX_GRID} cells")))
}

fn monotone_pieces_variation<F: Fn(f64) -> f64>(h: &F, a: f64, b: f64, cells: usize) -> f64 {
    let step = (b - a) / cells as f64;
    let xs: Vec<f64> = (0..=cells).map(|i| if i == cells { b } else { a + i as f64 * step }).collect();
    let ys: Vec<f64> = xs.iter().map(|x| h(*x)).collect();
    let mut breaks = vec![ys[0]];
    // index and sign of the last nonzero difference
    let mut last: Option<(usize, i8)> = None;
    for i in 0..cells {
        let s = sign(ys[i + 1] - ys[i]);
        if s == 0 {
            continue;
        }
        if let Some((j, ls)) = last {
            if s != ls {
                // the extremum lies in [x_j, x_{i+1}]
                breaks.push(golden_extremum(h, xs[j], xs[i + 1], ls > 0));
            }
        }
        last = Some((i, s));
    }
    breaks.push(ys[cells]);
    breaks.windows(2).map(|w| (w[1] - w[0]).abs()).collect::<CompensatedSum>().value()
}

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

fn golden_extremum<F: Fn(f64) -> f64>(h: &F, mut lo: f64, mut hi: f64, is_max: bool) -> f64 {
    let key = |x: f64| if is_max { h(x) } else { -h(x) };
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (key(x1), key(x2));
    for _ in 0..80 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = key(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = key(x1);
        }
    }
    let best = f1.max(f2).max(key(lo)).max(key(hi));
    if is_max {
        best
    } else {
        -best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    #[test]
    fn simple_functions() {
        assert!((total_variation(|x| x, 0.0, 1.0, 1e-10).unwrap() - 1.0).abs() < 1e-12);
        assert!((total_variation(|x| (TAU * x).cos(), 0.0, 1.0, 1e-10).unwrap() - 4.0).abs() < 1e-10);
        assert!((total_variation(|x| (7.3 * x).sin(), 0.0, 2.0, 1e-10).unwrap() - {
            // extrema at 7.3 x = (2k+1) pi/2 for k = 0..4, all below 14.6
            1.0 + 4.0 * 2.0 + (1.0 - 14.6f64.sin())
        })
        .abs()
            < 1e-9);
        assert_eq!(total_variation(|x| x, 0.5, 0.5, 1e-10).unwrap(), 0.0);
    }

    #[test]
    fn log_singular_integrand_near_zero() {
        let delta = 1e-4;
        let h = |x: f64| (2.0 * (PI * x).sin()).ln();
        let v = total_variation(h, delta, 1.0 - delta, 1e-10).unwrap();
        let exact = 2.0 * (2f64.ln() - h(delta));
        assert!((v - exact).abs() < 1e-9);
        // fine-grid oracle
        let n = 1_000_000;
        let grid: f64 = (0..n)
            .map(|i| {
                let x0 = delta + (1.0 - 2.0 * delta) * i as f64 / n as f64;
                let x1 = delta + (1.0 - 2.0 * delta) * (i + 1) as f64 / n as f64;
                (h(x1) - h(x0)).abs()
            })
            .sum();
        assert!((v - grid).abs() < 1e-6);
        // 2|log(2 pi delta)| plus the O(1) term 2 ln 2
        assert!((v - 2.0 * (TAU * delta).ln().abs() - 2.0 * 2f64.ln()).abs() < 1e-6);
    }
}
