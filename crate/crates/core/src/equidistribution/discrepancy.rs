use crate::error::{Error, Result};

use super::PointSequence;

/// Largest 2D sequence accepted by the exact algorithm.
pub const EXACT_2D_MAX_N: usize = 4000;
/// Largest 1D sequence accepted by the exact algorithm.
pub const EXACT_1D_MAX_N: usize = 100_000;

/// Exact star discrepancy `sup_alpha |A_n([0, alpha))/n - vol|` for `d <= 2`.
pub fn star_discrepancy_exact(seq: &PointSequence) -> Result<f64> {
    match seq.dim() {
        1 => {
            if seq.len() > EXACT_1D_MAX_N {
                return Err(Error::SizeLimit { what: "n", value: seq.len(), limit: EXACT_1D_MAX_N });
            }
            Ok(star_discrepancy_1d(&seq.coordinate(0)))
        }
        2 => {
            if seq.len() > EXACT_2D_MAX_N {
                return Err(Error::SizeLimit { what: "n", value: seq.len(), limit: EXACT_2D_MAX_N });
            }
            Ok(star_discrepancy_2d(&seq.coordinate(0), &seq.coordinate(1)))
        }
        d => Err(Error::DimensionUnsupported(d)),
    }
}

/// `max_i max(i/n - x_(i), x_(i) - (i-1)/n)` over the sorted points.
pub fn star_discrepancy_1d(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, x)| ((i + 1) as f64 / n - x).max(x - i as f64 / n))
        .fold(0.0, f64::max)
}

/// Corner enumeration over `({x_i} u {1}) x ({y_j} u {1})`. For each corner
/// the closed box gives `count/n - vol` and the open box `vol - count/n`.
pub fn star_discrepancy_2d(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len();
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    let mut yvals: Vec<f64> = ys.to_vec();
    yvals.push(1.0);
    yvals.sort_by(f64::total_cmp);
    yvals.dedup();
    let rank = |y: f64| yvals.partition_point(|v| *v < y);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut hist = vec![0usize; yvals.len()];
    let mut best: f64 = 0.0;
    let mut i = 0;
    let evaluate = |a: f64, hist: &[usize], closed: bool, best: &mut f64| {
        let mut below = 0usize;
        for (j, &b) in yvals.iter().enumerate() {
            if closed {
                below += hist[j];
                *best = best.max(below as f64 / nf - a * b);
            } else {
                *best = best.max(a * b - below as f64 / nf);
                below += hist[j];
            }
        }
    };
    while i < n {
        let a = xs[order[i]];
        evaluate(a, &hist, false, &mut best);
        while i < n && xs[order[i]] == a {
            hist[rank(ys[order[i]])] += 1;
            i += 1;
        }
        evaluate(a, &hist, true, &mut best);
    }
    evaluate(1.0, &hist, false, &mut best);
    best
}

/// Lower bound from open boxes with corners on a `resolution^d` grid.
pub fn star_discrepancy_grid_oracle(seq: &PointSequence, resolution: usize) -> Result<f64> {
    let n = seq.len() as f64;
    let g = resolution as f64;
    match seq.dim() {
        1 => {
            let xs = seq.coordinate(0);
            Ok((0..=resolution)
                .map(|k| {
                    let a = k as f64 / g;
                    let c = xs.iter().filter(|x| **x < a).count() as f64;
                    (c / n - a).abs()
                })
                .fold(0.0, f64::max))
        }
        2 => {
            let (xs, ys) = (seq.coordinate(0), seq.coordinate(1));
            let mut best: f64 = 0.0;
            for k1 in 0..=resolution {
                let a = k1 as f64 / g;
                for k2 in 0..=resolution {
                    let b = k2 as f64 / g;
                    let c = xs.iter().zip(&ys).filter(|(x, y)| **x < a && **y < b).count() as f64;
                    best = best.max((c / n - a * b).abs());
                }
            }
            Ok(best)
        }
        d => Err(Error::DimensionUnsupported(d)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq1(xs: &[f64]) -> PointSequence {
        PointSequence::new(1, xs.iter().map(|x| vec![*x]).collect()).unwrap()
    }

    /// All corners, open and closed, counted naively.
    fn brute_2d(xs: &[f64], ys: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let mut cx: Vec<f64> = xs.to_vec();
        cx.push(1.0);
        let mut cy: Vec<f64> = ys.to_vec();
        cy.push(1.0);
        let mut best: f64 = 0.0;
        for &a in &cx {
            for &b in &cy {
                let closed = xs.iter().zip(ys).filter(|(x, y)| **x <= a && **y <= b).count() as f64;
                let open = xs.iter().zip(ys).filter(|(x, y)| **x < a && **y < b).count() as f64;
                best = best.max(closed / n - a * b).max(a * b - open / n);
            }
        }
        best
    }

    #[test]
    fn one_dimensional_examples() {
        assert_eq!(star_discrepancy_1d(&[0.5]), 0.5);
        assert_eq!(star_discrepancy_1d(&[0.25, 0.75]), 0.25);
        let n = 37;
        let xs: Vec<f64> = (1..=n).map(|i| (2 * i - 1) as f64 / (2 * n) as f64).collect();
        assert!((star_discrepancy_1d(&xs) - 0.5 / n as f64).abs() < 1e-15);
    }

    #[test]
    fn two_dimensional_single_point() {
        assert_eq!(star_discrepancy_2d(&[0.5], &[0.5]), 0.75);
        let s = PointSequence::new(2, vec![vec![0.5, 0.5]]).unwrap();
        let g = star_discrepancy_grid_oracle(&s, 200).unwrap();
        assert!(g <= 0.75 && g > 0.74);
    }

    #[test]
    fn dimension_three_rejected() {
        let s = PointSequence::new(3, vec![vec![0.1, 0.2, 0.3]]).unwrap();
        assert_eq!(star_discrepancy_exact(&s), Err(Error::DimensionUnsupported(3)));
    }

    #[test]
    fn grid_oracle_single_point_1d() {
        assert!((star_discrepancy_grid_oracle(&seq1(&[0.5]), 64).unwrap() - 0.5).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn exact_2d_matches_brute_force(pts in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..25)) {
            let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
            let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
            prop_assert!((star_discrepancy_2d(&xs, &ys) - brute_2d(&xs, &ys)).abs() < 1e-14);
        }

        #[test]
        fn exact_2d_with_ties_matches_brute_force(pts in prop::collection::vec((0u8..6, 0u8..6), 1..20)) {
            let xs: Vec<f64> = pts.iter().map(|p| p.0 as f64 / 6.0).collect();
            let ys: Vec<f64> = pts.iter().map(|p| p.1 as f64 / 6.0).collect();
            prop_assert!((star_discrepancy_2d(&xs, &ys) - brute_2d(&xs, &ys)).abs() < 1e-14);
        }

        #[test]
        fn exact_dominates_grid_1d(xs in prop::collection::vec(0.0f64..1.0, 1..64)) {
            let s = seq1(&xs);
            let exact = star_discrepancy_exact(&s).unwrap();
            let grid = star_discrepancy_grid_oracle(&s, 512).unwrap();
            prop_assert!(grid <= exact + 1e-15);
            prop_assert!(exact - grid <= 2.0 / 512.0);
            prop_assert!(exact >= 0.5 / xs.len() as f64 - 1e-15);
        }

        #[test]
        fn exact_dominates_grid_2d(pts in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..16)) {
            let s = PointSequence::new(2, pts.iter().map(|p| vec![p.0, p.1]).collect()).unwrap();
            let exact = star_discrepancy_exact(&s).unwrap();
            let grid = star_discrepancy_grid_oracle(&s, 64).unwrap();
            prop_assert!(grid <= exact + 1e-15);
            prop_assert!(exact - grid <= 4.0 / 64.0);
        }
    }
}
