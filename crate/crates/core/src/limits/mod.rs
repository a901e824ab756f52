//! Limit constants of the central limit theorems, computed by quadrature.

mod statistic;

pub use statistic::{lyapunov_check, v_n, LyapunovReport, LyapunovRow, Part, StatisticSpec, VnReport};

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::class_fn::SpectralFunction;
use crate::error::{Error, Result};
use crate::quadrature::singular_quadrature;

/// Default relative tolerance for the limit-constant integrals.
pub const QUAD_TOL: f64 = 1e-12;

const ARG_SCAN: usize = 4096;

/// `m_R = int log|f|`, `m_I = int arg f`, `V_R = int log^2|f|`,
/// `V_I = int arg^2 f`, `C_RI = int log|f| arg f`, all over `f(e^{2 pi i phi})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitConstants {
    #[serde(rename = "m_R")]
    pub m_r: f64,
    #[serde(rename = "m_I")]
    pub m_i: f64,
    #[serde(rename = "V_R")]
    pub v_r: f64,
    #[serde(rename = "V_I")]
    pub v_i: f64,
    #[serde(rename = "C_RI")]
    pub c_ri: f64,
}

/// Angles in `(0, 1)` where `arg f(e^{2 pi i phi})` jumps by more than `pi`,
/// located on a grid and refined by bisection.
pub fn arg_jumps(f: &SpectralFunction) -> Vec<f64> {
    let step = 1.0 / ARG_SCAN as f64;
    let mut out = Vec::new();
    let mut prev_x = 0.5 * step;
    let mut prev = f.arg(prev_x);
    for i in 1..ARG_SCAN {
        let x = (i as f64 + 0.5) * step;
        let y = f.arg(x);
        if (y - prev).abs() > PI {
            let (mut lo, mut hi, mut flo) = (prev_x, x, prev);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                let fm = f.arg(mid);
                if (fm - flo).abs() > PI {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            out.push(0.5 * (lo + hi));
        }
        prev = y;
        prev_x = x;
    }
    out
}

/// Split points for integrals of `log|f|` and `arg f`: zeros and arg jumps.
pub fn split_points(f: &SpectralFunction) -> Vec<f64> {
    let mut s: Vec<f64> = f.zero_angles().to_vec();
    s.extend(arg_jumps(f));
    s
}

pub fn limit_constants(f: &SpectralFunction) -> Result<LimitConstants> {
    limit_constants_with_tol(f, QUAD_TOL)
}

pub fn limit_constants_with_tol(f: &SpectralFunction, tol: f64) -> Result<LimitConstants> {
    let splits = split_points(f);
    let q = |g: &dyn Fn(f64) -> f64| singular_quadrature(g, &splits, tol);
    let c = LimitConstants {
        m_r: q(&|x| f.log_abs(x))?,
        m_i: q(&|x| f.arg(x))?,
        v_r: q(&|x| f.log_abs(x).powi(2))?,
        v_i: q(&|x| f.arg(x).powi(2))?,
        c_ri: q(&|x| f.log_abs(x) * f.arg(x))?,
    };
    if [c.m_r, c.m_i, c.v_r, c.v_i, c.c_ri].iter().any(|v| !v.is_finite()) {
        return Err(Error::NonConvergence(format!("non-finite limit constant for {}", f.label())));
    }
    Ok(c)
}

/// Limit covariance of `(Re N_1, Im N_1, ..., Re N_d, Im N_d)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceSpec {
    pub d: usize,
    pub theta: f64,
    pub matrix: Vec<Vec<f64>>,
}

impl CovarianceSpec {
    pub fn to_matrix(&self) -> DMatrix<f64> {
        let k = self.matrix.len();
        DMatrix::from_fn(k, k, |i, j| self.matrix[i][j])
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.to_matrix().symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_symmetric(&self) -> bool {
        let m = &self.matrix;
        (0..m.len()).all(|i| (0..m.len()).all(|j| m[i][j] == m[j][i]))
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        self.is_symmetric() && self.min_eigenvalue() >= -tol
    }
}

/// Diagonal blocks `theta [[V_R, C_RI], [C_RI, V_I]]`; off-diagonal blocks are
/// products of one-dimensional integrals, `theta [[m_R m_R', m_R m_I'], [m_I m_R', m_I m_I']]`.
pub fn covariance_matrix(fs: &[SpectralFunction], theta: f64) -> Result<CovarianceSpec> {
    let consts: Vec<LimitConstants> = fs.iter().map(limit_constants).collect::<Result<_>>()?;
    covariance_from_constants(&consts, theta)
}

pub fn covariance_from_constants(consts: &[LimitConstants], theta: f64) -> Result<CovarianceSpec> {
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(Error::InvalidTheta(theta));
    }
    let d = consts.len();
    let mut m = vec![vec![0.0; 2 * d]; 2 * d];
    for (j, a) in consts.iter().enumerate() {
        for (l, b) in consts.iter().enumerate() {
            let block = if j == l {
                [[a.v_r, a.c_ri], [a.c_ri, a.v_i]]
            } else {
                [[a.m_r * b.m_r, a.m_r * b.m_i], [a.m_i * b.m_r, a.m_i * b.m_i]]
            };
            for r in 0..2 {
                for c in 0..2 {
                    m[2 * j + r][2 * l + c] = theta * block[r][c];
                }
            }
        }
    }
    Ok(CovarianceSpec { d, theta, matrix: m })
}

/// `sqrt(theta V log n)`, with `V` the variance constant of the chosen part.
pub fn normalization(n: usize, theta: f64, consts: &LimitConstants, part: Part) -> f64 {
    let v = match part {
        Part::Re => consts.v_r,
        Part::Im => consts.v_i,
    };
    (theta * v * (n as f64).ln()).sqrt()
}

/// `theta (m_R + i m_I) log n`.
pub fn centering(n: usize, theta: f64, consts: &LimitConstants) -> Complex64 {
    Complex64::new(consts.m_r, consts.m_i) * theta * (n as f64).ln()
}
