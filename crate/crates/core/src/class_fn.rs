//! log Z, the multiplicative class functions w1 and w2, and the
//! symmetric/antisymmetric characteristic polynomials with dense oracles.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::ops::{Add, AddAssign};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multiplier::{JointMultiplierModel, MultiplierModel, UnitAngle};
use crate::numeric::frac;
use crate::permutation::{CycleType, Permutation};

/// Largest dimension accepted by the dense determinant oracles.
pub const DENSE_ORACLE_MAX_N: usize = 12;

/// `(Re log, Im log)` accumulated termwise from principal values.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ComplexLogValue {
    pub re: f64,
    pub im: f64,
}

impl ComplexLogValue {
    pub const ZERO: ComplexLogValue = ComplexLogValue { re: 0.0, im: 0.0 };

    pub fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    /// `exp` of the value: the product of the underlying factors.
    pub fn exp(self) -> Complex64 {
        Complex64::from_polar(self.re.exp(), self.im)
    }

    pub fn scale(self, k: f64) -> Self {
        Self { re: self.re * k, im: self.im * k }
    }
}

impl Add for ComplexLogValue {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self { re: self.re + o.re, im: self.im + o.im }
    }
}

impl AddAssign for ComplexLogValue {
    fn add_assign(&mut self, o: Self) {
        self.re += o.re;
        self.im += o.im;
    }
}

/// Principal logarithm with negative reals sent to `+i pi`.
pub fn branch_log(w: Complex64) -> Result<ComplexLogValue> {
    if w.re == 0.0 && w.im == 0.0 {
        return Err(Error::ZeroArgument);
    }
    if !(w.re.is_finite() && w.im.is_finite()) {
        return Err(Error::InvalidArgument(format!("log of non-finite value {w}")));
    }
    // atan2(-0.0, x < 0) is -pi; the convention wants +pi on the whole negative axis
    let im = if w.im == 0.0 { if w.re < 0.0 { PI } else { 0.0 } } else { w.im.atan2(w.re) };
    Ok(ComplexLogValue { re: w.norm().ln(), im })
}

/// `log(1 - e^{2 pi i psi})` for `psi` in `[0, 1)`, in closed form.
fn log_one_minus_unit(psi: f64) -> Option<ComplexLogValue> {
    if psi == 0.0 {
        return None;
    }
    Some(ComplexLogValue { re: (2.0 * (PI * psi).sin()).ln(), im: PI * psi - FRAC_PI_2 })
}

type Callable = Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>;

#[derive(Clone)]
pub enum SpectralKind {
    /// `f(w) = 1 - 1/w`.
    CharPoly,
    /// `f(w) = 2 - w - 1/w`.
    SymPart,
    /// `f(w) = 2 - w - 1/w`, the form proposed for `det(2A - xI)`.
    AntisymPart,
    Constant(Complex64),
    Custom(Callable),
}

/// A function on the unit circle together with the angles where it vanishes.
#[derive(Clone)]
pub struct SpectralFunction {
    kind: SpectralKind,
    zero_angles: Vec<f64>,
    label: String,
}

impl fmt::Debug for SpectralFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralFunction")
            .field("label", &self.label)
            .field("zero_angles", &self.zero_angles)
            .finish()
    }
}

impl SpectralFunction {
    pub fn char_poly() -> Self {
        Self { kind: SpectralKind::CharPoly, zero_angles: vec![0.0], label: "charpoly".into() }
    }

    pub fn sym_part() -> Self {
        Self { kind: SpectralKind::SymPart, zero_angles: vec![0.0], label: "sympart".into() }
    }

    pub fn antisym_part() -> Self {
        Self { kind: SpectralKind::AntisymPart, zero_angles: vec![0.0], label: "antisympart".into() }
    }

    pub fn constant(c: Complex64) -> Result<Self> {
        if c.norm() == 0.0 || !c.norm().is_finite() {
            return Err(Error::InvalidArgument(format!("constant must be finite and nonzero, got {c}")));
        }
        Ok(Self { kind: SpectralKind::Constant(c), zero_angles: vec![], label: format!("constant({c})") })
    }

    pub fn custom(
        label: impl Into<String>,
        zero_angles: Vec<f64>,
        f: impl Fn(Complex64) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        Self { kind: SpectralKind::Custom(Arc::new(f)), zero_angles, label: label.into() }
    }

    /// Builtin by label: `charpoly`, `sympart`, `antisympart`, `constant:<c>`.
    pub fn from_label(label: &str) -> Result<Self> {
        match label {
            "charpoly" => Ok(Self::char_poly()),
            "sympart" => Ok(Self::sym_part()),
            "antisympart" => Ok(Self::antisym_part()),
            other => match other.strip_prefix("constant:") {
                Some(v) => {
                    let c: f64 = v
                        .parse()
                        .map_err(|_| Error::InvalidArgument(format!("bad constant in label {other:?}")))?;
                    Self::constant(Complex64::new(c, 0.0))
                }
                None => Err(Error::InvalidArgument(format!("unknown function label {other:?}"))),
            },
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn kind(&self) -> &SpectralKind {
        &self.kind
    }

    pub fn zero_angles(&self) -> &[f64] {
        &self.zero_angles
    }

    pub fn is_char_poly(&self) -> bool {
        matches!(self.kind, SpectralKind::CharPoly)
    }

    pub fn eval(&self, w: Complex64) -> Complex64 {
        match &self.kind {
            SpectralKind::CharPoly => 1.0 - w.inv(),
            SpectralKind::SymPart | SpectralKind::AntisymPart => 2.0 - w - w.inv(),
            SpectralKind::Constant(c) => *c,
            SpectralKind::Custom(f) => f(w),
        }
    }

    pub fn eval_angle(&self, phi: f64) -> Complex64 {
        self.eval(Complex64::from_polar(1.0, TAU * phi))
    }

    /// Branch log of `f(e^{2 pi i psi})`; `None` on an exact zero.
    pub fn log_at(&self, psi: f64) -> Option<ComplexLogValue> {
        let psi = frac(psi);
        match &self.kind {
            // 1 - e^{-2 pi i psi} = 1 - e^{2 pi i (1 - psi)}
            SpectralKind::CharPoly => log_one_minus_unit(frac(-psi)),
            // 2 - 2 cos(2 pi psi) = (2 sin(pi psi))^2
            SpectralKind::SymPart | SpectralKind::AntisymPart => {
                (psi != 0.0).then(|| ComplexLogValue { re: 2.0 * (2.0 * (PI * psi).sin()).ln(), im: 0.0 })
            }
            SpectralKind::Constant(c) => branch_log(*c).ok(),
            SpectralKind::Custom(f) => branch_log(f(Complex64::from_polar(1.0, TAU * psi))).ok(),
        }
    }

    /// `log |f(e^{2 pi i phi})|`.
    pub fn log_abs(&self, phi: f64) -> f64 {
        self.log_at(phi).map_or(f64::NEG_INFINITY, |v| v.re)
    }

    /// `arg f(e^{2 pi i phi})` in `(-pi, pi]`; zero at a zero of `f`.
    pub fn arg(&self, phi: f64) -> f64 {
        self.log_at(phi).map_or(0.0, |v| v.im)
    }
}

/// Which multiplier enters the class function term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassKind {
    /// `f(x^m z)` with one multiplier per cycle.
    W1,
    /// `f(x^m T)` with the product of `m` multipliers per cycle.
    W2,
}

fn singular(m: usize) -> Error {
    Error::SingularSample { cycle_length: m }
}

/// `sum_m sum_k log(1 - x^{-m} T_{m,k})`, one fresh `T` per cycle.
pub fn log_z<R: Rng + ?Sized>(
    ct: &CycleType,
    x: UnitAngle,
    model: &MultiplierModel,
    rng: &mut R,
) -> Result<ComplexLogValue> {
    let phi = x.value();
    let charpoly = SpectralFunction::char_poly();
    let mut acc = ComplexLogValue::ZERO;
    for m in ct.cycle_lengths() {
        let t = model.sample_t(m, rng).value();
        // 1 - x^{-m} T = f(x^m T^{-1}) with f(w) = 1 - 1/w
        acc += charpoly.log_at(m as f64 * phi - t).ok_or_else(|| singular(m))?;
    }
    Ok(acc)
}

fn class_function<R: Rng + ?Sized>(
    ct: &CycleType,
    f: &SpectralFunction,
    x: UnitAngle,
    model: &MultiplierModel,
    kind: ClassKind,
    rng: &mut R,
) -> Result<ComplexLogValue> {
    let phi = x.value();
    let mut acc = ComplexLogValue::ZERO;
    for m in ct.cycle_lengths() {
        let a = match kind {
            ClassKind::W1 => model.sample_z(rng),
            ClassKind::W2 => model.sample_t(m, rng),
        };
        acc += f.log_at(m as f64 * phi + a.value()).ok_or_else(|| singular(m))?;
    }
    Ok(acc)
}

/// `sum_m sum_k log f(x^m z_{m,k})`.
pub fn w1<R: Rng + ?Sized>(
    ct: &CycleType,
    f: &SpectralFunction,
    x: UnitAngle,
    model: &MultiplierModel,
    rng: &mut R,
) -> Result<ComplexLogValue> {
    class_function(ct, f, x, model, ClassKind::W1, rng)
}

/// `sum_m sum_k log f(x^m T_{m,k})`.
pub fn w2<R: Rng + ?Sized>(
    ct: &CycleType,
    f: &SpectralFunction,
    x: UnitAngle,
    model: &MultiplierModel,
    rng: &mut R,
) -> Result<ComplexLogValue> {
    class_function(ct, f, x, model, ClassKind::W2, rng)
}

/// log Z at `d` points, sharing one joint multiplier draw per cycle.
pub fn multipoint_log_z<R: Rng + ?Sized>(
    ct: &CycleType,
    points: &[UnitAngle],
    joint: &JointMultiplierModel,
    rng: &mut R,
) -> Result<Vec<ComplexLogValue>> {
    check_dim(points.len(), joint)?;
    let charpoly = SpectralFunction::char_poly();
    let mut acc = vec![ComplexLogValue::ZERO; points.len()];
    for m in ct.cycle_lengths() {
        let t = joint.sample_t(m, rng);
        for ((a, x), tj) in acc.iter_mut().zip(points).zip(&t) {
            *a += charpoly.log_at(m as f64 * x.value() - tj.value()).ok_or_else(|| singular(m))?;
        }
    }
    Ok(acc)
}

/// w1 or w2 of `fs[j]` at `points[j]`, sharing one joint draw per cycle.
pub fn multipoint_w<R: Rng + ?Sized>(
    ct: &CycleType,
    kind: ClassKind,
    fs: &[SpectralFunction],
    points: &[UnitAngle],
    joint: &JointMultiplierModel,
    rng: &mut R,
) -> Result<Vec<ComplexLogValue>> {
    check_dim(points.len(), joint)?;
    if fs.len() != points.len() {
        return Err(Error::InvalidArgument(format!("{} functions for {} points", fs.len(), points.len())));
    }
    let mut acc = vec![ComplexLogValue::ZERO; points.len()];
    for m in ct.cycle_lengths() {
        let a = match kind {
            ClassKind::W1 => joint.sample_z(rng),
            ClassKind::W2 => joint.sample_t(m, rng),
        };
        for (((s, f), x), aj) in acc.iter_mut().zip(fs).zip(points).zip(&a) {
            *s += f.log_at(m as f64 * x.value() + aj.value()).ok_or_else(|| singular(m))?;
        }
    }
    Ok(acc)
}

fn check_dim(d: usize, joint: &JointMultiplierModel) -> Result<()> {
    if d == 0 || joint.dim() != d {
        return Err(Error::InvalidArgument(format!("{d} points for a {}-dimensional joint model", joint.dim())));
    }
    Ok(())
}

fn check_dense(n: usize) -> Result<()> {
    if n > DENSE_ORACLE_MAX_N {
        return Err(Error::SizeLimit { what: "n", value: n, limit: DENSE_ORACLE_MAX_N });
    }
    Ok(())
}

/// `M_{ij} = z_i delta_{i, sigma(j)}`.
pub fn generalized_permutation_matrix(perm: &Permutation, z: &[Complex64]) -> DMatrix<Complex64> {
    let n = perm.n();
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        let i = perm.apply(j);
        m[(i, j)] = z[i];
    }
    m
}

/// `det(I - x^{-1} M(sigma, z))` by LU decomposition.
pub fn det_oracle(perm: &Permutation, z: &[Complex64], x: UnitAngle) -> Result<Complex64> {
    let n = perm.n();
    check_dense(n)?;
    if z.len() != n {
        return Err(Error::InvalidArgument(format!("{} multipliers for n = {n}", z.len())));
    }
    let xinv = x.to_complex().conj();
    let a = DMatrix::<Complex64>::identity(n, n) - generalized_permutation_matrix(perm, z) * xinv;
    Ok(a.lu().determinant())
}

/// `prod_c (1 - x^{-|c|} prod_{j in c} z_j)` over the cycles of `sigma`.
pub fn cycle_product(perm: &Permutation, z: &[Complex64], x: UnitAngle) -> Complex64 {
    let xinv = x.to_complex().conj();
    perm.cycles()
        .iter()
        .map(|c| 1.0 - xinv.powu(c.len() as u32) * c.iter().map(|&j| z[j]).product::<Complex64>())
        .product()
}

/// `det(S - x I)` for `S_{ij} = delta_{i,sigma(j)} + delta_{i,sigma^{-1}(j)}`,
/// via `(-1)^{n + l} prod_m (2 - 2 cos(m alpha))^{C_m}` with `x = 2 cos(alpha)`.
pub fn sym_char_poly(ct: &CycleType, x_real: f64) -> Result<f64> {
    if !(-2.0..=2.0).contains(&x_real) {
        return Err(Error::InvalidArgument(format!("x = {x_real} is outside [-2, 2]")));
    }
    let alpha = (x_real / 2.0).acos();
    let sign = if (ct.n() + ct.num_cycles()).is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok(sign * ct.iter().map(|(m, c)| (2.0 - 2.0 * (m as f64 * alpha).cos()).powi(c as i32)).product::<f64>())
}

pub fn sym_matrix(perm: &Permutation) -> DMatrix<f64> {
    let n = perm.n();
    let mut s = DMatrix::zeros(n, n);
    let inv = perm.inverse();
    for j in 0..n {
        s[(perm.apply(j), j)] += 1.0;
        s[(inv.apply(j), j)] += 1.0;
    }
    s
}

/// Dense `det(S - x I)`.
pub fn sym_char_poly_dense(perm: &Permutation, x_real: f64) -> Result<f64> {
    check_dense(perm.n())?;
    let n = perm.n();
    Ok((sym_matrix(perm) - DMatrix::identity(n, n) * x_real).lu().determinant())
}

/// `det(2A - x I)` with `2A = M - M^T`, via `prod_m g_m(y)^{C_m}` where
/// `x = y - 1/y`, `g_m = y^m - 2 + y^{-m}` for even `m` and `y^{-m} - y^m` for odd `m`.
pub fn antisym_char_poly(ct: &CycleType, x_real: f64) -> f64 {
    let y = (x_real + (x_real * x_real + 4.0).sqrt()) / 2.0;
    ct.iter()
        .map(|(m, c)| {
            let (p, q) = (y.powi(m as i32), y.powi(-(m as i32)));
            let g = if m % 2 == 0 { p - 2.0 + q } else { q - p };
            g.powi(c as i32)
        })
        .product()
}

/// Dense `det(2A - x I)`.
pub fn antisym_char_poly_dense(perm: &Permutation, x_real: f64) -> Result<f64> {
    check_dense(perm.n())?;
    let n = perm.n();
    let m = generalized_permutation_matrix(perm, &vec![Complex64::new(1.0, 0.0); n]).map(|c| c.re);
    Ok((&m - m.transpose() - DMatrix::identity(n, n) * x_real).lu().determinant())
}
