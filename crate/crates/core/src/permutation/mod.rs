//! Ewens-distributed cycle structures.
//!
//! Two independent samplers are provided: the Feller coupling, which reads
//! cycle counts off a chain of independent Bernoulli variables, and the
//! Chinese-restaurant construction, which builds an explicit permutation.
//! The Ewens sampling formula gives the exact law both must agree with.

mod ewens;
mod feller;

pub use ewens::{
    esf_probability, exact_feller_distribution, partitions, psi_bound_constants,
    psi_bound_ratio, psi_n, sample_permutation_crp, PsiBoundConstants, EXACT_FELLER_MAX_N,
};
pub use feller::{
    cycle_counts_from_chain, default_horizon, feller_coupling_gap, feller_coupling_gap_with_horizon,
    poisson_counts_from_chain, sample_feller_chain, sample_feller_chain_sparse, BernoulliChain,
    PoissonLimitCounts,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The Ewens weight `theta > 0`. `theta = 1` is the uniform measure.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct EwensParameter(f64);

impl EwensParameter {
    pub fn new(theta: f64) -> Result<Self> {
        if theta.is_finite() && theta > 0.0 {
            Ok(Self(theta))
        } else {
            Err(Error::InvalidTheta(theta))
        }
    }

    /// Probability that the `i`-th Feller indicator (1-based) equals one.
    #[inline]
    pub fn new_cycle_probability(&self, i: usize) -> f64 {
        self.0 / (self.0 + i as f64 - 1.0)
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for EwensParameter {
    type Error = Error;
    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<EwensParameter> for f64 {
    fn from(p: EwensParameter) -> f64 {
        p.0
    }
}

/// Cycle counts `(c_1, ..., c_n)`; `c_m` is the number of cycles of length `m`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CycleType {
    counts: Vec<usize>,
}

impl CycleType {
    /// Builds a cycle type, checking `sum_m m * c_m = counts.len()`.
    pub fn new(counts: Vec<usize>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::InvalidCycleType("n must be at least 1".into()));
        }
        let weight: usize = counts.iter().enumerate().map(|(i, c)| (i + 1) * c).sum();
        if weight != counts.len() {
            return Err(Error::InvalidCycleType(format!(
                "sum of m * c_m is {weight}, expected n = {}",
                counts.len()
            )));
        }
        Ok(Self { counts })
    }

    /// Builds a cycle type from a list of cycle lengths summing to `n`.
    pub fn from_lengths(n: usize, lengths: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut counts = vec![0; n];
        for m in lengths {
            if m == 0 || m > n {
                return Err(Error::InvalidCycleType(format!("cycle length {m} out of 1..={n}")));
            }
            counts[m - 1] += 1;
        }
        Self::new(counts)
    }

    pub(crate) fn from_counts_unchecked(counts: Vec<usize>) -> Self {
        debug_assert_eq!(
            counts.iter().enumerate().map(|(i, c)| (i + 1) * c).sum::<usize>(),
            counts.len()
        );
        Self { counts }
    }

    pub fn n(&self) -> usize {
        self.counts.len()
    }

    /// `c_m` for `1 <= m <= n`, zero outside that range.
    pub fn count(&self, m: usize) -> usize {
        if m == 0 {
            0
        } else {
            self.counts.get(m - 1).copied().unwrap_or(0)
        }
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Total number of cycles `l_sigma`.
    pub fn num_cycles(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Non-zero `(m, c_m)` pairs in increasing `m`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (i + 1, c))
    }

    /// Cycle lengths, one entry per cycle, in increasing order.
    pub fn cycle_lengths(&self) -> impl Iterator<Item = usize> + '_ {
        self.iter().flat_map(|(m, c)| std::iter::repeat_n(m, c))
    }
}

/// A permutation of `{0, ..., n-1}` in one-line notation (`images[j] = sigma(j)`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    pub fn new(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        if n == 0 {
            return Err(Error::InvalidPermutation("empty".into()));
        }
        let mut seen = vec![false; n];
        for &im in &images {
            if im >= n || seen[im] {
                return Err(Error::InvalidPermutation(format!(
                    "{images:?} is not a bijection of 0..{n}"
                )));
            }
            seen[im] = true;
        }
        Ok(Self { images })
    }

    pub fn identity(n: usize) -> Self {
        Self { images: (0..n).collect() }
    }

    pub fn n(&self) -> usize {
        self.images.len()
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    #[inline]
    pub fn apply(&self, j: usize) -> usize {
        self.images[j]
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.n()];
        for (j, &i) in self.images.iter().enumerate() {
            inv[i] = j;
        }
        Self { images: inv }
    }

    /// Disjoint cycles, each listed from its smallest element.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut cycle = Vec::new();
            let mut j = start;
            while !seen[j] {
                seen[j] = true;
                cycle.push(j);
                j = self.images[j];
            }
            out.push(cycle);
        }
        out
    }

    pub fn cycle_type(&self) -> CycleType {
        let mut counts = vec![0; self.n()];
        for c in self.cycles() {
            counts[c.len() - 1] += 1;
        }
        CycleType::from_counts_unchecked(counts)
    }

    /// All permutations of `0..n` in lexicographic order (Heap-free, small `n` only).
    pub fn all(n: usize) -> impl Iterator<Item = Permutation> {
        let mut current: Option<Vec<usize>> = Some((0..n).collect());
        std::iter::from_fn(move || {
            let out = current.clone()?;
            current = next_lexicographic(out.clone());
            Some(Permutation { images: out })
        })
    }
}

fn next_lexicographic(mut v: Vec<usize>) -> Option<Vec<usize>> {
    let n = v.len();
    if n < 2 {
        return None;
    }
    let mut i = n - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return None;
    }
    let mut j = n - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    Some(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_validation() {
        assert!(EwensParameter::new(0.5).is_ok());
        assert!(EwensParameter::new(0.0).is_err());
        assert!(EwensParameter::new(-1.0).is_err());
        assert!(EwensParameter::new(f64::NAN).is_err());
        assert!(EwensParameter::new(f64::INFINITY).is_err());
    }

    #[test]
    fn cycle_type_weight_identity_enforced() {
        assert!(CycleType::new(vec![3, 0, 0]).is_ok());
        assert!(CycleType::new(vec![1, 1, 0]).is_ok());
        assert!(CycleType::new(vec![1, 0, 1]).is_err());
        assert!(CycleType::new(vec![]).is_err());
    }

    #[test]
    fn permutation_cycle_type() {
        let p = Permutation::new(vec![1, 2, 0, 3]).unwrap();
        let ct = p.cycle_type();
        assert_eq!(ct.counts(), &[1, 0, 1, 0]);
        assert_eq!(ct.num_cycles(), 2);
        assert_eq!(p.inverse().inverse(), p);
        assert!(Permutation::new(vec![0, 0]).is_err());
    }

    #[test]
    fn enumerates_all_permutations() {
        assert_eq!(Permutation::all(1).count(), 1);
        assert_eq!(Permutation::all(4).count(), 24);
        assert_eq!(Permutation::all(5).count(), 120);
    }

    #[test]
    fn theta_serde_rejects_nonpositive() {
        let ok: EwensParameter = serde_json::from_str("2.0").unwrap();
        assert_eq!(ok.value(), 2.0);
        assert!(serde_json::from_str::<EwensParameter>("-1.0").is_err());
    }
}
