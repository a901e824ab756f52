use std::collections::BTreeMap;

use rand::Rng;
use statrs::function::gamma::ln_gamma;

use super::{cycle_counts_from_chain, BernoulliChain, CycleType, EwensParameter, Permutation};
use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

/// Largest `n` accepted by [`exact_feller_distribution`] (`2^{n-1}` chains).
pub const EXACT_FELLER_MAX_N: usize = 16;

/// Ewens sampling formula:
/// `P(C = c) = n! / (theta (theta+1) ... (theta+n-1)) * prod_m (theta/m)^{c_m} / c_m!`.
pub fn esf_probability(ct: &CycleType, theta: EwensParameter) -> f64 {
    let t = theta.value();
    let n = ct.n();
    let mut log_p = ln_gamma(n as f64 + 1.0) + ln_gamma(t) - ln_gamma(t + n as f64);
    for (m, c) in ct.iter() {
        log_p += c as f64 * (t.ln() - (m as f64).ln()) - ln_gamma(c as f64 + 1.0);
    }
    log_p.exp()
}

/// Every integer partition of `n`, as cycle types.
pub fn partitions(n: usize) -> Vec<CycleType> {
    fn rec(remaining: usize, max_part: usize, counts: &mut Vec<usize>, out: &mut Vec<CycleType>) {
        if remaining == 0 {
            out.push(CycleType::from_counts_unchecked(counts.clone()));
            return;
        }
        for part in (1..=max_part.min(remaining)).rev() {
            counts[part - 1] += 1;
            rec(remaining - part, part, counts, out);
            counts[part - 1] -= 1;
        }
    }
    let mut out = Vec::new();
    if n > 0 {
        rec(n, n, &mut vec![0; n], &mut out);
    }
    out
}

/// Exact law of the Feller-coupling cycle counts, by enumerating all
/// `2^{n-1}` chains `1 xi_2 ... xi_n` with their Bernoulli weights.
pub fn exact_feller_distribution(
    n: usize,
    theta: EwensParameter,
) -> Result<BTreeMap<CycleType, f64>> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    if n > EXACT_FELLER_MAX_N {
        return Err(Error::SizeLimit { what: "n", value: n, limit: EXACT_FELLER_MAX_N });
    }
    let p: Vec<f64> = (1..=n).map(|i| theta.new_cycle_probability(i)).collect();
    let mut acc: BTreeMap<CycleType, CompensatedSum> = BTreeMap::new();
    let mut bits = vec![false; n];
    bits[0] = true;
    for mask in 0u32..(1 << (n - 1)) {
        let mut weight = 1.0;
        for i in 1..n {
            let b = (mask >> (i - 1)) & 1 == 1;
            bits[i] = b;
            weight *= if b { p[i] } else { 1.0 - p[i] };
        }
        let chain = BernoulliChain::from_bits(&bits)?;
        acc.entry(cycle_counts_from_chain(&chain)).or_default().add(weight);
    }
    Ok(acc.into_iter().map(|(k, v)| (k, v.value())).collect())
}

/// Chinese-restaurant construction of an Ewens(theta) permutation.
///
/// Element `i` (1-based) opens a new cycle with probability
/// `theta / (theta + i - 1)`; otherwise it is inserted directly after a
/// uniformly chosen earlier element.
pub fn sample_permutation_crp<R: Rng + ?Sized>(
    n: usize,
    theta: EwensParameter,
    rng: &mut R,
) -> Permutation {
    assert!(n >= 1, "n must be positive");
    let mut images: Vec<usize> = Vec::with_capacity(n);
    for i in 0..n {
        if i == 0 || rng.random::<f64>() < theta.new_cycle_probability(i + 1) {
            images.push(i);
        } else {
            let j = rng.random_range(0..i);
            images.push(images[j]);
            images[j] = i;
        }
    }
    Permutation::new(images).expect("CRP insertion preserves bijectivity")
}

/// `Psi_n(m) = binom(n-m+theta-1, n-m) / binom(n+theta-1, n)` for real theta.
pub fn psi_n(n: usize, m: usize, theta: EwensParameter) -> Result<f64> {
    if m == 0 || m > n {
        return Err(Error::InvalidArgument(format!("need 1 <= m <= n, got m = {m}, n = {n}")));
    }
    let t = theta.value();
    let (n, k) = (n as f64, (n - m) as f64);
    Ok((ln_gamma(k + t) - ln_gamma(k + 1.0) + ln_gamma(n + 1.0) - ln_gamma(n + t)).exp())
}

/// The quantity the two-branch bound on `Psi_n(m)` controls:
/// `Psi_n(m) / (1 - m/n)^{theta-1}` for `m < n`, and `Psi_n(n) * n^{theta-1}`
/// at the boundary `m = n`.
pub fn psi_bound_ratio(n: usize, m: usize, theta: EwensParameter) -> Result<f64> {
    let psi = psi_n(n, m, theta)?;
    let e = theta.value() - 1.0;
    Ok(if m < n {
        psi / (1.0 - m as f64 / n as f64).powf(e)
    } else {
        psi * (n as f64).powf(e)
    })
}

/// Suprema of [`psi_bound_ratio`] over `1 <= m < n <= n_max` (`k1`) and over
/// `m = n <= n_max` (`k2`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiBoundConstants {
    pub k1: f64,
    pub k2: f64,
}

pub fn psi_bound_constants(theta: EwensParameter, n_max: usize) -> PsiBoundConstants {
    let t = theta.value();
    // ln binom(k + theta - 1, k) = lnGamma(k+theta) - lnGamma(k+1) - lnGamma(theta)
    let ln_a: Vec<f64> = (0..=n_max)
        .map(|k| ln_gamma(k as f64 + t) - ln_gamma(k as f64 + 1.0) - ln_gamma(t))
        .collect();
    let ln_k: Vec<f64> = (0..=n_max).map(|k| (k as f64).ln()).collect();
    let mut k1 = f64::NEG_INFINITY;
    let mut k2 = f64::NEG_INFINITY;
    for n in 1..=n_max {
        k2 = k2.max(ln_a[0] - ln_a[n] + (t - 1.0) * ln_k[n]);
        for k in 1..n {
            // m = n - k; Psi_n(m) = a_k / a_n and (1 - m/n) = k/n
            k1 = k1.max(ln_a[k] - ln_a[n] - (t - 1.0) * (ln_k[k] - ln_k[n]));
        }
    }
    PsiBoundConstants { k1: k1.exp(), k2: k2.exp() }
}
