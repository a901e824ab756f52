//! The Feller coupling.
//!
//! Independent indicators `xi_i` with `P(xi_i = 1) = theta / (theta + i - 1)`
//! generate both the finite-`n` cycle counts `C_m` (spacings of the word
//! `1 xi_2 ... xi_n 1`) and their Poisson limits `Y_m` (spacings of the
//! infinite chain) on one probability space.

use rand::Rng;
use statrs::function::gamma::ln_gamma;

use super::{CycleType, EwensParameter};
use crate::error::{Error, Result};

/// A finite prefix `xi_1 ... xi_len` of a Feller chain.
///
/// Stored sparsely as the increasing 1-based positions of the ones, since
/// long chains are almost entirely zeros (about `theta * ln(len)` ones).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BernoulliChain {
    len: usize,
    ones: Vec<usize>,
}

impl BernoulliChain {
    /// Builds a chain from explicit bits; `bits[0]` is `xi_1` and must be set.
    pub fn from_bits(bits: &[bool]) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::InvalidArgument("chain must have n >= 1".into()));
        }
        if !bits[0] {
            return Err(Error::InvalidArgument("xi_1 must equal 1".into()));
        }
        let ones = bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| i + 1)
            .collect();
        Ok(Self { len: bits.len(), ones })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// `xi_i` for `1 <= i <= len`.
    pub fn bit(&self, i: usize) -> bool {
        assert!(i >= 1 && i <= self.len, "index {i} out of 1..={}", self.len);
        self.ones.binary_search(&i).is_ok()
    }

    pub fn bits(&self) -> Vec<bool> {
        let mut out = vec![false; self.len];
        for &p in &self.ones {
            out[p - 1] = true;
        }
        out
    }

    /// Positions (1-based) of the ones.
    pub fn ones(&self) -> &[usize] {
        &self.ones
    }

    /// The first `n` indicators of this chain.
    pub fn prefix(&self, n: usize) -> Self {
        assert!(n >= 1 && n <= self.len);
        let cut = self.ones.partition_point(|&p| p <= n);
        Self { len: n, ones: self.ones[..cut].to_vec() }
    }
}

/// Estimates of `Y_1, ..., Y_{m_max}` from a chain truncated at `horizon`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoissonLimitCounts {
    pub horizon: usize,
    /// `counts[m - 1]` is the number of `m`-spacings inside `1..=horizon`.
    pub counts: Vec<usize>,
}

impl PoissonLimitCounts {
    pub fn get(&self, m: usize) -> usize {
        self.counts[m - 1]
    }
}

/// Default truncation horizon `max(10 * m_max, n)` for `Y_m` estimates.
pub fn default_horizon(n: usize, m_max: usize) -> usize {
    (10 * m_max).max(n)
}

/// Samples `xi_1 ... xi_n` bit by bit.
pub fn sample_feller_chain<R: Rng + ?Sized>(
    n: usize,
    theta: EwensParameter,
    rng: &mut R,
) -> BernoulliChain {
    assert!(n >= 1, "chain length must be positive");
    let mut ones = vec![1];
    for i in 2..=n {
        if rng.random::<f64>() < theta.new_cycle_probability(i) {
            ones.push(i);
        }
    }
    BernoulliChain { len: n, ones }
}

/// Samples `xi_1 ... xi_len` by jumping from one `1` to the next.
///
/// Given a one at position `i`, the survival function of the next one is
/// `S(j) = P(xi_{i+1} = ... = xi_j = 0) = Gamma(j) Gamma(theta+i) / (Gamma(i) Gamma(theta+j))`,
/// which is inverted with a log-gamma initial guess refined by exact ratio
/// steps. Same law as [`sample_feller_chain`], at `O(theta log len)` cost.
pub fn sample_feller_chain_sparse<R: Rng + ?Sized>(
    len: usize,
    theta: EwensParameter,
    rng: &mut R,
) -> BernoulliChain {
    assert!(len >= 1, "chain length must be positive");
    let t = theta.value();
    let mut ones = vec![1];
    let mut i = 1;
    while i < len {
        let u: f64 = 1.0 - rng.random::<f64>(); // (0, 1]
        match next_one(i, t, u, len) {
            Some(j) => {
                ones.push(j);
                i = j;
            }
            None => break,
        }
    }
    BernoulliChain { len, ones }
}

/// Smallest `j > i` with `S_i(j) < u`, or `None` if it exceeds `horizon`.
fn next_one(i: usize, theta: f64, u: f64, horizon: usize) -> Option<usize> {
    let lu = u.ln();
    let c_i = ln_gamma(theta + i as f64) - ln_gamma(i as f64);
    let log_survival = |j: usize| ln_gamma(j as f64) - ln_gamma(theta + j as f64) + c_i;

    // Gamma(j)/Gamma(j+theta) ~ (j + (theta-1)/2)^(-theta)
    let guess = (c_i - lu) / theta;
    let guess = if guess > (horizon as f64).ln() + 1.0 {
        horizon as f64
    } else {
        guess.exp() - 0.5 * (theta - 1.0)
    };
    let mut j = (guess.ceil().max((i + 1) as f64).min(horizon as f64)) as usize;
    if j <= i {
        // only reachable when i == horizon
        return None;
    }
    let mut f = log_survival(j);
    if f < lu {
        while j - 1 > i {
            let prev = f - ((j - 1) as f64 / (theta + (j - 1) as f64)).ln();
            if prev < lu {
                j -= 1;
                f = prev;
            } else {
                break;
            }
        }
        Some(j)
    } else {
        while j < horizon {
            f += (j as f64 / (theta + j as f64)).ln();
            j += 1;
            if f < lu {
                return Some(j);
            }
        }
        None
    }
}

/// Cycle counts as the spacings of `1 xi_2 ... xi_n 1`.
///
/// Equivalent to the two-term formula: interior `m`-spacings
/// `xi_i (1 - xi_{i+1}) ... (1 - xi_{i+m-1}) xi_{i+m}` for `i <= n - m`, plus
/// the boundary run `xi_{n-m+1} (1 - xi_{n-m+2}) ... (1 - xi_n)` that ends at
/// the appended one.
pub fn cycle_counts_from_chain(chain: &BernoulliChain) -> CycleType {
    let n = chain.len;
    let mut counts = vec![0; n];
    let mut prev = 1;
    for &p in chain.ones.iter().skip(1).chain(std::iter::once(&(n + 1))) {
        counts[p - prev - 1] += 1;
        prev = p;
    }
    CycleType::from_counts_unchecked(counts)
}

/// Counts `m`-spacings lying entirely within the chain, for `m <= m_max`.
///
/// Spacings that would close beyond the horizon are dropped, so each count
/// is biased low by `O(theta^2 / horizon)`.
pub fn poisson_counts_from_chain(chain: &BernoulliChain, m_max: usize) -> Result<PoissonLimitCounts> {
    if chain.len < 2 * m_max {
        return Err(Error::HorizonTooSmall { horizon: chain.len, m_max });
    }
    let mut counts = vec![0; m_max];
    for w in chain.ones.windows(2) {
        let m = w[1] - w[0];
        if m <= m_max {
            counts[m - 1] += 1;
        }
    }
    Ok(PoissonLimitCounts { horizon: chain.len, counts })
}

/// Monte Carlo estimate of `E|C_m^{(n)} - Y_m|` with both counts read off
/// the same chain. `Y_m` is truncated at `1000 * n`.
pub fn feller_coupling_gap<R: Rng + ?Sized>(
    n: usize,
    theta: EwensParameter,
    m: usize,
    num_samples: usize,
    rng: &mut R,
) -> Result<f64> {
    feller_coupling_gap_with_horizon(n, theta, m, num_samples, 1000 * n.max(m), rng)
}

pub fn feller_coupling_gap_with_horizon<R: Rng + ?Sized>(
    n: usize,
    theta: EwensParameter,
    m: usize,
    num_samples: usize,
    horizon: usize,
    rng: &mut R,
) -> Result<f64> {
    if m == 0 || m > n {
        return Err(Error::InvalidArgument(format!("need 1 <= m <= n, got m = {m}, n = {n}")));
    }
    if num_samples == 0 {
        return Err(Error::InvalidArgument("num_samples must be positive".into()));
    }
    if horizon < n.max(2 * m) {
        return Err(Error::HorizonTooSmall { horizon, m_max: m });
    }
    let mut total = 0usize;
    for _ in 0..num_samples {
        let chain = sample_feller_chain_sparse(horizon, theta, rng);
        let c = cycle_counts_from_chain(&chain.prefix(n)).count(m);
        let y = poisson_counts_from_chain(&chain, m)?.get(m);
        total += c.abs_diff(y);
    }
    Ok(total as f64 / num_samples as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn chain(bits: &[u8]) -> BernoulliChain {
        BernoulliChain::from_bits(&bits.iter().map(|&b| b == 1).collect::<Vec<_>>()).unwrap()
    }

    /// The literal two-term spacing formula, kept independent of the
    /// run-length implementation.
    fn spacing_formula(bits: &[bool], m: usize) -> usize {
        let n = bits.len();
        let xi = |i: usize| bits[i - 1] as usize;
        let mut total = 0;
        for i in 1..=n.saturating_sub(m) {
            let mut term = xi(i) * xi(i + m);
            for k in i + 1..i + m {
                term *= 1 - xi(k);
            }
            total += term;
        }
        if m <= n {
            let mut term = xi(n - m + 1);
            for k in n - m + 2..=n {
                term *= 1 - xi(k);
            }
            total += term;
        }
        total
    }

    #[test]
    fn spacing_examples() {
        assert_eq!(cycle_counts_from_chain(&chain(&[1, 1, 1])).counts(), &[3, 0, 0]);
        assert_eq!(cycle_counts_from_chain(&chain(&[1, 0, 0])).count(3), 1);
        let ct = cycle_counts_from_chain(&chain(&[1, 0, 1]));
        assert_eq!((ct.count(1), ct.count(2)), (1, 1));
    }

    #[test]
    fn spacings_match_formula_exhaustively() {
        for n in 1..=10usize {
            for mask in 0..(1u32 << (n - 1)) {
                let bits: Vec<bool> =
                    (0..n).map(|i| i == 0 || (mask >> (i - 1)) & 1 == 1).collect();
                let ct = cycle_counts_from_chain(&BernoulliChain::from_bits(&bits).unwrap());
                for m in 1..=n {
                    assert_eq!(ct.count(m), spacing_formula(&bits, m), "bits {bits:?} m {m}");
                }
            }
        }
    }

    #[test]
    fn first_bit_always_set() {
        let theta = EwensParameter::new(0.3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert!(sample_feller_chain(5, theta, &mut rng).bit(1));
            assert!(sample_feller_chain_sparse(5, theta, &mut rng).bit(1));
        }
        assert!(BernoulliChain::from_bits(&[false, true]).is_err());
    }

    #[test]
    fn second_bit_mean_theta_one() {
        let theta = EwensParameter::new(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let hits = (0..100_000)
            .filter(|_| sample_feller_chain(3, theta, &mut rng).bit(2))
            .count();
        assert!((hits as f64 / 1e5 - 0.5).abs() < 0.01);
    }

    #[test]
    fn sparse_sampler_marginals_match_bernoulli() {
        // P(xi_i = 1) = theta / (theta + i - 1) for every i, sampled sparsely
        for &t in &[0.5, 1.0, 2.0] {
            let theta = EwensParameter::new(t).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let len = 40;
            let draws = 100_000;
            let mut hits = vec![0usize; len + 1];
            for _ in 0..draws {
                for &p in sample_feller_chain_sparse(len, theta, &mut rng).ones() {
                    hits[p] += 1;
                }
            }
            for i in [2, 3, 5, 10, 40] {
                let p = theta.new_cycle_probability(i);
                let se = (p * (1.0 - p) / draws as f64).sqrt();
                let est = hits[i] as f64 / draws as f64;
                assert!((est - p).abs() < 4.0 * se, "theta {t} i {i}: {est} vs {p}");
            }
        }
    }

    #[test]
    fn sparse_sampler_pairwise_independence() {
        // P(xi_3 = 1, xi_4 = 1) factorizes
        let theta = EwensParameter::new(2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let draws = 200_000;
        let both = (0..draws)
            .filter(|_| {
                let c = sample_feller_chain_sparse(10, theta, &mut rng);
                c.bit(3) && c.bit(4)
            })
            .count();
        let p = theta.new_cycle_probability(3) * theta.new_cycle_probability(4);
        let se = (p * (1.0 - p) / draws as f64).sqrt();
        assert!((both as f64 / draws as f64 - p).abs() < 4.0 * se);
    }

    #[test]
    fn poisson_counts_all_ones() {
        let c = chain(&[1; 20]);
        let y = poisson_counts_from_chain(&c, 3).unwrap();
        assert_eq!(y.get(1), 19);
        assert_eq!(y.get(2), 0);
        assert!(matches!(
            poisson_counts_from_chain(&c, 11),
            Err(Error::HorizonTooSmall { .. })
        ));
    }

    #[test]
    fn prefix_truncates_ones() {
        let c = chain(&[1, 0, 1, 1, 0, 1]);
        let p = c.prefix(4);
        assert_eq!(p.bits(), vec![true, false, true, true]);
    }

    #[test]
    fn coupling_gap_is_nonnegative_trivial_case() {
        let theta = EwensParameter::new(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = feller_coupling_gap(1, theta, 1, 100, &mut rng).unwrap();
        assert!(g >= 0.0);
        assert!(feller_coupling_gap(3, theta, 4, 10, &mut rng).is_err());
    }
}
