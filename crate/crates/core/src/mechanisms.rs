//! Concrete DP mechanisms for the attack game: per-record randomized
//! response and Gaussian noisy k-way marginals, with GDP noise calibration.

use crate::error::{Error, Result};
use crate::seed::derive_rng;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

/// Standard normal CDF via the complementary error function.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal quantile, by bisection on the CDF.
pub fn std_normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "quantile argument outside (0, 1)");
    let (mut lo, mut hi) = (-40.0f64, 40.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if std_normal_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Per-record randomized response over a domain of size m: outputs the true
/// value with probability e^ε / (e^ε - 1 + m), otherwise each other value
/// with probability 1 / (e^ε - 1 + m).
pub fn rr_mechanism(record: usize, eps: f64, m: usize, rng: &mut impl Rng) -> Result<usize> {
    if m < 2 {
        return Err(Error::invalid("randomized response needs domain size >= 2"));
    }
    if record >= m {
        return Err(Error::invalid(format!(
            "record {record} outside domain of size {m}"
        )));
    }
    if eps < 0.0 || !eps.is_finite() {
        return Err(Error::invalid(format!("eps = {eps} must be >= 0")));
    }
    let keep = rr_keep_prob(eps, m);
    if rng.gen::<f64>() < keep {
        Ok(record)
    } else {
        let j = rng.gen_range(0..m - 1);
        Ok(if j >= record { j + 1 } else { j })
    }
}

/// Probability that randomized response reports the true value.
pub fn rr_keep_prob(eps: f64, m: usize) -> f64 {
    let t = eps.exp();
    t / (t - 1.0 + m as f64)
}

/// A workload of k-way marginal queries: attribute domain sizes plus the
/// list of attribute subsets whose full marginal vectors are released.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginalWorkload {
    domain_sizes: Vec<usize>,
    vsets: Vec<Vec<usize>>,
}

impl MarginalWorkload {
    pub fn new(domain_sizes: Vec<usize>, vsets: Vec<Vec<usize>>) -> Result<Self> {
        let d = domain_sizes.len();
        if d == 0 {
            return Err(Error::invalid("workload needs at least one attribute"));
        }
        if domain_sizes.iter().any(|&s| s < 1) {
            return Err(Error::invalid("attribute domain sizes must be >= 1"));
        }
        if vsets.is_empty() {
            return Err(Error::invalid("workload needs at least one V-set"));
        }
        let k = vsets[0].len();
        for vset in &vsets {
            if vset.len() != k {
                return Err(Error::invalid("all V-sets must have the same order k"));
            }
            let mut sorted = vset.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != vset.len() || vset.iter().any(|&a| a >= d) {
                return Err(Error::invalid(format!("invalid V-set {vset:?}")));
            }
        }
        for i in 0..vsets.len() {
            for j in i + 1..vsets.len() {
                if vsets[i] == vsets[j] {
                    return Err(Error::invalid(format!("duplicate V-set {:?}", vsets[i])));
                }
            }
        }
        Ok(Self {
            domain_sizes,
            vsets,
        })
    }

    /// All size-k attribute subsets, in lexicographic order.
    pub fn all_k(domain_sizes: Vec<usize>, k: usize) -> Result<Self> {
        let d = domain_sizes.len();
        if k == 0 || k > d {
            return Err(Error::invalid(format!("k = {k} outside 1..={d}")));
        }
        let mut vsets = Vec::new();
        let mut current = Vec::new();
        fn combos(
            start: usize,
            d: usize,
            k: usize,
            cur: &mut Vec<usize>,
            out: &mut Vec<Vec<usize>>,
        ) {
            if cur.len() == k {
                out.push(cur.clone());
                return;
            }
            for a in start..d {
                cur.push(a);
                combos(a + 1, d, k, cur, out);
                cur.pop();
            }
        }
        combos(0, d, k, &mut current, &mut vsets);
        Self::new(domain_sizes, vsets)
    }

    pub fn domain_sizes(&self) -> &[usize] {
        &self.domain_sizes
    }

    pub fn vsets(&self) -> &[Vec<usize>] {
        &self.vsets
    }

    pub fn k(&self) -> usize {
        self.vsets[0].len()
    }

    /// Number of entries in one V-set's full marginal vector.
    pub fn vset_len(&self, vi: usize) -> usize {
        self.vsets[vi]
            .iter()
            .map(|&a| self.domain_sizes[a])
            .product()
    }

    /// Starting index of each V-set's block in the concatenated vector,
    /// plus the total length at the end.
    pub fn offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.vsets.len() + 1);
        let mut acc = 0;
        for vi in 0..self.vsets.len() {
            offsets.push(acc);
            acc += self.vset_len(vi);
        }
        offsets.push(acc);
        offsets
    }

    pub fn total_len(&self) -> usize {
        (0..self.vsets.len()).map(|vi| self.vset_len(vi)).sum()
    }

    /// Flat index of a value tuple within V-set `vi`'s block (row-major,
    /// last attribute fastest).
    pub fn tuple_index(&self, vi: usize, values: &[usize]) -> usize {
        let mut idx = 0;
        for (&a, &v) in self.vsets[vi].iter().zip(values) {
            idx = idx * self.domain_sizes[a] + v;
        }
        idx
    }
}

/// Fraction of records agreeing with `values` on the attributes of `vset`.
pub fn marginal_query(dataset: &[Vec<usize>], vset: &[usize], values: &[usize]) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::invalid("marginal_query needs a nonempty dataset"));
    }
    if vset.len() != values.len() {
        return Err(Error::invalid("value tuple length must match V-set size"));
    }
    let hits = dataset
        .iter()
        .filter(|row| vset.iter().zip(values).all(|(&a, &v)| row[a] == v))
        .count();
    Ok(hits as f64 / dataset.len() as f64)
}

/// Exact concatenated marginal vector, one entry per value combination per
/// V-set.
pub fn exact_marginals(dataset: &[Vec<usize>], workload: &MarginalWorkload) -> Result<Vec<f64>> {
    if dataset.is_empty() {
        return Err(Error::invalid("exact_marginals needs a nonempty dataset"));
    }
    let d = workload.domain_sizes().len();
    for (ri, row) in dataset.iter().enumerate() {
        if row.len() != d {
            return Err(Error::invalid(format!(
                "record {ri} has {} attributes, workload declares {d}",
                row.len()
            )));
        }
        for (a, (&v, &s)) in row.iter().zip(workload.domain_sizes()).enumerate() {
            if v >= s {
                return Err(Error::invalid(format!(
                    "record {ri} attribute {a} value {v} outside domain of size {s}"
                )));
            }
        }
    }
    let mut out = vec![0.0; workload.total_len()];
    let offsets = workload.offsets();
    let inv_n = 1.0 / dataset.len() as f64;
    for (vi, vset) in workload.vsets().iter().enumerate() {
        for row in dataset {
            let values: Vec<usize> = vset.iter().map(|&a| row[a]).collect();
            out[offsets[vi] + workload.tuple_index(vi, &values)] += inv_n;
        }
    }
    Ok(out)
}

/// Noisy k-way marginal mechanism: exact fractions plus independent
/// N(0, 2σ²) noise per entry. Noise streams are derived per entry from the
/// seed, so the output is independent of evaluation order.
pub fn noisy_marginals(
    dataset: &[Vec<usize>],
    workload: &MarginalWorkload,
    sigma: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    if sigma < 0.0 || !sigma.is_finite() {
        return Err(Error::invalid(format!("sigma = {sigma} must be >= 0")));
    }
    let mut out = exact_marginals(dataset, workload)?;
    if sigma == 0.0 {
        return Ok(out);
    }
    let scale = std::f64::consts::SQRT_2 * sigma;
    for (i, entry) in out.iter_mut().enumerate() {
        let mut rng = derive_rng(seed, "marginal-noise", i as u64);
        let z: f64 = StandardNormal.sample(&mut rng);
        *entry += scale * z;
    }
    Ok(out)
}

/// δ(ε; μ) = Φ(-ε/μ + μ/2) - e^ε · Φ(-ε/μ - μ/2): the (ε, δ) curve of a
/// μ-GDP mechanism.
pub fn gdp_delta(eps: f64, mu: f64) -> Result<f64> {
    if mu <= 0.0 || !mu.is_finite() {
        return Err(Error::invalid(format!("mu = {mu} must be > 0")));
    }
    if eps < 0.0 || !eps.is_finite() {
        return Err(Error::invalid(format!("eps = {eps} must be >= 0")));
    }
    let a = std_normal_cdf(-eps / mu + mu / 2.0);
    let b = eps.exp() * std_normal_cdf(-eps / mu - mu / 2.0);
    Ok((a - b).clamp(0.0, 1.0))
}

fn binom(n: u64, k: u64) -> Result<u64> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc
            .checked_mul((n - i) as u128)
            .ok_or_else(|| Error::invalid("binomial coefficient overflow"))?;
        acc /= (i + 1) as u128;
    }
    u64::try_from(acc).map_err(|_| Error::invalid("binomial coefficient overflow"))
}

/// Number of k-way marginal releases touching at least one unknown
/// attribute: C(d, k) - C(d - d_unknown, k).
pub fn composition_count(d: u64, k: u64, d_unknown: u64) -> Result<u64> {
    if k == 0 || k > d {
        return Err(Error::invalid(format!("k = {k} outside 1..={d}")));
    }
    if d_unknown > d {
        return Err(Error::invalid(format!(
            "d_unknown = {d_unknown} exceeds d = {d}"
        )));
    }
    Ok(binom(d, k)? - binom(d - d_unknown, k)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub sigma: f64,
    pub mu: f64,
    pub m: u64,
}

const MU_BRACKET: (f64, f64) = (1e-6, 100.0);

/// Gaussian noise scale for m composed marginal releases at L2 sensitivity
/// √2: each release is 1/σ-GDP, the composition is μ = √m/σ-GDP, and μ is
/// solved so that δ(ε; μ) hits the target.
pub fn calibrate_sigma(eps: f64, delta: f64, m: u64) -> Result<CalibrationResult> {
    if eps <= 0.0 || !eps.is_finite() {
        return Err(Error::invalid(format!("eps = {eps} must be > 0")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta = {delta} outside (0, 1)")));
    }
    if m < 1 {
        return Err(Error::invalid("composition count m must be >= 1"));
    }
    let (mut lo, mut hi) = MU_BRACKET;
    if gdp_delta(eps, lo)? > delta || gdp_delta(eps, hi)? < delta {
        return Err(Error::Calibration(format!(
            "no mu in ({lo}, {hi}) achieves delta = {delta} at eps = {eps}"
        )));
    }
    // gdp_delta is strictly increasing in mu.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gdp_delta(eps, mid)? < delta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mu = 0.5 * (lo + hi);
    Ok(CalibrationResult {
        sigma: (m as f64).sqrt() / mu,
        mu,
        m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rr_channel_examples() {
        assert_abs_diff_eq!(rr_keep_prob(1.0, 10), 0.2319693167, epsilon = 1e-9);
        // eps = 0: uniform channel.
        assert_abs_diff_eq!(rr_keep_prob(0.0, 10), 0.1, epsilon = 1e-12);
        // Channel rows sum to 1 and satisfy the e^eps ratio.
        for m in [2usize, 5, 10] {
            for eps in [0.0, 0.5, 2.0] {
                let keep = rr_keep_prob(eps, m);
                let off = 1.0 / (eps.exp() - 1.0 + m as f64);
                assert_abs_diff_eq!(keep + (m - 1) as f64 * off, 1.0, epsilon = 1e-12);
                assert_abs_diff_eq!(keep / off, eps.exp(), epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn rr_mechanism_frequency() {
        let mut rng = crate::seed::derive_rng(11, "rr-test", 0);
        let trials = 200_000;
        let mut kept = 0;
        for _ in 0..trials {
            if rr_mechanism(3, 1.0, 10, &mut rng).unwrap() == 3 {
                kept += 1;
            }
        }
        let freq = kept as f64 / trials as f64;
        let p = rr_keep_prob(1.0, 10);
        let se = (p * (1.0 - p) / trials as f64).sqrt();
        assert!((freq - p).abs() < 3.0 * se, "freq {freq} vs keep {p}");
    }

    #[test]
    fn rr_rejects_bad_input() {
        let mut rng = crate::seed::derive_rng(0, "rr-test", 1);
        assert!(rr_mechanism(0, 1.0, 1, &mut rng).is_err());
        assert!(rr_mechanism(5, 1.0, 5, &mut rng).is_err());
        assert!(rr_mechanism(0, -1.0, 5, &mut rng).is_err());
    }

    #[test]
    fn marginal_query_examples() {
        let data = vec![vec![0, 1], vec![0, 0], vec![1, 1], vec![0, 1]];
        assert_abs_diff_eq!(
            marginal_query(&data, &[0, 1], &[0, 1]).unwrap(),
            0.5,
            epsilon = 1e-12
        );
        assert_eq!(marginal_query(&data, &[0], &[2]).unwrap(), 0.0);
        let single = vec![vec![3, 4]];
        assert_eq!(marginal_query(&single, &[0, 1], &[3, 4]).unwrap(), 1.0);
        assert!(marginal_query(&[], &[0], &[0]).is_err());
    }

    #[test]
    fn exact_marginals_partition() {
        let data = vec![vec![0, 1, 2], vec![1, 0, 2], vec![0, 0, 0]];
        let w = MarginalWorkload::all_k(vec![2, 2, 3], 2).unwrap();
        let m = exact_marginals(&data, &w).unwrap();
        let offsets = w.offsets();
        for vi in 0..w.vsets().len() {
            let block: f64 = m[offsets[vi]..offsets[vi + 1]].iter().sum();
            assert_abs_diff_eq!(block, 1.0, epsilon = 1e-12);
        }
        // Cross-check one entry against marginal_query.
        let q = marginal_query(&data, &w.vsets()[0], &[0, 0]).unwrap();
        assert_abs_diff_eq!(
            m[offsets[0] + w.tuple_index(0, &[0, 0])],
            q,
            epsilon = 1e-12
        );
    }

    #[test]
    fn noisy_marginals_zero_sigma_and_determinism() {
        let data = vec![vec![0, 1], vec![1, 0]];
        let w = MarginalWorkload::all_k(vec![2, 2], 1).unwrap();
        let exact = exact_marginals(&data, &w).unwrap();
        assert_eq!(noisy_marginals(&data, &w, 0.0, 9).unwrap(), exact);
        let a = noisy_marginals(&data, &w, 1.5, 9).unwrap();
        let b = noisy_marginals(&data, &w, 1.5, 9).unwrap();
        assert_eq!(a, b);
        let c = noisy_marginals(&data, &w, 1.5, 10).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn noise_variance_matches() {
        let data = vec![vec![0], vec![0], vec![1], vec![1]];
        let w = MarginalWorkload::all_k(vec![2], 1).unwrap();
        let sigma = 0.7;
        let reps = 100_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for seed in 0..reps {
            let v = noisy_marginals(&data, &w, sigma, seed).unwrap()[0] - 0.5;
            sum += v;
            sumsq += v * v;
        }
        let mean = sum / reps as f64;
        let var = sumsq / reps as f64 - mean * mean;
        let expect = 2.0 * sigma * sigma;
        assert!(
            (var - expect).abs() / expect < 0.05,
            "sample variance {var} vs {expect}"
        );
    }

    #[test]
    fn gdp_delta_examples() {
        // Frozen from a high-precision normal-CDF oracle.
        assert_abs_diff_eq!(gdp_delta(1.0, 1.0).unwrap(), 0.1269367375, epsilon = 1e-9);
        assert_abs_diff_eq!(gdp_delta(0.0, 1.0).unwrap(), 0.3829249225, epsilon = 1e-9);
        // delta(0; mu) = 2*Phi(mu/2) - 1.
        for mu in [0.1, 1.0, 3.0] {
            assert_abs_diff_eq!(
                gdp_delta(0.0, mu).unwrap(),
                2.0 * std_normal_cdf(mu / 2.0) - 1.0,
                epsilon = 1e-12
            );
        }
        // Perfect-privacy limit.
        assert!(gdp_delta(1.0, 1e-6).unwrap() < 1e-12);
        assert!(gdp_delta(1.0, 0.0).is_err());
        // Monotone in both arguments.
        assert!(gdp_delta(1.0, 2.0).unwrap() > gdp_delta(1.0, 1.0).unwrap());
        assert!(gdp_delta(2.0, 1.0).unwrap() < gdp_delta(1.0, 1.0).unwrap());
    }

    #[test]
    fn composition_count_examples() {
        assert_eq!(composition_count(16, 3, 0).unwrap(), 0);
        assert_eq!(composition_count(16, 3, 1).unwrap(), 105);
        assert_eq!(composition_count(10, 3, 3).unwrap(), 85);
        assert_eq!(composition_count(4, 3, 1).unwrap(), 3);
        assert!(composition_count(3, 4, 1).is_err());
        assert!(composition_count(3, 0, 1).is_err());
        assert!(composition_count(3, 2, 4).is_err());
    }

    #[test]
    fn calibrate_round_trip() {
        for eps in [0.5, 1.0, 3.0] {
            for m in [1u64, 36, 105] {
                let cal = calibrate_sigma(eps, 1e-5, m).unwrap();
                let back = gdp_delta(eps, (m as f64).sqrt() / cal.sigma).unwrap();
                assert_abs_diff_eq!(back, 1e-5, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn calibrate_oracle_value() {
        // Frozen from a bisection oracle against the delta formula:
        // mu*(eps=1, delta=1e-5) = 0.2680511232.
        let cal = calibrate_sigma(1.0, 1e-5, 1).unwrap();
        assert_abs_diff_eq!(cal.mu, 0.2680511232, epsilon = 1e-6);
        assert_abs_diff_eq!(cal.sigma, 3.7306316348, epsilon = 1e-6);
        // m quadrupled doubles sigma.
        let cal4 = calibrate_sigma(1.0, 1e-5, 4).unwrap();
        assert_abs_diff_eq!(cal4.sigma, 2.0 * cal.sigma, epsilon = 1e-9);
    }

    #[test]
    fn calibrate_monotonicity() {
        let base = calibrate_sigma(1.0, 1e-5, 36).unwrap().sigma;
        assert!(calibrate_sigma(3.0, 1e-5, 36).unwrap().sigma < base);
        assert!(calibrate_sigma(1.0, 1e-5, 105).unwrap().sigma > base);
        assert!(calibrate_sigma(1.0, 1e-7, 36).unwrap().sigma > base);
    }

    #[test]
    fn workload_validation() {
        assert!(MarginalWorkload::new(vec![2, 2], vec![vec![0], vec![0]]).is_err());
        assert!(MarginalWorkload::new(vec![2, 2], vec![vec![0, 2]]).is_err());
        assert!(MarginalWorkload::new(vec![2, 2], vec![vec![0, 0]]).is_err());
        assert!(MarginalWorkload::new(vec![2, 2], vec![vec![0], vec![0, 1]]).is_err());
        let w = MarginalWorkload::all_k(vec![2, 3, 4], 2).unwrap();
        assert_eq!(w.vsets().len(), 3);
        assert_eq!(w.total_len(), 6 + 8 + 12);
    }
}
