//! Exact Poisson-binomial machinery: PMF by iterative convolution, survival
//! tables, quantiles, empirical dominance checks, and Clopper-Pearson
//! intervals for Monte Carlo estimates.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

/// The vector (β_1, ..., β_n) of Bernoulli parameters defining the
/// dominating sum S = Σ S_i, S_i ~ Bernoulli(β_i).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BernoulliProfile {
    betas: Vec<f64>,
}

impl BernoulliProfile {
    pub fn new(betas: Vec<f64>) -> Result<Self> {
        for (i, &b) in betas.iter().enumerate() {
            if !(0.0..=1.0).contains(&b) || !b.is_finite() {
                return Err(Error::invalid(format!("beta[{i}] = {b} outside [0, 1]")));
            }
        }
        Ok(Self { betas })
    }

    pub fn len(&self) -> usize {
        self.betas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.betas.is_empty()
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }
}

/// Exact PMF of the Poisson-binomial sum; entry j is Pr[S = j].
///
/// O(n²) convolution, one Bernoulli factor at a time. Tiny negative
/// intermediates from cancellation are clamped to zero.
pub fn pb_pmf(profile: &BernoulliProfile) -> Vec<f64> {
    let n = profile.len();
    let mut pmf = vec![0.0; n + 1];
    pmf[0] = 1.0;
    for (i, &b) in profile.betas().iter().enumerate() {
        for j in (0..=i + 1).rev() {
            let stay = if j <= i { pmf[j] * (1.0 - b) } else { 0.0 };
            let up = if j > 0 { pmf[j - 1] * b } else { 0.0 };
            pmf[j] = (stay + up).max(0.0);
        }
    }
    pmf
}

/// Survival function of a Poisson-binomial sum: Pr[S >= t] for t in
/// {0, ..., n+1}, with survival(0) = 1 and survival(n+1) = 0.
#[derive(Clone, Debug)]
pub struct TailTable {
    survival: Vec<f64>,
}

impl TailTable {
    pub fn from_profile(profile: &BernoulliProfile) -> Self {
        let pmf = pb_pmf(profile);
        let n = profile.len();
        let mut survival = vec![0.0; n + 2];
        let mut acc = 0.0;
        for t in (0..=n).rev() {
            acc += pmf[t];
            survival[t] = acc.min(1.0);
        }
        survival[0] = 1.0;
        Self { survival }
    }

    pub fn n(&self) -> usize {
        self.survival.len() - 2
    }

    /// Pr[S >= v]; v <= 0 gives 1, v > n gives 0.
    pub fn survival(&self, v: i64) -> f64 {
        if v <= 0 {
            1.0
        } else if v as usize > self.n() {
            0.0
        } else {
            self.survival[v as usize]
        }
    }
}

/// Pr[S >= v] for the given profile.
pub fn pb_tail(profile: &BernoulliProfile, v: i64) -> f64 {
    TailTable::from_profile(profile).survival(v)
}

/// Smallest v with Pr[S >= v+1] <= alpha, so Pr[S <= v] >= 1 - alpha.
pub fn pb_quantile(profile: &BernoulliProfile, alpha: f64) -> Result<usize> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha = {alpha} outside (0, 1)")));
    }
    let table = TailTable::from_profile(profile);
    for v in 0..=profile.len() {
        if table.survival(v as i64 + 1) <= alpha {
            return Ok(v);
        }
    }
    Ok(profile.len())
}

/// Per-threshold excess of the empirical tail over the dominating tail:
/// entry t is (empirical Pr[W >= t]) - Pr[S >= t], for t in {0, ..., n}.
pub fn dominance_report(samples: &[usize], profile: &BernoulliProfile) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::invalid("dominance_report needs at least one sample"));
    }
    let n = profile.len();
    for &w in samples {
        if w > n {
            return Err(Error::invalid(format!("sample {w} exceeds n = {n}")));
        }
    }
    let table = TailTable::from_profile(profile);
    let total = samples.len() as f64;
    let mut counts = vec![0usize; n + 1];
    for &w in samples {
        counts[w] += 1;
    }
    let mut excess = vec![0.0; n + 1];
    let mut at_least = 0usize;
    for t in (0..=n).rev() {
        at_least += counts[t];
        excess[t] = at_least as f64 / total - table.survival(t as i64);
    }
    Ok(excess)
}

/// Exact two-sided Clopper-Pearson interval at confidence `conf`.
pub fn binomial_ci(successes: u64, trials: u64, conf: f64) -> Result<(f64, f64)> {
    if trials == 0 {
        return Err(Error::invalid("binomial_ci needs trials >= 1"));
    }
    if successes > trials {
        return Err(Error::invalid(format!(
            "successes {successes} exceed trials {trials}"
        )));
    }
    if !(conf > 0.0 && conf < 1.0) {
        return Err(Error::invalid(format!("conf = {conf} outside (0, 1)")));
    }
    let s = successes as f64;
    let n = trials as f64;
    let half = (1.0 - conf) / 2.0;
    let lo = if successes == 0 {
        0.0
    } else {
        beta_quantile(s, n - s + 1.0, half)?
    };
    let hi = if successes == trials {
        1.0
    } else {
        beta_quantile(s + 1.0, n - s, 1.0 - half)?
    };
    Ok((lo, hi))
}

/// Beta quantile by bisection on the regularized incomplete beta CDF.
/// The library's built-in inverse has too coarse a tolerance for the
/// reproducibility checks here, so we refine to ~1e-14 ourselves.
fn beta_quantile(a: f64, b: f64, p: f64) -> Result<f64> {
    let dist = Beta::new(a, b).map_err(|e| Error::invalid(e.to_string()))?;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if dist.cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
