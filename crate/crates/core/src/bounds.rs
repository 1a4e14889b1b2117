//! Closed-form and semi-numerical upper bounds on attack success: the
//! pure-DP Poisson-binomial tail, the one-run approximate-DP bound with its
//! LP-dual delta multiplier, the Monte Carlo approximate-DP bound, bit
//! leakage, generalized advantage, protective epsilon solving, and the
//! ReRo / Narcissus baseline bounds.

use crate::dist::{pb_tail, BernoulliProfile, TailTable};
use crate::error::{Error, Result};
use crate::metrics::LossMetricSpec;
use crate::priors::{bayes_optimal_prior_guess, prior_success, ProductPrior};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrivacyParams {
    pub eps: f64,
    pub delta: f64,
}

impl PrivacyParams {
    pub fn new(eps: f64, delta: f64) -> Result<Self> {
        if eps < 0.0 || !eps.is_finite() {
            return Err(Error::invalid(format!("eps = {eps} must be >= 0")));
        }
        if !(0.0..=1.0).contains(&delta) {
            return Err(Error::invalid(format!("delta = {delta} outside [0, 1]")));
        }
        Ok(Self { eps, delta })
    }

    pub fn pure(eps: f64) -> Result<Self> {
        Self::new(eps, 0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    Pure,
    ApproxOnerun,
    ApproxMc,
    BaselineRero,
    BaselineNarcissus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub value: f64,
    pub kind: BoundKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_multiplier: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci: Option<(f64, f64)>,
    pub v: i64,
}

/// Flipping probability β(ε, p) = e^ε / (e^ε - 1 + 1/p), evaluated in the
/// cancellation-free form p·e^ε / (p·(e^ε - 1) + 1). Limits: p = 0 gives 0,
/// p = 1 gives 1. Always in [p, 1].
pub fn beta(eps: f64, p: f64) -> Result<f64> {
    if eps < 0.0 || !eps.is_finite() {
        return Err(Error::invalid(format!("eps = {eps} must be >= 0")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("p = {p} outside [0, 1]")));
    }
    if p == 0.0 {
        return Ok(0.0);
    }
    let t = eps.exp();
    Ok((p * t / (p * (t - 1.0) + 1.0)).clamp(0.0, 1.0))
}

/// Pure-DP bound: Pr[Σ S_i >= v] for S_i ~ Bernoulli(β(ε, p_i)).
pub fn bound_pure(params: PrivacyParams, priors_at_guesses: &[f64], v: i64) -> Result<BoundResult> {
    if params.delta != 0.0 {
        return Err(Error::invalid(
            "bound_pure requires delta = 0; use bound_approx_onerun or bound_approx_mc",
        ));
    }
    let betas: Vec<f64> = priors_at_guesses
        .iter()
        .map(|&p| beta(params.eps, p))
        .collect::<Result<_>>()?;
    let profile = BernoulliProfile::new(betas)?;
    Ok(BoundResult {
        value: pb_tail(&profile, v),
        kind: BoundKind::Pure,
        alpha_multiplier: None,
        ci: None,
        v,
    })
}

/// LP-dual multiplier on the n·δ term:
/// α = max_{j in [n]} (Pr[S >= v-j] - Pr[S >= v]) / j, floored at 0.
pub fn lp_alpha(profile: &BernoulliProfile, v: i64) -> f64 {
    let n = profile.len();
    if n == 0 {
        return 0.0;
    }
    let table = TailTable::from_profile(profile);
    let tail_v = table.survival(v);
    let mut best = 0.0f64;
    for j in 1..=n as i64 {
        let gain = (table.survival(v - j) - tail_v) / j as f64;
        best = best.max(gain);
    }
    best
}

/// One-run approximate-DP bound: the prior is scored at the a priori
/// Bayes-optimal attempt z*, and the δ term enters as α·n·δ.
pub fn bound_approx_onerun(
    params: PrivacyParams,
    prior: &ProductPrior,
    metric: &LossMetricSpec,
    v: i64,
) -> Result<BoundResult> {
    let n = prior.n();
    let guesses: Vec<_> = prior
        .factors()
        .iter()
        .map(|f| bayes_optimal_prior_guess(f, metric))
        .collect::<Result<_>>()?;
    let mut betas = Vec::with_capacity(n);
    for (i, factor) in prior.factors().iter().enumerate() {
        let p = prior_success(factor, metric, &guesses, i)?;
        betas.push(beta(params.eps, p)?);
    }
    let profile = BernoulliProfile::new(betas)?;
    let tail = pb_tail(&profile, v);
    let alpha = lp_alpha(&profile, v);
    Ok(BoundResult {
        value: (tail + alpha * n as f64 * params.delta).clamp(0.0, 1.0),
        kind: BoundKind::ApproxOnerun,
        alpha_multiplier: Some(alpha),
        ci: None,
        v,
    })
}

/// Monte Carlo approximate-DP bound: mean of per-run dominating tails plus
/// n·δ. The interval is a normal-approximation CI on the Monte Carlo mean
/// (tails are exact per run, so the sample standard error applies).
pub fn bound_approx_mc(
    params: PrivacyParams,
    profiles: &[BernoulliProfile],
    v: i64,
    conf: f64,
) -> Result<BoundResult> {
    if profiles.is_empty() {
        return Err(Error::invalid("bound_approx_mc needs at least one profile"));
    }
    if !(conf > 0.0 && conf < 1.0) {
        return Err(Error::invalid(format!("conf = {conf} outside (0, 1)")));
    }
    let n = profiles[0].len();
    if profiles.iter().any(|p| p.len() != n) {
        return Err(Error::invalid("profiles must share the same length n"));
    }
    let tails: Vec<f64> = profiles.iter().map(|p| pb_tail(p, v)).collect();
    let r = tails.len() as f64;
    let mean = tails.iter().sum::<f64>() / r;
    let shift = n as f64 * params.delta;
    let value = (mean + shift).clamp(0.0, 1.0);
    let ci = if tails.len() > 1 {
        let var = tails.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / (r - 1.0);
        let se = (var / r).sqrt();
        let z = crate::mechanisms::std_normal_quantile(0.5 + conf / 2.0);
        Some((
            (mean - z * se + shift).clamp(0.0, 1.0),
            (mean + z * se + shift).clamp(0.0, 1.0),
        ))
    } else {
        None
    };
    Ok(BoundResult {
        value,
        kind: BoundKind::ApproxMc,
        alpha_multiplier: None,
        ci,
        v,
    })
}

/// Bits leaked at tail probability `alpha`: log2(e^ε·(1/α - 1) + 1).
/// Inverse of β in the sense bits_leaked(ε, β(ε, 2^-d)) = d.
pub fn bits_leaked(eps: f64, alpha: f64) -> Result<f64> {
    if eps < 0.0 || !eps.is_finite() {
        return Err(Error::invalid(format!("eps = {eps} must be >= 0")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha = {alpha} outside (0, 1)")));
    }
    Ok((eps.exp() * (1.0 / alpha - 1.0) + 1.0).log2())
}

/// Generalized advantage (posterior - prior) / (1 - prior).
pub fn advantage(posterior: f64, prior: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&prior) {
        return Err(Error::invalid(format!("prior = {prior} outside [0, 1)")));
    }
    if !(0.0..=1.0).contains(&posterior) {
        return Err(Error::invalid(format!(
            "posterior = {posterior} outside [0, 1]"
        )));
    }
    Ok((posterior - prior) / (1.0 - prior))
}

/// Upper end of the eps_protect search bracket.
pub const EPS_PROTECT_MAX: f64 = 50.0;
const EPS_PROTECT_TOL: f64 = 1e-4;

/// Largest ε (single target) at which advantage(β(ε, p) + δ, p) stays at or
/// below `threshold`. Returns 0 if even ε = 0 exceeds the threshold and
/// +∞ if ε = 50 still meets it.
pub fn eps_protect(p: f64, threshold: f64, delta: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!("p = {p} outside (0, 1)")));
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::invalid(format!(
            "threshold = {threshold} outside (0, 1)"
        )));
    }
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::invalid(format!("delta = {delta} outside [0, 1]")));
    }
    let adv_at = |eps: f64| -> Result<f64> {
        let post = (beta(eps, p)? + delta).min(1.0);
        advantage(post, p)
    };
    if adv_at(0.0)? > threshold {
        return Ok(0.0);
    }
    if adv_at(EPS_PROTECT_MAX)? <= threshold {
        return Ok(f64::INFINITY);
    }
    let mut lo = 0.0;
    let mut hi = EPS_PROTECT_MAX;
    while hi - lo > EPS_PROTECT_TOL {
        let mid = 0.5 * (lo + hi);
        if adv_at(mid)? <= threshold {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// ReRo-style pure-DP baseline: min(1, e^ε · κ) where κ is the heaviest
/// prior success probability.
pub fn baseline_rero(eps: f64, kappa: f64) -> f64 {
    (eps.exp() * kappa).min(1.0)
}

/// Narcissus-resiliency baseline for (ε, δ)-DP: min(1, e^ε·p + δ).
pub fn baseline_narcissus(eps: f64, delta: f64, p: f64) -> f64 {
    (eps.exp() * p + delta).min(1.0)
}
