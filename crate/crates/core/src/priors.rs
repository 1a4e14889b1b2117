//! Prior distributions over record values: explicit categoricals, implicit
//! uniform/Zipf ranges for domains too large to materialize, independent
//! products across records, and conditional tables keyed by known attributes.
//!
//! The quantity every bound consumes is `prior_success`: the probability
//! that a fresh sample from the prior is accepted by the metric given a
//! fixed attack attempt.

use crate::error::{Error, Result};
use crate::metrics::{eval_loss, Addressing, LossMetricSpec, MetricKind};
use crate::value::Value;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Largest domain we materialize element by element; see `Prior` for the
/// implicit representations used above this.
pub const MATERIALIZE_MAX: u64 = 10_000_000;

const PROB_SUM_TOL: f64 = 1e-9;

/// Finite categorical distribution with an explicit domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Categorical {
    domain: Vec<Value>,
    probs: Vec<f64>,
}

impl Categorical {
    pub fn new(domain: Vec<Value>, probs: Vec<f64>) -> Result<Self> {
        if domain.is_empty() {
            return Err(Error::invalid("categorical domain is empty"));
        }
        if domain.len() != probs.len() {
            return Err(Error::invalid(format!(
                "domain has {} entries but probs has {}",
                domain.len(),
                probs.len()
            )));
        }
        for &p in &probs {
            if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                return Err(Error::invalid(format!("probability {p} outside [0, 1]")));
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::invalid(format!(
                "probabilities sum to {sum}, expected 1"
            )));
        }
        for i in 0..domain.len() {
            for j in i + 1..domain.len() {
                if domain[i] == domain[j] {
                    return Err(Error::invalid(format!(
                        "duplicate domain entry {:?}",
                        domain[i]
                    )));
                }
            }
        }
        Ok(Self { domain, probs })
    }

    pub fn len(&self) -> usize {
        self.domain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domain.is_empty()
    }

    pub fn domain(&self) -> &[Value] {
        &self.domain
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob_of(&self, value: &Value) -> f64 {
        self.domain
            .iter()
            .position(|v| v == value)
            .map_or(0.0, |i| self.probs[i])
    }

    /// Index of the heaviest element, ties to the lowest index.
    pub fn mode_index(&self) -> usize {
        let mut best = 0;
        for i in 1..self.probs.len() {
            if self.probs[i] > self.probs[best] {
                best = i;
            }
        }
        best
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Value {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (v, &p) in self.domain.iter().zip(&self.probs) {
            acc += p;
            if u < acc {
                return v.clone();
            }
        }
        self.domain.last().unwrap().clone()
    }
}

/// Every probability equal to 1/domain_size, over integer codes 0..size-1.
pub fn uniform_prior(domain_size: u64) -> Result<Categorical> {
    if domain_size == 0 {
        return Err(Error::invalid("uniform prior needs domain_size >= 1"));
    }
    if domain_size > MATERIALIZE_MAX {
        return Err(Error::invalid(format!(
            "domain of size {domain_size} too large to materialize; use Prior::uniform"
        )));
    }
    let n = domain_size as usize;
    let p = 1.0 / domain_size as f64;
    Categorical::new((0..n as i64).map(Value::Int).collect(), vec![p; n])
}

/// Normalizer H(N, s) = Σ_{j=1..N} j^(-s). Direct summation up to
/// `MATERIALIZE_MAX` terms, then an integral-bracket midpoint for the tail;
/// relative tail error is below 1e-6 at that split.
pub fn zipf_norm(domain_size: u64, s: f64) -> Result<f64> {
    if domain_size == 0 {
        return Err(Error::invalid("zipf prior needs domain_size >= 1"));
    }
    if s <= 0.0 || !s.is_finite() {
        return Err(Error::invalid(format!("zipf exponent s = {s} must be > 0")));
    }
    let m = domain_size.min(MATERIALIZE_MAX);
    // Sum ascending in magnitude (largest rank first) for accuracy.
    let mut head = 0.0;
    for j in (1..=m).rev() {
        head += (j as f64).powf(-s);
    }
    if domain_size <= MATERIALIZE_MAX {
        return Ok(head);
    }
    let integral = |a: f64, b: f64| -> f64 {
        if (s - 1.0).abs() < 1e-12 {
            (b / a).ln()
        } else {
            (b.powf(1.0 - s) - a.powf(1.0 - s)) / (1.0 - s)
        }
    };
    let n = domain_size as f64;
    let lower = integral(m as f64 + 1.0, n + 1.0);
    let upper = integral(m as f64, n);
    Ok(head + 0.5 * (lower + upper))
}

/// Zipf over ranks 1..=N: probs(k) = k^(-s) / H(N, s).
pub fn zipf_prior(domain_size: u64, s: f64) -> Result<Categorical> {
    if domain_size > MATERIALIZE_MAX {
        return Err(Error::invalid(format!(
            "domain of size {domain_size} too large to materialize; use Prior::zipf"
        )));
    }
    let h = zipf_norm(domain_size, s)?;
    let domain: Vec<Value> = (1..=domain_size as i64).map(Value::Int).collect();
    let probs: Vec<f64> = (1..=domain_size).map(|k| (k as f64).powf(-s) / h).collect();
    Categorical::new(domain, probs)
}

/// Per-record prior. Large uniform/Zipf domains are kept implicit so
/// success probabilities come out analytically.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Prior {
    Explicit(Categorical),
    /// Uniform over integer codes {0, ..., size-1}.
    Uniform {
        size: u64,
    },
    /// Zipf over ranks {1, ..., size} with exponent s and normalizer H(size, s).
    Zipf {
        size: u64,
        s: f64,
        norm: f64,
    },
}

impl Prior {
    pub fn uniform(size: u64) -> Result<Prior> {
        if size == 0 {
            return Err(Error::invalid("uniform prior needs size >= 1"));
        }
        Ok(Prior::Uniform { size })
    }

    pub fn zipf(size: u64, s: f64) -> Result<Prior> {
        let norm = zipf_norm(size, s)?;
        Ok(Prior::Zipf { size, s, norm })
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Result<Value> {
        match self {
            Prior::Explicit(c) => Ok(c.sample(rng)),
            Prior::Uniform { size } => Ok(Value::Int(rng.gen_range(0..*size as i64))),
            Prior::Zipf { size, .. } => {
                if *size > MATERIALIZE_MAX {
                    Err(Error::invalid(
                        "sampling from an implicit zipf prior is not supported",
                    ))
                } else {
                    // Materializing per call would be wasteful in a loop;
                    // callers that simulate should materialize once.
                    Err(Error::invalid(
                        "materialize the zipf prior (zipf_prior) before sampling",
                    ))
                }
            }
        }
    }
}

/// Independent product of per-record priors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductPrior {
    factors: Vec<Prior>,
}

impl ProductPrior {
    pub fn new(factors: Vec<Prior>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::invalid("product prior needs at least one factor"));
        }
        Ok(Self { factors })
    }

    pub fn replicated(factor: Prior, n: usize) -> Result<Self> {
        Self::new(vec![factor; n.max(1)])
    }

    pub fn n(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[Prior] {
        &self.factors
    }

    pub fn factor(&self, i: usize) -> &Prior {
        &self.factors[i]
    }
}

/// Known-attribute tuple -> categorical over the unknown attributes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionalPriorTable {
    table: BTreeMap<Vec<i64>, Categorical>,
}

impl ConditionalPriorTable {
    pub fn new(table: BTreeMap<Vec<i64>, Categorical>) -> Result<Self> {
        if table.is_empty() {
            return Err(Error::invalid("conditional prior table is empty"));
        }
        Ok(Self { table })
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Vec<i64>, &Categorical)> {
        self.table.iter()
    }

    /// Build from a joint distribution over (known tuple, unknown value).
    pub fn from_joint(joint: &[(Vec<i64>, Value, f64)]) -> Result<Self> {
        let mut groups: BTreeMap<Vec<i64>, Vec<(Value, f64)>> = BTreeMap::new();
        for (known, unknown, p) in joint {
            groups
                .entry(known.clone())
                .or_default()
                .push((unknown.clone(), *p));
        }
        let mut table = BTreeMap::new();
        for (known, entries) in groups {
            let mass: f64 = entries.iter().map(|(_, p)| p).sum();
            if mass <= 0.0 {
                return Err(Error::invalid(format!(
                    "known tuple {known:?} has zero joint mass"
                )));
            }
            let (domain, probs): (Vec<Value>, Vec<f64>) =
                entries.into_iter().map(|(v, p)| (v, p / mass)).unzip();
            table.insert(known, Categorical::new(domain, probs)?);
        }
        Self::new(table)
    }
}

/// The stored conditional distribution for a known-attribute tuple.
pub fn condition<'a>(table: &'a ConditionalPriorTable, known: &[i64]) -> Result<&'a Categorical> {
    table.table.get(known).ok_or_else(|| {
        Error::MissingTuple(
            known
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(","),
        )
    })
}

/// Collect the distinct integer guesses relevant to an implicit range,
/// respecting addressing (aligned picks the single guess for this record).
fn relevant_int_guesses(
    metric: &LossMetricSpec,
    guesses: &[Value],
    record_index: usize,
) -> Result<Vec<i64>> {
    let slice: Vec<&Value> = match metric.addressing {
        Addressing::Aligned => {
            let g = guesses.get(record_index).ok_or_else(|| {
                Error::invalid(format!(
                    "aligned addressing: no guess for record {record_index}"
                ))
            })?;
            vec![g]
        }
        Addressing::Pooled => guesses.iter().collect(),
    };
    let mut ints = Vec::with_capacity(slice.len());
    for g in slice {
        match g.as_int() {
            Some(v) => ints.push(v),
            None => {
                return Err(Error::invalid(format!(
                    "implicit integer-range prior cannot score non-integer guess {g:?}"
                )))
            }
        }
    }
    ints.sort_unstable();
    ints.dedup();
    Ok(ints)
}

/// Merge the L1 balls around each guess into disjoint intervals clipped to
/// [lo, hi].
fn merged_balls(guesses: &[i64], e: u64, lo: i64, hi: i64) -> Vec<(i64, i64)> {
    let e = e as i64;
    let mut intervals: Vec<(i64, i64)> = guesses
        .iter()
        .map(|&g| ((g - e).max(lo), (g + e).min(hi)))
        .filter(|(a, b)| a <= b)
        .collect();
    intervals.sort_unstable();
    let mut merged: Vec<(i64, i64)> = Vec::new();
    for (a, b) in intervals {
        match merged.last_mut() {
            Some((_, last_b)) if a <= *last_b + 1 => *last_b = (*last_b).max(b),
            _ => merged.push((a, b)),
        }
    }
    merged
}

/// Pr_{X ~ prior}[ℓ_i(X, guesses) = 1]: the prior mass accepted by the
/// metric at the given attack attempt.
pub fn prior_success(
    prior: &Prior,
    metric: &LossMetricSpec,
    guesses: &[Value],
    record_index: usize,
) -> Result<f64> {
    if guesses.is_empty() {
        return Err(Error::invalid("prior_success needs at least one guess"));
    }
    match prior {
        Prior::Explicit(cat) => {
            let mut mass = 0.0;
            for (v, &p) in cat.domain().iter().zip(cat.probs()) {
                if eval_loss(metric, v, guesses, record_index)? {
                    mass += p;
                }
            }
            Ok(mass.min(1.0))
        }
        Prior::Uniform { size } => {
            let size_f = *size as f64;
            let hi = *size as i64 - 1;
            let ints = relevant_int_guesses(metric, guesses, record_index)?;
            match &metric.kind {
                MetricKind::ExactMatch | MetricKind::MembershipBit => {
                    let hits = ints.iter().filter(|&&g| (0..=hi).contains(&g)).count();
                    Ok(hits as f64 / size_f)
                }
                MetricKind::L1Ball { e } => {
                    let count: i64 = merged_balls(&ints, *e, 0, hi)
                        .iter()
                        .map(|(a, b)| b - a + 1)
                        .sum();
                    Ok((count as f64 / size_f).min(1.0))
                }
                MetricKind::L2Min { .. } => Err(Error::invalid(
                    "L2 metric not supported on implicit uniform ranges",
                )),
            }
        }
        Prior::Zipf { size, s, norm } => {
            let hi = *size as i64;
            let ints = relevant_int_guesses(metric, guesses, record_index)?;
            let rank_mass = |r: i64| (r as f64).powf(-s) / norm;
            match &metric.kind {
                MetricKind::ExactMatch | MetricKind::MembershipBit => Ok(ints
                    .iter()
                    .filter(|&&g| (1..=hi).contains(&g))
                    .map(|&g| rank_mass(g))
                    .sum()),
                MetricKind::L1Ball { e } => {
                    let intervals = merged_balls(&ints, *e, 1, hi);
                    let width: i64 = intervals.iter().map(|(a, b)| b - a + 1).sum();
                    if width > MATERIALIZE_MAX as i64 {
                        return Err(Error::invalid(
                            "zipf L1-ball mass over an interval this wide is not supported",
                        ));
                    }
                    let mut mass = 0.0;
                    for (a, b) in intervals {
                        for r in a..=b {
                            mass += rank_mass(r);
                        }
                    }
                    Ok(mass.min(1.0))
                }
                MetricKind::L2Min { .. } => {
                    Err(Error::invalid("L2 metric not supported on zipf ranges"))
                }
            }
        }
    }
}

/// Single-guess success probability, used when scanning candidates.
fn single_guess_success(prior: &Prior, metric: &LossMetricSpec, guess: &Value) -> Result<f64> {
    let aligned = LossMetricSpec {
        kind: metric.kind.clone(),
        addressing: Addressing::Aligned,
    };
    prior_success(prior, &aligned, std::slice::from_ref(guess), 0)
}

/// The a priori Bayes-optimal single guess: maximizes prior_success, ties
/// broken by lowest domain index.
pub fn bayes_optimal_prior_guess(prior: &Prior, metric: &LossMetricSpec) -> Result<Value> {
    match prior {
        Prior::Explicit(cat) => {
            let mut best: Option<(f64, &Value)> = None;
            for cand in cat.domain() {
                let p = single_guess_success(prior, metric, cand)?;
                if best.is_none_or(|(bp, _)| p > bp) {
                    best = Some((p, cand));
                }
            }
            Ok(best.unwrap().1.clone())
        }
        Prior::Uniform { size } => match &metric.kind {
            MetricKind::ExactMatch | MetricKind::MembershipBit => Ok(Value::Int(0)),
            MetricKind::L1Ball { e } => {
                // Coverage is unimodal in the guess; scanning the first
                // 2E + 2 candidates finds the lowest-index maximizer.
                let hi = (*size as i64 - 1).min(2 * *e as i64 + 1);
                let mut best = (0i64, -1.0);
                for g in 0..=hi {
                    let p = single_guess_success(prior, metric, &Value::Int(g))?;
                    if p > best.1 {
                        best = (g, p);
                    }
                }
                Ok(Value::Int(best.0))
            }
            MetricKind::L2Min { .. } => Err(Error::invalid(
                "L2 metric not supported on implicit uniform ranges",
            )),
        },
        Prior::Zipf { size, .. } => match &metric.kind {
            MetricKind::ExactMatch | MetricKind::MembershipBit => Ok(Value::Int(1)),
            MetricKind::L1Ball { e } => {
                let hi = (*size as i64).min(2 * *e as i64 + 2);
                let mut best = (1i64, -1.0);
                for g in 1..=hi {
                    let p = single_guess_success(prior, metric, &Value::Int(g))?;
                    if p > best.1 {
                        best = (g, p);
                    }
                }
                Ok(Value::Int(best.0))
            }
            MetricKind::L2Min { .. } => {
                Err(Error::invalid("L2 metric not supported on zipf ranges"))
            }
        },
    }
}

// ---------------------------------------------------------------------------
// Prior file format
// ---------------------------------------------------------------------------

/// Wire form of the prior JSON file:
/// {"kind": "uniform"|"zipf"|"categorical"|"conditional", ...}. Fields
/// irrelevant to the declared kind are rejected.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorFile {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub size: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub domain: Option<Vec<Value>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probs: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<BTreeMap<String, CategoricalWire>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CategoricalWire {
    pub domain: Vec<Value>,
    pub probs: Vec<f64>,
}

/// A parsed prior file: either a single per-record prior or a conditional
/// table.
#[derive(Clone, Debug, PartialEq)]
pub enum PriorSpec {
    Single(Prior),
    Conditional(ConditionalPriorTable),
}

impl PriorFile {
    pub fn parse(&self) -> Result<PriorSpec> {
        let reject = |cond: bool, field: &str| -> Result<()> {
            if cond {
                Err(Error::Config(format!(
                    "field {field:?} not allowed for prior kind {:?}",
                    self.kind
                )))
            } else {
                Ok(())
            }
        };
        match self.kind.as_str() {
            "uniform" => {
                reject(self.s.is_some(), "s")?;
                reject(self.domain.is_some(), "domain")?;
                reject(self.probs.is_some(), "probs")?;
                reject(self.table.is_some(), "table")?;
                let size = self
                    .size
                    .ok_or_else(|| Error::Config("uniform prior requires \"size\"".into()))?;
                Ok(PriorSpec::Single(Prior::uniform(size)?))
            }
            "zipf" => {
                reject(self.domain.is_some(), "domain")?;
                reject(self.probs.is_some(), "probs")?;
                reject(self.table.is_some(), "table")?;
                let size = self
                    .size
                    .ok_or_else(|| Error::Config("zipf prior requires \"size\"".into()))?;
                let s = self
                    .s
                    .ok_or_else(|| Error::Config("zipf prior requires \"s\"".into()))?;
                Ok(PriorSpec::Single(Prior::zipf(size, s)?))
            }
            "categorical" => {
                reject(self.size.is_some(), "size")?;
                reject(self.s.is_some(), "s")?;
                reject(self.table.is_some(), "table")?;
                let domain = self
                    .domain
                    .clone()
                    .ok_or_else(|| Error::Config("categorical prior requires \"domain\"".into()))?;
                let probs = self
                    .probs
                    .clone()
                    .ok_or_else(|| Error::Config("categorical prior requires \"probs\"".into()))?;
                Ok(PriorSpec::Single(Prior::Explicit(Categorical::new(
                    domain, probs,
                )?)))
            }
            "conditional" => {
                reject(self.size.is_some(), "size")?;
                reject(self.s.is_some(), "s")?;
                reject(self.domain.is_some(), "domain")?;
                reject(self.probs.is_some(), "probs")?;
                let wire = self
                    .table
                    .as_ref()
                    .ok_or_else(|| Error::Config("conditional prior requires \"table\"".into()))?;
                let mut table = BTreeMap::new();
                for (key, cat) in wire {
                    let known: Vec<i64> = key
                        .split(',')
                        .map(|tok| {
                            tok.trim()
                                .parse::<i64>()
                                .map_err(|_| Error::Config(format!("bad known-tuple key {key:?}")))
                        })
                        .collect::<Result<_>>()?;
                    table.insert(
                        known,
                        Categorical::new(cat.domain.clone(), cat.probs.clone())?,
                    );
                }
                Ok(PriorSpec::Conditional(ConditionalPriorTable::new(table)?))
            }
            other => Err(Error::Config(format!("unknown prior kind {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn uniform10() -> Prior {
        Prior::Explicit(uniform_prior(10).unwrap())
    }

    #[test]
    fn uniform_prior_basics() {
        let c = uniform_prior(10).unwrap();
        assert!(c.probs().iter().all(|&p| (p - 0.1).abs() < 1e-15));
        let c = uniform_prior(1).unwrap();
        assert_eq!(c.probs(), &[1.0]);
        assert!(uniform_prior(0).is_err());
    }

    #[test]
    fn implicit_uniform_head_prob() {
        let p = Prior::uniform(1_000_000_000).unwrap();
        let m = LossMetricSpec::exact(Addressing::Aligned);
        let got = prior_success(&p, &m, &[Value::Int(5)], 0).unwrap();
        assert_abs_diff_eq!(got, 1e-9, epsilon = 1e-18);
    }

    #[test]
    fn zipf_small_exact() {
        let c = zipf_prior(3, 1.0).unwrap();
        assert_abs_diff_eq!(c.probs()[0], 6.0 / 11.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.probs()[1], 3.0 / 11.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.probs()[2], 2.0 / 11.0, epsilon = 1e-12);
        assert!(zipf_prior(3, 0.0).is_err());
        assert!(zipf_prior(3, -1.0).is_err());
        let c = zipf_prior(1, 2.0).unwrap();
        assert_eq!(c.probs(), &[1.0]);
    }

    #[test]
    fn zipf_probs_strictly_decrease() {
        let c = zipf_prior(50, 1.1).unwrap();
        for w in c.probs().windows(2) {
            assert!(w[0] > w[1]);
        }
    }

    #[test]
    fn zipf_large_head_prob() {
        // Frozen from a Hurwitz-zeta oracle: H(1e9, 1.1) = 9.3255230532.
        let p = Prior::zipf(1_000_000_000, 1.1).unwrap();
        if let Prior::Zipf { norm, .. } = p {
            assert_abs_diff_eq!(norm, 9.3255230532, epsilon = 1e-5);
        } else {
            panic!("expected zipf prior");
        }
        let m = LossMetricSpec::exact(Addressing::Aligned);
        let head = prior_success(&p, &m, &[Value::Int(1)], 0).unwrap();
        assert_abs_diff_eq!(head, 0.1072325911, epsilon = 1e-6);
    }

    #[test]
    fn prior_success_examples() {
        let p = uniform10();
        let exact = LossMetricSpec::exact(Addressing::Aligned);
        assert_abs_diff_eq!(
            prior_success(&p, &exact, &[Value::Int(5)], 0).unwrap(),
            0.1,
            epsilon = 1e-12
        );
        let ball = LossMetricSpec::l1_ball(1, Addressing::Aligned);
        assert_abs_diff_eq!(
            prior_success(&p, &ball, &[Value::Int(5)], 0).unwrap(),
            0.3,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            prior_success(&p, &ball, &[Value::Int(0)], 0).unwrap(),
            0.2,
            epsilon = 1e-12
        );
    }

    #[test]
    fn prior_success_pooled_no_double_count() {
        let p = uniform10();
        let exact = LossMetricSpec::exact(Addressing::Pooled);
        let guesses = vec![Value::Int(3), Value::Int(3), Value::Int(4)];
        assert_abs_diff_eq!(
            prior_success(&p, &exact, &guesses, 0).unwrap(),
            0.2,
            epsilon = 1e-12
        );
    }

    #[test]
    fn implicit_uniform_matches_explicit() {
        let implicit = Prior::uniform(10).unwrap();
        let explicit = uniform10();
        let ball = LossMetricSpec::l1_ball(1, Addressing::Pooled);
        let guesses = vec![Value::Int(0), Value::Int(2), Value::Int(9)];
        let a = prior_success(&implicit, &ball, &guesses, 0).unwrap();
        let b = prior_success(&explicit, &ball, &guesses, 0).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-12);
    }

    #[test]
    fn condition_lookup() {
        let mut table = BTreeMap::new();
        table.insert(
            vec![0],
            Categorical::new(vec![Value::Int(0), Value::Int(1)], vec![0.25, 0.75]).unwrap(),
        );
        let t = ConditionalPriorTable::new(table).unwrap();
        assert_abs_diff_eq!(
            condition(&t, &[0]).unwrap().probs()[1],
            0.75,
            epsilon = 1e-12
        );
        let err = condition(&t, &[1]).unwrap_err();
        assert!(err.to_string().contains('1'));
    }

    #[test]
    fn condition_from_joint() {
        // 2x2 joint p(u, k): rows u in {0,1}, cols k in {0,1}.
        let joint = vec![
            (vec![0], Value::Int(0), 0.1),
            (vec![0], Value::Int(1), 0.3),
            (vec![1], Value::Int(0), 0.2),
            (vec![1], Value::Int(1), 0.4),
        ];
        let t = ConditionalPriorTable::from_joint(&joint).unwrap();
        let c0 = condition(&t, &[0]).unwrap();
        assert_abs_diff_eq!(c0.probs()[0], 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(c0.probs()[1], 0.75, epsilon = 1e-12);
        let c1 = condition(&t, &[1]).unwrap();
        assert_abs_diff_eq!(c1.probs()[0], 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn bayes_guess_examples() {
        let exact = LossMetricSpec::exact(Addressing::Aligned);
        // Uniform: all tie, lowest index wins.
        assert_eq!(
            bayes_optimal_prior_guess(&uniform10(), &exact).unwrap(),
            Value::Int(0)
        );
        // Unique max.
        let cat = Categorical::new(
            vec![Value::Int(0), Value::Int(1), Value::Int(2)],
            vec![0.1, 0.7, 0.2],
        )
        .unwrap();
        assert_eq!(
            bayes_optimal_prior_guess(&Prior::Explicit(cat), &exact).unwrap(),
            Value::Int(1)
        );
        // L1 ball E=1 over uniform {0..9}: interior guess 1 covers {0,1,2}.
        let ball = LossMetricSpec::l1_ball(1, Addressing::Aligned);
        assert_eq!(
            bayes_optimal_prior_guess(&uniform10(), &ball).unwrap(),
            Value::Int(1)
        );
        assert_eq!(
            bayes_optimal_prior_guess(&Prior::uniform(10).unwrap(), &ball).unwrap(),
            Value::Int(1)
        );
    }

    #[test]
    fn bayes_guess_is_optimal_on_small_domains() {
        let ball = LossMetricSpec::l1_ball(1, Addressing::Aligned);
        for size in 1..8u64 {
            let prior = Prior::Explicit(uniform_prior(size).unwrap());
            let star = bayes_optimal_prior_guess(&prior, &ball).unwrap();
            let best = single_guess_success(&prior, &ball, &star).unwrap();
            for g in 0..size as i64 {
                let p = single_guess_success(&prior, &ball, &Value::Int(g)).unwrap();
                assert!(p <= best + 1e-12);
            }
        }
    }

    #[test]
    fn categorical_validation() {
        assert!(Categorical::new(vec![], vec![]).is_err());
        assert!(Categorical::new(vec![Value::Int(0)], vec![0.5]).is_err());
        assert!(Categorical::new(vec![Value::Int(0), Value::Int(0)], vec![0.5, 0.5]).is_err());
        assert!(Categorical::new(vec![Value::Int(0), Value::Int(1)], vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn prior_file_parsing() {
        let f: PriorFile = serde_json::from_str(r#"{"kind":"uniform","size":10}"#).unwrap();
        assert_eq!(
            f.parse().unwrap(),
            PriorSpec::Single(Prior::uniform(10).unwrap())
        );

        let f: PriorFile = serde_json::from_str(r#"{"kind":"zipf","size":3,"s":1.0}"#).unwrap();
        assert!(matches!(
            f.parse().unwrap(),
            PriorSpec::Single(Prior::Zipf { .. })
        ));

        let f: PriorFile =
            serde_json::from_str(r#"{"kind":"categorical","domain":[0,1],"probs":[0.4,0.6]}"#)
                .unwrap();
        assert!(matches!(
            f.parse().unwrap(),
            PriorSpec::Single(Prior::Explicit(_))
        ));

        let f: PriorFile = serde_json::from_str(
            r#"{"kind":"conditional","table":{"0,1":{"domain":[0,1],"probs":[0.5,0.5]}}}"#,
        )
        .unwrap();
        match f.parse().unwrap() {
            PriorSpec::Conditional(t) => {
                assert!(condition(&t, &[0, 1]).is_ok());
            }
            other => panic!("expected conditional, got {other:?}"),
        }

        // Unknown top-level fields rejected.
        assert!(
            serde_json::from_str::<PriorFile>(r#"{"kind":"uniform","size":10,"bogus":1}"#).is_err()
        );
        // Fields from the wrong kind rejected.
        let f: PriorFile = serde_json::from_str(r#"{"kind":"uniform","size":10,"s":1.1}"#).unwrap();
        assert!(f.parse().is_err());
    }
}
