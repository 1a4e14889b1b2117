//! Decomposable success metrics: per-record 0/1 losses ℓ_i and their sum
//! M(X, z) = Σ ℓ_i, with values in {0, ..., n}.

use crate::error::{Error, Result};
use crate::value::Value;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Addressing {
    /// Guess i targets record i; requires one guess per record.
    Aligned,
    /// Every guess applies to every record; a record counts once no matter
    /// how many guesses hit it.
    Pooled,
}

#[derive(Clone, Debug, PartialEq)]
pub enum MetricKind {
    ExactMatch,
    L1Ball { e: u64 },
    L2Min { tau: f64 },
    MembershipBit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LossMetricSpec {
    pub kind: MetricKind,
    pub addressing: Addressing,
}

impl LossMetricSpec {
    pub fn exact(addressing: Addressing) -> Self {
        Self {
            kind: MetricKind::ExactMatch,
            addressing,
        }
    }

    pub fn l1_ball(e: u64, addressing: Addressing) -> Self {
        Self {
            kind: MetricKind::L1Ball { e },
            addressing,
        }
    }

    pub fn l2_min(tau: f64) -> Self {
        Self {
            kind: MetricKind::L2Min { tau },
            addressing: Addressing::Pooled,
        }
    }

    pub fn membership() -> Self {
        Self {
            kind: MetricKind::MembershipBit,
            addressing: Addressing::Aligned,
        }
    }
}

// Wire format: {"kind": "...", "E": ..., "tau": ..., "addressing": "..."}.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetricSpecWire {
    kind: String,
    #[serde(rename = "E", skip_serializing_if = "Option::is_none")]
    e: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tau: Option<f64>,
    addressing: Addressing,
}

impl Serialize for LossMetricSpec {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let (kind, e, tau) = match &self.kind {
            MetricKind::ExactMatch => ("exact-match", None, None),
            MetricKind::L1Ball { e } => ("l1-ball", Some(*e), None),
            MetricKind::L2Min { tau } => ("l2-min", None, Some(*tau)),
            MetricKind::MembershipBit => ("membership-bit", None, None),
        };
        MetricSpecWire {
            kind: kind.to_string(),
            e,
            tau,
            addressing: self.addressing,
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for LossMetricSpec {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as DeError;
        let wire = MetricSpecWire::deserialize(de)?;
        let kind = match wire.kind.as_str() {
            "exact-match" => MetricKind::ExactMatch,
            "l1-ball" => MetricKind::L1Ball {
                e: wire
                    .e
                    .ok_or_else(|| D::Error::custom("l1-ball metric requires \"E\""))?,
            },
            "l2-min" => MetricKind::L2Min {
                tau: wire
                    .tau
                    .ok_or_else(|| D::Error::custom("l2-min metric requires \"tau\""))?,
            },
            "membership-bit" => MetricKind::MembershipBit,
            other => return Err(D::Error::custom(format!("unknown metric kind {other:?}"))),
        };
        if let MetricKind::L2Min { tau } = kind {
            if tau < 0.0 {
                return Err(D::Error::custom("tau must be nonnegative"));
            }
        }
        Ok(LossMetricSpec {
            kind,
            addressing: wire.addressing,
        })
    }
}

fn l1_distance(a: &Value, b: &Value) -> Result<f64> {
    let (xa, xb) = match (a.coords(), b.coords()) {
        (Some(xa), Some(xb)) => (xa, xb),
        _ => {
            return Err(Error::invalid(format!(
                "L1 metric on non-numeric value ({a:?} vs {b:?})"
            )))
        }
    };
    if xa.len() != xb.len() {
        return Err(Error::invalid(format!(
            "L1 metric on mismatched lengths {} vs {}",
            xa.len(),
            xb.len()
        )));
    }
    Ok(xa.iter().zip(&xb).map(|(x, y)| (x - y).abs()).sum())
}

fn l2_distance(a: &Value, b: &Value) -> Result<f64> {
    let (xa, xb) = match (a.coords(), b.coords()) {
        (Some(xa), Some(xb)) => (xa, xb),
        _ => {
            return Err(Error::invalid(format!(
                "L2 metric on non-numeric value ({a:?} vs {b:?})"
            )))
        }
    };
    if xa.len() != xb.len() {
        return Err(Error::invalid(format!(
            "L2 metric on mismatched lengths {} vs {}",
            xa.len(),
            xb.len()
        )));
    }
    Ok(xa
        .iter()
        .zip(&xb)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}

fn single_hit(kind: &MetricKind, record: &Value, guess: &Value) -> Result<bool> {
    match kind {
        MetricKind::ExactMatch => Ok(record == guess),
        MetricKind::MembershipBit => {
            let (r, g) = match (record.as_int(), guess.as_int()) {
                (Some(r), Some(g)) => (r, g),
                _ => {
                    return Err(Error::invalid(
                        "membership-bit metric requires integer values",
                    ))
                }
            };
            if !(r == 0 || r == 1) || !(g == 0 || g == 1) {
                return Err(Error::invalid(format!(
                    "membership-bit values must be 0 or 1, got record {r}, guess {g}"
                )));
            }
            Ok(r == g)
        }
        MetricKind::L1Ball { e } => Ok(l1_distance(record, guess)? <= *e as f64),
        MetricKind::L2Min { tau } => Ok(l2_distance(record, guess)? <= *tau),
    }
}

/// ℓ_i(record, z): 1 iff the metric accepts the record given the guesses.
pub fn eval_loss(
    metric: &LossMetricSpec,
    record: &Value,
    guesses: &[Value],
    record_index: usize,
) -> Result<bool> {
    if guesses.is_empty() {
        return Err(Error::invalid("eval_loss needs at least one guess"));
    }
    match metric.addressing {
        Addressing::Aligned => {
            let guess = guesses.get(record_index).ok_or_else(|| {
                Error::invalid(format!(
                    "aligned addressing: no guess for record {record_index} (got {} guesses)",
                    guesses.len()
                ))
            })?;
            single_hit(&metric.kind, record, guess)
        }
        Addressing::Pooled => {
            for guess in guesses {
                if single_hit(&metric.kind, record, guess)? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
    }
}

/// M(X, z) = Σ_i ℓ_i(X_i, z); each record counted at most once.
pub fn metric_total(
    metric: &LossMetricSpec,
    records: &[Value],
    guesses: &[Value],
) -> Result<usize> {
    if metric.addressing == Addressing::Aligned && guesses.len() != records.len() {
        return Err(Error::invalid(format!(
            "aligned addressing requires {} guesses, got {}",
            records.len(),
            guesses.len()
        )));
    }
    let mut total = 0;
    for (i, record) in records.iter().enumerate() {
        if eval_loss(metric, record, guesses, i)? {
            total += 1;
        }
    }
    Ok(total)
}
