use serde::{Deserialize, Serialize};

/// A domain element: a single categorical/ordinal code, a tuple of codes
/// (multi-attribute records), a real vector, or an opaque label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Ints(Vec<i64>),
    Reals(Vec<f64>),
    Label(String),
}

impl Value {
    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(v) => Some(*v),
            _ => None,
        }
    }

    /// Numeric coordinates, for L1/L2 style metrics. Labels have none.
    pub fn coords(&self) -> Option<Vec<f64>> {
        match self {
            Value::Int(v) => Some(vec![*v as f64]),
            Value::Ints(v) => Some(v.iter().map(|&x| x as f64).collect()),
            Value::Reals(v) => Some(v.clone()),
            Value::Label(_) => None,
        }
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v)
    }
}

impl From<Vec<i64>> for Value {
    fn from(v: Vec<i64>) -> Self {
        Value::Ints(v)
    }
}
