use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Rng;

/// Prior of one hyperparameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Dimension {
    Uniform { lo: f64, hi: f64 },
    LogUniform { lo: f64, hi: f64 },
    UniformInt { lo: i64, hi: i64 },
    Categorical { choices: Vec<String> },
}

impl Dimension {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            Dimension::Uniform { lo, hi } => lo < hi && lo.is_finite() && hi.is_finite(),
            Dimension::LogUniform { lo, hi } => *lo > 0.0 && lo < hi && hi.is_finite(),
            Dimension::UniformInt { lo, hi } => lo <= hi,
            Dimension::Categorical { choices } => !choices.is_empty(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid dimension {self:?}")))
        }
    }

    pub fn contains(&self, v: &Value) -> bool {
        match (self, v) {
            (Dimension::Uniform { lo, hi }, Value::Real(x)) | (Dimension::LogUniform { lo, hi }, Value::Real(x)) => {
                lo <= x && x <= hi
            }
            (Dimension::UniformInt { lo, hi }, Value::Int(x)) => lo <= x && x <= hi,
            (Dimension::Categorical { choices }, Value::Choice(c)) => choices.contains(c),
            _ => false,
        }
    }

    pub fn sample(&self, rng: &mut Rng) -> Value {
        match self {
            Dimension::Uniform { lo, hi } => Value::Real(rng.uniform_range(*lo, *hi)),
            Dimension::LogUniform { lo, hi } => Value::Real(rng.uniform_range(lo.ln(), hi.ln()).exp().clamp(*lo, *hi)),
            Dimension::UniformInt { lo, hi } => Value::Int(lo + rng.below((hi - lo + 1) as usize) as i64),
            Dimension::Categorical { choices } => Value::Choice(choices[rng.below(choices.len())].clone()),
        }
    }
}

/// Value assigned to one dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Real(f64),
    Choice(String),
}

impl Value {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Real(v) => Some(*v),
            Value::Int(v) => Some(*v as f64),
            Value::Choice(_) => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match self {
            Value::Int(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Choice(c) => Some(c),
            _ => None,
        }
    }
}

/// One value per dimension name.
pub type Config = BTreeMap<String, Value>;

/// Named dimensions, in a fixed order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub dims: Vec<(String, Dimension)>,
}

impl SearchSpace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, dim: Dimension) -> Self {
        self.dims.push((name.to_string(), dim));
        self
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&Dimension> {
        self.dims.iter().find(|(n, _)| n == name).map(|(_, d)| d)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, (name, d)) in self.dims.iter().enumerate() {
            d.validate()?;
            if self.dims[..i].iter().any(|(n, _)| n == name) {
                return Err(Error::InvalidConfig(format!("duplicate dimension `{name}`")));
            }
        }
        Ok(())
    }

    pub fn sample(&self, rng: &mut Rng) -> Config {
        self.dims.iter().map(|(n, d)| (n.clone(), d.sample(rng))).collect()
    }

    /// True when `config` assigns an in-domain value to every dimension.
    pub fn contains(&self, config: &Config) -> bool {
        self.dims
            .iter()
            .all(|(n, d)| config.get(n).is_some_and(|v| d.contains(v)))
    }
}
