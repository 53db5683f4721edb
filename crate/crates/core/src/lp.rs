//! Exponents, (quasi-)norms and the lp-ball constraint on component complexities.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Exponent p of an lp (quasi-)norm: a finite positive real or the explicit infinity sentinel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PExponent {
    Finite(f64),
    Infinity,
}

impl PExponent {
    /// Checked constructor for finite exponents.
    pub fn finite(p: f64) -> Result<Self> {
        if p.is_finite() && p > 0.0 {
            Ok(PExponent::Finite(p))
        } else {
            Err(Error::domain(format!("exponent p must be finite and > 0, got {p}")))
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, PExponent::Infinity)
    }

    /// 1/p, which is 0 for p = ∞.
    pub fn reciprocal(&self) -> f64 {
        match *self {
            PExponent::Finite(p) => 1.0 / p,
            PExponent::Infinity => 0.0,
        }
    }

    /// Errors unless the exponent lies in (0, ∞].
    pub fn validate(&self) -> Result<()> {
        match *self {
            PExponent::Finite(p) if !(p.is_finite() && p > 0.0) => {
                Err(Error::domain(format!("exponent p must be > 0, got {p}")))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for PExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PExponent::Finite(p) => write!(f, "{p}"),
            PExponent::Infinity => f.write_str("inf"),
        }
    }
}

impl FromStr for PExponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(PExponent::Infinity),
            other => {
                let p: f64 = other
                    .parse()
                    .map_err(|_| Error::domain(format!("cannot parse exponent {s:?}")))?;
                if p.is_infinite() && p > 0.0 {
                    return Ok(PExponent::Infinity);
                }
                PExponent::finite(p)
            }
        }
    }
}

impl Serialize for PExponent {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            PExponent::Finite(p) => serializer.serialize_f64(p),
            PExponent::Infinity => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for PExponent {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        let parsed = match Raw::deserialize(deserializer)? {
            Raw::Num(p) => PExponent::finite(p),
            Raw::Text(s) => s.parse(),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

/// The constraint ‖Ω(f)‖_p ≤ Λ on a model's complexity vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LpConstraint {
    pub p: PExponent,
    pub lambda: f64,
}

impl LpConstraint {
    pub fn new(p: PExponent, lambda: f64) -> Result<Self> {
        p.validate()?;
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::domain(format!(
                "budget lambda must be finite and > 0, got {lambda}"
            )));
        }
        Ok(LpConstraint { p, lambda })
    }

    /// The degenerate class {0} with Λ = 0. Only certificates accept it; learners
    /// and [`LpConstraint::new`] require Λ > 0.
    pub fn zero_budget(p: PExponent) -> Self {
        LpConstraint { p, lambda: 0.0 }
    }

    /// Radius k^{-1/p} Λ of the k-th (1-based) component ball in the product embedding.
    pub fn component_radius(&self, k: usize) -> f64 {
        (k as f64).powf(-self.p.reciprocal()) * self.lambda
    }

    /// Whether a complexity vector satisfies the constraint up to `rel_tol` relative slack.
    pub fn admits(&self, omega: &ComplexityVector, rel_tol: f64) -> bool {
        omega.lp_norm(self.p) <= self.lambda * (1.0 + rel_tol)
    }
}

/// Per-component complexities Ω(f) = (ω(f_k))_k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityVector(Vec<f64>);

impl ComplexityVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((k, v)) = values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::domain(format!(
                "complexity entries must be finite and nonnegative; entry {k} is {v}"
            )));
        }
        Ok(ComplexityVector(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn lp_norm(&self, p: PExponent) -> f64 {
        norm_unchecked(&self.0, p)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// ℓp norm (p ≥ 1), quasi-norm (0 < p < 1) or max (p = ∞) of a nonnegative vector.
pub fn lp_norm(values: &[f64], p: PExponent) -> Result<f64> {
    p.validate()?;
    if let Some(v) = values.iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::domain(format!("negative or NaN entry {v} in lp_norm")));
    }
    Ok(norm_unchecked(values, p))
}

fn norm_unchecked(values: &[f64], p: PExponent) -> f64 {
    match p {
        PExponent::Infinity => values.iter().copied().fold(0.0, f64::max),
        PExponent::Finite(p) => {
            // Scale by the max entry so large p does not overflow.
            let scale = values.iter().copied().fold(0.0, f64::max);
            if scale == 0.0 {
                return 0.0;
            }
            let sum: f64 = values.iter().map(|v| (v / scale).powf(p)).sum();
            scale * sum.powf(1.0 / p)
        }
    }
}
