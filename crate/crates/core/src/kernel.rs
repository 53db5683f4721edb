use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Positive semidefinite kernels on ℝ^d.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum KernelSpec {
    /// exp(-γ ‖x - x'‖²)
    GaussianRbf { gamma: f64 },
    /// ⟨x, x'⟩
    Linear,
    /// (⟨x, x'⟩ + offset)^degree
    Polynomial { degree: u32, offset: f64 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::GaussianRbf { gamma } if !(gamma.is_finite() && gamma > 0.0) => {
                Err(Error::domain(format!("gaussian bandwidth must be > 0, got {gamma}")))
            }
            KernelSpec::Polynomial { degree, offset } if degree == 0 || !(offset >= 0.0) => Err(Error::domain(
                format!("polynomial kernel needs degree >= 1 and offset >= 0, got ({degree}, {offset})"),
            )),
            _ => Ok(()),
        }
    }

    pub fn eval(&self, x: &DVector<f64>, z: &DVector<f64>) -> f64 {
        match *self {
            KernelSpec::GaussianRbf { gamma } => (-gamma * (x - z).norm_squared()).exp(),
            KernelSpec::Linear => x.dot(z),
            KernelSpec::Polynomial { degree, offset } => (x.dot(z) + offset).powi(degree as i32),
        }
    }

    /// Gram matrix K_ij = K(x_i, x_j), symmetric by construction.
    pub fn gram(&self, points: &[DVector<f64>]) -> DMatrix<f64> {
        let n = points.len();
        let mut k = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = self.eval(&points[i], &points[j]);
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
        }
        k
    }

    /// Cross matrix K_ij = K(rows_i, cols_j).
    pub fn cross(&self, rows: &[DVector<f64>], cols: &[DVector<f64>]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| self.eval(&rows[i], &cols[j]))
    }

    /// Σ_i K(x_i, x_i).
    pub fn trace(&self, points: &[DVector<f64>]) -> f64 {
        points.iter().map(|x| self.eval(x, x)).sum()
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSpec::GaussianRbf { gamma } => write!(f, "gaussian:{gamma}"),
            KernelSpec::Linear => f.write_str("linear"),
            KernelSpec::Polynomial { degree, offset } => write!(f, "poly:{degree}:{offset}"),
        }
    }
}

/// Parses `linear`, `gaussian:<gamma>` or `poly:<degree>:<offset>`.
impl FromStr for KernelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let bad = || Error::domain(format!("cannot parse kernel spec {s:?}"));
        let spec = match parts.as_slice() {
            ["linear"] => KernelSpec::Linear,
            ["gaussian" | "rbf", g] => KernelSpec::GaussianRbf {
                gamma: g.parse().map_err(|_| bad())?,
            },
            ["poly" | "polynomial", d, o] => KernelSpec::Polynomial {
                degree: d.parse().map_err(|_| bad())?,
                offset: o.parse().map_err(|_| bad())?,
            },
            _ => return Err(bad()),
        };
        spec.validate()?;
        Ok(spec)
    }
}
