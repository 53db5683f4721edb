use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack allowed when checking ‖x_i‖ ≤ Λ_x, absorbing rounding in computed norms.
const NORM_BOUND_SLACK: f64 = 1e-12;

/// A sample of points in ℝ^d with optional outputs in [-1/2, 1/2] and a norm bound Λ_x.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDataset", into = "RawDataset")]
pub struct Dataset {
    dim: usize,
    points: Vec<DVector<f64>>,
    outputs: Option<Vec<f64>>,
    lambda_x: f64,
}

impl Dataset {
    /// Builds a dataset, checking dimensions, the norm bound and the output range.
    pub fn new(points: Vec<DVector<f64>>, outputs: Option<Vec<f64>>, lambda_x: f64) -> Result<Self> {
        if !(lambda_x.is_finite() && lambda_x >= 0.0) {
            return Err(Error::domain(format!(
                "lambda_x must be finite and >= 0, got {lambda_x}"
            )));
        }
        let dim = points.first().map_or(0, |p| p.len());
        for (i, x) in points.iter().enumerate() {
            if x.len() != dim {
                return Err(Error::data(
                    Some(i + 1),
                    format!("point has dimension {}, expected {dim}", x.len()),
                ));
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::data(Some(i + 1), "non-finite coordinate"));
            }
            let norm = x.norm();
            if norm > lambda_x * (1.0 + NORM_BOUND_SLACK) {
                return Err(Error::data(
                    Some(i + 1),
                    format!("point norm {norm} exceeds lambda_x = {lambda_x}"),
                ));
            }
        }
        if let Some(ys) = &outputs {
            if ys.len() != points.len() {
                return Err(Error::data(
                    None,
                    format!("{} outputs for {} points", ys.len(), points.len()),
                ));
            }
            if let Some((i, y)) = ys.iter().enumerate().find(|(_, y)| !(y.abs() <= 0.5)) {
                return Err(Error::data(Some(i + 1), format!("output {y} outside [-1/2, 1/2]")));
            }
        }
        Ok(Dataset {
            dim,
            points,
            outputs,
            lambda_x,
        })
    }

    /// Like [`Dataset::new`] with Λ_x set to the largest point norm.
    pub fn with_inferred_bound(points: Vec<DVector<f64>>, outputs: Option<Vec<f64>>) -> Result<Self> {
        let lambda_x = points.iter().map(|x| x.norm()).fold(0.0, f64::max);
        Dataset::new(points, outputs, lambda_x)
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lambda_x(&self) -> f64 {
        self.lambda_x
    }

    pub fn points(&self) -> &[DVector<f64>] {
        &self.points
    }

    pub fn outputs(&self) -> Option<&[f64]> {
        self.outputs.as_deref()
    }

    pub fn has_outputs(&self) -> bool {
        self.outputs.is_some()
    }

    /// Σ ‖x_i‖².
    pub fn sum_sq_norms(&self) -> f64 {
        self.points.iter().map(|x| x.norm_squared()).sum()
    }

    /// ‖X‖_F of the d×n data matrix.
    pub fn frobenius(&self) -> f64 {
        self.sum_sq_norms().sqrt()
    }

    /// The d×n data matrix with points as columns.
    pub fn matrix(&self) -> DMatrix<f64> {
        if self.points.is_empty() {
            return DMatrix::zeros(self.dim, 0);
        }
        DMatrix::from_columns(&self.points)
    }

    /// Copy with the rows reordered by `order` (a permutation of 0..n).
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.n() {
            return Err(Error::domain("permutation length differs from sample size"));
        }
        let mut seen = vec![false; self.n()];
        for &i in order {
            if i >= self.n() || std::mem::replace(&mut seen[i], true) {
                return Err(Error::domain("not a permutation"));
            }
        }
        Ok(Dataset {
            dim: self.dim,
            points: order.iter().map(|&i| self.points[i].clone()).collect(),
            outputs: self.outputs.as_ref().map(|ys| order.iter().map(|&i| ys[i]).collect()),
            lambda_x: self.lambda_x,
        })
    }

    /// Subset of rows, keeping Λ_x.
    pub fn select(&self, rows: &[usize]) -> Dataset {
        Dataset {
            dim: self.dim,
            points: rows.iter().map(|&i| self.points[i].clone()).collect(),
            outputs: self.outputs.as_ref().map(|ys| rows.iter().map(|&i| ys[i]).collect()),
            lambda_x: self.lambda_x,
        }
    }

    /// Same points with the outputs dropped.
    pub fn without_outputs(&self) -> Dataset {
        Dataset {
            outputs: None,
            ..self.clone()
        }
    }
}

#[derive(Serialize, Deserialize)]
struct RawDataset {
    points: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    outputs: Option<Vec<f64>>,
    lambda_x: f64,
}

impl TryFrom<RawDataset> for Dataset {
    type Error = Error;

    fn try_from(raw: RawDataset) -> Result<Self> {
        let points = raw.points.into_iter().map(DVector::from_vec).collect();
        Dataset::new(points, raw.outputs, raw.lambda_x)
    }
}

impl From<Dataset> for RawDataset {
    fn from(d: Dataset) -> Self {
        RawDataset {
            points: d.points.iter().map(|x| x.iter().copied().collect()).collect(),
            outputs: d.outputs,
            lambda_x: d.lambda_x,
        }
    }
}
