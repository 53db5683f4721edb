//! Permutation-invariant losses and (empirical) risk.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::model::{CenterModel, KernelModel, MultiComponentModel, SubspaceModel};

/// Uniform bound of the clipped switching loss.
pub const SWITCHING_LOSS_BOUND: f64 = 1.0;

/// A pointwise loss together with the uniform bound M of its loss class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossValue {
    pub value: f64,
    pub bound_m: f64,
}

impl LossValue {
    pub fn within_bound(&self) -> bool {
        self.value >= 0.0 && self.value <= self.bound_m
    }
}

/// Which uniform bound to use for the clustering loss over ‖x‖ ≤ Λ_x, ‖f_k‖ ≤ Λ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClusteringBound {
    /// Λ_x² + Λ², the constant stated with the clustering certificate. It can be exceeded
    /// when x and f_k point in opposite directions.
    #[default]
    Paper,
    /// (Λ_x + Λ)², which always holds.
    Conservative,
}

impl ClusteringBound {
    pub fn value(self, lambda_x: f64, lambda: f64) -> f64 {
        match self {
            ClusteringBound::Paper => lambda_x * lambda_x + lambda * lambda,
            ClusteringBound::Conservative => (lambda_x + lambda).powi(2),
        }
    }
}

/// Clips a model output into the output range [-1/2, 1/2].
pub fn clip_output(v: f64) -> f64 {
    v.clamp(-0.5, 0.5)
}

/// Index and value of the smallest entry; the lowest index wins ties.
pub(crate) fn argmin(values: impl IntoIterator<Item = f64>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (k, v) in values.into_iter().enumerate() {
        if v < best.1 {
            best = (k, v);
        }
    }
    best
}

/// Per-component clipped squared residuals (y - clip(f_k(x)))².
pub fn switching_residuals(model: &KernelModel, x: &DVector<f64>, y: f64) -> Vec<f64> {
    model
        .predict(x)
        .into_iter()
        .map(|f| (y - clip_output(f)).powi(2))
        .collect()
}

/// min_k (y - clip(f_k(x)))²; bounded by 1 for y in [-1/2, 1/2].
pub fn switching_loss(model: &KernelModel, x: &DVector<f64>, y: f64) -> Result<LossValue> {
    if !(y.abs() <= 0.5) {
        return Err(Error::domain(format!("output {y} outside [-1/2, 1/2]")));
    }
    check_kernel_dim(model, x)?;
    let (_, value) = argmin(switching_residuals(model, x, y));
    Ok(LossValue {
        value,
        bound_m: SWITCHING_LOSS_BOUND,
    })
}

fn check_kernel_dim(model: &KernelModel, x: &DVector<f64>) -> Result<()> {
    let anchor_dim = model
        .components()
        .iter()
        .find_map(|c| c.anchors().first())
        .map(|a| a.len());
    match anchor_dim {
        Some(d) if d != x.len() => Err(Error::Dimension {
            expected: d,
            got: x.len(),
        }),
        _ => Ok(()),
    }
}

/// Squared distances ‖x - f_k‖² to every center.
pub fn center_distances(model: &CenterModel, x: &DVector<f64>) -> Vec<f64> {
    model.centers().iter().map(|c| (x - c).norm_squared()).collect()
}

/// The distortion min_k ‖x - f_k‖², reported against the caller's bound `bound_m`
/// (see [`ClusteringBound`]).
pub fn clustering_loss(model: &CenterModel, x: &DVector<f64>, bound_m: f64) -> Result<LossValue> {
    if x.len() != model.dim() {
        return Err(Error::Dimension {
            expected: model.dim(),
            got: x.len(),
        });
    }
    let (_, value) = argmin(center_distances(model, x));
    Ok(LossValue { value, bound_m })
}

/// Projection residuals ‖B_k B_kᵀ x - x‖² for every subspace.
pub fn subspace_residuals(model: &SubspaceModel, x: &DVector<f64>) -> Vec<f64> {
    model
        .bases()
        .iter()
        .map(|b| {
            let coords = b.tr_mul(x);
            (b * coords - x).norm_squared()
        })
        .collect()
}

/// min_k ‖B_k B_kᵀ x - x‖², with M = Λ_x².
pub fn subspace_loss(model: &SubspaceModel, x: &DVector<f64>, lambda_x: f64) -> Result<LossValue> {
    if x.len() != model.dim() {
        return Err(Error::Dimension {
            expected: model.dim(),
            got: x.len(),
        });
    }
    let (_, value) = argmin(subspace_residuals(model, x));
    Ok(LossValue {
        value,
        bound_m: lambda_x * lambda_x,
    })
}

/// ‖x‖² - max_k ‖B_kᵀ x‖², algebraically equal to [`subspace_loss`].
pub fn subspace_loss_via_energy(model: &SubspaceModel, x: &DVector<f64>) -> f64 {
    let captured = model
        .bases()
        .iter()
        .map(|b| b.tr_mul(x).norm_squared())
        .fold(f64::NEG_INFINITY, f64::max);
    x.norm_squared() - captured
}

/// Pointwise losses of `model` on every sample point, in sample order.
pub fn pointwise_losses(model: &MultiComponentModel, data: &Dataset) -> Result<Vec<f64>> {
    check_pairing(model, data)?;
    let pts = data.points();
    match model {
        MultiComponentModel::Kernel(m) => {
            let ys = data.outputs().expect("checked by check_pairing");
            pts.iter()
                .zip(ys)
                .map(|(x, &y)| switching_loss(m, x, y).map(|l| l.value))
                .collect()
        }
        MultiComponentModel::Centers(m) => pts
            .iter()
            .map(|x| clustering_loss(m, x, f64::INFINITY).map(|l| l.value))
            .collect(),
        MultiComponentModel::Subspaces(m) => pts
            .iter()
            .map(|x| subspace_loss(m, x, data.lambda_x()).map(|l| l.value))
            .collect(),
    }
}

fn check_pairing(model: &MultiComponentModel, data: &Dataset) -> Result<()> {
    let is_kernel = matches!(model, MultiComponentModel::Kernel(_));
    match (is_kernel, data.has_outputs()) {
        (true, false) => Err(Error::data(None, "switching regression needs outputs")),
        (false, true) => Err(Error::data(
            None,
            "dataset has outputs but the model's loss takes inputs only",
        )),
        _ => Ok(()),
    }
}

/// L̂_n(f) = (1/n) Σ ℓ(f, z_i).
pub fn empirical_risk(model: &MultiComponentModel, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::data(None, "empirical risk of an empty sample"));
    }
    let losses = pointwise_losses(model, data)?;
    Ok(pairwise_sum(&losses) / losses.len() as f64)
}

/// Pairwise (cascade) summation with a fixed split, so results do not depend on scheduling.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 16;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}
