//! Empirical Rademacher complexities of the component classes.
//!
//! Each estimator draws sign vectors σ and evaluates the exact supremum of
//! (1/n) Σ σ_i g(z_i) over the class for that draw:
//!
//! * RKHS ball of radius r: (r/n) √(σᵀKσ), by the reproducing property.
//! * Cluster component {‖f‖ ≤ r} with g = 2⟨x, f⟩ - ‖f‖²: with v = Σ σ_i x_i and
//!   s = Σ σ_i, the optimum is f = ρ v/‖v‖ where ρ = r if s ≤ 0 and
//!   ρ = min(r, ‖v‖/s) otherwise.
//! * Rank-k projections with g = ‖P x‖²: the sum of the k largest eigenvalues of
//!   Σ σ_i x_i x_iᵀ, divided by n.
//!
//! Draw j uses the sign stream keyed by `(seed, j)`, so estimates do not depend on
//! how draws are scheduled.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alpha::harmonic_p_sum;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::linalg::{top_eigenvalue_sum, weighted_scatter};
use crate::losses::pairwise_sum;
use crate::lp::LpConstraint;
use crate::rng::rademacher_signs;

/// Default number of sign draws.
pub const DEFAULT_DRAWS: usize = 2_000;

/// Smallest eigenvalue tolerated in a Gram matrix before it is rejected as not PSD.
pub const PSD_TOL: f64 = -1e-8;

/// Monte-Carlo estimate of an empirical Rademacher complexity with its closed-form bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RademacherEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub draws: usize,
    pub closed_form_bound: f64,
}

impl RademacherEstimate {
    /// mean ≤ closed_form_bound + k·std_error
    pub fn consistent_with_bound(&self, k: f64) -> bool {
        self.mean <= self.closed_form_bound + k * self.std_error
    }
}

/// Mean and standard error of `per_draw` over `draws` sign vectors of length n.
fn monte_carlo<F>(n: usize, draws: usize, seed: u64, per_draw: F) -> Result<(f64, f64)>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if draws == 0 {
        return Err(Error::domain("at least one Rademacher draw is required"));
    }
    let values: Vec<f64> = (0..draws as u64)
        .into_par_iter()
        .map(|j| per_draw(&rademacher_signs(seed, j, n)))
        .collect();
    Ok(mean_and_se(&values))
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    let mean = pairwise_sum(values) / m;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let dev: Vec<f64> = values.iter().map(|v| (v - mean).powi(2)).collect();
    let var = pairwise_sum(&dev) / (m - 1.0);
    (mean, (var / m).sqrt())
}

fn check_radius(radius: f64) -> Result<()> {
    if radius.is_finite() && radius >= 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("radius must be finite and >= 0, got {radius}")))
    }
}

/// Checks that `gram` is square, symmetric and PSD up to [`PSD_TOL`].
pub fn validate_gram(gram: &DMatrix<f64>) -> Result<()> {
    if !gram.is_square() {
        return Err(Error::domain("Gram matrix must be square"));
    }
    let scale = gram.amax().max(1.0);
    if (gram - gram.transpose()).amax() > 1e-12 * scale {
        return Err(Error::domain("Gram matrix is not symmetric"));
    }
    if gram.nrows() > 0 {
        let min_eig = gram.clone().symmetric_eigenvalues().min();
        if min_eig < PSD_TOL {
            return Err(Error::domain(format!(
                "Gram matrix is not PSD (smallest eigenvalue {min_eig:e})"
            )));
        }
    }
    Ok(())
}

/// sup_{‖f‖ ≤ r} (1/n) Σ σ_i f(x_i) = (r/n) √(σᵀKσ).
pub fn rkhs_ball_sup(gram: &DMatrix<f64>, sigma: &[f64], radius: f64) -> f64 {
    let s = DVector::from_column_slice(sigma);
    let q = s.dot(&(gram * &s)).max(0.0);
    radius * q.sqrt() / sigma.len() as f64
}

/// Estimate for the RKHS ball of the given radius; closed form r √(Tr K) / n.
pub fn mc_rademacher_rkhs_ball(
    gram: &DMatrix<f64>,
    radius: f64,
    draws: usize,
    seed: u64,
) -> Result<RademacherEstimate> {
    validate_gram(gram)?;
    check_radius(radius)?;
    let n = gram.nrows();
    if n == 0 {
        return Err(Error::domain("empty Gram matrix"));
    }
    let (mean, std_error) = monte_carlo(n, draws, seed, |s| rkhs_ball_sup(gram, s, radius))?;
    Ok(RademacherEstimate {
        mean,
        std_error,
        draws,
        closed_form_bound: radius * gram.trace().max(0.0).sqrt() / n as f64,
    })
}

/// (1/n) Σ σ_i (2⟨x_i, f⟩ - ‖f‖²) for a given codepoint f.
pub fn cluster_objective(points: &[DVector<f64>], sigma: &[f64], f: &DVector<f64>) -> f64 {
    let f2 = f.norm_squared();
    let terms: Vec<f64> = points
        .iter()
        .zip(sigma)
        .map(|(x, s)| s * (2.0 * x.dot(f) - f2))
        .collect();
    pairwise_sum(&terms) / points.len() as f64
}

/// Signed sums v = Σ σ_i x_i and s = Σ σ_i.
pub fn signed_sums(points: &[DVector<f64>], sigma: &[f64]) -> (DVector<f64>, f64) {
    let d = points.first().map_or(0, |x| x.len());
    let mut v = DVector::zeros(d);
    for (x, s) in points.iter().zip(sigma) {
        v.axpy(*s, x, 1.0);
    }
    (v, sigma.iter().sum())
}

/// Optimal norm ρ of the maximizing codepoint, see the module docs.
pub fn cluster_optimal_radius(v_norm: f64, s: f64, radius: f64) -> f64 {
    if s <= 0.0 {
        radius
    } else {
        radius.min(v_norm / s)
    }
}

/// sup_{‖f‖ ≤ r} of [`cluster_objective`], attained at f = ρ v/‖v‖.
pub fn cluster_component_sup(points: &[DVector<f64>], sigma: &[f64], radius: f64) -> f64 {
    let (v, s) = signed_sums(points, sigma);
    let vn = v.norm();
    let rho = cluster_optimal_radius(vn, s, radius);
    (2.0 * rho * vn - s * rho * rho) / points.len() as f64
}

/// Estimate for one cluster component ball; closed form 2r √(Σ‖x_i‖²)/n + r²/√n.
pub fn mc_rademacher_cluster_component(
    data: &Dataset,
    radius: f64,
    draws: usize,
    seed: u64,
) -> Result<RademacherEstimate> {
    check_radius(radius)?;
    if data.is_empty() {
        return Err(Error::data(None, "Rademacher estimate of an empty sample"));
    }
    let pts = data.points();
    let (mean, std_error) = monte_carlo(pts.len(), draws, seed, |s| cluster_component_sup(pts, s, radius))?;
    Ok(RademacherEstimate {
        mean,
        std_error,
        draws,
        closed_form_bound: cluster_closed_form(radius, data.sum_sq_norms(), pts.len()),
    })
}

fn cluster_closed_form(radius: f64, sum_sq: f64, n: usize) -> f64 {
    let n = n as f64;
    2.0 * radius * sum_sq.sqrt() / n + radius * radius / n.sqrt()
}

/// (1/n) Tr(B Bᵀ Σ σ_i x_i x_iᵀ) for a given orthonormal basis.
pub fn subspace_objective(points: &[DVector<f64>], sigma: &[f64], basis: &DMatrix<f64>) -> f64 {
    let terms: Vec<f64> = points
        .iter()
        .zip(sigma)
        .map(|(x, s)| s * basis.tr_mul(x).norm_squared())
        .collect();
    pairwise_sum(&terms) / points.len() as f64
}

/// Supremum of [`subspace_objective`] over rank-`dim` projections.
pub fn subspace_sup(points: &[DVector<f64>], sigma: &[f64], dim: usize) -> f64 {
    let d = points.first().map_or(0, |x| x.len());
    let m = weighted_scatter(points, sigma, d);
    top_eigenvalue_sum(&m, dim) / points.len() as f64
}

/// Estimate for rank-`dim` projections; closed form √dim ‖X‖_F / n.
pub fn mc_rademacher_subspace(data: &Dataset, dim: usize, draws: usize, seed: u64) -> Result<RademacherEstimate> {
    if dim == 0 || dim > data.dim() {
        return Err(Error::domain(format!(
            "subspace dimension must be in 1..={}, got {dim}",
            data.dim()
        )));
    }
    if data.is_empty() {
        return Err(Error::data(None, "Rademacher estimate of an empty sample"));
    }
    let pts = data.points();
    let (mean, std_error) = monte_carlo(pts.len(), draws, seed, |s| subspace_sup(pts, s, dim))?;
    Ok(RademacherEstimate {
        mean,
        std_error,
        draws,
        closed_form_bound: (dim as f64).sqrt() * data.frobenius() / pts.len() as f64,
    })
}

/// Component class family together with the data summary its closed form needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "setting", rename_all = "lowercase")]
pub enum ComponentSetting {
    /// RKHS balls; `kernel_trace` = Σ K(x_i, x_i).
    Rkhs { kernel_trace: f64, n: usize },
    /// Cluster codepoint balls; `sum_sq_norms` = Σ ‖x_i‖².
    Cluster { sum_sq_norms: f64, n: usize },
    /// Subspaces with √d_k ≤ k^{-1/p} Λ; `frobenius` = ‖X‖_F.
    Subspace { frobenius: f64, n: usize },
}

impl ComponentSetting {
    pub fn n(&self) -> usize {
        match *self {
            ComponentSetting::Rkhs { n, .. }
            | ComponentSetting::Cluster { n, .. }
            | ComponentSetting::Subspace { n, .. } => n,
        }
    }
}

/// Per-component radii and Rademacher bounds of the product embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentBoundTable {
    /// k^{-1/p} Λ for k = 1..C.
    pub radii: Vec<f64>,
    /// Closed-form bound on the k-th component class complexity.
    pub per_component: Vec<f64>,
    pub total: f64,
    /// The k-independent factor times Σ k^{-1/p}; equals `total` except in the cluster
    /// setting, where the r_k² terms are relaxed to r_k Λ.
    pub relaxed_total: f64,
}

/// Radii k^{-1/p} Λ and per-component closed-form bounds for C components.
pub fn component_bound_table(
    constraint: &LpConstraint,
    components: usize,
    setting: ComponentSetting,
) -> Result<ComponentBoundTable> {
    let n = setting.n();
    if n == 0 {
        return Err(Error::domain("sample size must be >= 1"));
    }
    let nf = n as f64;
    let radii: Vec<f64> = (1..=components).map(|k| constraint.component_radius(k)).collect();
    let harmonic = harmonic_p_sum(components, constraint.p)?;
    let lambda = constraint.lambda;
    let (per_component, factor): (Vec<f64>, f64) = match setting {
        ComponentSetting::Rkhs { kernel_trace, .. } => {
            let f = kernel_trace.max(0.0).sqrt() / nf;
            (radii.iter().map(|r| r * f).collect(), lambda * f)
        }
        ComponentSetting::Cluster { sum_sq_norms, .. } => (
            radii.iter().map(|&r| cluster_closed_form(r, sum_sq_norms, n)).collect(),
            cluster_closed_form(lambda, sum_sq_norms, n),
        ),
        ComponentSetting::Subspace { frobenius, .. } => {
            let f = frobenius / nf;
            (radii.iter().map(|r| r * f).collect(), lambda * f)
        }
    };
    let total = per_component.iter().sum();
    Ok(ComponentBoundTable {
        radii,
        per_component,
        total,
        relaxed_total: factor * harmonic,
    })
}

/// Loss-class family whose product-embedding complexity [`mc_product_class`] estimates.
#[derive(Debug, Clone, PartialEq)]
pub enum ProductClass<'a> {
    /// Switching regression; the loss complexity is at most twice the sum of RKHS ball terms.
    Switching { kernel: &'a KernelSpec },
    /// Center-based clustering.
    Clustering,
    /// Subspace clustering with the given fixed dimensions.
    Subspaces { dims: &'a [usize] },
}

/// Monte-Carlo estimate of the decomposition upper bound on R̂_n of the loss class
/// over the product embedding, summing exact per-component suprema draw by draw.
///
/// The returned `closed_form_bound` is the matching sum of per-component closed forms.
pub fn mc_product_class(
    class: ProductClass<'_>,
    data: &Dataset,
    constraint: &LpConstraint,
    components: usize,
    draws: usize,
    seed: u64,
) -> Result<RademacherEstimate> {
    if data.is_empty() {
        return Err(Error::data(None, "Rademacher estimate of an empty sample"));
    }
    let pts = data.points();
    let n = pts.len();
    match class {
        ProductClass::Switching { kernel } => {
            let gram = kernel.gram(pts);
            validate_gram(&gram)?;
            let radius_sum: f64 = (1..=components).map(|k| constraint.component_radius(k)).sum();
            let (mean, std_error) = monte_carlo(n, draws, seed, |s| 2.0 * rkhs_ball_sup(&gram, s, radius_sum))?;
            let table = component_bound_table(
                constraint,
                components,
                ComponentSetting::Rkhs {
                    kernel_trace: gram.trace(),
                    n,
                },
            )?;
            Ok(RademacherEstimate {
                mean,
                std_error,
                draws,
                closed_form_bound: 2.0 * table.total,
            })
        }
        ProductClass::Clustering => {
            let radii: Vec<f64> = (1..=components).map(|k| constraint.component_radius(k)).collect();
            let (mean, std_error) = monte_carlo(n, draws, seed, |s| {
                radii.iter().map(|&r| cluster_component_sup(pts, s, r)).sum()
            })?;
            let table = component_bound_table(
                constraint,
                components,
                ComponentSetting::Cluster {
                    sum_sq_norms: data.sum_sq_norms(),
                    n,
                },
            )?;
            Ok(RademacherEstimate {
                mean,
                std_error,
                draws,
                closed_form_bound: table.total,
            })
        }
        ProductClass::Subspaces { dims } => {
            if dims.iter().any(|&k| k == 0 || k > data.dim()) {
                return Err(Error::domain("subspace dimensions must lie in 1..=d"));
            }
            let d = data.dim();
            let (mean, std_error) = monte_carlo(n, draws, seed, |s| {
                // One eigendecomposition serves every component.
                let m = weighted_scatter(pts, s, d);
                let mut eig: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
                eig.sort_by(|a, b| b.total_cmp(a));
                dims.iter().map(|&k| eig.iter().take(k).sum::<f64>() / n as f64).sum()
            })?;
            let frob = data.frobenius();
            Ok(RademacherEstimate {
                mean,
                std_error,
                draws,
                closed_form_bound: dims.iter().map(|&k| (k as f64).sqrt()).sum::<f64>() * frob / n as f64,
            })
        }
    }
}
