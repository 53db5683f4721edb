use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;

use super::{best_of_restarts, largest_loss_points, DimsPolicy, FitConfig, FitOutcome, Progress, RestartResult};
use crate::bounds::subspace_dims_admissible;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{gaussian_matrix, random_orthonormal, top_eigenvectors, weighted_scatter};
use crate::losses::{argmin, pairwise_sum, subspace_residuals};
use crate::lp::PExponent;
use crate::model::SubspaceModel;

/// Dimensions d_k for ambient dimension `d`, validated against Σ d_k^{p/2} ≤ Λ^p.
pub fn resolve_dims(cfg: &FitConfig, d: usize) -> Result<Vec<usize>> {
    let c = cfg.components;
    let dims = match &cfg.dims {
        DimsPolicy::Explicit(dims) => {
            if dims.len() != c {
                return Err(Error::config(format!("{} dims for {c} components", dims.len())));
            }
            if let Some(&bad) = dims.iter().find(|&&k| k == 0 || k > d) {
                return Err(Error::domain(format!("subspace dimension {bad} outside 1..={d}")));
            }
            dims.clone()
        }
        DimsPolicy::Budget => {
            let lambda = cfg.constraint.lambda;
            let raw = match cfg.constraint.p {
                PExponent::Infinity => lambda * lambda,
                PExponent::Finite(p) => (lambda.powf(p) / c as f64).powf(2.0 / p),
            };
            let mut k = (raw.floor() as usize).min(d);
            // Guard against floor() landing one above the exact value.
            while k > 0 && !subspace_dims_admissible(&vec![k; c], &cfg.constraint) {
                k -= 1;
            }
            vec![k; c]
        }
    };
    if dims.contains(&0) || !subspace_dims_admissible(&dims, &cfg.constraint) {
        return Err(Error::domain(format!(
            "dims {dims:?} infeasible under the budget (p = {}, lambda = {})",
            cfg.constraint.p, cfg.constraint.lambda
        )));
    }
    Ok(dims)
}

/// K-subspaces: assign each point to the nearest subspace, refit each basis by PCA.
pub fn fit_ksubspaces(data: &Dataset, cfg: &FitConfig) -> Result<SubspaceModel> {
    fit_ksubspaces_traced(data, cfg).map(|o| o.model)
}

pub fn fit_ksubspaces_traced(data: &Dataset, cfg: &FitConfig) -> Result<FitOutcome<SubspaceModel>> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::data(None, "cannot fit an empty sample"));
    }
    let dims = resolve_dims(cfg, data.dim())?;
    best_of_restarts(cfg, |rng| alternate(data.points(), &dims, cfg, rng))
}

/// Basis of dimension k whose first direction is x.
fn basis_through(x: &DVector<f64>, k: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let d = x.len();
    if x.norm() == 0.0 {
        return random_orthonormal(d, k, rng);
    }
    let mut m = gaussian_matrix(d, k, rng);
    m.set_column(0, &(x / x.norm()));
    m.qr().q()
}

fn alternate(
    points: &[DVector<f64>],
    dims: &[usize],
    cfg: &FitConfig,
    mut rng: ChaCha8Rng,
) -> Result<RestartResult<SubspaceModel>> {
    let d = points[0].len();
    let c = dims.len();
    let mut model = SubspaceModel::new(dims.iter().map(|&k| random_orthonormal(d, k, &mut rng)).collect())?;
    let mut progress = Progress::new(cfg.tolerance);

    for _ in 0..cfg.max_iterations {
        let (labels, losses): (Vec<usize>, Vec<f64>) =
            points.iter().map(|x| argmin(subspace_residuals(&model, x))).unzip();
        let risk = pairwise_sum(&losses) / points.len() as f64;
        if progress.record(&model, risk) {
            break;
        }

        let mut members: Vec<Vec<DVector<f64>>> = vec![Vec::new(); c];
        for (x, &k) in points.iter().zip(&labels) {
            members[k].push(x.clone());
        }
        let empty: Vec<usize> = (0..c).filter(|&k| members[k].is_empty()).collect();
        let reseeds = largest_loss_points(&losses, empty.len(), &[]);
        let mut bases = Vec::with_capacity(c);
        for (k, pts) in members.iter().enumerate() {
            if pts.is_empty() {
                let slot = empty.iter().position(|&e| e == k).expect("k is empty");
                bases.push(basis_through(&points[reseeds[slot]], dims[k], &mut rng));
            } else {
                let scatter = weighted_scatter(pts, &vec![1.0; pts.len()], d);
                bases.push(top_eigenvectors(&scatter, dims[k]));
            }
        }
        model = SubspaceModel::new(bases)?;
    }
    let losses: Vec<f64> = points.iter().map(|x| argmin(subspace_residuals(&model, x)).1).collect();
    progress.record(&model, pairwise_sum(&losses) / points.len() as f64);
    Ok(progress.finish())
}
