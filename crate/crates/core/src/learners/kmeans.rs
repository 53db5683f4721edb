use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{best_of_restarts, largest_loss_points, radial_rescale, FitConfig, FitOutcome, Progress, RestartResult};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::losses::{argmin, center_distances, pairwise_sum};
use crate::model::CenterModel;

/// Lloyd's algorithm under ‖(‖f_k‖)_k‖_p ≤ Λ, best of `cfg.restarts`.
pub fn fit_kmeans(data: &Dataset, cfg: &FitConfig) -> Result<CenterModel> {
    fit_kmeans_traced(data, cfg).map(|o| o.model)
}

pub fn fit_kmeans_traced(data: &Dataset, cfg: &FitConfig) -> Result<FitOutcome<CenterModel>> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::data(None, "cannot fit an empty sample"));
    }
    if cfg.components > data.n() {
        return Err(Error::domain(format!(
            "{} components for {} points",
            cfg.components,
            data.n()
        )));
    }
    best_of_restarts(cfg, |rng| lloyd(data.points(), cfg, rng))
}

/// k-means++ seeding: first center uniform, then proportional to squared distance.
fn seed_centers(points: &[DVector<f64>], c: usize, rng: &mut ChaCha8Rng) -> Vec<DVector<f64>> {
    let mut centers = vec![points[rng.random_range(0..points.len())].clone()];
    let mut d2: Vec<f64> = points.iter().map(|x| (x - &centers[0]).norm_squared()).collect();
    while centers.len() < c {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut chosen = d2.len() - 1;
            for (i, w) in d2.iter().enumerate() {
                if u < *w {
                    chosen = i;
                    break;
                }
                u -= w;
            }
            chosen
        } else {
            rng.random_range(0..points.len())
        };
        let next = points[pick].clone();
        for (d, x) in d2.iter_mut().zip(points) {
            *d = d.min((x - &next).norm_squared());
        }
        centers.push(next);
    }
    centers
}

fn enforce(model: &mut CenterModel, cfg: &FitConfig) {
    let norms: Vec<f64> = model.centers().iter().map(|c| c.norm()).collect();
    let factor = radial_rescale(&norms, &cfg.constraint);
    if factor < 1.0 {
        model.scale(factor);
    }
}

fn lloyd(points: &[DVector<f64>], cfg: &FitConfig, mut rng: ChaCha8Rng) -> Result<RestartResult<CenterModel>> {
    let c = cfg.components;
    let d = points[0].len();
    let mut model = CenterModel::new(seed_centers(points, c, &mut rng))?;
    enforce(&mut model, cfg);
    let mut progress = Progress::new(cfg.tolerance);

    for _ in 0..cfg.max_iterations {
        let (labels, losses): (Vec<usize>, Vec<f64>) =
            points.iter().map(|x| argmin(center_distances(&model, x))).unzip();
        let risk = pairwise_sum(&losses) / points.len() as f64;
        if progress.record(&model, risk) {
            break;
        }

        let mut sums = vec![DVector::<f64>::zeros(d); c];
        let mut counts = vec![0usize; c];
        for (x, &k) in points.iter().zip(&labels) {
            sums[k] += x;
            counts[k] += 1;
        }
        let empty: Vec<usize> = (0..c).filter(|&k| counts[k] == 0).collect();
        let reseeds = largest_loss_points(&losses, empty.len(), &[]);
        let mut centers: Vec<DVector<f64>> = sums
            .into_iter()
            .zip(&counts)
            .map(|(s, &n)| if n > 0 { s / n as f64 } else { s })
            .collect();
        for (&k, &i) in empty.iter().zip(&reseeds) {
            centers[k] = points[i].clone();
        }
        model = CenterModel::new(centers)?;
        enforce(&mut model, cfg);
    }
    let losses: Vec<f64> = points.iter().map(|x| argmin(center_distances(&model, x)).1).collect();
    progress.record(&model, pairwise_sum(&losses) / points.len() as f64);
    Ok(progress.finish())
}
