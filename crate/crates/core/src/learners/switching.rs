use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use super::{best_of_restarts, largest_loss_points, radial_rescale, FitConfig, FitOutcome, Progress, RestartResult};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::losses::{argmin, clip_output, pairwise_sum};
use crate::model::{KernelComponent, KernelModel};

/// Switching kernel regression: assign points to the component with the smallest
/// clipped residual, refit each component by kernel ridge regression on its points.
pub fn fit_switching_regression(data: &Dataset, kernel: &KernelSpec, cfg: &FitConfig) -> Result<KernelModel> {
    fit_switching_regression_traced(data, kernel, cfg).map(|o| o.model)
}

pub fn fit_switching_regression_traced(
    data: &Dataset,
    kernel: &KernelSpec,
    cfg: &FitConfig,
) -> Result<FitOutcome<KernelModel>> {
    cfg.validate()?;
    kernel.validate()?;
    let ys = data
        .outputs()
        .ok_or_else(|| Error::data(None, "switching regression needs outputs"))?;
    if data.is_empty() {
        return Err(Error::data(None, "cannot fit an empty sample"));
    }
    let gram = kernel.gram(data.points());
    let problem = Problem {
        points: data.points(),
        ys,
        gram: &gram,
        kernel,
        cfg,
    };
    best_of_restarts(cfg, |rng| problem.run(rng))
}

struct Problem<'a> {
    points: &'a [DVector<f64>],
    ys: &'a [f64],
    gram: &'a DMatrix<f64>,
    kernel: &'a KernelSpec,
    cfg: &'a FitConfig,
}

/// Coefficients of one component over the training points it was fitted on.
#[derive(Clone)]
struct Fit {
    rows: Vec<usize>,
    coeffs: DVector<f64>,
}

impl Problem<'_> {
    /// Solves (K_S + ridge I) a = y_S.
    fn ridge_fit(&self, rows: &[usize]) -> Fit {
        if rows.is_empty() {
            return Fit {
                rows: Vec::new(),
                coeffs: DVector::zeros(0),
            };
        }
        let m = rows.len();
        let mut k = DMatrix::from_fn(m, m, |i, j| self.gram[(rows[i], rows[j])]);
        for i in 0..m {
            k[(i, i)] += self.cfg.ridge;
        }
        let y = DVector::from_iterator(m, rows.iter().map(|&i| self.ys[i]));
        let coeffs = match k.clone().cholesky() {
            Some(ch) => ch.solve(&y),
            None => k.svd(true, true).solve(&y, 1e-12).unwrap_or_else(|_| DVector::zeros(m)),
        };
        Fit {
            rows: rows.to_vec(),
            coeffs,
        }
    }

    /// f_k(x_i) for every training point.
    fn predictions(&self, fit: &Fit) -> Vec<f64> {
        (0..self.points.len())
            .map(|i| {
                fit.rows
                    .iter()
                    .zip(fit.coeffs.iter())
                    .map(|(&j, a)| a * self.gram[(i, j)])
                    .sum()
            })
            .collect()
    }

    fn rkhs_norm(&self, fit: &Fit) -> f64 {
        let mut q = 0.0;
        for (a, &i) in fit.coeffs.iter().zip(&fit.rows) {
            for (b, &j) in fit.coeffs.iter().zip(&fit.rows) {
                q += a * b * self.gram[(i, j)];
            }
        }
        q.max(0.0).sqrt()
    }

    fn to_model(&self, fits: &[Fit]) -> Result<KernelModel> {
        let comps = fits
            .iter()
            .map(|f| {
                let anchors = f.rows.iter().map(|&i| self.points[i].clone()).collect();
                KernelComponent::new(self.kernel, anchors, f.coeffs.clone())
            })
            .collect::<Result<Vec<_>>>()?;
        KernelModel::new(*self.kernel, comps)
    }

    fn run(&self, mut rng: ChaCha8Rng) -> Result<RestartResult<KernelModel>> {
        let n = self.points.len();
        let c = self.cfg.components;
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let mut labels = vec![0usize; n];
        for (pos, &i) in order.iter().enumerate() {
            labels[i] = pos % c;
        }
        let mut progress = Progress::new(self.cfg.tolerance);

        for _ in 0..self.cfg.max_iterations {
            let mut fits: Vec<Fit> = (0..c)
                .map(|k| {
                    let rows: Vec<usize> = (0..n).filter(|&i| labels[i] == k).collect();
                    self.ridge_fit(&rows)
                })
                .collect();
            let norms: Vec<f64> = fits.iter().map(|f| self.rkhs_norm(f)).collect();
            let factor = radial_rescale(&norms, &self.cfg.constraint);
            if factor < 1.0 {
                for f in &mut fits {
                    f.coeffs *= factor;
                }
            }

            let preds: Vec<Vec<f64>> = fits.iter().map(|f| self.predictions(f)).collect();
            let (new_labels, losses): (Vec<usize>, Vec<f64>) = (0..n)
                .map(|i| argmin(preds.iter().map(|p| (self.ys[i] - clip_output(p[i])).powi(2))))
                .unzip();
            let risk = pairwise_sum(&losses) / n as f64;
            let model = self.to_model(&fits)?;
            let stop = progress.record(&model, risk);

            labels = new_labels;
            let mut counts = vec![0usize; c];
            for &k in &labels {
                counts[k] += 1;
            }
            let empty: Vec<usize> = (0..c).filter(|&k| counts[k] == 0).collect();
            if !empty.is_empty() {
                // Only take points from components that keep at least one point.
                let mut taken = Vec::new();
                for &k in &empty {
                    for i in largest_loss_points(&losses, n, &taken) {
                        if counts[labels[i]] > 1 {
                            counts[labels[i]] -= 1;
                            labels[i] = k;
                            counts[k] = 1;
                            taken.push(i);
                            break;
                        }
                    }
                }
            }
            if stop {
                break;
            }
        }
        Ok(progress.finish())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::empirical_risk;
    use crate::lp::{LpConstraint, PExponent};
    use crate::model::{complexity_vector, MultiComponentModel};

    #[test]
    fn missing_outputs_rejected() {
        let data = Dataset::with_inferred_bound(vec![DVector::from_element(1, 0.5)], None).unwrap();
        let err = fit_switching_regression(&data, &KernelSpec::Linear, &FitConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Data { .. }));
    }

    #[test]
    fn interpolates_singletons() {
        let pts = vec![DVector::from_element(1, -0.5), DVector::from_element(1, 0.7)];
        let data = Dataset::with_inferred_bound(pts, Some(vec![0.3, -0.2])).unwrap();
        let cfg = FitConfig {
            components: 2,
            constraint: LpConstraint::new(PExponent::Infinity, 100.0).unwrap(),
            ridge: 1e-12,
            ..Default::default()
        };
        let m = fit_switching_regression(&data, &KernelSpec::GaussianRbf { gamma: 1.0 }, &cfg).unwrap();
        assert!(empirical_risk(&m.into(), &data).unwrap() < 1e-20);
    }

    #[test]
    fn budget_respected_and_risk_clipped() {
        let pts: Vec<_> = (0..30).map(|i| DVector::from_element(1, (i as f64) / 30.0)).collect();
        let ys: Vec<f64> = (0..30).map(|i| if i % 2 == 0 { 0.5 } else { -0.5 }).collect();
        let data = Dataset::with_inferred_bound(pts, Some(ys)).unwrap();
        let constraint = LpConstraint::new(PExponent::Finite(2.0), 0.3).unwrap();
        let cfg = FitConfig {
            components: 3,
            constraint,
            ..Default::default()
        };
        let out = fit_switching_regression_traced(&data, &KernelSpec::GaussianRbf { gamma: 4.0 }, &cfg).unwrap();
        let m: MultiComponentModel = out.model.into();
        assert!(complexity_vector(&m).lp_norm(constraint.p) <= 0.3 * (1.0 + 1e-9));
        assert!(out.empirical_risk <= 1.0);
        assert!((empirical_risk(&m, &data).unwrap() - out.empirical_risk).abs() < 1e-12);
    }
}
