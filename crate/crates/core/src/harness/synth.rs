//! Seeded synthetic distributions with bounded support.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::config::{GeneratorSpec, Problem};
use crate::dataset::Dataset;
use crate::error::Result;
use crate::kernel::KernelSpec;
use crate::linalg::{random_direction, random_orthonormal, uniform_in_ball};
use crate::model::{CenterModel, KernelComponent, KernelModel, MultiComponentModel, SubspaceModel};
use crate::rng::stream;

/// Largest |f_k(x)| of the ground-truth regression functions over the input ball.
const SWITCHING_SIGNAL: f64 = 0.4;
/// Ground-truth centers are drawn within this fraction of the input ball.
const CENTER_RADIUS_FRACTION: f64 = 0.7;

/// Normal draw rejected outside ±3σ.
fn truncated_normal(sigma: f64, rng: &mut ChaCha8Rng) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    loop {
        let z: f64 = StandardNormal.sample(rng);
        if z.abs() <= 3.0 {
            return sigma * z;
        }
    }
}

fn truncated_normal_vector(d: usize, sigma: f64, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(d, |_, _| truncated_normal(sigma, rng))
}

/// A fixed ground truth from which samples are drawn.
#[derive(Debug, Clone)]
pub struct SyntheticSource {
    spec: GeneratorSpec,
    truth: Truth,
}

#[derive(Debug, Clone)]
enum Truth {
    Linear(Vec<DVector<f64>>),
    Centers(Vec<DVector<f64>>),
    Subspaces(Vec<DMatrix<f64>>),
}

impl SyntheticSource {
    /// Draws the ground-truth components from `seed`.
    pub fn new(spec: &GeneratorSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut rng = stream(seed, &[0]);
        let (d, c, lx) = (spec.dim, spec.components, spec.lambda_x);
        let truth = match spec.problem {
            Problem::Switching => Truth::Linear(
                (0..c)
                    .map(|_| {
                        let scale = SWITCHING_SIGNAL / lx * rng.random_range(0.5..=1.0);
                        random_direction(d, &mut rng) * scale
                    })
                    .collect(),
            ),
            Problem::Clustering => Truth::Centers(
                (0..c)
                    .map(|_| uniform_in_ball(d, CENTER_RADIUS_FRACTION * lx, &mut rng))
                    .collect(),
            ),
            Problem::Subspace => Truth::Subspaces(
                spec.truth_dims()
                    .into_iter()
                    .map(|k| random_orthonormal(d, k, &mut rng))
                    .collect(),
            ),
        };
        Ok(SyntheticSource {
            spec: spec.clone(),
            truth,
        })
    }

    pub fn spec(&self) -> &GeneratorSpec {
        &self.spec
    }

    /// Draws `n` independent points (with outputs for switching regression).
    pub fn sample(&self, n: usize, seed: u64) -> Result<Dataset> {
        let mut rng = stream(seed, &[1]);
        let (d, lx) = (self.spec.dim, self.spec.lambda_x);
        let mut points = Vec::with_capacity(n);
        let mut outputs = Vec::new();
        for _ in 0..n {
            match &self.truth {
                Truth::Linear(ws) => {
                    let x = uniform_in_ball(d, lx, &mut rng);
                    let w = &ws[rng.random_range(0..ws.len())];
                    let y = (w.dot(&x) + truncated_normal(self.spec.noise, &mut rng)).clamp(-0.5, 0.5);
                    points.push(x);
                    outputs.push(y);
                }
                Truth::Centers(cs) => {
                    let c = &cs[rng.random_range(0..cs.len())];
                    points.push(self.rejection(&mut rng, |rng| c + truncated_normal_vector(d, self.spec.spread, rng)));
                }
                Truth::Subspaces(bs) => {
                    let b = &bs[rng.random_range(0..bs.len())];
                    points.push(self.rejection(&mut rng, |rng| {
                        let coords = uniform_in_ball(b.ncols(), lx, rng);
                        b * coords + truncated_normal_vector(d, self.spec.noise, rng)
                    }));
                }
            }
        }
        let outputs = matches!(self.truth, Truth::Linear(_)).then_some(outputs);
        Dataset::new(points, outputs, lx)
    }

    fn rejection<F>(&self, rng: &mut ChaCha8Rng, mut draw: F) -> DVector<f64>
    where
        F: FnMut(&mut ChaCha8Rng) -> DVector<f64>,
    {
        loop {
            let x = draw(rng);
            if x.norm() <= self.spec.lambda_x {
                return x;
            }
        }
    }

    /// The generating components as a model: linear functions (linear kernel), the
    /// cluster centers or the subspace bases.
    pub fn ground_truth(&self) -> Result<MultiComponentModel> {
        Ok(match &self.truth {
            Truth::Linear(ws) => {
                let k = KernelSpec::Linear;
                let comps = ws
                    .iter()
                    .map(|w| KernelComponent::new(&k, vec![w.clone()], DVector::from_element(1, 1.0)))
                    .collect::<Result<Vec<_>>>()?;
                KernelModel::new(k, comps)?.into()
            }
            Truth::Centers(cs) => CenterModel::new(cs.clone())?.into(),
            Truth::Subspaces(bs) => SubspaceModel::new(bs.clone())?.into(),
        })
    }
}

/// `n` points from the distribution described by `spec`, ground truth and sample both
/// derived from `seed`.
pub fn generate_synthetic(spec: &GeneratorSpec, n: usize, seed: u64) -> Result<Dataset> {
    SyntheticSource::new(spec, seed)?.sample(n, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::empirical_risk;

    fn spec(problem: Problem) -> GeneratorSpec {
        GeneratorSpec {
            problem,
            dim: 3,
            components: 2,
            lambda_x: 1.5,
            ..Default::default()
        }
    }

    #[test]
    fn all_points_in_ball_and_outputs_in_range() {
        for problem in [Problem::Switching, Problem::Clustering, Problem::Subspace] {
            let data = generate_synthetic(&spec(problem), 500, 9).unwrap();
            assert_eq!(data.n(), 500);
            assert!(data.points().iter().all(|x| x.norm() <= 1.5));
            if let Some(ys) = data.outputs() {
                assert!(ys.iter().all(|y| y.abs() <= 0.5));
            }
            assert_eq!(data.has_outputs(), problem == Problem::Switching);
        }
    }

    #[test]
    fn noiseless_subspaces_fit_ground_truth() {
        let s = GeneratorSpec {
            noise: 0.0,
            subspace_dims: Some(vec![2, 1]),
            ..spec(Problem::Subspace)
        };
        let src = SyntheticSource::new(&s, 4).unwrap();
        let data = src.sample(300, 5).unwrap();
        assert!(empirical_risk(&src.ground_truth().unwrap(), &data).unwrap() < 1e-12);
    }

    #[test]
    fn seeded_and_reproducible() {
        let s = spec(Problem::Clustering);
        assert_eq!(
            generate_synthetic(&s, 50, 1).unwrap(),
            generate_synthetic(&s, 50, 1).unwrap()
        );
        assert_ne!(
            generate_synthetic(&s, 50, 1).unwrap(),
            generate_synthetic(&s, 50, 2).unwrap()
        );
    }

    #[test]
    fn infeasible_spec_rejected() {
        let s = GeneratorSpec {
            subspace_dims: Some(vec![4, 1]),
            ..spec(Problem::Subspace)
        };
        assert!(generate_synthetic(&s, 10, 0).is_err());
    }
}
