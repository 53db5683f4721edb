//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Eigenpairs of a symmetric matrix sorted by decreasing eigenvalue.
pub fn sorted_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_columns(
        &order
            .iter()
            .map(|&i| eig.eigenvectors.column(i).into_owned())
            .collect::<Vec<_>>(),
    );
    (values, vectors)
}

/// Sum of the `k` largest eigenvalues of a symmetric matrix.
pub fn top_eigenvalue_sum(m: &DMatrix<f64>, k: usize) -> f64 {
    let mut values: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    values.sort_by(|a, b| b.total_cmp(a));
    values.iter().take(k).sum()
}

/// Orthonormal basis of the span of the `k` leading eigenvectors.
pub fn top_eigenvectors(m: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let (_, vectors) = sorted_eigen(m);
    reorthonormalize(&vectors.columns(0, k).into_owned())
}

/// Re-orthonormalizes columns by thin QR, removing eigensolver drift.
pub fn reorthonormalize(b: &DMatrix<f64>) -> DMatrix<f64> {
    b.clone().qr().q()
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

pub fn gaussian_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(d, |_, _| StandardNormal.sample(rng))
}

/// Uniformly random d×k matrix with orthonormal columns (QR of a Gaussian matrix).
pub fn random_orthonormal<R: Rng + ?Sized>(d: usize, k: usize, rng: &mut R) -> DMatrix<f64> {
    gaussian_matrix(d, k, rng).qr().q()
}

/// Uniform direction on the unit sphere of ℝ^d.
pub fn random_direction<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DVector<f64> {
    loop {
        let g = gaussian_vector(d, rng);
        let n = g.norm();
        if n > 1e-12 {
            return g / n;
        }
    }
}

/// Uniform point in the Euclidean ball of the given radius.
pub fn uniform_in_ball<R: Rng + ?Sized>(d: usize, radius: f64, rng: &mut R) -> DVector<f64> {
    let u: f64 = rng.random();
    random_direction(d, rng) * (radius * u.powf(1.0 / d as f64))
}

/// Symmetric PSD matrix M = Σ w_i x_i x_iᵀ.
pub fn weighted_scatter(points: &[DVector<f64>], weights: &[f64], d: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(d, d);
    for (x, &w) in points.iter().zip(weights) {
        m.ger(w, x, x, 1.0);
    }
    m
}
