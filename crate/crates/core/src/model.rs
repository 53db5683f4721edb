//! Multi-component models and their component complexities.
//!
//! Component ordering follows the decreasing-complexity convention: after
//! [`order_components`] the first component is the most complex one. This is
//! the order the product embedding needs, since the k largest complexities
//! must each dominate the k-th one to give ω(f̃_k)^p ≤ Λ^p / k. Some statements
//! of the ordered class display the chain ω(f̃_1) ≤ … ≤ ω(f̃_C), which is
//! inconsistent with that argument; it is not used here.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::lp::{ComplexityVector, LpConstraint};

/// Absolute tolerance for BᵀB = I and for cached RKHS norms.
pub const STRUCTURE_TOL: f64 = 1e-10;

/// Relative slack in the per-component embedding inequality, absorbing rounding of k^{-1/p}Λ.
pub const EMBEDDING_REL_TOL: f64 = 1e-12;

/// C codepoints in ℝ^d.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct CenterModel {
    centers: Vec<DVector<f64>>,
}

impl CenterModel {
    pub fn new(centers: Vec<DVector<f64>>) -> Result<Self> {
        let d = centers
            .first()
            .ok_or_else(|| Error::invariant("a model needs at least one component"))?
            .len();
        if let Some(c) = centers.iter().find(|c| c.len() != d) {
            return Err(Error::Dimension {
                expected: d,
                got: c.len(),
            });
        }
        if centers.iter().any(|c| c.iter().any(|v| !v.is_finite())) {
            return Err(Error::invariant("non-finite center coordinate"));
        }
        Ok(CenterModel { centers })
    }

    pub fn centers(&self) -> &[DVector<f64>] {
        &self.centers
    }

    pub fn dim(&self) -> usize {
        self.centers[0].len()
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub(crate) fn scale(&mut self, factor: f64) {
        for c in &mut self.centers {
            *c *= factor;
        }
    }
}

impl TryFrom<Vec<Vec<f64>>> for CenterModel {
    type Error = Error;
    fn try_from(raw: Vec<Vec<f64>>) -> Result<Self> {
        CenterModel::new(raw.into_iter().map(DVector::from_vec).collect())
    }
}

impl From<CenterModel> for Vec<Vec<f64>> {
    fn from(m: CenterModel) -> Self {
        m.centers.iter().map(|c| c.iter().copied().collect()).collect()
    }
}

/// C subspaces given by d×d_k bases with orthonormal columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<Vec<f64>>>", into = "Vec<Vec<Vec<f64>>>")]
pub struct SubspaceModel {
    bases: Vec<DMatrix<f64>>,
}

impl SubspaceModel {
    pub fn new(bases: Vec<DMatrix<f64>>) -> Result<Self> {
        let d = bases
            .first()
            .ok_or_else(|| Error::invariant("a model needs at least one component"))?
            .nrows();
        for (k, b) in bases.iter().enumerate() {
            if b.nrows() != d {
                return Err(Error::Dimension {
                    expected: d,
                    got: b.nrows(),
                });
            }
            if b.ncols() == 0 || b.ncols() > d {
                return Err(Error::invariant(format!(
                    "basis {k} has {} columns; need 1..={d}",
                    b.ncols()
                )));
            }
            let gap = orthonormality_gap(b);
            if !(gap <= STRUCTURE_TOL) {
                return Err(Error::invariant(format!(
                    "basis {k} is not orthonormal: max |BᵀB - I| = {gap:e}"
                )));
            }
        }
        Ok(SubspaceModel { bases })
    }

    pub fn bases(&self) -> &[DMatrix<f64>] {
        &self.bases
    }

    pub fn dims(&self) -> Vec<usize> {
        self.bases.iter().map(|b| b.ncols()).collect()
    }

    pub fn dim(&self) -> usize {
        self.bases[0].nrows()
    }

    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }
}

/// max_ij |(BᵀB - I)_ij|
pub fn orthonormality_gap(b: &DMatrix<f64>) -> f64 {
    let g = b.transpose() * b;
    let mut gap: f64 = 0.0;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            gap = gap.max((g[(i, j)] - target).abs());
        }
    }
    gap
}

impl TryFrom<Vec<Vec<Vec<f64>>>> for SubspaceModel {
    type Error = Error;
    fn try_from(raw: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let bases = raw
            .into_iter()
            .map(|rows| {
                let nrows = rows.len();
                let ncols = rows.first().map_or(0, |r| r.len());
                if rows.iter().any(|r| r.len() != ncols) {
                    return Err(Error::invariant("ragged basis matrix"));
                }
                Ok(DMatrix::from_row_iterator(nrows, ncols, rows.into_iter().flatten()))
            })
            .collect::<Result<Vec<_>>>()?;
        SubspaceModel::new(bases)
    }
}

impl From<SubspaceModel> for Vec<Vec<Vec<f64>>> {
    fn from(m: SubspaceModel) -> Self {
        m.bases
            .iter()
            .map(|b| b.row_iter().map(|r| r.iter().copied().collect()).collect())
            .collect()
    }
}

/// f(x) = Σ_j a_j K(anchor_j, x), with its RKHS norm √(aᵀ K_a a) cached.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelComponent {
    anchors: Vec<DVector<f64>>,
    coeffs: DVector<f64>,
    norm: f64,
}

impl KernelComponent {
    pub fn new(kernel: &KernelSpec, anchors: Vec<DVector<f64>>, coeffs: DVector<f64>) -> Result<Self> {
        if anchors.len() != coeffs.len() {
            return Err(Error::Dimension {
                expected: anchors.len(),
                got: coeffs.len(),
            });
        }
        if coeffs.iter().any(|a| !a.is_finite()) {
            return Err(Error::invariant("non-finite expansion coefficient"));
        }
        let norm = rkhs_norm(kernel, &anchors, &coeffs);
        Ok(KernelComponent { anchors, coeffs, norm })
    }

    /// The zero function.
    pub fn zero() -> Self {
        KernelComponent {
            anchors: Vec::new(),
            coeffs: DVector::zeros(0),
            norm: 0.0,
        }
    }

    /// Rebuilds a component from stored parts, checking the cached norm.
    pub fn from_parts(
        kernel: &KernelSpec,
        anchors: Vec<DVector<f64>>,
        coeffs: DVector<f64>,
        norm: f64,
    ) -> Result<Self> {
        let comp = KernelComponent::new(kernel, anchors, coeffs)?;
        if !((comp.norm - norm).abs() <= STRUCTURE_TOL) {
            return Err(Error::invariant(format!(
                "cached RKHS norm {norm} differs from recomputed {}",
                comp.norm
            )));
        }
        Ok(KernelComponent { norm, ..comp })
    }

    pub fn anchors(&self) -> &[DVector<f64>] {
        &self.anchors
    }

    pub fn coeffs(&self) -> &DVector<f64> {
        &self.coeffs
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn eval(&self, kernel: &KernelSpec, x: &DVector<f64>) -> f64 {
        self.anchors
            .iter()
            .zip(self.coeffs.iter())
            .map(|(a, c)| c * kernel.eval(a, x))
            .sum()
    }

    pub(crate) fn scale(&mut self, factor: f64) {
        self.coeffs *= factor;
        self.norm *= factor;
    }
}

fn rkhs_norm(kernel: &KernelSpec, anchors: &[DVector<f64>], coeffs: &DVector<f64>) -> f64 {
    if anchors.is_empty() {
        return 0.0;
    }
    let k = kernel.gram(anchors);
    // Rounding can push aᵀKa slightly below zero for PSD K.
    coeffs.dot(&(&k * coeffs)).max(0.0).sqrt()
}

/// C functions in the RKHS of one kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawKernelModel", into = "RawKernelModel")]
pub struct KernelModel {
    kernel: KernelSpec,
    components: Vec<KernelComponent>,
}

impl KernelModel {
    pub fn new(kernel: KernelSpec, components: Vec<KernelComponent>) -> Result<Self> {
        kernel.validate()?;
        if components.is_empty() {
            return Err(Error::invariant("a model needs at least one component"));
        }
        let dims: Vec<usize> = components
            .iter()
            .flat_map(|c| c.anchors.iter().map(|a| a.len()))
            .collect();
        if let Some(&d) = dims.first() {
            if let Some(&bad) = dims.iter().find(|&&e| e != d) {
                return Err(Error::Dimension { expected: d, got: bad });
            }
        }
        Ok(KernelModel { kernel, components })
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn components(&self) -> &[KernelComponent] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Raw outputs (f_1(x), …, f_C(x)).
    pub fn predict(&self, x: &DVector<f64>) -> Vec<f64> {
        self.components.iter().map(|c| c.eval(&self.kernel, x)).collect()
    }
}

#[derive(Serialize, Deserialize)]
struct RawKernelComponent {
    anchors: Vec<Vec<f64>>,
    coeffs: Vec<f64>,
    norm: f64,
}

#[derive(Serialize, Deserialize)]
struct RawKernelModel {
    kernel: KernelSpec,
    components: Vec<RawKernelComponent>,
}

impl TryFrom<RawKernelModel> for KernelModel {
    type Error = Error;
    fn try_from(raw: RawKernelModel) -> Result<Self> {
        let components = raw
            .components
            .into_iter()
            .map(|c| {
                KernelComponent::from_parts(
                    &raw.kernel,
                    c.anchors.into_iter().map(DVector::from_vec).collect(),
                    DVector::from_vec(c.coeffs),
                    c.norm,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        KernelModel::new(raw.kernel, components)
    }
}

impl From<KernelModel> for RawKernelModel {
    fn from(m: KernelModel) -> Self {
        RawKernelModel {
            kernel: m.kernel,
            components: m
                .components
                .into_iter()
                .map(|c| RawKernelComponent {
                    anchors: c.anchors.iter().map(|a| a.iter().copied().collect()).collect(),
                    coeffs: c.coeffs.iter().copied().collect(),
                    norm: c.norm,
                })
                .collect(),
        }
    }
}

/// Any of the three model families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "components", rename_all = "lowercase")]
pub enum MultiComponentModel {
    Centers(CenterModel),
    Subspaces(SubspaceModel),
    Kernel(KernelModel),
}

impl MultiComponentModel {
    /// Number of components C.
    pub fn len(&self) -> usize {
        match self {
            MultiComponentModel::Centers(m) => m.len(),
            MultiComponentModel::Subspaces(m) => m.len(),
            MultiComponentModel::Kernel(m) => m.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Reorders components so that component k of the result is component `order[k]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let c = self.len();
        let mut seen = vec![false; c];
        if order.len() != c || order.iter().any(|&i| i >= c || std::mem::replace(&mut seen[i], true)) {
            return Err(Error::domain("not a permutation of the components"));
        }
        Ok(match self {
            MultiComponentModel::Centers(m) => MultiComponentModel::Centers(CenterModel {
                centers: order.iter().map(|&i| m.centers[i].clone()).collect(),
            }),
            MultiComponentModel::Subspaces(m) => MultiComponentModel::Subspaces(SubspaceModel {
                bases: order.iter().map(|&i| m.bases[i].clone()).collect(),
            }),
            MultiComponentModel::Kernel(m) => MultiComponentModel::Kernel(KernelModel {
                kernel: m.kernel,
                components: order.iter().map(|&i| m.components[i].clone()).collect(),
            }),
        })
    }
}

impl From<CenterModel> for MultiComponentModel {
    fn from(m: CenterModel) -> Self {
        MultiComponentModel::Centers(m)
    }
}

impl From<SubspaceModel> for MultiComponentModel {
    fn from(m: SubspaceModel) -> Self {
        MultiComponentModel::Subspaces(m)
    }
}

impl From<KernelModel> for MultiComponentModel {
    fn from(m: KernelModel) -> Self {
        MultiComponentModel::Kernel(m)
    }
}

/// Ω(f): Euclidean norms of centers, RKHS norms of kernel components, √d_k for subspaces.
pub fn complexity_vector(model: &MultiComponentModel) -> ComplexityVector {
    let values = match model {
        MultiComponentModel::Centers(m) => m.centers.iter().map(|c| c.norm()).collect(),
        MultiComponentModel::Subspaces(m) => m.bases.iter().map(|b| (b.ncols() as f64).sqrt()).collect(),
        MultiComponentModel::Kernel(m) => m.components.iter().map(|c| c.norm).collect(),
    };
    ComplexityVector::new(values).expect("component complexities are nonnegative by construction")
}

/// Permutation sorting components by nonincreasing complexity; ties keep their original order.
pub fn ordering_permutation(omega: &ComplexityVector) -> Vec<usize> {
    let w = omega.values();
    let mut order: Vec<usize> = (0..w.len()).collect();
    order.sort_by(|&a, &b| w[b].total_cmp(&w[a]));
    order
}

/// The ordered version f̃ of a model (most complex component first).
pub fn order_components(model: &MultiComponentModel) -> MultiComponentModel {
    let order = ordering_permutation(&complexity_vector(model));
    model.permuted(&order).expect("ordering permutation is a permutation")
}

/// Whether the ordered model lies in the product of balls ω(f̃_k) ≤ k^{-1/p} Λ.
///
/// Models outside the constraint set return false.
pub fn check_embedding(model: &MultiComponentModel, constraint: &LpConstraint) -> bool {
    let omega = complexity_vector(model);
    embedding_holds(&omega, constraint)
}

/// [`check_embedding`] on a bare complexity vector.
pub fn embedding_holds(omega: &ComplexityVector, constraint: &LpConstraint) -> bool {
    if !constraint.admits(omega, EMBEDDING_REL_TOL) {
        return false;
    }
    let mut sorted = omega.values().to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    sorted
        .iter()
        .enumerate()
        .all(|(i, &w)| w <= constraint.component_radius(i + 1) * (1.0 + EMBEDDING_REL_TOL))
}
