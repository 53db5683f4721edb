//! Risk-bound certificates for multi-component learning.
//!
//! Models made of C components (codepoints, subspaces or kernel functions) are
//! scored by permutation-invariant losses. Classes constrain the vector of
//! component complexities in an lp (quasi-)norm, ‖Ω(f)‖_p ≤ Λ, which makes the
//! complexity term of the risk bounds grow like α(C, p) instead of linearly in C.
//!
//! The crate provides the losses, learners producing in-class models, Monte-Carlo
//! and closed-form Rademacher complexities, the certificates themselves and a
//! harness that checks the certificates against held-out risk.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alpha;
pub mod bounds;
pub mod dataset;
pub mod error;
pub mod harness;
pub mod kernel;
pub mod learners;
pub mod linalg;
pub mod losses;
pub mod lp;
pub mod model;
pub mod rademacher;
pub mod rng;

pub use alpha::{alpha, harmonic_p_sum};
pub use bounds::{BoundCertificate, TheoremTag};
pub use dataset::Dataset;
pub use error::{Error, Result};
pub use kernel::KernelSpec;
pub use lp::{lp_norm, ComplexityVector, LpConstraint, PExponent};
pub use model::{
    check_embedding, complexity_vector, order_components, CenterModel, KernelComponent, KernelModel,
    MultiComponentModel, SubspaceModel,
};
pub use rademacher::RademacherEstimate;
