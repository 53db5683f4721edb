use multibound::linalg::{random_direction, random_orthonormal, uniform_in_ball};
use multibound::rademacher::{
    cluster_component_sup, cluster_objective, component_bound_table, mc_product_class, mc_rademacher_cluster_component,
    mc_rademacher_rkhs_ball, mc_rademacher_subspace, subspace_objective, subspace_sup, ComponentSetting, ProductClass,
};
use multibound::{harmonic_p_sum, Dataset, KernelSpec, LpConstraint, PExponent};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn ball_data(n: usize, d: usize, seed: u64) -> Dataset {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    Dataset::new((0..n).map(|_| uniform_in_ball(d, 1.0, &mut r)).collect(), None, 1.0).unwrap()
}

fn signs(n: usize, r: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| if r.random::<bool>() { 1.0 } else { -1.0 }).collect()
}

#[test]
fn rkhs_single_point_is_exact() {
    let e = mc_rademacher_rkhs_ball(&DMatrix::from_element(1, 1, 1.0), 2.0, 64, 5).unwrap();
    assert_eq!(e.mean, 2.0);
    assert_eq!(e.std_error, 0.0);
    assert_eq!(e.closed_form_bound, 2.0);
}

#[test]
fn subspace_single_point_enumeration() {
    let pts = vec![DVector::from_row_slice(&[1.0, 0.0])];
    let plus = subspace_sup(&pts, &[1.0], 1);
    let minus = subspace_sup(&pts, &[-1.0], 1);
    assert!((plus - 1.0).abs() < 1e-15 && minus.abs() < 1e-15);
    assert_eq!((plus + minus) / 2.0, 0.5);
    let data = Dataset::new(pts, None, 1.0).unwrap();
    let e = mc_rademacher_subspace(&data, 1, 4_000, 1).unwrap();
    assert!((e.mean - 0.5).abs() < 4.0 * e.std_error.max(1e-3));
}

#[test]
fn cluster_single_point_enumeration() {
    // σ = +1: sup_{‖f‖≤1} 2 f₁ - ‖f‖² = 1 at f = x. σ = -1: sup of ‖f‖² - 2 f₁ = 3 at f = -x.
    let pts = vec![DVector::from_row_slice(&[1.0, 0.0])];
    assert!((cluster_component_sup(&pts, &[1.0], 1.0) - 1.0).abs() < 1e-15);
    assert!((cluster_component_sup(&pts, &[-1.0], 1.0) - 3.0).abs() < 1e-15);
}

#[test]
fn full_dimension_subspace_is_centered() {
    let data = ball_data(20, 3, 9);
    let few = mc_rademacher_subspace(&data, 3, 200, 2).unwrap();
    let many = mc_rademacher_subspace(&data, 3, 20_000, 2).unwrap();
    assert!(few.mean.abs() < 4.0 * few.std_error);
    assert!(many.mean.abs() < 4.0 * many.std_error);
    assert!(many.std_error < few.std_error / 5.0);
}

#[test]
fn same_seed_same_estimate() {
    let data = ball_data(15, 4, 3);
    let gram = KernelSpec::Linear.gram(data.points());
    assert_eq!(
        mc_rademacher_rkhs_ball(&gram, 1.0, 300, 11).unwrap(),
        mc_rademacher_rkhs_ball(&gram, 1.0, 300, 11).unwrap()
    );
    assert_eq!(
        mc_rademacher_cluster_component(&data, 0.5, 300, 11).unwrap(),
        mc_rademacher_cluster_component(&data, 0.5, 300, 11).unwrap()
    );
    let k = LpConstraint::new(PExponent::Finite(2.0), 1.5).unwrap();
    let a = mc_product_class(ProductClass::Subspaces { dims: &[2, 1] }, &data, &k, 2, 300, 4).unwrap();
    let b = mc_product_class(ProductClass::Subspaces { dims: &[2, 1] }, &data, &k, 2, 300, 4).unwrap();
    assert_eq!(a, b);
}

#[test]
fn radii_and_rkhs_table_identity() {
    let k = LpConstraint::new(PExponent::Finite(2.0), 4.0).unwrap();
    let t = component_bound_table(
        &k,
        4,
        ComponentSetting::Rkhs {
            kernel_trace: 25.0,
            n: 10,
        },
    )
    .unwrap();
    let expected = [4.0, 4.0 / 2f64.sqrt(), 4.0 / 3f64.sqrt(), 2.0];
    for (r, e) in t.radii.iter().zip(expected) {
        assert!((r - e).abs() < 1e-14);
    }
    let identity = 4.0 * 5.0 / 10.0 * harmonic_p_sum(4, k.p).unwrap();
    assert!((t.total - identity).abs() < 1e-13);
    assert!((t.relaxed_total - identity).abs() < 1e-13);
}

#[test]
fn product_class_means_respect_closed_forms() {
    let data = ball_data(30, 4, 21);
    let k = LpConstraint::new(PExponent::Finite(1.0), 2.0).unwrap();
    let kernel = KernelSpec::GaussianRbf { gamma: 0.5 };
    for class in [
        ProductClass::Switching { kernel: &kernel },
        ProductClass::Clustering,
        ProductClass::Subspaces { dims: &[1, 1, 1] },
    ] {
        let e = mc_product_class(class, &data, &k, 3, 1_000, 8).unwrap();
        assert!(e.consistent_with_bound(3.0), "{e:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn cluster_sup_dominates_feasible_codepoints(n in 1usize..30, d in 1usize..6, r in 0.01f64..3.0, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<_> = (0..n).map(|_| uniform_in_ball(d, 1.0, &mut rng)).collect();
        let s = signs(n, &mut rng);
        let sup = cluster_component_sup(&pts, &s, r);
        for _ in 0..1_000 {
            let f = random_direction(d, &mut rng) * (r * rng.random::<f64>().sqrt());
            prop_assert!(cluster_objective(&pts, &s, &f) <= sup + 1e-12);
        }
    }

    #[test]
    fn subspace_sup_dominates_random_bases(n in 1usize..30, d in 1usize..8, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<_> = (0..n).map(|_| uniform_in_ball(d, 1.0, &mut rng)).collect();
        let s = signs(n, &mut rng);
        let dim = rng.random_range(1..=d);
        let sup = subspace_sup(&pts, &s, dim);
        for _ in 0..1_000 {
            let b = random_orthonormal(d, dim, &mut rng);
            prop_assert!(subspace_objective(&pts, &s, &b) <= sup + 1e-12);
        }
    }
}
