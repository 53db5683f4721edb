//! Risk-bound certificates.
//!
//! Every certificate has the shape
//!
//! ```text
//! L(f) ≤ L̂_n(f) + complexity + 3 M √(ln(2/δ) / 2n)
//! ```
//!
//! holding with probability at least 1 - δ uniformly over the class. The
//! generic version takes a value of R̂_n for the loss class over the ordered
//! class; the theorem versions plug in closed-form complexity terms scaled by
//! α(C, p). The non-empirical variant 2R_n + M √(ln(1/δ)/2n) is not
//! certified because R_n cannot be observed from one sample.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::alpha::alpha;
use crate::error::{Error, Result};
use crate::losses::ClusteringBound;
use crate::lp::{LpConstraint, PExponent};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TheoremTag {
    /// Generic bound from an empirical Rademacher complexity value.
    Lemma1,
    /// Switching regression with RKHS components.
    Thm1,
    /// Center-based clustering.
    Thm2,
    /// A single subspace.
    Thm3,
    /// Several subspaces with fixed dimensions.
    Thm4,
    /// Several subspaces under Σ d_k^{p/2} ≤ Λ^p.
    Thm5,
}

impl TheoremTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            TheoremTag::Lemma1 => "lemma1",
            TheoremTag::Thm1 => "thm1",
            TheoremTag::Thm2 => "thm2",
            TheoremTag::Thm3 => "thm3",
            TheoremTag::Thm4 => "thm4",
            TheoremTag::Thm5 => "thm5",
        }
    }
}

/// Loss bound used in the confidence term of the subspace certificate under
/// Σ d_k^{p/2} ≤ Λ^p.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MPolicy {
    /// 3Λ_x, the constant as printed with that certificate.
    Paper,
    /// 3Λ_x², matching the subspace loss bound 0 ≤ ℓ ≤ Λ_x² used by the fixed-dimension
    /// certificates.
    #[default]
    Squared,
}

/// A computed high-confidence upper bound on the risk of one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCertificate {
    pub theorem: TheoremTag,
    pub empirical_risk: f64,
    pub complexity_term: f64,
    pub confidence_term: f64,
    pub total: f64,
    pub delta: f64,
    pub loss_bound_m: f64,
    pub n: usize,
    /// Inputs and policy flags the certificate was computed from.
    pub provenance: BTreeMap<String, String>,
}

impl BoundCertificate {
    fn compose(theorem: TheoremTag, empirical_risk: f64, complexity_term: f64, m: f64, delta: f64, n: usize) -> Self {
        let confidence_term = confidence_term(m, delta, n);
        let mut provenance = BTreeMap::new();
        provenance.insert("log".to_string(), "natural".to_string());
        BoundCertificate {
            theorem,
            empirical_risk,
            complexity_term,
            confidence_term,
            total: empirical_risk + complexity_term + confidence_term,
            delta,
            loss_bound_m: m,
            n,
            provenance,
        }
    }

    fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.provenance.insert(key.to_string(), value.to_string());
        self
    }

    /// Stable `key = value` text, one entry per line; provenance keys are prefixed
    /// with `input.` and sorted.
    pub fn to_kv_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "theorem = {}", self.theorem.as_str());
        let _ = writeln!(out, "empirical_risk = {:?}", self.empirical_risk);
        let _ = writeln!(out, "complexity_term = {:?}", self.complexity_term);
        let _ = writeln!(out, "confidence_term = {:?}", self.confidence_term);
        let _ = writeln!(out, "total = {:?}", self.total);
        let _ = writeln!(out, "delta = {:?}", self.delta);
        let _ = writeln!(out, "loss_bound_m = {:?}", self.loss_bound_m);
        let _ = writeln!(out, "n = {}", self.n);
        for (k, v) in &self.provenance {
            let _ = writeln!(out, "input.{k} = {v}");
        }
        out
    }
}

fn fmt_f(x: f64) -> String {
    format!("{x:?}")
}

/// 3 M √(ln(2/δ) / 2n)
pub fn confidence_term(m: f64, delta: f64, n: usize) -> f64 {
    3.0 * m * ((2.0 / delta).ln() / (2.0 * n as f64)).sqrt()
}

fn check_common(empirical_risk: f64, delta: f64, n: usize) -> Result<()> {
    if !(empirical_risk.is_finite() && empirical_risk >= 0.0) {
        return Err(Error::domain(format!(
            "empirical risk must be finite and >= 0, got {empirical_risk}"
        )));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    if n == 0 {
        return Err(Error::domain("sample size n must be >= 1"));
    }
    Ok(())
}

fn check_nonneg(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x >= 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be finite and >= 0, got {x}")))
    }
}

fn check_budget(constraint: &LpConstraint) -> Result<()> {
    constraint.p.validate()?;
    check_nonneg("lambda", constraint.lambda)
}

/// L̂ + 2R̂ + 3M √(ln(2/δ)/2n) for a given R̂_n of the loss class over the ordered class.
pub fn lemma1_bound(
    empirical_risk: f64,
    rademacher_hat: f64,
    m: f64,
    delta: f64,
    n: usize,
) -> Result<BoundCertificate> {
    check_common(empirical_risk, delta, n)?;
    check_nonneg("rademacher estimate", rademacher_hat)?;
    if !(m.is_finite() && m > 0.0) {
        return Err(Error::domain(format!("loss bound M must be > 0, got {m}")));
    }
    Ok(
        BoundCertificate::compose(TheoremTag::Lemma1, empirical_risk, 2.0 * rademacher_hat, m, delta, n)
            .with("rademacher_hat", fmt_f(rademacher_hat)),
    )
}

/// Switching regression: complexity 4 α(C,p) Λ √(Σ K(x_i,x_i)) / n, M = 1.
pub fn thm1_bound(
    empirical_risk: f64,
    kernel_trace: f64,
    constraint: &LpConstraint,
    components: usize,
    delta: f64,
    n: usize,
) -> Result<BoundCertificate> {
    check_common(empirical_risk, delta, n)?;
    check_nonneg("kernel trace", kernel_trace)?;
    check_budget(constraint)?;
    let a = alpha(components, constraint.p)?;
    let complexity = 4.0 * a * constraint.lambda * kernel_trace.sqrt() / n as f64;
    Ok(
        BoundCertificate::compose(TheoremTag::Thm1, empirical_risk, complexity, 1.0, delta, n)
            .with("kernel_trace", fmt_f(kernel_trace))
            .with("p", constraint.p)
            .with("lambda", fmt_f(constraint.lambda))
            .with("components", components)
            .with("alpha", fmt_f(a)),
    )
}

/// Clustering: complexity 2α(C,p)(2Λ √(Σ‖x_i‖²)/n + Λ²/√n), M = Λ_x² + Λ².
pub fn thm2_bound(
    empirical_risk: f64,
    sum_sq_norms: f64,
    constraint: &LpConstraint,
    components: usize,
    lambda_x: f64,
    delta: f64,
    n: usize,
) -> Result<BoundCertificate> {
    thm2_bound_with_policy(
        empirical_risk,
        sum_sq_norms,
        constraint,
        components,
        lambda_x,
        delta,
        n,
        ClusteringBound::Paper,
    )
}

/// [`thm2_bound`] with a choice of loss bound M for the confidence term.
#[allow(clippy::too_many_arguments)]
pub fn thm2_bound_with_policy(
    empirical_risk: f64,
    sum_sq_norms: f64,
    constraint: &LpConstraint,
    components: usize,
    lambda_x: f64,
    delta: f64,
    n: usize,
    policy: ClusteringBound,
) -> Result<BoundCertificate> {
    check_common(empirical_risk, delta, n)?;
    check_nonneg("sum of squared norms", sum_sq_norms)?;
    check_nonneg("lambda_x", lambda_x)?;
    check_budget(constraint)?;
    let a = alpha(components, constraint.p)?;
    let lambda = constraint.lambda;
    let nf = n as f64;
    let complexity = 2.0 * a * (2.0 * lambda * sum_sq_norms.sqrt() / nf + lambda * lambda / nf.sqrt());
    let m = policy.value(lambda_x, lambda);
    if m <= 0.0 {
        return Err(Error::domain("clustering loss bound must be > 0"));
    }
    let policy_name = match policy {
        ClusteringBound::Paper => "lambda_x^2+lambda^2",
        ClusteringBound::Conservative => "(lambda_x+lambda)^2",
    };
    Ok(
        BoundCertificate::compose(TheoremTag::Thm2, empirical_risk, complexity, m, delta, n)
            .with("sum_sq_norms", fmt_f(sum_sq_norms))
            .with("p", constraint.p)
            .with("lambda", fmt_f(lambda))
            .with("lambda_x", fmt_f(lambda_x))
            .with("components", components)
            .with("alpha", fmt_f(a))
            .with("m_policy", policy_name),
    )
}

fn check_lambda_x(lambda_x: f64) -> Result<()> {
    if lambda_x.is_finite() && lambda_x > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("lambda_x must be > 0, got {lambda_x}")))
    }
}

/// Single subspace of dimension d₁: complexity 2√d₁ ‖X‖_F / n, M = Λ_x².
pub fn thm3_bound(
    empirical_risk: f64,
    frobenius: f64,
    d1: usize,
    lambda_x: f64,
    delta: f64,
    n: usize,
) -> Result<BoundCertificate> {
    check_common(empirical_risk, delta, n)?;
    check_nonneg("frobenius norm", frobenius)?;
    check_lambda_x(lambda_x)?;
    if d1 == 0 {
        return Err(Error::domain("subspace dimension d1 must be >= 1"));
    }
    let complexity = 2.0 * (d1 as f64).sqrt() * frobenius / n as f64;
    Ok(BoundCertificate::compose(
        TheoremTag::Thm3,
        empirical_risk,
        complexity,
        lambda_x * lambda_x,
        delta,
        n,
    )
    .with("frobenius", fmt_f(frobenius))
    .with("d1", d1)
    .with("lambda_x", fmt_f(lambda_x)))
}

/// Fixed dimensions d_k: complexity 2 (Σ √d_k) ‖X‖_F / n, M = Λ_x².
pub fn thm4_bound(
    empirical_risk: f64,
    frobenius: f64,
    dims: &[usize],
    lambda_x: f64,
    delta: f64,
    n: usize,
) -> Result<BoundCertificate> {
    check_common(empirical_risk, delta, n)?;
    check_nonneg("frobenius norm", frobenius)?;
    check_lambda_x(lambda_x)?;
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::domain("dims must be nonempty with every d_k >= 1"));
    }
    let root_sum: f64 = dims.iter().map(|&d| (d as f64).sqrt()).sum();
    let complexity = 2.0 * root_sum * frobenius / n as f64;
    let dims_text = dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(",");
    Ok(BoundCertificate::compose(
        TheoremTag::Thm4,
        empirical_risk,
        complexity,
        lambda_x * lambda_x,
        delta,
        n,
    )
    .with("frobenius", fmt_f(frobenius))
    .with("dims", dims_text)
    .with("lambda_x", fmt_f(lambda_x)))
}

/// Whether Σ d_k^{p/2} ≤ Λ^p (max √d_k ≤ Λ for p = ∞), i.e. ‖(√d_k)‖_p ≤ Λ.
pub fn subspace_dims_admissible(dims: &[usize], constraint: &LpConstraint) -> bool {
    let roots: Vec<f64> = dims.iter().map(|&d| (d as f64).sqrt()).collect();
    match constraint.p {
        PExponent::Infinity => roots.iter().all(|&r| r <= constraint.lambda * (1.0 + 1e-12)),
        PExponent::Finite(p) => {
            let s: f64 = roots.iter().map(|r| r.powf(p)).sum();
            s <= constraint.lambda.powf(p) * (1.0 + 1e-12)
        }
    }
}

/// Subspaces under Σ d_k^{p/2} ≤ Λ^p: complexity 2 α(C,p) Λ ‖X‖_F / n; the confidence
/// term uses 3Λ_x or 3Λ_x² depending on `m_policy`.
#[allow(clippy::too_many_arguments)]
pub fn thm5_bound(
    empirical_risk: f64,
    frobenius: f64,
    constraint: &LpConstraint,
    components: usize,
    lambda_x: f64,
    delta: f64,
    n: usize,
    m_policy: MPolicy,
) -> Result<BoundCertificate> {
    check_common(empirical_risk, delta, n)?;
    check_nonneg("frobenius norm", frobenius)?;
    check_lambda_x(lambda_x)?;
    check_budget(constraint)?;
    let a = alpha(components, constraint.p)?;
    let complexity = 2.0 * a * constraint.lambda * frobenius / n as f64;
    let (m, policy, note) = match m_policy {
        MPolicy::Paper => (
            lambda_x,
            "paper",
            "confidence uses 3*lambda_x; the subspace loss is bounded by lambda_x^2",
        ),
        MPolicy::Squared => (
            lambda_x * lambda_x,
            "squared",
            "confidence uses 3*lambda_x^2 (loss bound); printed constant is 3*lambda_x",
        ),
    };
    Ok(
        BoundCertificate::compose(TheoremTag::Thm5, empirical_risk, complexity, m, delta, n)
            .with("frobenius", fmt_f(frobenius))
            .with("p", constraint.p)
            .with("lambda", fmt_f(constraint.lambda))
            .with("lambda_x", fmt_f(lambda_x))
            .with("components", components)
            .with("alpha", fmt_f(a))
            .with("m_policy", policy)
            .with("m_policy_note", note),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    const INF: PExponent = PExponent::Infinity;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn lemma1_hand_arithmetic() {
        let c = lemma1_bound(0.2, 0.05, 1.0, 0.05, 200).unwrap();
        let expected = 0.2 + 0.1 + 3.0 * (40f64.ln() / 400.0).sqrt();
        assert!(close(c.total, expected, 1e-15));
        assert!(close(c.total, 0.58810, 1e-5));
        assert_eq!(c.total, c.empirical_risk + c.complexity_term + c.confidence_term);

        let zero = lemma1_bound(0.3, 0.0, 2.0, 0.05, 50).unwrap();
        assert!(close(zero.total - 0.3, 6.0 * (40f64.ln() / 100.0).sqrt(), 1e-15));

        let a = lemma1_bound(0.0, 0.0, 1.0, 0.1, 100).unwrap();
        let b = lemma1_bound(0.0, 0.0, 1.0, 0.1, 200).unwrap();
        assert!(close(a.confidence_term / b.confidence_term, 2f64.sqrt(), 1e-14));
    }

    #[test]
    fn lemma1_domain_errors() {
        assert!(lemma1_bound(0.1, 0.0, 1.0, 0.0, 10).is_err());
        assert!(lemma1_bound(0.1, 0.0, 1.0, 1.0, 10).is_err());
        assert!(lemma1_bound(0.1, 0.0, 1.0, 0.5, 0).is_err());
        assert!(lemma1_bound(0.1, -0.1, 1.0, 0.5, 10).is_err());
        assert!(lemma1_bound(0.1, 0.0, 0.0, 0.5, 10).is_err());
    }

    #[test]
    fn thm1_hand_arithmetic() {
        let c = thm1_bound(0.0, 100.0, &LpConstraint::new(INF, 1.0).unwrap(), 2, 0.05, 100).unwrap();
        assert!(close(c.complexity_term, 0.8, 1e-15));
        assert!(close(c.total, 1.20744, 1e-5));

        let l1 = thm1_bound(
            0.0,
            7.0,
            &LpConstraint::new(PExponent::Finite(1.0), 1.0).unwrap(),
            8,
            0.05,
            30,
        )
        .unwrap();
        let li = thm1_bound(0.0, 7.0, &LpConstraint::new(INF, 1.0).unwrap(), 8, 0.05, 30).unwrap();
        assert!(close(
            l1.complexity_term / li.complexity_term,
            (1.0 + 8f64.ln()) / 8.0,
            1e-14
        ));
        assert!(close(l1.complexity_term / li.complexity_term, 0.3849, 1e-4));

        let zero = thm1_bound(0.1, 50.0, &LpConstraint::zero_budget(INF), 3, 0.05, 50).unwrap();
        assert_eq!(zero.total, 0.1 + zero.confidence_term);
    }

    #[test]
    fn thm2_hand_arithmetic() {
        let c = thm2_bound(0.0, 100.0, &LpConstraint::new(INF, 1.0).unwrap(), 2, 1.0, 0.05, 100).unwrap();
        assert!(close(c.complexity_term, 1.2, 1e-14));
        // 1.2 + 6 √(ln 40 / 200)
        assert!(close(c.total, 2.014861, 1e-6));
        assert_eq!(c.loss_bound_m, 2.0);
        let safe = thm2_bound_with_policy(
            0.0,
            100.0,
            &LpConstraint::new(INF, 1.0).unwrap(),
            2,
            1.0,
            0.05,
            100,
            ClusteringBound::Conservative,
        )
        .unwrap();
        assert_eq!(safe.loss_bound_m, 4.0);
        assert_eq!(safe.complexity_term, c.complexity_term);
        let z = thm2_bound(0.0, 100.0, &LpConstraint::zero_budget(INF), 2, 1.0, 0.05, 100).unwrap();
        assert_eq!(z.complexity_term, 0.0);
    }

    #[test]
    fn subspace_certificates() {
        let c = thm3_bound(0.0, 10.0, 2, 1.0, 0.05, 100).unwrap();
        assert!(close(c.total, 0.69028, 1e-5));
        assert!(thm3_bound(0.0, 10.0, 0, 1.0, 0.05, 100).is_err());

        let t4 = thm4_bound(0.1, 10.0, &[3], 1.5, 0.05, 100).unwrap();
        let t3 = thm3_bound(0.1, 10.0, 3, 1.5, 0.05, 100).unwrap();
        assert_eq!(t4.total, t3.total);
        let ones = thm4_bound(0.0, 10.0, &[1, 1, 1, 1], 1.0, 0.05, 100).unwrap();
        let four = thm4_bound(0.0, 10.0, &[4], 1.0, 0.05, 100).unwrap();
        assert!(close(ones.complexity_term / four.complexity_term, 2.0, 1e-15));
        let mixed = thm4_bound(0.0, 1.0, &[4, 1], 1.0, 0.05, 1).unwrap();
        assert!(close(mixed.complexity_term, 6.0, 1e-15));
    }

    #[test]
    fn thm5_hand_arithmetic_and_policies() {
        let c2 = LpConstraint::new(PExponent::Finite(2.0), 2f64.sqrt()).unwrap();
        assert!(subspace_dims_admissible(&[1, 1], &c2));
        assert!(!subspace_dims_admissible(&[2, 1], &c2));
        let c = thm5_bound(0.0, 10.0, &c2, 2, 1.0, 0.05, 100, MPolicy::Squared).unwrap();
        assert!(close(c.complexity_term, 0.8, 1e-14));
        assert!(close(c.total, 1.20744, 1e-5));
        let p = thm5_bound(0.0, 10.0, &c2, 2, 1.0, 0.05, 100, MPolicy::Paper).unwrap();
        assert_eq!(p.total, c.total);
        let p = thm5_bound(0.0, 10.0, &c2, 2, 2.0, 0.05, 100, MPolicy::Paper).unwrap();
        let s = thm5_bound(0.0, 10.0, &c2, 2, 2.0, 0.05, 100, MPolicy::Squared).unwrap();
        assert!(close(s.confidence_term, 2.0 * p.confidence_term, 1e-15));
        assert_eq!(s.provenance["m_policy"], "squared");
    }

    #[test]
    fn thm5_matches_thm4_for_equal_dims_at_infinity() {
        for d in 1..6usize {
            let dims = vec![d; 3];
            let c = LpConstraint::new(INF, (d as f64).sqrt()).unwrap();
            let t5 = thm5_bound(0.05, 4.0, &c, 3, 1.0, 0.05, 40, MPolicy::Squared).unwrap();
            let t4 = thm4_bound(0.05, 4.0, &dims, 1.0, 0.05, 40).unwrap();
            assert!(close(t5.total, t4.total, 1e-14));
        }
    }

    #[test]
    fn kv_text_is_stable() {
        let c = lemma1_bound(0.25, 0.125, 1.0, 0.5, 8).unwrap();
        let text = c.to_kv_text();
        assert!(text.starts_with("theorem = lemma1\nempirical_risk = 0.25\n"));
        assert!(text.contains("input.rademacher_hat = 0.125\n"));
        assert_eq!(text, c.clone().to_kv_text());
    }
}
