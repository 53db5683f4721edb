//! Empirical check of the certificates against held-out risk.
//!
//! Each trial draws a fresh training sample from a fixed synthetic ground truth,
//! fits a model in the configured class, computes its certificates and compares
//! them with the risk on `n_eval` fresh points. The held-out risk estimates the
//! true risk only up to O(M/√n_eval), so a certificate counts as violated when
//! held-out risk > total + M √(ln(2/δ) / 2 n_eval).
//!
//! Sub-seeds: the ground truth uses `[GROUND_TRUTH]` under the master seed and
//! trial t uses `[t, stage]` for each stage below.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::DVector;
use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Problem};
use super::synth::SyntheticSource;
use crate::bounds::{
    lemma1_bound, subspace_dims_admissible, thm1_bound, thm2_bound_with_policy, thm3_bound, thm4_bound, thm5_bound,
    BoundCertificate, MPolicy, TheoremTag,
};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::learners::{fit_kmeans, fit_ksubspaces, fit_switching_regression, resolve_dims, FitConfig};
use crate::linalg::{gaussian_vector, random_direction, random_orthonormal};
use crate::losses::{empirical_risk, ClusteringBound, SWITCHING_LOSS_BOUND};
use crate::lp::{LpConstraint, PExponent};
use crate::model::{complexity_vector, CenterModel, KernelComponent, KernelModel, MultiComponentModel, SubspaceModel};
use crate::rademacher::{mc_product_class, ProductClass, RademacherEstimate};
use crate::rng::{derive_seed, stream};

const GROUND_TRUTH: u64 = u64::MAX;
const STAGE_TRAIN: u64 = 1;
const STAGE_EVAL: u64 = 2;
const STAGE_FIT: u64 = 3;
const STAGE_RADEMACHER: u64 = 4;
const STAGE_PROBE: u64 = 5;

/// Relative slack when checking that a model lies in its class.
const IN_CLASS_TOL: f64 = 1e-9;

/// Anchors per component of the random kernel models used by the uniformity probe.
const PROBE_ANCHORS: usize = 10;

/// Everything a certificate needs beyond the model and sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifySettings {
    pub constraint: LpConstraint,
    pub delta: f64,
    /// Almost-sure bound on ‖X‖ for the data distribution.
    pub lambda_x: f64,
    pub m_policy: MPolicy,
    pub clustering_bound: ClusteringBound,
}

impl CertifySettings {
    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        CertifySettings {
            constraint: cfg.constraint,
            delta: cfg.experiment.delta,
            lambda_x: cfg.generator.lambda_x,
            m_policy: cfg.experiment.m_policy,
            clustering_bound: cfg.experiment.clustering_bound,
        }
    }

    /// Uniform bound on the loss of `problem`.
    pub fn loss_bound(&self, problem: Problem) -> f64 {
        match problem {
            Problem::Switching => SWITCHING_LOSS_BOUND,
            Problem::Clustering => self.clustering_bound.value(self.lambda_x, self.constraint.lambda),
            Problem::Subspace => self.lambda_x * self.lambda_x,
        }
    }
}

pub fn problem_of(model: &MultiComponentModel) -> Problem {
    match model {
        MultiComponentModel::Kernel(_) => Problem::Switching,
        MultiComponentModel::Centers(_) => Problem::Clustering,
        MultiComponentModel::Subspaces(_) => Problem::Subspace,
    }
}

/// Checks that `model` belongs to the class the certificates are stated for.
pub fn check_in_class(model: &MultiComponentModel, constraint: &LpConstraint) -> Result<()> {
    let inside = match model {
        MultiComponentModel::Subspaces(m) => subspace_dims_admissible(&m.dims(), constraint),
        _ => constraint.admits(&complexity_vector(model), IN_CLASS_TOL),
    };
    if inside {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "model lies outside the class ‖Ω(f)‖_{} <= {}",
            constraint.p, constraint.lambda
        )))
    }
}

/// All theorem certificates that apply to `model` on sample `data`. The first entry is
/// the one [`primary_theorem`] names.
pub fn certify_model(
    model: &MultiComponentModel,
    data: &Dataset,
    s: &CertifySettings,
) -> Result<Vec<BoundCertificate>> {
    check_in_class(model, &s.constraint)?;
    let emp = empirical_risk(model, data)?;
    let n = data.n();
    let c = model.len();
    let mut certs = Vec::new();
    match model {
        MultiComponentModel::Kernel(m) => {
            if c >= 2 {
                let trace = m.kernel().trace(data.points());
                certs.push(thm1_bound(emp, trace, &s.constraint, c, s.delta, n)?);
            }
        }
        MultiComponentModel::Centers(_) => {
            if c >= 2 {
                certs.push(thm2_bound_with_policy(
                    emp,
                    data.sum_sq_norms(),
                    &s.constraint,
                    c,
                    s.lambda_x,
                    s.delta,
                    n,
                    s.clustering_bound,
                )?);
            }
        }
        MultiComponentModel::Subspaces(m) => {
            let dims = m.dims();
            let frob = data.frobenius();
            if c >= 2 {
                certs.push(thm5_bound(
                    emp,
                    frob,
                    &s.constraint,
                    c,
                    s.lambda_x,
                    s.delta,
                    n,
                    s.m_policy,
                )?);
            } else {
                certs.push(thm3_bound(emp, frob, dims[0], s.lambda_x, s.delta, n)?);
            }
            certs.push(thm4_bound(emp, frob, &dims, s.lambda_x, s.delta, n)?);
        }
    }
    if certs.is_empty() {
        return Err(Error::domain(
            "the growth function α(C, p) needs C >= 2 components for this model family",
        ));
    }
    Ok(certs)
}

/// The theorem whose certificate leads [`certify_model`]'s output.
pub fn primary_theorem(problem: Problem, components: usize) -> TheoremTag {
    match problem {
        Problem::Switching => TheoremTag::Thm1,
        Problem::Clustering => TheoremTag::Thm2,
        Problem::Subspace if components >= 2 => TheoremTag::Thm5,
        Problem::Subspace => TheoremTag::Thm3,
    }
}

/// Fits the learner matching `problem`.
pub fn fit_model(
    problem: Problem,
    data: &Dataset,
    cfg: &FitConfig,
    kernel: &KernelSpec,
) -> Result<MultiComponentModel> {
    Ok(match problem {
        Problem::Switching => fit_switching_regression(data, kernel, cfg)?.into(),
        Problem::Clustering => fit_kmeans(data, cfg)?.into(),
        Problem::Subspace => fit_ksubspaces(data, cfg)?.into(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateOutcome {
    pub theorem: TheoremTag,
    pub total: f64,
    pub complexity_term: f64,
    pub confidence_term: f64,
    /// Held-out estimation slack added before declaring a violation.
    pub slack: f64,
    pub violated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub empirical_risk: f64,
    pub held_out_risk: f64,
    pub certificates: Vec<CertificateOutcome>,
    /// Monte-Carlo estimate of the decomposed loss-class complexity, if enabled.
    pub rademacher: Option<RademacherEstimate>,
    pub probe_models: usize,
    pub probe_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateSummary {
    pub theorem: TheoremTag,
    pub evaluations: usize,
    pub violations: usize,
    pub violation_frequency: f64,
    pub mean_total: f64,
    /// Smallest total + slack - held-out risk over trials.
    pub min_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub problem: Problem,
    pub delta: f64,
    pub trials: usize,
    pub mean_empirical_risk: f64,
    pub mean_held_out_risk: f64,
    pub certificates: Vec<CertificateSummary>,
    pub probe_evaluations: usize,
    pub probe_violations: usize,
    /// True when no certificate was violated.
    pub passed: bool,
    /// The resolved configuration, defaults included.
    pub config: ExperimentConfig,
    pub records: Vec<TrialRecord>,
}

impl VerificationReport {
    pub fn total_violations(&self) -> usize {
        self.certificates.iter().map(|c| c.violations).sum::<usize>() + self.probe_violations
    }

    pub fn summary(&self, theorem: TheoremTag) -> Option<&CertificateSummary> {
        self.certificates.iter().find(|c| c.theorem == theorem)
    }

    /// Canonical JSON form; contains no timestamps, so identical runs produce identical bytes.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// Flat per-trial table for plotting.
    pub fn to_csv(&self) -> String {
        let theorems: Vec<TheoremTag> = self.certificates.iter().map(|c| c.theorem).collect();
        let mut out = String::from("trial,empirical_risk,held_out_risk");
        for t in &theorems {
            let _ = write!(out, ",{0}_total,{0}_violated", t.as_str());
        }
        out.push_str(",rademacher_mean,rademacher_se,probe_models,probe_violations\n");
        for r in &self.records {
            let _ = write!(out, "{},{:?},{:?}", r.trial, r.empirical_risk, r.held_out_risk);
            for t in &theorems {
                match r.certificates.iter().find(|c| c.theorem == *t) {
                    Some(c) => {
                        let _ = write!(out, ",{:?},{}", c.total, u8::from(c.violated));
                    }
                    None => out.push_str(",,"),
                }
            }
            match &r.rademacher {
                Some(e) => {
                    let _ = write!(out, ",{:?},{:?}", e.mean, e.std_error);
                }
                None => out.push_str(",,"),
            }
            let _ = writeln!(out, ",{},{}", r.probe_models, r.probe_violations);
        }
        out
    }
}

/// Runs every trial of the experiment (in parallel) and assembles the report in trial order.
pub fn run_verification(config: &ExperimentConfig) -> Result<VerificationReport> {
    config.validate()?;
    let source = SyntheticSource::new(&config.generator, derive_seed(config.experiment.seed, &[GROUND_TRUTH]))?;
    let records = (0..config.experiment.trials)
        .into_par_iter()
        .map(|t| run_trial(config, &source, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(config, records))
}

fn outcome(cert: &BoundCertificate, held_out: f64, slack: f64) -> CertificateOutcome {
    CertificateOutcome {
        theorem: cert.theorem,
        total: cert.total,
        complexity_term: cert.complexity_term,
        confidence_term: cert.confidence_term,
        slack,
        violated: held_out > cert.total + slack,
    }
}

/// Runs trial `t` of `config`.
pub fn run_trial(config: &ExperimentConfig, source: &SyntheticSource, t: usize) -> Result<TrialRecord> {
    let exp = &config.experiment;
    let master = exp.seed;
    let t64 = t as u64;
    let problem = config.problem();
    let settings = CertifySettings::from_config(config);
    let kernel = config.kernel_or_default();
    let fit_cfg = config
        .fit
        .fit_config(config.constraint, derive_seed(master, &[t64, STAGE_FIT]));

    let train = source.sample(exp.n_train, derive_seed(master, &[t64, STAGE_TRAIN]))?;
    let eval = source.sample(exp.n_eval, derive_seed(master, &[t64, STAGE_EVAL]))?;
    let model = fit_model(problem, &train, &fit_cfg, &kernel)?;
    let m = settings.loss_bound(problem);
    let slack = m * ((2.0 / exp.delta).ln() / (2.0 * exp.n_eval as f64)).sqrt();

    let emp = empirical_risk(&model, &train)?;
    let held_out = empirical_risk(&model, &eval)?;
    let certs = certify_model(&model, &train, &settings)?;
    let mut outcomes: Vec<CertificateOutcome> = certs.iter().map(|c| outcome(c, held_out, slack)).collect();

    let rademacher = if exp.rademacher_draws > 0 {
        let dims = match &model {
            MultiComponentModel::Subspaces(s) => s.dims(),
            _ => Vec::new(),
        };
        let class = match problem {
            Problem::Switching => ProductClass::Switching { kernel: &kernel },
            Problem::Clustering => ProductClass::Clustering,
            Problem::Subspace => ProductClass::Subspaces { dims: &dims },
        };
        let est = mc_product_class(
            class,
            &train,
            &config.constraint,
            model.len(),
            exp.rademacher_draws,
            derive_seed(master, &[t64, STAGE_RADEMACHER]),
        )?;
        let lemma = lemma1_bound(emp, est.mean.max(0.0), m, exp.delta, train.n())?;
        outcomes.push(outcome(&lemma, held_out, slack));
        Some(est)
    } else {
        None
    };

    let mut probe_violations = 0;
    if exp.probe_models > 0 {
        let primary = primary_theorem(problem, model.len());
        let mut rng = stream(master, &[t64, STAGE_PROBE]);
        for _ in 0..exp.probe_models {
            let probe = random_in_class_model(problem, &train, &fit_cfg, &kernel, &mut rng)?;
            let certs = certify_model(&probe, &train, &settings)?;
            let cert = certs
                .iter()
                .find(|c| c.theorem == primary)
                .expect("primary certificate is always produced");
            if empirical_risk(&probe, &eval)? > cert.total + slack {
                probe_violations += 1;
            }
        }
    }

    Ok(TrialRecord {
        trial: t,
        empirical_risk: emp,
        held_out_risk: held_out,
        certificates: outcomes,
        rademacher,
        probe_models: exp.probe_models,
        probe_violations,
    })
}

/// Random point of the lp ball of radius Λ in the nonnegative orthant.
fn random_complexities(c: usize, constraint: &LpConstraint, rng: &mut ChaCha8Rng) -> Vec<f64> {
    // Exponential weights give a mix of sparse and balanced vectors.
    let raw: Vec<f64> = (0..c).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let norm = crate::lp::lp_norm(&raw, constraint.p).unwrap_or(0.0);
    let radius = constraint.lambda * rng.random::<f64>();
    if norm == 0.0 {
        return vec![0.0; c];
    }
    raw.into_iter().map(|w| w / norm * radius).collect()
}

/// A random model of the configured class, not fitted to anything.
pub fn random_in_class_model(
    problem: Problem,
    train: &Dataset,
    cfg: &FitConfig,
    kernel: &KernelSpec,
    rng: &mut ChaCha8Rng,
) -> Result<MultiComponentModel> {
    let c = cfg.components;
    let d = train.dim();
    Ok(match problem {
        Problem::Clustering => {
            let omega = random_complexities(c, &cfg.constraint, rng);
            CenterModel::new(omega.iter().map(|&w| random_direction(d, rng) * w).collect())?.into()
        }
        Problem::Switching => {
            let omega = random_complexities(c, &cfg.constraint, rng);
            let m = PROBE_ANCHORS.min(train.n());
            let comps = omega
                .iter()
                .map(|&w| {
                    let rows = sample_indices(rng, train.n(), m).into_vec();
                    let anchors: Vec<DVector<f64>> = rows.iter().map(|&i| train.points()[i].clone()).collect();
                    let mut comp = KernelComponent::new(kernel, anchors, gaussian_vector(m, rng))?;
                    if comp.norm() > 0.0 {
                        let f = w / comp.norm();
                        comp.scale(f);
                    }
                    Ok(comp)
                })
                .collect::<Result<Vec<_>>>()?;
            KernelModel::new(*kernel, comps)?.into()
        }
        Problem::Subspace => {
            let dims = random_admissible_dims(c, d, &cfg.constraint, rng).map_or_else(|| resolve_dims(cfg, d), Ok)?;
            SubspaceModel::new(dims.iter().map(|&k| random_orthonormal(d, k, rng)).collect())?.into()
        }
    })
}

fn random_admissible_dims(c: usize, d: usize, constraint: &LpConstraint, rng: &mut ChaCha8Rng) -> Option<Vec<usize>> {
    let cap = match constraint.p {
        PExponent::Infinity => (constraint.lambda * constraint.lambda).floor() as usize,
        PExponent::Finite(_) => d,
    }
    .min(d);
    if cap == 0 {
        return None;
    }
    (0..64)
        .map(|_| (0..c).map(|_| rng.random_range(1..=cap)).collect::<Vec<_>>())
        .find(|dims| subspace_dims_admissible(dims, constraint))
}

fn assemble(config: &ExperimentConfig, records: Vec<TrialRecord>) -> VerificationReport {
    let trials = records.len();
    let mean = |f: &dyn Fn(&TrialRecord) -> f64| records.iter().map(f).sum::<f64>() / trials as f64;
    let mut by_theorem: BTreeMap<TheoremTag, Vec<(&TrialRecord, &CertificateOutcome)>> = BTreeMap::new();
    for r in &records {
        for c in &r.certificates {
            by_theorem.entry(c.theorem).or_default().push((r, c));
        }
    }
    let certificates: Vec<CertificateSummary> = by_theorem
        .into_iter()
        .map(|(theorem, rows)| {
            let violations = rows.iter().filter(|(_, c)| c.violated).count();
            CertificateSummary {
                theorem,
                evaluations: rows.len(),
                violations,
                violation_frequency: violations as f64 / rows.len() as f64,
                mean_total: rows.iter().map(|(_, c)| c.total).sum::<f64>() / rows.len() as f64,
                min_margin: rows
                    .iter()
                    .map(|(r, c)| c.total + c.slack - r.held_out_risk)
                    .fold(f64::INFINITY, f64::min),
            }
        })
        .collect();
    let probe_evaluations = records.iter().map(|r| r.probe_models).sum();
    let probe_violations = records.iter().map(|r| r.probe_violations).sum();
    let passed = certificates.iter().all(|c| c.violations == 0) && probe_violations == 0;
    VerificationReport {
        problem: config.problem(),
        delta: config.experiment.delta,
        trials,
        mean_empirical_risk: mean(&|r| r.empirical_risk),
        mean_held_out_risk: mean(&|r| r.held_out_risk),
        certificates,
        probe_evaluations,
        probe_violations,
        passed,
        config: config.clone(),
        records,
    }
}
