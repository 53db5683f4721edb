//! Alternating-minimization fitters that return in-class models.
//!
//! All three share the same outer loop: independent restarts seeded from
//! `(cfg.seed, restart)`, run in parallel, each returning the best iterate it
//! visited; the restart with the smallest empirical risk wins (lowest restart
//! index on ties). Iteration stops when the relative risk improvement drops below
//! `cfg.tolerance` or after `cfg.max_iterations` alternations.

mod kmeans;
mod ksubspaces;
mod switching;

pub use kmeans::{fit_kmeans, fit_kmeans_traced};
pub use ksubspaces::{fit_ksubspaces, fit_ksubspaces_traced, resolve_dims};
pub use switching::{fit_switching_regression, fit_switching_regression_traced};

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{LpConstraint, PExponent};
use crate::rng::stream;

/// How subspace dimensions are chosen.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DimsPolicy {
    /// One d_k per component.
    Explicit(Vec<usize>),
    /// Largest equal dimension d_k with C·d_k^{p/2} ≤ Λ^p, capped at d.
    #[default]
    #[serde(with = "budget_tag")]
    Budget,
}

mod budget_tag {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str("budget")
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        let s = String::deserialize(d)?;
        if s == "budget" {
            Ok(())
        } else {
            Err(serde::de::Error::custom(format!("unknown dims policy {s:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub components: usize,
    pub constraint: LpConstraint,
    pub max_iterations: usize,
    pub seed: u64,
    pub restarts: usize,
    /// Stop when (previous - current) / previous risk falls below this.
    pub tolerance: f64,
    /// Ridge parameter of the kernel regressions.
    pub ridge: f64,
    pub dims: DimsPolicy,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            components: 2,
            constraint: LpConstraint {
                p: PExponent::Infinity,
                lambda: 1.0,
            },
            max_iterations: 100,
            seed: 0,
            restarts: 8,
            tolerance: 1e-9,
            ridge: 1e-3,
            dims: DimsPolicy::Budget,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        LpConstraint::new(self.constraint.p, self.constraint.lambda)?;
        if self.components == 0 {
            return Err(Error::config("component count must be >= 1"));
        }
        if self.max_iterations == 0 {
            return Err(Error::config("max_iterations must be >= 1"));
        }
        if self.restarts == 0 {
            return Err(Error::config("restarts must be >= 1"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::config("tolerance must be > 0"));
        }
        if !(self.ridge >= 0.0 && self.ridge.is_finite()) {
            return Err(Error::config("ridge must be finite and >= 0"));
        }
        Ok(())
    }
}

/// A fitted model with the risk trace of every restart.
#[derive(Debug, Clone)]
pub struct FitOutcome<M> {
    pub model: M,
    pub empirical_risk: f64,
    pub best_restart: usize,
    /// Empirical risk after each assignment step, per restart.
    pub traces: Vec<Vec<f64>>,
}

struct RestartResult<M> {
    model: M,
    risk: f64,
    trace: Vec<f64>,
}

fn best_of_restarts<M, F>(cfg: &FitConfig, run: F) -> Result<FitOutcome<M>>
where
    M: Send,
    F: Fn(ChaCha8Rng) -> Result<RestartResult<M>> + Sync,
{
    let results = (0..cfg.restarts as u64)
        .into_par_iter()
        .map(|r| run(stream(cfg.seed, &[r])))
        .collect::<Result<Vec<_>>>()?;
    let best_restart = results
        .iter()
        .enumerate()
        .fold(0, |best, (i, r)| if r.risk < results[best].risk { i } else { best });
    let mut traces = Vec::with_capacity(results.len());
    let mut best = None;
    for (i, r) in results.into_iter().enumerate() {
        traces.push(r.trace);
        if i == best_restart {
            best = Some((r.model, r.risk));
        }
    }
    let (model, empirical_risk) = best.expect("restarts >= 1");
    Ok(FitOutcome {
        model,
        empirical_risk,
        best_restart,
        traces,
    })
}

/// Factor Λ / ‖Ω‖_p when the constraint is violated, else 1.
fn radial_rescale(omega: &[f64], constraint: &LpConstraint) -> f64 {
    let norm = crate::lp::lp_norm(omega, constraint.p).unwrap_or(0.0);
    if norm > constraint.lambda {
        constraint.lambda / norm
    } else {
        1.0
    }
}

/// Tracks the best iterate and the stopping rule of one restart.
struct Progress<M> {
    best: Option<(M, f64)>,
    trace: Vec<f64>,
    tolerance: f64,
}

impl<M: Clone> Progress<M> {
    fn new(tolerance: f64) -> Self {
        Progress {
            best: None,
            trace: Vec::new(),
            tolerance,
        }
    }

    /// Records an iterate; returns true when iteration should stop.
    fn record(&mut self, model: &M, risk: f64) -> bool {
        let prev = self.trace.last().copied();
        self.trace.push(risk);
        if self.best.as_ref().is_none_or(|(_, r)| risk < *r) {
            self.best = Some((model.clone(), risk));
        }
        match prev {
            None => risk == 0.0,
            Some(prev) => prev <= 0.0 || (prev - risk) / prev < self.tolerance,
        }
    }

    fn finish(self) -> RestartResult<M> {
        let (model, risk) = self.best.expect("at least one iterate recorded");
        RestartResult {
            model,
            risk,
            trace: self.trace,
        }
    }
}

/// Indices of the `count` largest losses, excluding `taken`, largest first
/// (lowest index on ties).
fn largest_loss_points(losses: &[f64], count: usize, taken: &[usize]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..losses.len()).filter(|i| !taken.contains(i)).collect();
    idx.sort_by(|&a, &b| losses[b].total_cmp(&losses[a]).then(a.cmp(&b)));
    idx.truncate(count);
    idx
}
