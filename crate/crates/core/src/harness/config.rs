use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bounds::MPolicy;
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::learners::{DimsPolicy, FitConfig};
use crate::losses::ClusteringBound;
use crate::lp::{LpConstraint, PExponent};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Problem {
    Switching,
    Clustering,
    Subspace,
}

impl std::fmt::Display for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Problem::Switching => "switching",
            Problem::Clustering => "clustering",
            Problem::Subspace => "subspace",
        })
    }
}

/// Synthetic data distribution. Every draw satisfies ‖x‖ ≤ `lambda_x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorSpec {
    pub problem: Problem,
    /// Ambient dimension d.
    pub dim: usize,
    /// Number of ground-truth components.
    pub components: usize,
    pub lambda_x: f64,
    /// Standard deviation of the (truncated) output or ambient noise.
    pub noise: f64,
    /// Standard deviation of each cluster around its center.
    pub spread: f64,
    /// Dimensions of the ground-truth subspaces; `None` means all ones.
    pub subspace_dims: Option<Vec<usize>>,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        GeneratorSpec {
            problem: Problem::Clustering,
            dim: 2,
            components: 2,
            lambda_x: 1.0,
            noise: 0.05,
            spread: 0.15,
            subspace_dims: None,
        }
    }
}

impl GeneratorSpec {
    pub fn truth_dims(&self) -> Vec<usize> {
        self.subspace_dims.clone().unwrap_or_else(|| vec![1; self.components])
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.components == 0 {
            return Err(Error::config("generator needs dim >= 1 and components >= 1"));
        }
        if !(self.lambda_x.is_finite() && self.lambda_x > 0.0) {
            return Err(Error::config("generator lambda_x must be > 0"));
        }
        if !(self.noise >= 0.0 && self.spread >= 0.0) {
            return Err(Error::config("noise and spread must be >= 0"));
        }
        if self.problem == Problem::Subspace {
            let dims = self.truth_dims();
            if dims.len() != self.components {
                return Err(Error::config(format!(
                    "{} subspace dims for {} components",
                    dims.len(),
                    self.components
                )));
            }
            if let Some(&k) = dims.iter().find(|&&k| k == 0 || k > self.dim) {
                return Err(Error::config(format!(
                    "subspace dimension {k} infeasible in ambient dimension {}",
                    self.dim
                )));
            }
        }
        Ok(())
    }
}

/// Learner settings; the constraint and seed come from the experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitSection {
    pub components: usize,
    pub max_iterations: usize,
    pub restarts: usize,
    pub tolerance: f64,
    pub ridge: f64,
    pub dims: DimsPolicy,
}

impl Default for FitSection {
    fn default() -> Self {
        let d = FitConfig::default();
        FitSection {
            components: d.components,
            max_iterations: d.max_iterations,
            restarts: d.restarts,
            tolerance: d.tolerance,
            ridge: d.ridge,
            dims: d.dims,
        }
    }
}

impl FitSection {
    pub fn fit_config(&self, constraint: LpConstraint, seed: u64) -> FitConfig {
        FitConfig {
            components: self.components,
            constraint,
            max_iterations: self.max_iterations,
            seed,
            restarts: self.restarts,
            tolerance: self.tolerance,
            ridge: self.ridge,
            dims: self.dims.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub n_train: usize,
    pub n_eval: usize,
    pub trials: usize,
    pub delta: f64,
    pub seed: u64,
    /// Sign draws for the Monte-Carlo complexity of each trial; 0 disables it.
    pub rademacher_draws: usize,
    /// Random in-class models certified per trial in addition to the fitted one.
    pub probe_models: usize,
    pub m_policy: MPolicy,
    pub clustering_bound: ClusteringBound,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection {
            n_train: 100,
            n_eval: 2_000,
            trials: 200,
            delta: 0.05,
            seed: 0,
            rademacher_draws: 200,
            probe_models: 0,
            m_policy: MPolicy::Squared,
            clustering_bound: ClusteringBound::Paper,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// Structured JSON report.
    pub report: Option<PathBuf>,
    /// Flat per-trial CSV.
    pub csv: Option<PathBuf>,
}

/// Full experiment description, read from a TOML file with one section per part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub generator: GeneratorSpec,
    pub fit: FitSection,
    pub constraint: LpConstraint,
    pub kernel: Option<KernelSpec>,
    pub output: OutputSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: ExperimentSection::default(),
            generator: GeneratorSpec::default(),
            fit: FitSection::default(),
            constraint: LpConstraint {
                p: PExponent::Infinity,
                lambda: 1.0,
            },
            kernel: None,
            output: OutputSection::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn problem(&self) -> Problem {
        self.generator.problem
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    /// The resolved configuration, defaults included.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Kernel used by switching regression; Gaussian with γ = 1 when unset.
    pub fn kernel_or_default(&self) -> KernelSpec {
        self.kernel.unwrap_or(KernelSpec::GaussianRbf { gamma: 1.0 })
    }

    pub fn validate(&self) -> Result<()> {
        let e = &self.experiment;
        if e.trials == 0 {
            return Err(Error::config("trials must be >= 1"));
        }
        if e.n_train == 0 {
            return Err(Error::config("n_train must be >= 1"));
        }
        if e.n_eval < 10 * e.n_train {
            return Err(Error::config(format!(
                "n_eval = {} must be at least 10 * n_train = {}",
                e.n_eval,
                10 * e.n_train
            )));
        }
        if !(e.delta > 0.0 && e.delta < 1.0) {
            return Err(Error::config("delta must lie in (0, 1)"));
        }
        self.generator.validate()?;
        LpConstraint::new(self.constraint.p, self.constraint.lambda)?;
        self.fit.fit_config(self.constraint, 0).validate()?;
        if let Some(k) = &self.kernel {
            k.validate()?;
        }
        Ok(())
    }
}
