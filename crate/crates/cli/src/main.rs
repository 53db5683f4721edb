//! `multibound` command-line front end.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 verification found a certificate violation.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use multibound::harness::{
    alpha_table, alpha_table_csv, certify_model, fit_model, ingest_csv, run_verification, write_csv, CertifySettings,
    ExperimentConfig, IngestOptions, Problem, SyntheticSource,
};
use multibound::learners::resolve_dims;
use multibound::rademacher::{mc_product_class, ProductClass};
use multibound::rng::derive_seed;
use multibound::{BoundCertificate, Dataset, Error, MultiComponentModel, PExponent};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_VIOLATION: u8 = 3;

#[derive(Parser)]
#[command(
    name = "multibound",
    version,
    about = "Risk certificates for multi-component learners"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; overrides the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a synthetic training sample and write it as CSV.
    Generate {
        #[command(flatten)]
        common: Common,
        /// Sample size; defaults to n_train.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Fit the configured learner to a CSV sample and write the model as JSON.
    Fit {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: PathBuf,
    },
    /// Compute the risk certificates of a fitted model on its training sample.
    Certify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        delta: Option<f64>,
        /// Defaults to `key = value` text.
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Monte-Carlo Rademacher estimate of the configured class on a CSV sample.
    Rademacher {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: PathBuf,
        /// Sign draws; defaults to the configured rademacher_draws.
        #[arg(long)]
        draws: Option<usize>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Run the certificate verification experiment.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Tabulate α(C, p) against Σ k^{-1/p}.
    AlphaTable {
        /// Comma-separated component counts.
        #[arg(long, value_delimiter = ',', default_values_t = [2usize, 4, 8, 16, 32, 64, 128, 256, 512, 1000])]
        c: Vec<usize>,
        /// Comma-separated exponents; `inf` allowed.
        #[arg(long, value_delimiter = ',', default_values = ["0.5", "1", "2", "inf"])]
        p: Vec<PExponent>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
}

enum Failure {
    Usage(String),
    Data(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) => Failure::Usage(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_DATA)
        }
    }
}

fn load_config(common: &Common) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text =
                fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
            ExperimentConfig::from_toml_str(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.experiment.seed = seed;
    }
    Ok(cfg)
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn load_data(path: &Path, cfg: &ExperimentConfig) -> Result<Dataset, Failure> {
    let opts = IngestOptions {
        outputs_without_header: cfg.problem() == Problem::Switching,
        lambda_x: Some(cfg.generator.lambda_x),
    };
    Ok(ingest_csv(path, opts)?)
}

fn certificates_csv(certs: &[BoundCertificate]) -> String {
    let mut out = String::from("theorem,empirical_risk,complexity_term,confidence_term,total,delta,loss_bound_m,n\n");
    for c in certs {
        out.push_str(&format!(
            "{},{:?},{:?},{:?},{:?},{:?},{:?},{}\n",
            c.theorem.as_str(),
            c.empirical_risk,
            c.complexity_term,
            c.confidence_term,
            c.total,
            c.delta,
            c.loss_bound_m,
            c.n
        ));
    }
    out
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("value serializes") + "\n"
}

fn run(command: Command) -> Result<ExitCode, Failure> {
    match command {
        Command::Generate { common, n } => {
            let cfg = load_config(&common)?;
            cfg.generator.validate()?;
            let seed = cfg.experiment.seed;
            let source = SyntheticSource::new(&cfg.generator, derive_seed(seed, &[0]))?;
            let data = source.sample(n.unwrap_or(cfg.experiment.n_train), derive_seed(seed, &[1]))?;
            let mut buf = Vec::new();
            write_csv(&data, &mut buf)?;
            emit(common.out.as_deref(), &String::from_utf8(buf).expect("csv is utf-8"))?;
        }
        Command::Fit { common, data } => {
            let cfg = load_config(&common)?;
            cfg.validate()?;
            let sample = load_data(&data, &cfg)?;
            let fit_cfg = cfg.fit.fit_config(cfg.constraint, cfg.experiment.seed);
            let model = fit_model(cfg.problem(), &sample, &fit_cfg, &cfg.kernel_or_default())?;
            emit(common.out.as_deref(), &to_json(&model))?;
        }
        Command::Certify {
            common,
            model,
            data,
            delta,
            format,
        } => {
            let mut cfg = load_config(&common)?;
            if let Some(d) = delta {
                cfg.experiment.delta = d;
            }
            cfg.validate()?;
            let sample = load_data(&data, &cfg)?;
            let text = fs::read_to_string(&model)?;
            let model: MultiComponentModel = serde_json::from_str(&text).map_err(|e| Failure::Data(e.to_string()))?;
            let certs = certify_model(&model, &sample, &CertifySettings::from_config(&cfg))?;
            let text = match format {
                Some(Format::Json) => to_json(&certs),
                Some(Format::Csv) => certificates_csv(&certs),
                None => certs.iter().map(|c| c.to_kv_text()).collect::<Vec<_>>().join("\n"),
            };
            emit(common.out.as_deref(), &text)?;
        }
        Command::Rademacher {
            common,
            data,
            draws,
            format,
        } => {
            let cfg = load_config(&common)?;
            cfg.validate()?;
            let sample = load_data(&data, &cfg)?;
            let kernel = cfg.kernel_or_default();
            let fit_cfg = cfg.fit.fit_config(cfg.constraint, cfg.experiment.seed);
            let dims = match cfg.problem() {
                Problem::Subspace => resolve_dims(&fit_cfg, sample.dim())?,
                _ => Vec::new(),
            };
            let class = match cfg.problem() {
                Problem::Switching => ProductClass::Switching { kernel: &kernel },
                Problem::Clustering => ProductClass::Clustering,
                Problem::Subspace => ProductClass::Subspaces { dims: &dims },
            };
            let draws = draws.unwrap_or(cfg.experiment.rademacher_draws).max(2);
            let est = mc_product_class(
                class,
                &sample,
                &cfg.constraint,
                fit_cfg.components,
                draws,
                cfg.experiment.seed,
            )?;
            let text = match format {
                Format::Json => to_json(&est),
                Format::Csv => format!(
                    "mean,std_error,draws,closed_form_bound\n{:?},{:?},{},{:?}\n",
                    est.mean, est.std_error, est.draws, est.closed_form_bound
                ),
            };
            emit(common.out.as_deref(), &text)?;
        }
        Command::Verify {
            common,
            delta,
            trials,
            format,
        } => {
            let mut cfg = load_config(&common)?;
            if let Some(d) = delta {
                cfg.experiment.delta = d;
            }
            if let Some(t) = trials {
                cfg.experiment.trials = t;
            }
            let report = run_verification(&cfg)?;
            let text = match format {
                Format::Json => report.to_json(),
                Format::Csv => report.to_csv(),
            };
            if let Some(path) = &cfg.output.report {
                fs::write(path, report.to_json())?;
            }
            if let Some(path) = &cfg.output.csv {
                fs::write(path, report.to_csv())?;
            }
            emit(common.out.as_deref(), &text)?;
            for s in &report.certificates {
                eprintln!(
                    "{}: {} / {} violated, mean total {:.4}, min margin {:.4}",
                    s.theorem.as_str(),
                    s.violations,
                    s.evaluations,
                    s.mean_total,
                    s.min_margin
                );
            }
            if !report.passed {
                eprintln!("verification failed: {} violation(s)", report.total_violations());
                return Ok(ExitCode::from(EXIT_VIOLATION));
            }
        }
        Command::AlphaTable { c, p, out, format } => {
            let rows = alpha_table(&c, &p).map_err(|e| Failure::Usage(e.to_string()))?;
            let text = match format {
                Format::Csv => alpha_table_csv(&rows),
                Format::Json => to_json(&rows),
            };
            emit(out.as_deref(), &text)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}
