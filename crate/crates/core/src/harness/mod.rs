//! Configuration, synthetic data, persistence and the certificate verification protocol.

pub mod alpha_table;
pub mod config;
pub mod io;
pub mod synth;
pub mod verify;

pub use alpha_table::{alpha_table, alpha_table_csv, AlphaRow};
pub use config::{ExperimentConfig, FitSection, GeneratorSpec, Problem};
pub use io::{emit_csv, ingest_csv, parse_csv, write_csv, write_json, IngestOptions};
pub use synth::{generate_synthetic, SyntheticSource};
pub use verify::{
    certify_model, check_in_class, fit_model, primary_theorem, random_in_class_model, run_verification,
    CertifySettings, VerificationReport,
};
