use std::path::PathBuf;

use affinity_core::affinity::DEFAULT_BETA;
use affinity_core::normalize::DEFAULT_ALPHA_FRACTION;
use affinity_core::propagate::DEFAULT_DAMPING;
use affinity_core::verify::{DEFAULT_INSTANCES, DEFAULT_SEED};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Rank,
    Select,
    Attend,
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Method {
    #[default]
    Inffs,
    Ec,
    Pagerank,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Inffs => "inffs",
            Method::Ec => "ec",
            Method::Pagerank => "pagerank",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Everything one invocation needs, validated before any work starts.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub input_path: Option<PathBuf>,
    pub output_path: Option<PathBuf>,
    pub format: Format,
    pub has_header: bool,
    pub method: Method,
    pub alpha_fraction: f64,
    pub truncation: Option<usize>,
    pub beta: f64,
    pub damping: f64,
    pub k: Option<usize>,
    pub heads: usize,
    pub seed: u64,
    /// Verification-only knobs.
    pub instances: usize,
    pub tolerance: Option<f64>,
    pub alpha_rho: f64,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            input_path: None,
            output_path: None,
            format: Format::Json,
            has_header: true,
            method: Method::Inffs,
            alpha_fraction: DEFAULT_ALPHA_FRACTION,
            truncation: None,
            beta: DEFAULT_BETA,
            damping: DEFAULT_DAMPING,
            k: None,
            heads: 1,
            seed: DEFAULT_SEED,
            instances: DEFAULT_INSTANCES,
            tolerance: None,
            alpha_rho: 0.5,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.command != Command::Verify && self.input_path.is_none() {
            return bad("--input is required".into());
        }
        if self.command == Command::Select && self.k.is_none() {
            return bad("select requires --k".into());
        }
        if self.k == Some(0) {
            return bad("--k must be at least 1".into());
        }
        if self.heads == 0 {
            return bad("--heads must be at least 1".into());
        }
        if self.truncation == Some(0) {
            return bad("--truncation must be at least 1".into());
        }
        if !(self.alpha_fraction > 0.0 && self.alpha_fraction < 1.0) {
            return bad(format!("--alpha-fraction must lie in (0, 1), got {}", self.alpha_fraction));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return bad(format!("--beta must lie in [0, 1], got {}", self.beta));
        }
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return bad(format!("--damping must lie in (0, 1), got {}", self.damping));
        }
        if self.instances == 0 {
            return bad("--instances must be at least 1".into());
        }
        if let Some(t) = self.tolerance {
            if !(t >= 0.0) {
                return bad(format!("--tolerance must be nonnegative, got {t}"));
            }
        }
        Ok(())
    }
}
