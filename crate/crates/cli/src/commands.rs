//! The four subcommands. Each returns the full report text; nothing here
//! writes to stdout or stderr directly.

use std::fmt::Write as _;
use std::path::Path;

use affinity_core::affinity::build_corr_affinity;
use affinity_core::attention::{
    multi_head_attention_with_weights, AttentionConfig, HeadProjection, ProjectionSet,
};
use affinity_core::normalize::{choose_alpha, DEFAULT_MAX_ITER, DEFAULT_TOL};
use affinity_core::propagate::{
    eigenvector_centrality, inffs_scores, pagerank, power_series_closed_form,
    power_series_truncated, CentralityKind,
};
use affinity_core::rng::Lcg64;
use affinity_core::selection::{rank, select_top_k, RankingResult};
use affinity_core::verify::{run_suite, VerifyOptions};
use affinity_core::{FeatureDataset, Matrix};
use serde::{Deserialize, Serialize};

use crate::config::{Command, Format, Method, RunConfig};
use crate::error::CliError;
use crate::input::{load_csv, load_matrix};

/// Half-width of the uniform range used for demo projections.
pub const PROJECTION_RANGE: f64 = 0.1;

/// What a command produced: the report body and, for `verify`, the first
/// failing property.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub body: String,
    pub failure: Option<String>,
}

impl Outcome {
    fn ok(body: String) -> Self {
        Self {
            body,
            failure: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreEntry {
    pub name: String,
    pub score: f64,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingReport {
    pub method: String,
    pub alpha: Option<f64>,
    pub rho: Option<f64>,
    pub scores: Vec<ScoreEntry>,
}

pub fn execute(cfg: &RunConfig) -> Result<Outcome, CliError> {
    cfg.validate()?;
    match cfg.command {
        Command::Rank => run_rank(cfg).map(Outcome::ok),
        Command::Select => run_select(cfg).map(Outcome::ok),
        Command::Attend => run_attend(cfg).map(Outcome::ok),
        Command::Verify => run_verify(cfg),
    }
}

fn input(cfg: &RunConfig) -> Result<&Path, CliError> {
    cfg.input_path
        .as_deref()
        .ok_or_else(|| CliError::Config("--input is required".into()))
}

/// Scores every feature of `ds` with the configured method.
pub fn score_dataset(ds: &FeatureDataset, cfg: &RunConfig) -> Result<RankingReport, CliError> {
    let a = build_corr_affinity(ds, cfg.beta)?;
    let (scores, alpha, rho) = match cfg.method {
        Method::Inffs => {
            let scaling = choose_alpha(&a, cfg.alpha_fraction)?;
            let paths = match cfg.truncation {
                Some(l) => power_series_truncated(&a, scaling.alpha(), l)?,
                None => power_series_closed_form(&a, &scaling)?,
            };
            (inffs_scores(&paths), Some(scaling.alpha()), Some(scaling.rho()))
        }
        Method::Ec => {
            let c = eigenvector_centrality(&a, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
            let lambda = match c.kind {
                CentralityKind::Eigenvector { eigenvalue } => Some(eigenvalue),
                CentralityKind::PageRank { .. } => None,
            };
            (c.values, None, lambda)
        }
        Method::Pagerank => {
            let c = pagerank(&a, cfg.damping, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
            (c.values, None, None)
        }
    };
    let ranking = rank(&scores, Some(ds.feature_names().to_vec()))?;
    Ok(report_from(&ranking, cfg.method, alpha, rho, ranking.order.len()))
}

fn report_from(
    r: &RankingResult,
    method: Method,
    alpha: Option<f64>,
    rho: Option<f64>,
    take: usize,
) -> RankingReport {
    let scores = r
        .order
        .iter()
        .take(take)
        .enumerate()
        .map(|(pos, &i)| ScoreEntry {
            name: r.name(i).unwrap_or_default().to_owned(),
            score: r.scores[i],
            rank: pos + 1,
        })
        .collect();
    RankingReport {
        method: method.as_str().to_owned(),
        alpha,
        rho,
        scores,
    }
}

pub fn run_rank(cfg: &RunConfig) -> Result<String, CliError> {
    let ds = load_csv(input(cfg)?, cfg.has_header)?;
    render_ranking(&score_dataset(&ds, cfg)?, cfg.format)
}

/// Like `rank`, truncated to the top `k` features.
pub fn run_select(cfg: &RunConfig) -> Result<String, CliError> {
    let ds = load_csv(input(cfg)?, cfg.has_header)?;
    let mut report = score_dataset(&ds, cfg)?;
    let k = cfg.k.ok_or_else(|| CliError::Config("select requires --k".into()))?;
    // validates k against the feature count
    let scores: Vec<f64> = report.scores.iter().map(|s| s.score).collect();
    select_top_k(&rank(&scores, None)?, k)?;
    report.scores.truncate(k);
    render_ranking(&report, cfg.format)
}

fn number(v: f64) -> String {
    serde_json::to_string(&v).expect("finite number")
}

pub fn render_ranking(report: &RankingReport, format: Format) -> Result<String, CliError> {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report)
                .map_err(|e| CliError::Output(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["name", "score", "rank"])?;
            for e in &report.scores {
                w.write_record([e.name.clone(), number(e.score), e.rank.to_string()])?;
            }
            let bytes = w.into_inner().map_err(|e| CliError::Output(e.to_string()))?;
            String::from_utf8(bytes).map_err(|e| CliError::Output(e.to_string()))
        }
    }
}

/// Projections drawn from the seeded generator in a fixed order: for each
/// head `wq`, `wk`, `wv` (row-major), then `w_out`.
pub fn seeded_projections(cfg: &AttentionConfig, seed: u64) -> ProjectionSet {
    let mut rng = Lcg64::new(seed);
    let (d, dk) = (cfg.d_model(), cfg.d_k());
    let r = PROJECTION_RANGE;
    let heads = (0..cfg.heads())
        .map(|_| HeadProjection {
            wq: rng.matrix(d, dk, -r, r),
            wk: rng.matrix(d, dk, -r, r),
            wv: rng.matrix(d, dk, -r, r),
        })
        .collect();
    let w_out = rng.matrix(cfg.heads() * dk, d, -r, r);
    ProjectionSet { heads, w_out }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionReport {
    pub heads: usize,
    pub d_k: usize,
    pub seed: u64,
    pub weights: Vec<Vec<f64>>,
    pub output: Vec<Vec<f64>>,
}

pub fn attend(x: &Matrix, heads: usize, seed: u64) -> Result<AttentionReport, CliError> {
    let cfg = AttentionConfig::new(x.cols(), heads, true)?;
    let proj = seeded_projections(&cfg, seed);
    let (output, weights) = multi_head_attention_with_weights(x, &cfg, &proj)?;
    Ok(AttentionReport {
        heads,
        d_k: cfg.d_k(),
        seed,
        weights: weights[0].to_rows(),
        output: output.to_rows(),
    })
}

pub fn run_attend(cfg: &RunConfig) -> Result<String, CliError> {
    let x = load_matrix(input(cfg)?, cfg.has_header)?;
    let report = attend(&x, cfg.heads, cfg.seed)?;
    match cfg.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&report)
                .map_err(|e| CliError::Output(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["matrix", "row", "col", "value"])?;
            for (label, m) in [("weights", &report.weights), ("output", &report.output)] {
                for (i, row) in m.iter().enumerate() {
                    for (j, &v) in row.iter().enumerate() {
                        w.write_record([label.to_owned(), i.to_string(), j.to_string(), number(v)])?;
                    }
                }
            }
            let bytes = w.into_inner().map_err(|e| CliError::Output(e.to_string()))?;
            String::from_utf8(bytes).map_err(|e| CliError::Output(e.to_string()))
        }
    }
}

pub fn run_verify(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let opts = VerifyOptions {
        seed: cfg.seed,
        instances: cfg.instances,
        alpha_rho: cfg.alpha_rho,
        tolerance: cfg.tolerance,
    };
    let reports = run_suite(&opts)?;
    let mut body = String::new();
    let mut failure = None;
    for r in &reports {
        let status = if r.passed() { "PASS" } else { "FAIL" };
        let _ = writeln!(
            body,
            "{status} {:<28} max_error={:.3e} tolerance={:.1e} instances={}",
            r.property.name(),
            r.max_error,
            r.tolerance,
            r.instances
        );
        if !r.passed() && failure.is_none() {
            failure = Some(format!(
                "property {} failed: max error {:.3e} exceeds tolerance {:.1e}",
                r.property.name(),
                r.max_error,
                r.tolerance
            ));
        }
    }
    let passed = reports.iter().filter(|r| r.passed()).count();
    let _ = writeln!(body, "{passed}/{} properties passed (seed {})", reports.len(), cfg.seed);
    Ok(Outcome { body, failure })
}
