use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use affinity_cli::error::{EXIT_INPUT, EXIT_PROPERTY_FAILURE};
use affinity_cli::{execute, CliError, Command, Format, Method, RunConfig};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "affinity", version, about = "Affinity-graph feature ranking and attention")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Args)]
struct Io {
    /// Input CSV file.
    #[arg(long)]
    input: PathBuf,
    /// Write the report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// The first line holds data, not names.
    #[arg(long)]
    no_header: bool,
}

#[derive(Args)]
struct Scoring {
    #[arg(long, value_enum, default_value_t = Method::Inffs)]
    method: Method,
    /// Fraction of 1/rho used as the path decay.
    #[arg(long, default_value_t = 0.5)]
    alpha_fraction: f64,
    /// Sum paths up to this length instead of the closed form.
    #[arg(long)]
    truncation: Option<usize>,
    /// Mixing weight between spread and correlation terms.
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    #[arg(long, default_value_t = 0.85)]
    damping: f64,
}

#[derive(Subcommand)]
enum Sub {
    /// Score and rank every feature.
    Rank {
        #[command(flatten)]
        io: Io,
        #[command(flatten)]
        scoring: Scoring,
    },
    /// Keep the top k features.
    Select {
        #[command(flatten)]
        io: Io,
        #[command(flatten)]
        scoring: Scoring,
        #[arg(long)]
        k: usize,
    },
    /// Multi-head self-attention with seeded projections.
    Attend {
        #[command(flatten)]
        io: Io,
        #[arg(long, default_value_t = 1)]
        heads: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Check the equivalence properties on random instances.
    Verify {
        #[arg(long, default_value_t = affinity_core::verify::DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = affinity_core::verify::DEFAULT_INSTANCES)]
        instances: usize,
        /// Override every property's tolerance.
        #[arg(long)]
        tolerance: Option<f64>,
        /// Target alpha * rho for the generated instances.
        #[arg(long, default_value_t = 0.5)]
        alpha_rho: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn apply_io(cfg: &mut RunConfig, io: Io) {
    cfg.input_path = Some(io.input);
    cfg.output_path = io.output;
    cfg.format = io.format;
    cfg.has_header = !io.no_header;
}

fn apply_scoring(cfg: &mut RunConfig, s: Scoring) {
    cfg.method = s.method;
    cfg.alpha_fraction = s.alpha_fraction;
    cfg.truncation = s.truncation;
    cfg.beta = s.beta;
    cfg.damping = s.damping;
}

fn config(cli: Cli) -> RunConfig {
    match cli.command {
        Sub::Rank { io, scoring } => {
            let mut cfg = RunConfig::new(Command::Rank);
            apply_io(&mut cfg, io);
            apply_scoring(&mut cfg, scoring);
            cfg
        }
        Sub::Select { io, scoring, k } => {
            let mut cfg = RunConfig::new(Command::Select);
            apply_io(&mut cfg, io);
            apply_scoring(&mut cfg, scoring);
            cfg.k = Some(k);
            cfg
        }
        Sub::Attend { io, heads, seed } => {
            let mut cfg = RunConfig::new(Command::Attend);
            apply_io(&mut cfg, io);
            cfg.heads = heads;
            cfg.seed = seed;
            cfg
        }
        Sub::Verify {
            seed,
            instances,
            tolerance,
            alpha_rho,
            output,
        } => {
            let mut cfg = RunConfig::new(Command::Verify);
            cfg.seed = seed;
            cfg.instances = instances;
            cfg.tolerance = tolerance;
            cfg.alpha_rho = alpha_rho;
            cfg.output_path = output;
            cfg
        }
    }
}

fn emit(cfg: &RunConfig, body: &str) -> Result<(), CliError> {
    match &cfg.output_path {
        Some(path) => std::fs::write(path, body)
            .map_err(|e| CliError::Output(format!("{}: {e}", path.display()))),
        None => std::io::stdout()
            .lock()
            .write_all(body.as_bytes())
            .map_err(|e| CliError::Output(e.to_string())),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let line = msg.lines().next().unwrap_or("invalid arguments");
            eprintln!("{}", line.trim_start_matches("error: ").trim());
            return ExitCode::from(EXIT_INPUT as u8);
        }
    };
    let cfg = config(cli);
    let result = execute(&cfg).and_then(|out| {
        emit(&cfg, &out.body)?;
        Ok(out.failure)
    });
    match result {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(failure)) => {
            eprintln!("error: {failure}");
            ExitCode::from(EXIT_PROPERTY_FAILURE as u8)
        }
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
