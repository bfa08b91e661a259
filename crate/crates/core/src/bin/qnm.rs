//! Command-line front-end. Every subcommand reads a JSON run configuration
//! and writes its artifacts and `report.json` into the output directory.
//! Log level comes from `QNM_LOG` (default `info`).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qnm::cli::config::Length;
use qnm::cli::{Pipeline, RunConfig, Stage};

#[derive(Parser)]
#[command(name = "qnm", version, about = "Quasinormal modes and Green functions of 2D plasmonic resonators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Find the resonance and write the raw mode field.
    Find(Common),
    /// Find and normalize the mode.
    Normalize(Common),
    /// Normalize and tabulate the norm and effective volume against domain size.
    Modevol(Common),
    /// Emission enhancement spectrum and distance scan.
    Se(Common),
    /// Propagator along a line of receivers.
    Propagate(Common),
    /// Everything with full-dipole oracle comparisons.
    Validate(Common),
    /// The full pipeline.
    Run(Common),
}

#[derive(Args)]
struct Common {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config's `output`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Cell size replacing both `grid.h` and `grid.oracle_h`, e.g. "2 nm" (a bare number is nm).
    #[arg(long)]
    resolution_override: Option<String>,
}

fn parse_length(s: &str) -> qnm::Result<Length> {
    match s.trim().parse::<f64>() {
        Ok(v) => Ok(Length(v * 1e-9)),
        Err(_) => s.parse(),
    }
}

fn run(stage: Stage, args: Common) -> qnm::Result<()> {
    let mut config = RunConfig::load(&args.config)?;
    if let Some(h) = &args.resolution_override {
        let h = parse_length(h)?;
        config.grid.h = h;
        config.grid.oracle_h = Some(h);
        config.validate()?;
        log::info!("cell size overridden to {}", config.grid.h);
    }
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| qnm::Error::Config(format!("thread pool: {e}")))?;
    }
    let out = args.out.or_else(|| config.output.clone().map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("out"));
    let report = Pipeline::new(config, &out).execute(stage)?;
    for c in &report.checks {
        log::info!("{}: max error {:.3} (tolerance {}) {}", c.name, c.max_relative_error, c.tolerance, if c.met { "met" } else { "NOT met" });
    }
    println!("{}", out.join(qnm::cli::pipeline::REPORT_FILE).display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("QNM_LOG", "info")).init();
    let cli = Cli::parse();
    let (stage, args) = match cli.command {
        Command::Find(a) => (Stage::Find, a),
        Command::Normalize(a) => (Stage::Normalize, a),
        Command::Modevol(a) => (Stage::ModeVolume, a),
        Command::Se(a) => (Stage::Se, a),
        Command::Propagate(a) => (Stage::Propagate, a),
        Command::Validate(a) => (Stage::Validate, a),
        Command::Run(a) => (Stage::Run, a),
    };
    match run(stage, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let body = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{body}");
            ExitCode::from(e.exit_code())
        }
    }
}
