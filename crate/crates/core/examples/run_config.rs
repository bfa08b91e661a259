//! Drive the artifact pipeline from code: load a run configuration, coarsen
//! it, and write the CSV files and report into a directory.
//!
//! Usage: `cargo run --release --example run_config -- [config.json] [out_dir]`

use std::path::PathBuf;

use qnm::cli::config::Length;
use qnm::cli::{Pipeline, RunConfig, Stage};

fn main() -> qnm::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("QNM_LOG", "info")).init();
    let mut args = std::env::args().skip(1);
    let config = args.next().map(PathBuf::from).unwrap_or_else(|| PathBuf::from("configs/paper-2d-rod.json"));
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out/run_config"));
    let mut config = RunConfig::load(&config)?;
    // a quick look: 2 nm cells for both the mode and the oracle
    config.grid.h = Length(2e-9);
    config.grid.oracle_h = Some(Length(2e-9));
    let report = Pipeline::new(config, &out).execute(Stage::Run)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}
