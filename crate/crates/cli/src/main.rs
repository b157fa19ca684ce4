use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use warpsurf_cli::{execute, parse_grid, parse_tol, write_artifacts, JobConfig, Overrides};

/// Warped-product hypersurface toolkit: classify, reconstruct, verify, generate and sweep.
#[derive(Parser, Debug)]
#[command(name = "warpsurf", version)]
struct Args {
    /// Job config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to `[output] dir` or `./out`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Tolerance override, repeatable.
    #[arg(long = "tol", value_name = "NAME=VALUE", value_parser = parse_tol)]
    tol: Vec<(String, f64)>,
    /// Mesh grid, e.g. 20x40.
    #[arg(long, value_name = "ROWSxCOLS", value_parser = parse_grid)]
    mesh: Option<(usize, usize)>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let run = || -> Result<i32, warpsurf_cli::CliError> {
        let mut cfg = JobConfig::load(&args.config)?;
        Overrides {
            seed: args.seed,
            tolerances: args.tol.clone(),
            mesh: args.mesh,
        }
        .apply(&mut cfg);
        let artifacts = execute(&cfg)?;
        let dir = args
            .out
            .clone()
            .or_else(|| cfg.output.dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        write_artifacts(&dir, &artifacts)?;
        let names: Vec<&str> = artifacts.files.keys().map(String::as_str).collect();
        println!("{:?}: wrote {} to {}", artifacts.status, names.join(", "), dir.display());
        Ok(artifacts.status.exit_code())
    };
    match run() {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("warpsurf: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
