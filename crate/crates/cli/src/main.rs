mod manifest;
mod plot;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use manifest::RunManifest;

/// Mountain-pass solutions of forced Hamiltonian systems on growing
/// periodic windows.
#[derive(Debug, Parser)]
#[command(name = "mpass", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Audit the hypotheses of a potential and print the estimated constants.
    Check(Common),
    /// Solve the periodic problem for one half-period.
    Solve(Common),
    /// Solve a ladder of half-periods with warm starts.
    Continuation(Common),
    /// Rerun a recorded manifest and compare report.json byte for byte.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
        /// Output directory for the rerun [default: <manifest dir>/replay].
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args, Clone)]
struct Common {
    /// Builtin example (1, 2 or 3).
    #[arg(long, conflicts_with = "spec", required_unless_present = "spec")]
    example: Option<u32>,
    /// TOML potential file.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Half-period (upper limit for `continuation`).
    #[arg(long)]
    k: Option<f64>,
    /// Comma-separated half-periods.
    #[arg(long, value_delimiter = ',')]
    ladder: Option<Vec<f64>>,
    /// Grid step; 2k/h must be an integer.
    #[arg(long, default_value_t = 0.05)]
    h: f64,
    #[arg(long, default_value_t = 1e-5)]
    tol_grad: f64,
    #[arg(long, default_value_t = 1e-9)]
    tol_residual: f64,
    /// Largest accepted change of the solution when the grid is refined.
    #[arg(long, default_value_t = 1e-2)]
    tol_refine: f64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Run the solver even when the hypotheses are rejected.
    #[arg(long)]
    force: bool,
    /// Seed for additional random sphere directions in the audit.
    #[arg(long)]
    seed: Option<u64>,
    /// Also write geometry.json.
    #[arg(long)]
    dump_geometry: bool,
}

impl Common {
    fn manifest(&self, subcommand: &str) -> Result<RunManifest, run::Failure> {
        let spec_source = match &self.spec {
            Some(p) => Some(std::fs::read_to_string(p).map_err(|e| run::Failure::spec(format!("{}: {e}", p.display())))?),
            None => None,
        };
        Ok(RunManifest {
            subcommand: subcommand.into(),
            example: self.example,
            spec_path: self.spec.clone(),
            spec_source,
            k: self.k,
            ladder: self.ladder.clone(),
            h: self.h,
            tol_grad: self.tol_grad,
            tol_residual: self.tol_residual,
            tol_refine: self.tol_refine,
            out: self.out.clone(),
            force: self.force,
            seed: self.seed,
            dump_geometry: self.dump_geometry,
            version: env!("CARGO_PKG_VERSION").into(),
        })
    }
}

fn configure_threads() {
    if let Ok(v) = std::env::var("MPASS_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => eprintln!("warning: ignoring MPASS_THREADS={v:?}"),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    let result = match cli.command {
        Command::Check(c) => c.manifest("check").and_then(|m| run::execute(&m)),
        Command::Solve(c) => c.manifest("solve").and_then(|m| run::execute(&m)),
        Command::Continuation(c) => c.manifest("continuation").and_then(|m| run::execute(&m)),
        Command::Replay { manifest, out } => run::replay(&manifest, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
