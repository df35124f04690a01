//! `crosslab`: runs experiment manifests and exports their artifacts.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid input, 3 numerical failure.

mod cache;
mod manifest;
mod output;
mod plot;
mod runs;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::json;

use cache::Cache;
use manifest::RunManifest;

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Core(crosslab::Error),
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::Core(_) => 2,
        }
    }

    fn category(&self) -> &'static str {
        match self.exit_code() {
            1 => "io",
            2 => "validation",
            _ => "numerical",
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) | CliError::Io(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

#[derive(Parser)]
#[command(name = "crosslab", version, about = "Harmonic measures, cross envelopes and series extensions")]
struct Cli {
    /// Output directory (overrides the manifest's "out").
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Random seed (overrides the manifest's "seed").
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Tolerance: series tolerance for extend, bound slack for verify.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Directory of cached measure grids.
    #[arg(long, global = true, env = "CROSSLAB_CACHE", default_value = ".crosslab-cache")]
    cache_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a manifest of any kind.
    Run { manifest: PathBuf },
    /// Factor measure on a grid: CSV values and SVG level curves.
    Measure { manifest: PathBuf },
    /// Envelope connectivity and point membership of a cross.
    Envelope { manifest: PathBuf },
    /// Doubly orthogonal basis of a domain and a set measure.
    Basis { manifest: PathBuf },
    /// Series extension on a mixed cross.
    Extend { manifest: PathBuf },
    /// Bound verification of a holomorphic test function on a cross.
    Verify { manifest: PathBuf },
    /// Planar slice of a smoothing collar.
    Slice { manifest: PathBuf },
    /// Gluing schedule of cross points.
    Schedule { manifest: PathBuf },
    /// Inspect or clear the grid cache.
    Cache {
        #[command(subcommand)]
        action: CacheAction,
    },
}

#[derive(Subcommand)]
enum CacheAction {
    /// List cached keys.
    List,
    /// Remove every cached grid.
    Clear,
    /// Print the cache keys a manifest would use.
    Key { manifest: PathBuf },
}

fn run_manifest(cli: &Cli, path: &Path, expect: Option<&str>) -> Result<(), CliError> {
    let m = RunManifest::load(path)?;
    if let Some(kind) = expect {
        if m.experiment.kind() != kind {
            return Err(CliError::Validation(format!(
                "manifest kind '{}' does not match subcommand '{kind}'",
                m.experiment.kind()
            )));
        }
    }
    let ctx = runs::Context {
        out: runs::out_dir(cli.out.as_deref(), &m),
        seed: cli.seed.or(m.seed).unwrap_or(0),
        tol: cli.tol,
        cache: Cache::new(&cli.cache_dir),
    };
    let start = Instant::now();
    let result = runs::execute(&m, &ctx);
    log::info!("{} run finished in {:.3} s", m.experiment.kind(), start.elapsed().as_secs_f64());
    if let Err(e) = &result {
        let diag = json!({
            "status": "error",
            "kind": m.experiment.kind(),
            "category": e.category(),
            "exit_code": e.exit_code(),
            "message": e.to_string(),
        });
        if let Err(w) = output::write_json(&ctx.out.join("error.json"), &diag) {
            log::warn!("could not write diagnostics: {w}");
        }
    }
    result?;
    println!("{}", ctx.out.join("report.json").display());
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Validation("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Io(e.to_string()))?;
    }
    if let Some(t) = cli.tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::Validation("--tol must be positive".into()));
        }
    }
    match &cli.command {
        Command::Run { manifest } => run_manifest(cli, manifest, None),
        Command::Measure { manifest } => run_manifest(cli, manifest, Some("measure")),
        Command::Envelope { manifest } => run_manifest(cli, manifest, Some("envelope")),
        Command::Basis { manifest } => run_manifest(cli, manifest, Some("basis")),
        Command::Extend { manifest } => run_manifest(cli, manifest, Some("extend")),
        Command::Verify { manifest } => run_manifest(cli, manifest, Some("verify")),
        Command::Slice { manifest } => run_manifest(cli, manifest, Some("slice")),
        Command::Schedule { manifest } => run_manifest(cli, manifest, Some("schedule")),
        Command::Cache { action } => {
            let cache = Cache::new(&cli.cache_dir);
            match action {
                CacheAction::List => cache.list()?.iter().for_each(|k| println!("{k}")),
                CacheAction::Clear => println!("removed {} entries from {}", cache.clear()?, cache.dir().display()),
                CacheAction::Key { manifest } => {
                    runs::manifest_keys(&RunManifest::load(manifest)?).iter().for_each(|k| println!("{}", k.0))
                }
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let diag = json!({"status": "error", "category": e.category(), "message": e.to_string()});
            eprintln!("{diag}");
            ExitCode::from(e.exit_code())
        }
    }
}
