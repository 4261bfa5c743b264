//! `laxlab`: simulate, lattice, scan, refine and verify from the command line.
//!
//! Exit codes: 0 success, 1 a check failed, 2 configuration error,
//! 3 blow-up on the integration path, 4 degenerate spectral curve,
//! 5 any other numerical or I/O failure.

mod commands;
mod config;
mod output;

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use laxlab_core::{Error, PathSpec};
use num_complex::Complex64;

use config::{Kind, Override};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CHECK_FAILED: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_BLOWUP: u8 = 3;
pub const EXIT_DEGENERATE: u8 = 4;
pub const EXIT_NUMERIC: u8 = 5;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Self { code: EXIT_CONFIG, message: message.into() }
    }

    pub fn io(path: &Path, e: impl Display) -> Self {
        Self { code: EXIT_NUMERIC, message: format!("{}: {e}", path.display()) }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidConfig(_) | Error::Json(_) => EXIT_CONFIG,
            Error::BlowUp(_) => EXIT_BLOWUP,
            Error::DegenerateCurve(_) | Error::DegenerateModulus { .. } | Error::ZeroZ0 => EXIT_DEGENERATE,
            _ => EXIT_NUMERIC,
        };
        Self { code, message: e.to_string() }
    }
}

#[derive(Parser)]
#[command(name = "laxlab", version, about = "Complex-time singularities of Lax flows")]
struct Cli {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(subcommand)]
    command: Command,
}

/// Every field of the run configuration, addressable by its dotted JSON path.
#[derive(Args)]
struct ConfigArgs {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[arg(long = "lax.a", global = true, value_name = "C", allow_hyphen_values = true)]
    lax_a: Option<String>,
    #[arg(long = "lax.x0", global = true, value_name = "C", allow_hyphen_values = true)]
    lax_x0: Option<String>,
    #[arg(long = "lax.y0", global = true, value_name = "C", allow_hyphen_values = true)]
    lax_y0: Option<String>,
    #[arg(long = "lax.z0", global = true, value_name = "C", allow_hyphen_values = true)]
    lax_z0: Option<String>,
    #[arg(long = "lax.tol", global = true, value_name = "X")]
    lax_tol: Option<String>,
    /// JSON object mapping exponent to a 2x2 matrix of [re, im] entries.
    #[arg(long = "lax.p0_weights", global = true, value_name = "JSON")]
    lax_p0_weights: Option<String>,
    #[arg(long = "window.re_min", global = true, value_name = "X", allow_hyphen_values = true)]
    window_re_min: Option<String>,
    #[arg(long = "window.re_max", global = true, value_name = "X", allow_hyphen_values = true)]
    window_re_max: Option<String>,
    #[arg(long = "window.im_min", global = true, value_name = "X", allow_hyphen_values = true)]
    window_im_min: Option<String>,
    #[arg(long = "window.im_max", global = true, value_name = "X", allow_hyphen_values = true)]
    window_im_max: Option<String>,
    #[arg(long = "scan.resolution", global = true, value_name = "R")]
    scan_resolution: Option<String>,
    #[arg(long = "scan.N", global = true, value_name = "N")]
    scan_n: Option<String>,
    #[arg(long = "scan.threshold", global = true, value_name = "X")]
    scan_threshold: Option<String>,
    /// Truncation orders for refine, e.g. "[16,32,64]".
    #[arg(long = "scan.schedule", global = true, value_name = "JSON")]
    scan_schedule: Option<String>,
    #[arg(long = "lattice.mn_bound", global = true, value_name = "M")]
    lattice_mn_bound: Option<String>,
    #[arg(long = "lattice.tol", global = true, value_name = "X")]
    lattice_tol: Option<String>,
    #[arg(long = "output.directory", global = true, value_name = "DIR")]
    output_directory: Option<String>,
    /// Comma-separated subset of csv,json.
    #[arg(long = "output.formats", global = true, value_name = "LIST")]
    output_formats: Option<String>,
    #[arg(long = "seed", global = true, value_name = "SEED")]
    seed: Option<String>,
}

fn o<'a>(path: &'static str, raw: &'a Option<String>, kind: Kind) -> Override<'a> {
    Override { path, raw: raw.as_deref(), kind }
}

impl ConfigArgs {
    fn overrides(&self) -> Vec<Override<'_>> {
        vec![
            o("lax.a", &self.lax_a, Kind::Complex),
            o("lax.x0", &self.lax_x0, Kind::Complex),
            o("lax.y0", &self.lax_y0, Kind::Complex),
            o("lax.z0", &self.lax_z0, Kind::Complex),
            o("lax.tol", &self.lax_tol, Kind::Json),
            o("lax.p0_weights", &self.lax_p0_weights, Kind::Json),
            o("window.re_min", &self.window_re_min, Kind::Json),
            o("window.re_max", &self.window_re_max, Kind::Json),
            o("window.im_min", &self.window_im_min, Kind::Json),
            o("window.im_max", &self.window_im_max, Kind::Json),
            o("scan.resolution", &self.scan_resolution, Kind::Json),
            o("scan.N", &self.scan_n, Kind::Json),
            o("scan.threshold", &self.scan_threshold, Kind::Json),
            o("scan.schedule", &self.scan_schedule, Kind::Json),
            o("lattice.mn_bound", &self.lattice_mn_bound, Kind::Json),
            o("lattice.tol", &self.lattice_tol, Kind::Json),
            o("output.directory", &self.output_directory, Kind::Text),
            o("output.formats", &self.output_formats, Kind::List),
            o("seed", &self.seed, Kind::Json),
        ]
    }
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the ODE along a path; writes trajectory.csv and drift.json.
    Simulate(SimulateArgs),
    /// Classical and RH lattices with their match; writes lattice.json/csv.
    Lattice,
    /// sigma_min heatmap over the window; writes scan.csv and candidates.json.
    Scan,
    /// Refine one singularity by sigma_min minimization; writes refined.json.
    Refine(RefineArgs),
    /// Run every property suite; writes verify.json.
    Verify,
}

#[derive(Args)]
struct SimulateArgs {
    /// End point of the straight path from t = 0.
    #[arg(long = "path.end", value_name = "C", default_value = "1", allow_hyphen_values = true)]
    end: String,
    /// Polyline vertices as JSON [[re, im], ...] starting at 0; overrides --path.end.
    #[arg(long = "path.vertices", value_name = "JSON")]
    vertices: Option<String>,
    #[arg(long = "path.max_step", value_name = "H", default_value_t = 0.05)]
    max_step: f64,
}

#[derive(Args)]
struct RefineArgs {
    #[arg(long = "t-guess", value_name = "C", allow_hyphen_values = true)]
    t_guess: String,
}

fn complex_arg(flag: &str, raw: &str) -> Result<Complex64, Failure> {
    config::parse_complex(raw)
        .and_then(|v| serde_json::from_value(v).ok())
        .ok_or_else(|| Failure::config(format!("--{flag}: expected a complex number, got {raw:?}")))
}

fn build_path(args: &SimulateArgs, tol: f64) -> Result<PathSpec, Failure> {
    let path = match &args.vertices {
        Some(raw) => {
            let vertices: Vec<Complex64> = serde_json::from_str(raw)
                .map_err(|e| Failure::config(format!("--path.vertices: {e}")))?;
            PathSpec::new(vertices, args.max_step, tol)
        }
        None => PathSpec::segment(complex_arg("path.end", &args.end)?, args.max_step, tol),
    };
    let path = path?;
    if path.start() != Complex64::new(0.0, 0.0) {
        return Err(Failure::config("--path.vertices: the path must start at t = 0"));
    }
    Ok(path)
}

fn init_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("LAXLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::config(format!("LAXLAB_THREADS: expected a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure { code: EXIT_NUMERIC, message: e.to_string() })
}

fn run(cli: Cli) -> Result<u8, Failure> {
    init_threads()?;
    let cfg = config::load(cli.config.config.as_deref(), &cli.config.overrides())?;
    match cli.command {
        Command::Simulate(args) => commands::simulate(&cfg, &build_path(&args, cfg.lax.tol)?),
        Command::Lattice => commands::lattice(&cfg),
        Command::Scan => commands::scan_cmd(&cfg),
        Command::Refine(args) => commands::refine(&cfg, complex_arg("t-guess", &args.t_guess)?),
        Command::Verify => commands::verify(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("laxlab: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
