//! `tkahler`: root data, Kähler and Ricci-flatness checks on symmetric spaces.
//!
//! Exit status: 0 pass, 1 check failed, 2 configuration error, 3 numerical error.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tkahler::curvature::Scheme;
use tkahler::kahler::Spacing;

use commands::{Failure, Run, Sampling};
use config::{Overrides, RunConfig};

/// Environment variable capping the worker threads.
const THREADS_VAR: &str = "TKAHLER_THREADS";

#[derive(Parser, Debug)]
#[command(name = "tkahler", version, about = "Kähler and Ricci-flat checks on tangent bundles of symmetric spaces")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// sphere:N, su_so:N or custom:<file>.
    #[arg(long, global = true)]
    space: Option<String>,
    #[arg(long = "C", global = true, allow_negative_numbers = true)]
    c: Option<f64>,
    #[arg(long = "C1", global = true, allow_negative_numbers = true)]
    c1: Option<f64>,
    #[arg(long = "cZ", global = true, allow_negative_numbers = true)]
    c_z: Option<f64>,
    #[arg(long = "cY", global = true, allow_negative_numbers = true)]
    c_y: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    grid_min: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    grid_max: Option<f64>,
    #[arg(long, global = true)]
    grid_count: Option<usize>,
    #[arg(long, global = true, value_enum)]
    spacing: Option<SpacingArg>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    json: Option<PathBuf>,
    /// Write the table as CSV.
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SpacingArg {
    Linear,
    Log,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SchemeArg {
    Central,
    Richardson,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Restricted roots, multiplicities and the subalgebras built from them.
    Roots,
    /// Commutation relations and positivity along a chamber ray.
    KahlerCheck,
    /// Constancy of det w and of |S| along a chamber ray.
    RicciScan,
    /// Plot table and verdicts for the two-sphere family.
    S2Family,
    /// Compare the C = 1, c_Z = 0 member with the Eguchi-Hanson metric.
    EhCompare {
        #[arg(long, default_value_t = 1.0)]
        ell: f64,
        #[arg(long, default_value_t = 10)]
        samples: usize,
    },
    /// Distance profile h(x) along the radial direction.
    Completeness {
        #[arg(long, default_value_t = 0.1)]
        b: f64,
        #[arg(long, default_value_t = 15.0)]
        x_max: f64,
        #[arg(long, default_value_t = 50)]
        n: usize,
    },
    /// Finite-difference Ricci tensor and closedness of the Kähler form in a chart.
    CurvatureVerify {
        #[arg(long, default_value_t = 10)]
        points: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = tkahler::curvature::DEFAULT_FD_STEP)]
        fd_step: f64,
        #[arg(long, value_enum, default_value = "richardson")]
        scheme: SchemeArg,
        #[arg(long, default_value_t = 1.0)]
        u_max: f64,
        #[arg(long, default_value_t = 0.3)]
        x_min: f64,
        #[arg(long, default_value_t = 2.5)]
        x_max: f64,
    },
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            space: self.space.clone(),
            c: self.c,
            c1: self.c1,
            c_z: self.c_z,
            c_y: self.c_y,
            grid_min: self.grid_min,
            grid_max: self.grid_max,
            grid_count: self.grid_count,
            spacing: self.spacing.map(|s| match s {
                SpacingArg::Linear => Spacing::Linear,
                SpacingArg::Log => Spacing::Log,
            }),
            json: self.json.clone(),
            csv: self.csv.clone(),
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var(THREADS_VAR) else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Config(format!("{THREADS_VAR} must be a positive integer (got '{v}')")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Config(format!("cannot size thread pool: {e}")))
}

fn dispatch(command: &Command, cfg: &RunConfig) -> Result<Run, Failure> {
    match command {
        Command::Roots => commands::roots(cfg),
        Command::KahlerCheck => commands::kahler(cfg),
        Command::RicciScan => commands::ricci_scan(cfg),
        Command::S2Family => commands::s2_family(cfg),
        Command::EhCompare { ell, samples } => commands::eh_compare(cfg, *ell, *samples),
        Command::Completeness { b, x_max, n } => commands::completeness(cfg, *b, *x_max, *n),
        Command::CurvatureVerify { points, seed, fd_step, scheme, u_max, x_min, x_max } => {
            let scheme = match scheme {
                SchemeArg::Central => Scheme::Central,
                SchemeArg::Richardson => Scheme::Richardson,
            };
            let s = Sampling {
                points: *points,
                seed: *seed,
                fd_step: *fd_step,
                scheme,
                u_max: *u_max,
                x_min: *x_min,
                x_max: *x_max,
            };
            commands::curvature_verify(cfg, &s)
        }
    }
}

fn run(cli: &Cli) -> Result<bool, Failure> {
    configure_threads()?;
    let mut cfg = match &cli.common.config {
        Some(p) => config::load(p).map_err(Failure::Config)?,
        None => RunConfig::default(),
    };
    cfg.apply(&cli.common.overrides());
    cfg.validate().map_err(Failure::Config)?;

    let run = dispatch(&cli.command, &cfg)?;
    let text = output::to_json(&run.report).map_err(|e| Failure::Numerical(format!("cannot encode report: {e}")))?;
    match &cfg.outputs.json {
        Some(p) => fs::write(p, &text).map_err(|e| Failure::Config(format!("cannot write {}: {e}", p.display())))?,
        None => print!("{text}"),
    }
    if let (Some(p), Some(t)) = (&cfg.outputs.csv, &run.table) {
        let header: Vec<&str> = t.header.iter().map(String::as_str).collect();
        output::write_csv(p, &header, &t.rows)
            .map_err(|e| Failure::Config(format!("cannot write {}: {e}", p.display())))?;
    }
    Ok(run.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Config(msg)) => {
            eprintln!("tkahler: configuration error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("tkahler: numerical error: {msg}");
            ExitCode::from(3)
        }
    }
}
