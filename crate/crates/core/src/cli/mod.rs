mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use wiener_chaos::Error;

#[derive(Parser, Debug)]
#[command(name = "wiener-chaos", version, about = "Wiener chaos experiments and validation suite")]
#[command(args_override_self = true)]
pub struct Cli {
    /// Flat `key = value` file; command-line flags override its entries.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fourth-moment report along a kernel sequence.
    Diagnose(DiagnoseArgs),
    /// Normalized F_beta / L_eps statistics of fBm along a schedule.
    SweepFbm(SweepFbmArgs),
    /// Normalized A_beta / B_eps statistics of the Brownian sheet.
    SweepSheet(SweepSheetArgs),
    /// Run the acceptance criteria.
    Validate(ValidateArgs),
    /// Raw Monte Carlo draws of a statistic.
    Sample(SampleArgs),
}

const SUBCOMMANDS: [&str; 5] = ["diagnose", "sweep-fbm", "sweep-sheet", "validate", "sample"];

#[derive(Args, Debug, Clone)]
pub struct Common {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output directory (created if missing).
    #[arg(long, default_value = "results")]
    out: PathBuf,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// (1/sqrt k) sum of k disjoint cross terms; schedule gives k.
    Clt,
    /// The fixed cross term sym(e1 x e2); schedule only repeats it.
    ConstantCross,
    /// e1 x e1 scaled to variance 1.
    ScaledSquare,
    /// Embedded F_beta kernels of fBm; schedule gives 2 beta + 2H + 1.
    FBeta,
    /// Embedded L_eps kernels of fBm; schedule gives eps.
    LEps,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct DiagnoseArgs {
    #[arg(long, value_enum)]
    family: Family,
    /// Schedule keys toward the limit (defaults depend on the family).
    #[arg(long, value_delimiter = ',')]
    schedule: Vec<f64>,
    /// Monte Carlo draws per schedule point for the normality test.
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 0.75)]
    hurst: f64,
    /// Grid cells for the fBm families (default 512).
    #[arg(long)]
    cells: Option<usize>,
    #[command(flatten)]
    common: Common,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    /// Geometric toward 0 for F_beta, eps-anchored geometric for L_eps.
    Auto,
    Uniform,
    Geometric,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct SweepFbmArgs {
    #[arg(long, default_value_t = 0.75)]
    hurst: f64,
    /// Values of beta (F_beta sweep).
    #[arg(long, alias = "betas", value_delimiter = ',')]
    beta: Vec<f64>,
    /// Values of 2 beta + 2H + 1 (F_beta sweep).
    #[arg(long, value_delimiter = ',', conflicts_with = "beta")]
    offset: Vec<f64>,
    /// Values of eps (L_eps sweep).
    #[arg(long, value_delimiter = ',')]
    eps: Vec<f64>,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 512)]
    cells: usize,
    #[arg(long, value_enum, default_value_t = GridKind::Auto)]
    grid: GridKind,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct SweepSheetArgs {
    #[arg(long, default_value_t = 1)]
    dims: usize,
    /// Values of beta, applied on every axis (A_beta sweep).
    #[arg(long, alias = "betas", value_delimiter = ',')]
    beta: Vec<f64>,
    /// Values of eps (B_eps sweep).
    #[arg(long, value_delimiter = ',')]
    eps: Vec<f64>,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    /// Cells per axis (default 512 for one axis, 160 otherwise).
    #[arg(long)]
    cells: Option<usize>,
    #[arg(long, value_enum, default_value_t = GridKind::Auto)]
    grid: GridKind,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    /// Run only these criteria.
    #[arg(long, value_delimiter = ',')]
    only: Vec<u32>,
    #[command(flatten)]
    common: Common,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Statistic {
    FBeta,
    LEps,
    ABeta,
    BEps,
    Clt,
    ConstantCross,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    /// Eigenbasis draws of the embedded kernel.
    Spectral,
    /// Quadratic form of the embedded kernel at a Gaussian sample.
    Chaos,
    /// Weighted integral of the coupled sample path.
    Direct,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct SampleArgs {
    #[arg(long, value_enum)]
    statistic: Statistic,
    #[arg(long, value_enum, default_value_t = Route::Spectral)]
    route: Route,
    #[arg(long, default_value_t = 0.75)]
    hurst: f64,
    /// beta; for the sheet, one value per axis or a single value for all.
    #[arg(long, alias = "betas", value_delimiter = ',')]
    beta: Vec<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, default_value_t = 1)]
    dims: usize,
    /// Index k of the clt family.
    #[arg(long, default_value_t = 16)]
    k: usize,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long)]
    cells: Option<usize>,
    #[arg(long, value_enum, default_value_t = GridKind::Auto)]
    grid: GridKind,
    #[command(flatten)]
    common: Common,
}

/// Failure of a command, mapped to an exit code and a one-line reason.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Numerical(String),
    Io(String),
    /// Criteria or checks ran and did not pass.
    Failed(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Degenerate(_) | Error::NonSymmetricKernel { .. } | Error::SampleTooSmall { .. } => {
                Failure::Numerical(e.to_string())
            }
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl Failure {
    fn report(&self) -> (u8, &'static str, &str) {
        match self {
            Failure::Usage(m) => (1, "usage", m),
            Failure::Io(m) => (1, "io", m),
            Failure::Numerical(m) => (2, "numerical", m),
            Failure::Failed(m) => (2, "criteria", m),
        }
    }
}

fn fail(kind: &str, msg: &str, code: u8) -> ExitCode {
    let msg = msg.replace(['\n', '"'], " ");
    eprintln!("error kind={kind} reason=\"{msg}\"");
    ExitCode::from(code)
}

pub fn main() -> ExitCode {
    let args = match config::merge(std::env::args().collect(), &SUBCOMMANDS) {
        Ok(a) => a,
        Err(e) => return fail("config", &e.0, 1),
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let first = e.to_string();
            let first = first.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            return fail("usage", first, 1);
        }
    };
    if let Some(t) = cli.threads {
        if t == 0 {
            return fail("usage", "--threads must be positive", 1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            return fail("usage", &e.to_string(), 1);
        }
    }
    let started = std::time::Instant::now();
    let (out_dir, result) = commands::run(&cli.command);
    if let Some(dir) = out_dir {
        commands::write_timing(&dir, started.elapsed(), cli.threads);
    }
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            let (code, kind, msg) = failure.report();
            fail(kind, msg, code)
        }
    }
}
