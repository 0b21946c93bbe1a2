use clap::builder::RangedU64ValueParser;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::path::PathBuf;

use star_spectra_core::empirical::DEFAULT_KERNEL_WIDTH;
use star_spectra_core::orbits::DEFAULT_ENUMERATION_BUDGET;
use star_spectra_core::trace::DEFAULT_ORBIT_BUDGET;
use star_spectra_core::Truncation;

#[derive(Debug, Parser)]
#[command(name = "star-spectra", version, about = "Spectral statistics of quantum star graphs")]
pub struct Cli {
    /// Worker threads (default: every core).
    #[arg(long, global = true, env = "STAR_SPECTRA_THREADS", value_parser = positive_usize())]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a random star graph and write it as JSON.
    Gen(GenArgs),
    /// Solve the secular equation and list the eigenvalues.
    Spectrum(SpectrumArgs),
    /// Periodic-orbit queries.
    #[command(subcommand)]
    Orbits(OrbitsCommand),
    /// Smoothed density from the trace formula next to the exact spectrum.
    TraceCheck(TraceCheckArgs),
    /// Evaluate the orbit-series results.
    #[command(subcommand)]
    Analytic(AnalyticCommand),
    /// Monte Carlo correlation estimates.
    #[command(subcommand)]
    Empirical(EmpiricalCommand),
    /// Compare an empirical estimate against the analytic prediction.
    Compare(CompareArgs),
    /// The three-point kernel against its second-order expansion.
    ExpansionTable(ExpansionArgs),
}

fn positive_usize() -> RangedU64ValueParser<usize> {
    RangedU64ValueParser::<usize>::new().range(1..)
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenArgs {
    /// Number of edges.
    #[arg(long, value_parser = positive_usize())]
    pub v: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Either a graph file or the parameters to draw one.
#[derive(Debug, Clone, Args, Serialize)]
pub struct GraphSource {
    /// Graph JSON written by `gen`.
    #[arg(long, conflicts_with_all = ["v", "seed"])]
    pub graph: Option<PathBuf>,
    #[arg(long, required_unless_present = "graph", value_parser = positive_usize())]
    pub v: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub source: GraphSource,
    #[arg(long)]
    pub lambda_max: f64,
    /// Only report eigenvalues above this.
    #[arg(long, default_value_t = 0.0)]
    pub lambda_min: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum OrbitsCommand {
    /// Weighted orbit count for a class (n, m).
    Q(QArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum QMethod {
    Formula,
    Brute,
    Both,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct QArgs {
    /// Visits per edge, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<u32>,
    /// Cyclic blocks per edge, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub m: Vec<u32>,
    #[arg(long, value_enum, default_value_t = QMethod::Formula)]
    pub method: QMethod,
    /// Largest word length the enumeration will attempt.
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_BUDGET)]
    pub budget: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TraceCheckArgs {
    #[command(flatten)]
    pub source: GraphSource,
    /// Longest half-period kept in the orbit sum.
    #[arg(long)]
    pub kmax: usize,
    #[arg(long)]
    pub sigma: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda_lo: f64,
    #[arg(long, default_value_t = 30.0)]
    pub lambda_hi: f64,
    #[arg(long, default_value_t = 1000, value_parser = positive_usize())]
    pub points: usize,
    /// Cap on v^kmax.
    #[arg(long, default_value_t = DEFAULT_ORBIT_BUDGET)]
    pub budget: u128,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Args, Serialize)]
pub struct TruncationArgs {
    #[arg(long, value_parser = positive_usize())]
    pub j_max: Option<usize>,
    #[arg(long, value_parser = positive_usize())]
    pub m_max: Option<usize>,
    /// Gauss–Legendre points per axis.
    #[arg(long = "quad", value_parser = positive_usize())]
    pub quad_points: Option<usize>,
    #[arg(long)]
    pub tau_cutoff: Option<f64>,
}

impl TruncationArgs {
    pub fn resolve(&self) -> Truncation {
        let d = Truncation::default();
        Truncation {
            j_max: self.j_max.unwrap_or(d.j_max),
            m_max: self.m_max.unwrap_or(d.m_max),
            quad_points: self.quad_points.unwrap_or(d.quad_points),
            tau_cutoff: self.tau_cutoff.unwrap_or(d.tau_cutoff),
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum AnalyticCommand {
    /// Kernel components on a square grid.
    F(AnalyticFArgs),
    /// Full and connected three-point function at one point.
    R3(AnalyticR3Args),
    /// Two-point function at one offset.
    R2(AnalyticR2Args),
    /// Form factor at one time.
    K(AnalyticKArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AnalyticFArgs {
    #[arg(long)]
    pub tau_max: f64,
    #[arg(long)]
    pub step: f64,
    #[command(flatten)]
    pub truncation: TruncationArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AnalyticR3Args {
    #[arg(long, allow_negative_numbers = true)]
    pub x: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub y: f64,
    #[command(flatten)]
    pub truncation: TruncationArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AnalyticR2Args {
    #[arg(long, allow_negative_numbers = true)]
    pub x: f64,
    #[command(flatten)]
    pub truncation: TruncationArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AnalyticKArgs {
    #[arg(long)]
    pub tau: f64,
    #[command(flatten)]
    pub truncation: TruncationArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Grid given as `start:end:step` or a comma-separated list.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Grid(pub Vec<f64>);

pub fn parse_grid(text: &str) -> Result<Grid, String> {
    let number = |s: &str| s.trim().parse::<f64>().map_err(|e| format!("bad number {s:?}: {e}"));
    let parts: Vec<&str> = text.split(':').collect();
    let values = match parts.as_slice() {
        [start, end, step] => {
            let (start, end, step) = (number(start)?, number(end)?, number(step)?);
            if !(step > 0.0 && step.is_finite()) || !(end >= start) || !start.is_finite() || !end.is_finite() {
                return Err("expected start:end:step with step > 0 and end >= start".into());
            }
            let count = ((end - start) / step + 1e-9).floor() as usize;
            (0..=count).map(|i| start + i as f64 * step).collect()
        }
        [list] => list.split(',').map(number).collect::<Result<Vec<_>, _>>()?,
        _ => return Err("expected start:end:step or a comma-separated list".into()),
    };
    if values.is_empty() {
        return Err("empty grid".into());
    }
    Ok(Grid(values))
}

#[derive(Debug, Subcommand)]
pub enum EmpiricalCommand {
    /// Two-point function on an x grid.
    R2(EmpiricalArgs),
    /// Three-point function on the product of an x and a y grid.
    R3(EmpiricalArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EmpiricalArgs {
    #[arg(long, default_value_t = 100, value_parser = positive_usize())]
    pub v: usize,
    #[arg(long, default_value_t = 200, value_parser = positive_usize())]
    pub realizations: usize,
    #[arg(long, default_value_t = 400.0)]
    pub lambda_max: f64,
    /// Discard levels at or below this wavenumber.
    #[arg(long, default_value_t = 0.0)]
    pub lambda_min: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Gaussian kernel width in mean spacings.
    #[arg(long, default_value_t = DEFAULT_KERNEL_WIDTH)]
    pub kernel_width: f64,
    #[arg(long, value_parser = parse_grid, default_value = "0.25:3:0.25")]
    pub x_grid: Grid,
    #[arg(long, value_parser = parse_grid, default_value = "0.25:3:0.25")]
    pub y_grid: Grid,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CompareArgs {
    /// CSV written by `empirical r2` or `empirical r3`; its manifest must sit beside it.
    #[arg(long)]
    pub empirical: PathBuf,
    /// Truncation sidecar written by an `analytic` run.
    #[arg(long)]
    pub truncation: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ExpansionArgs {
    #[arg(long)]
    pub tau_max: f64,
    #[arg(long)]
    pub step: f64,
    #[command(flatten)]
    pub truncation: TruncationArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
