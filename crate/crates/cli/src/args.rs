use std::path::PathBuf;

use andreev_core::fractal::HostSide;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::tablefile::Mode;

#[derive(Parser, Debug)]
#[command(
    name = "andreev",
    version,
    about = "Polygonal Andreev billiards: tables, orbits and property checks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build table files.
    Table {
        #[command(subcommand)]
        action: TableCommand,
    },
    /// Trace one orbit and write its collision events as CSV.
    Simulate(SimulateArgs),
    /// Run a verification suite, printing one JSON line per check.
    Verify(VerifyArgs),
}

#[derive(Subcommand, Debug)]
pub enum TableCommand {
    /// Write a table file for one of the built-in shapes.
    Make(MakeArgs),
}

#[derive(Args, Debug)]
pub struct MakeArgs {
    #[command(subcommand)]
    pub shape: Shape,
    /// Output path; standard output when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Comma-separated indices of retro-reflecting sides.
    #[arg(long, global = true, value_delimiter = ',')]
    pub andreev_sides: Vec<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Mode::Float64)]
    pub mode: Mode,
}

/// Lengths accept integers, decimals and fractions such as `1/2`.
#[derive(Subcommand, Debug)]
pub enum Shape {
    /// Unit square.
    Square,
    /// Axis-aligned rectangle with a corner at the origin.
    Rect { width: String, height: String },
    /// T-fractal prefractal of the given level over the unit square.
    Tfractal { level: usize },
    /// Rectangle with a rectangular pocket opening off one side.
    Notch {
        width: String,
        height: String,
        #[arg(value_parser = parse_host_side)]
        side: HostSide,
        /// Distance of the pocket from the lower end of the side.
        offset: String,
        notch_width: String,
        depth: String,
    },
}

fn parse_host_side(s: &str) -> Result<HostSide, String> {
    match s {
        "bottom" => Ok(HostSide::Bottom),
        "right" => Ok(HostSide::Right),
        "top" => Ok(HostSide::Top),
        "left" => Ok(HostSide::Left),
        _ => Err(format!("expected bottom, right, top or left, got {s:?}")),
    }
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    pub table: PathBuf,
    /// JSON run configuration; flags given alongside override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Start point `x,y`.
    #[arg(long, allow_hyphen_values = true)]
    pub position: Option<String>,
    /// Initial direction in radians (float tables only).
    #[arg(long, allow_hyphen_values = true, conflicts_with = "slope")]
    pub direction: Option<f64>,
    /// Initial direction as `dy/dx`; signs set the orientation.
    #[arg(long, allow_hyphen_values = true)]
    pub slope: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub parity: Option<i8>,
    #[arg(long)]
    pub max_events: Option<usize>,
    /// Recurrence tolerance for float tables.
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Seed for a sampled start when position or direction is missing.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Event table path; standard output when omitted.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Jacobian,
    Measure,
    VolumeSign,
    ClosedFlow,
    Tfractal,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub suite: Suite,
    /// Table file; not used by the tfractal suite.
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Number of random checks (samples per region for measure).
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Boundary-map iterations for measure.
    #[arg(long, default_value_t = 1)]
    pub steps: usize,
    /// Number of random phase-space regions for measure.
    #[arg(long, default_value_t = 10)]
    pub regions: usize,
    /// Pass threshold: measure error (relative per region, absolute for the
    /// total), or closing distance for closed-flow.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Prefractal levels for tfractal, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub level: Vec<usize>,
    /// Odd slope denominators for tfractal, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub p: Vec<u64>,
    /// Basepoints for tfractal, comma-separated fractions.
    #[arg(long, value_delimiter = ',')]
    pub x0: Vec<String>,
    #[arg(long, default_value_t = 10_000)]
    pub max_events: usize,
    /// Run checks on one thread.
    #[arg(long)]
    pub sequential: bool,
}
