use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use elastic_surfaces::io::Normalization;
use elastic_surfaces::pipeline::MatchMode;
use elastic_surfaces::MetricWeights;

#[derive(Debug, Parser)]
#[command(name = "esurf", version, about = "Geodesics and distances between spherically parametrized surfaces")]
pub struct Cli {
    /// More log output (repeat for debug level).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute a geodesic between two surfaces and write its frames.
    Geodesic(PairArgs),
    /// Print the distance between two surfaces.
    Distance(PairArgs),
    /// Karcher mean of a set of surfaces.
    Mean(MeanArgs),
    /// Compare linear-path lengths with their SRNF image lengths.
    SrnfCompare(CompareArgs),
    /// Print the certified step bound of a vector field and the minimal
    /// Jacobian determinant at chosen step sizes.
    BoundCheck(BoundArgs),
    /// Write a built-in test surface to a grid file.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Param,
    Joint,
    Cd,
    Rigid,
}

impl From<ModeArg> for MatchMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Param => MatchMode::Param,
            ModeArg::Joint => MatchMode::Joint,
            ModeArg::Cd => MatchMode::Cd,
            ModeArg::Rigid => MatchMode::Rigid,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormalizeArg {
    Auto,
    UnitArea,
    None,
}

impl From<NormalizeArg> for Normalization {
    fn from(n: NormalizeArg) -> Self {
        match n {
            NormalizeArg::Auto => Normalization::Auto,
            NormalizeArg::UnitArea => Normalization::UnitArea,
            NormalizeArg::None => Normalization::None,
        }
    }
}

/// Settings shared by every matching command. Anything given here overrides
/// the value from `--config`.
#[derive(Debug, Clone, Args)]
pub struct MatchArgs {
    /// JSON run configuration (for example the `config.json` of an earlier run).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Metric weights `a,b,c,d` (shear, scale, bending, rotation).
    #[arg(long, value_parser = parse_weights, allow_hyphen_values = true)]
    pub weights: Option<MetricWeights>,
    /// Number of time intervals.
    #[arg(long = "T")]
    pub t_count: Option<usize>,
    /// Harmonic degree of the path basis.
    #[arg(long)]
    pub deg: Option<usize>,
    /// Harmonic degree of the reparametrization basis.
    #[arg(long = "deg-bar")]
    pub deg_bar: Option<usize>,
    /// Number of outer reparametrization rounds.
    #[arg(long = "N")]
    pub outer: Option<usize>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Use central differences in time.
    #[arg(long)]
    pub central_diff: bool,
    /// Coarse-to-fine schedule `NTxNP/deg/deg_bar/T,...`, or `auto`.
    #[arg(long, num_args = 0..=1, default_missing_value = "auto")]
    pub multires: Option<String>,
    /// Resample inputs to `NTxNP` (also the grid of synthetic inputs).
    #[arg(long, value_parser = parse_grid)]
    pub grid: Option<[usize; 2]>,
    #[arg(long, value_enum)]
    pub normalize: Option<NormalizeArg>,
    /// Skip the icosahedral initialization.
    #[arg(long)]
    pub no_init: bool,
    /// Maximum optimizer iterations per inner solve.
    #[arg(long)]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct PairArgs {
    /// Source and target: grid files or `synth:<shape>`. Taken from the
    /// configuration when omitted.
    #[arg(num_args = 0..=2)]
    pub inputs: Vec<String>,
    #[command(flatten)]
    pub matching: MatchArgs,
    /// Output directory.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Print a JSON summary instead of plain text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Args)]
pub struct MeanArgs {
    /// Samples: grid files or `synth:<shape>`.
    pub inputs: Vec<String>,
    #[command(flatten)]
    pub matching: MatchArgs,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Maximum number of mean updates.
    #[arg(long, default_value_t = 20)]
    pub iterations: usize,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[arg(num_args = 0..=2)]
    pub inputs: Vec<String>,
    #[command(flatten)]
    pub matching: MatchArgs,
    /// Values of `T` to tabulate.
    #[arg(long, value_delimiter = ',', default_value = "13,25,49,99")]
    pub t_list: Vec<usize>,
    /// Also compute the geodesic distance.
    #[arg(long)]
    pub geodesic: bool,
    /// Write the CSV here instead of standard output.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BoundArgs {
    /// Coefficient file: JSON `{"deg_bar":..,"xv":[..]}`, a JSON array or
    /// whitespace separated numbers.
    pub coefficients: PathBuf,
    #[arg(long, value_parser = parse_grid, default_value = "25x49")]
    pub grid: [usize; 2],
    /// Step sizes at which to report the minimal Jacobian determinant.
    #[arg(long = "t", value_delimiter = ',', allow_hyphen_values = true)]
    pub t_values: Vec<f64>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// Shape, e.g. `sphere`, `ellipsoid:a=1,b=1,c=1.3`, `cylinder:bend=0.5`.
    pub shape: String,
    #[arg(long, value_parser = parse_grid, default_value = "24x25")]
    pub grid: [usize; 2],
    /// Output grid file.
    #[arg(long, short)]
    pub out: PathBuf,
    /// Write CSV instead of binary data.
    #[arg(long)]
    pub csv: bool,
    /// Also write an OBJ mesh next to the grid file.
    #[arg(long)]
    pub obj: bool,
}

fn parse_weights(s: &str) -> Result<MetricWeights, String> {
    s.parse().map_err(|e: elastic_surfaces::Error| e.to_string())
}

pub fn parse_grid(s: &str) -> Result<[usize; 2], String> {
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected NTxNP, got `{s}`"))?;
    let p = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("`{v}`: {e}"));
    Ok([p(a)?, p(b)?])
}
