use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tensornorm::ErrorMode;

#[derive(Parser, Debug)]
#[command(name = "tensornorm", version, about = "Certified tensor spectral and nuclear norm approximations")]
pub struct Cli {
    /// Worker threads for the data-parallel kernels [default: available cores]
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Spectral norm of a tensor file
    Snorm(NormArgs),
    /// Nuclear norm of a tensor file, with certificate and decomposition
    Nnorm(NormArgs),
    /// Generate a test tensor (plus a ground-truth sidecar for orthogonal ones)
    Gen(GenArgs),
    /// Timing and error sweeps written as CSV
    Bench(BenchArgs),
    /// Run the invariant self-checks
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Abs,
    Rel,
}

impl From<Mode> for ErrorMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Abs => ErrorMode::Absolute,
            Mode::Rel => ErrorMode::Relative,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// `hemi` or `rand:N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridChoice {
    Hemisphere,
    Random(usize),
}

pub fn parse_grid(s: &str) -> Result<GridChoice, String> {
    match s {
        "hemi" | "hemisphere" => Ok(GridChoice::Hemisphere),
        _ => {
            let n = s
                .strip_prefix("rand:")
                .or_else(|| s.strip_prefix("random:"))
                .ok_or_else(|| format!("expected `hemi` or `rand:N`, got `{s}`"))?;
            match n.parse::<usize>() {
                Ok(n) if n > 0 => Ok(GridChoice::Random(n)),
                _ => Err(format!("point count must be a positive integer, got `{n}`")),
            }
        }
    }
}

pub fn parse_epsilon(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("not a number: `{s}`"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("epsilon must be positive, got {s}"))
    }
}

#[derive(Args, Debug)]
pub struct NormArgs {
    /// Tensor file (`.json`, otherwise binary)
    pub input: PathBuf,
    /// Target error
    #[arg(long, default_value = "1e-2", value_parser = parse_epsilon)]
    pub eps: f64,
    /// Error mode: `upper − lower ≤ ε` (abs) or `≤ ε·upper` (rel)
    #[arg(long, value_enum, default_value_t = Mode::Rel)]
    pub mode: Mode,
    /// Point set: hemisphere grid sized from ε, or N uniform random points
    #[arg(long, default_value = "hemi", value_parser = parse_grid)]
    pub grid: GridChoice,
    /// Seed for random point sets
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write results here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    /// Orthogonal rank-r tensor with known norms
    Orth,
    /// i.i.d. standard normal entries
    Gauss,
    /// The 3×3×3 tensor with entries i + j + k
    Seq,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub kind: Kind,
    /// Comma-separated dimensions [default: 4,10,10; fixed 3,3,3 for seq]
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    /// Rank of orthogonal tensors
    #[arg(long, default_value_t = 4)]
    pub r: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output tensor file; `.json` selects JSON, anything else binary.
    /// The sidecar goes next to it as `<stem>.truth.json`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum NormKind {
    Spectral,
    Nuclear,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Norm to benchmark
    #[arg(long, value_enum, default_value_t = NormKind::Spectral)]
    pub norm: NormKind,
    /// First-mode sizes ℓ
    #[arg(long, value_delimiter = ',', default_value = "2,3,4")]
    pub ls: Vec<usize>,
    /// Slice sizes n (instances are ℓ×n×n)
    #[arg(long, value_delimiter = ',', default_value = "5,10")]
    pub ns: Vec<usize>,
    /// Relative error targets
    #[arg(long, value_delimiter = ',', default_value = "1e-1,1e-2", value_parser = parse_epsilon)]
    pub eps: Vec<f64>,
    /// Rank of the orthogonal error instances (capped at n)
    #[arg(long, default_value_t = 4)]
    pub r: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory for `<norm>_timing.csv` and `<norm>_error.csv`
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
