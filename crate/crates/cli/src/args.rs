use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use noiseamp::{Algo, SigmaMode, Spectrum, TorusSpec};

#[derive(Debug, Parser)]
#[command(
    name = "noiseamp",
    version,
    about = "Noise amplification of noisy first-order methods"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact variance amplification on a quadratic with the given spectrum.
    Analyze {
        #[arg(long, value_parser = parse_algo)]
        algo: Algo,
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Spectrum-free lower and upper bounds under rate-optimal parameters.
    Bounds {
        #[arg(long, value_parser = parse_algo)]
        algo: Algo,
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Closed-form LMI certificate for the whole strongly convex class.
    Certify {
        #[arg(long, value_parser = parse_algo)]
        algo: Algo,
        #[arg(long)]
        kappa: f64,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        /// Evaluation budget for local improvement of the bound.
        #[arg(long)]
        refine: Option<usize>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Minimum-variance parameters subject to a convergence-rate cap.
    Tune {
        #[arg(long, value_parser = parse_algo)]
        algo: Algo,
        #[command(flatten)]
        problem: ProblemArgs,
        /// Rate cap constant: ρ ≤ 1 − c/κ (GD) or 1 − c/√κ (HB).
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Deviation-from-average variance of noisy consensus on a torus.
    Consensus {
        #[arg(long, value_parser = parse_algo)]
        algo: Algo,
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Monte Carlo estimate of the variance.
    Simulate {
        #[arg(long, value_parser = parse_algo)]
        algo: Algo,
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_enum, default_value_t = ObjectiveKind::Quadratic)]
        objective: ObjectiveKind,
        /// Pseudo-Huber transition width.
        #[arg(long, default_value_t = 1.0)]
        delta: f64,
        #[arg(long, default_value_t = 100_000)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        replicates: usize,
        /// Report every k-th step of the ensemble series.
        #[arg(long, default_value_t = 1)]
        every: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Torus scaling sweep of J̄/n against κ with rate-optimal parameters.
    Sweep {
        #[arg(long, value_parser = parse_algo)]
        algo: Algo,
        /// Torus dimension.
        #[arg(long)]
        dim: u32,
        /// Side lengths, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        n0: Vec<u64>,
        #[command(flatten)]
        output: OutputArgs,
    },
}

/// Exactly one of these selects the problem.
#[derive(Debug, Args)]
pub struct ProblemArgs {
    /// Hessian eigenvalues, comma separated or a JSON array.
    #[arg(long, value_parser = parse_spectrum, conflicts_with_all = ["kappa", "torus"])]
    pub spectrum: Option<Spectrum>,
    /// Condition number, with m = 1 and L = κ.
    #[arg(long, requires = "n", conflicts_with = "torus")]
    pub kappa: Option<f64>,
    /// Problem dimension.
    #[arg(long, requires = "kappa")]
    pub n: Option<usize>,
    /// Torus as "d,n0".
    #[arg(long, value_parser = parse_torus)]
    pub torus: Option<TorusSpec>,
}

#[derive(Debug, Args)]
pub struct ParamArgs {
    /// Parameter source; defaults to explicit when --alpha is given, else rate-optimal (table2).
    #[arg(long, value_enum)]
    pub params: Option<ParamsChoice>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, value_parser = parse_sigma_mode, default_value = "fixed")]
    pub sigma_mode: SigmaMode,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ParamsChoice {
    /// Standard parameters for the strongly convex class.
    #[value(name = "table1", alias = "standard")]
    Standard,
    /// Rate-optimal parameters for quadratics.
    #[value(name = "table2", alias = "rate-optimal")]
    RateOptimal,
    Explicit,
}

impl ParamsChoice {
    pub fn as_str(self) -> &'static str {
        match self {
            ParamsChoice::Standard => "table1",
            ParamsChoice::RateOptimal => "table2",
            ParamsChoice::Explicit => "explicit",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ObjectiveKind {
    Quadratic,
    PseudoHuber,
}

fn parse_algo(s: &str) -> Result<Algo, String> {
    s.parse().map_err(|e: noiseamp::Error| e.to_string())
}

fn parse_sigma_mode(s: &str) -> Result<SigmaMode, String> {
    s.parse().map_err(|e: noiseamp::Error| e.to_string())
}

fn parse_spectrum(s: &str) -> Result<Spectrum, String> {
    Spectrum::parse(s).map_err(|e| e.to_string())
}

fn parse_torus(s: &str) -> Result<TorusSpec, String> {
    TorusSpec::parse(s).map_err(|e| e.to_string())
}
