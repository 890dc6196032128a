//! Command-line surface: one subcommand per experiment kind, all sharing
//! the same override flags.  Every flag mirrors a config key; a flag that
//! is set wins over the file.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::CommandKindTag;

#[derive(Debug, Parser)]
#[command(
    name = "dirac2d",
    version,
    about = "Spectral experiments for a discrete Dirac-type operator on the square lattice",
    after_help = "Every run writes manifest.json into the output directory, echoing the fully \
                  resolved configuration. Exit codes: 0 success, 1 numeric warning, 2 error."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: CommandKind,
}

#[derive(Debug, Subcommand)]
pub enum CommandKind {
    /// Sample the three Floquet bands on an n-by-n torus grid
    Bands(CommonArgs),
    /// Classify the spectral thresholds at the given mass
    Thresholds(CommonArgs),
    /// Flat-band multiplicity of the free operator across box sizes
    Flatband(CommonArgs),
    /// Eigenvalue counts between lambda and the band edge over a lambda grid
    Count(CommonArgs),
    /// Finite-volume spectral-shift proxy over a lambda grid
    Ssf(CommonArgs),
    /// Power-law fit of a stored counting series
    Fit(CommonArgs),
    /// Accumulation and counting constants by torus quadrature
    Constant(CommonArgs),
    /// Truncated toroidal-operator spectra against the counting law
    Toroidal(CommonArgs),
    /// Schema-check a configuration and write its manifest without computing
    Validate(CommonArgs),
}

impl CommandKind {
    pub fn split(&self) -> (CommandKindTag, &CommonArgs) {
        match self {
            CommandKind::Bands(a) => (CommandKindTag::Bands, a),
            CommandKind::Thresholds(a) => (CommandKindTag::Thresholds, a),
            CommandKind::Flatband(a) => (CommandKindTag::Flatband, a),
            CommandKind::Count(a) => (CommandKindTag::Count, a),
            CommandKind::Ssf(a) => (CommandKindTag::Ssf, a),
            CommandKind::Fit(a) => (CommandKindTag::Fit, a),
            CommandKind::Constant(a) => (CommandKindTag::Constant, a),
            CommandKind::Toroidal(a) => (CommandKindTag::Toroidal, a),
            CommandKind::Validate(a) => (CommandKindTag::Validate, a),
        }
    }
}

#[derive(Debug, Args, Default)]
pub struct CommonArgs {
    /// Experiment configuration file (TOML with dotted sections)
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (config key output.directory)
    #[arg(long)]
    pub out: Option<String>,
    /// Output formats, comma separated (output.formats)
    #[arg(long, value_delimiter = ',')]
    pub formats: Option<Vec<String>>,
    /// Mass parameter (model.m)
    #[arg(long)]
    pub m: Option<f64>,
    /// Potential decay exponent (model.gamma)
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Horizontal-edge amplitude (model.gamma2)
    #[arg(long)]
    pub gamma2: Option<f64>,
    /// Vertical-edge amplitude (model.gamma3)
    #[arg(long)]
    pub gamma3: Option<f64>,
    /// Operator to count on: H0, Hplus, Hminus (model.operator)
    #[arg(long)]
    pub operator: Option<String>,
    /// Vertex potential kind: zero, power, point (model.v1)
    #[arg(long)]
    pub v1: Option<String>,
    /// Vertex potential amplitude (model.v1_amplitude)
    #[arg(long)]
    pub v1_amplitude: Option<f64>,
    /// Vertex potential decay (model.v1_decay)
    #[arg(long)]
    pub v1_decay: Option<f64>,
    /// Box side lengths, comma separated (numerics.l)
    #[arg(long, value_delimiter = ',')]
    pub l: Option<Vec<usize>>,
    /// Boundary condition: open or periodic (numerics.boundary)
    #[arg(long)]
    pub boundary: Option<String>,
    /// Toroidal truncations, comma separated (numerics.truncations)
    #[arg(long, value_delimiter = ',')]
    pub truncations: Option<Vec<usize>>,
    /// Sampling grid resolution (numerics.grid)
    #[arg(long)]
    pub grid: Option<usize>,
    /// Torus quadrature resolution (numerics.quad_resolution)
    #[arg(long)]
    pub quad_resolution: Option<usize>,
    /// Richardson-extrapolate the quadrature (numerics.richardson)
    #[arg(long)]
    pub richardson: Option<bool>,
    /// Seed echoed into the manifest (numerics.seed)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Smallest lambda offset (lambda.min)
    #[arg(long, allow_hyphen_values = true)]
    pub lambda_min: Option<f64>,
    /// Largest lambda offset (lambda.max)
    #[arg(long, allow_hyphen_values = true)]
    pub lambda_max: Option<f64>,
    /// Number of lambda grid points (lambda.points)
    #[arg(long)]
    pub lambda_points: Option<usize>,
    /// Lambda spacing: log or linear (lambda.scale)
    #[arg(long)]
    pub lambda_scale: Option<String>,
    /// Offset added to every lambda grid point (lambda.center)
    #[arg(long, allow_hyphen_values = true)]
    pub lambda_center: Option<f64>,
    /// Series file to fit (fit.input)
    #[arg(long)]
    pub input: Option<String>,
    /// Reference point of the fit (fit.reference; defaults to -m)
    #[arg(long, allow_hyphen_values = true)]
    pub reference: Option<f64>,
}
