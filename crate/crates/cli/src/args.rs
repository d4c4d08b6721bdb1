use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use djcm::dynamics::Truncation;
use djcm::oracle::OdeSettings;
use djcm::phasespace::GridSpec;
use djcm::sweep::{SweepAxis, Witness};
use djcm::{Deformation, ModelParams};
use num_complex::Complex64 as C64;

/// Simulates a two-level atom coupled to a cavity mode through an
/// intensity-dependent (deformed) interaction and tabulates nonclassicality
/// witnesses of the field.
#[derive(Debug, Parser)]
#[command(name = "djcm", version, args_override_self = true, propagate_version = true)]
pub struct Cli {
    /// File of `key = value` lines supplying defaults for any flag.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evolve the atom-field state and write its amplitudes.
    Evolve(EvolveArgs),
    /// Photon-number distribution p(n) for n = 0..=n-max.
    Pnd(PndArgs),
    /// Mandel Q parameter.
    Mandel(ScalarArgs),
    /// Antibunching parameter d1.
    Antibunch(ScalarArgs),
    /// Quadrature squeezing parameters s_x, s_p.
    Squeeze(ScalarArgs),
    /// Wigner function on a phase-space grid.
    Wigner(WignerArgs),
    /// Husimi Q function on a phase-space grid.
    Husimi(GridArgs),
    /// Tabulate witnesses along a parameter axis.
    Sweep(SweepArgs),
    /// Write the six canned figure sweeps as fig1.csv ... fig6.csv.
    Figures(FiguresArgs),
    /// Compare the closed-form amplitudes with direct numerical integration.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Engine {
    ClosedForm,
    Oracle,
}

pub fn parse_deformation(s: &str) -> Result<Deformation, String> {
    s.parse().map_err(|e: djcm::Error| e.to_string())
}

/// Accepts `2`, `2,0.5`, `2+0.5i` or `0.5i`.
pub fn parse_complex(s: &str) -> Result<C64, String> {
    let s = s.trim();
    if let Some((re, im)) = s.split_once(',') {
        let re: f64 = re.trim().parse().map_err(|_| format!("invalid real part '{re}'"))?;
        let im: f64 = im.trim().parse().map_err(|_| format!("invalid imaginary part '{im}'"))?;
        return Ok(C64::new(re, im));
    }
    s.parse::<C64>().map_err(|_| format!("invalid complex number '{s}' (use 2, 2,0.5 or 2+0.5i)"))
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Deformation function: identity, sin, invsin, ln or poly:c0,c1,...
    #[arg(long = "f", value_name = "KIND", default_value = "sin", value_parser = parse_deformation)]
    pub deformation: Deformation,
    /// Atom-field coupling.
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    pub g: f64,
    /// Initial coherent amplitude.
    #[arg(long, default_value = "2", value_parser = parse_complex, allow_hyphen_values = true)]
    pub beta: C64,
    /// Field frequency.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub omega: f64,
    /// Ground-level frequency.
    #[arg(long, default_value_t = 100.0, allow_hyphen_values = true)]
    pub w1: f64,
    /// Excited-level frequency.
    #[arg(long, default_value_t = 100.0, allow_hyphen_values = true)]
    pub w2: f64,
    /// Truncation tolerance on the neglected Poisson tail.
    #[arg(long, default_value_t = djcm::dynamics::DEFAULT_TRUNCATION_EPS)]
    pub eps: f64,
}

impl ModelArgs {
    pub fn params(&self) -> ModelParams {
        ModelParams {
            g: self.g,
            omega: self.omega,
            w1: self.w1,
            w2: self.w2,
            beta: self.beta,
            deformation: self.deformation.clone(),
        }
    }

    pub fn truncation(&self) -> Truncation {
        Truncation::with_eps(self.eps)
    }
}

#[derive(Debug, Clone, Args)]
pub struct EngineArgs {
    /// Interaction time.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub t: f64,
    /// How the state is computed.
    #[arg(long, value_enum, default_value_t = Engine::ClosedForm)]
    pub engine: Engine,
    /// Integrator step for the oracle engine.
    #[arg(long, default_value_t = 1e-4)]
    pub dt: f64,
    /// Largest number of substeps per dt for rapidly rotating manifolds.
    #[arg(long, default_value_t = 4096)]
    pub max_substeps: usize,
}

impl EngineArgs {
    pub fn ode(&self, t_end: f64) -> OdeSettings {
        OdeSettings::new(self.dt, t_end).with_substeps(self.max_substeps)
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file; `-` writes to standard output.
    #[arg(short = 'o', long = "output", value_name = "PATH", default_value = "-")]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct EvolveArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub engine: EngineArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct PndArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub engine: EngineArgs,
    /// Largest photon number to report.
    #[arg(long, default_value_t = 20)]
    pub n_max: usize,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ScalarArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub engine: EngineArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct GridFlags {
    #[arg(long, default_value_t = -3.0, allow_hyphen_values = true)]
    pub re_min: f64,
    #[arg(long, default_value_t = 3.0, allow_hyphen_values = true)]
    pub re_max: f64,
    #[arg(long, default_value_t = -3.0, allow_hyphen_values = true)]
    pub im_min: f64,
    #[arg(long, default_value_t = 3.0, allow_hyphen_values = true)]
    pub im_max: f64,
    /// Nodes along the real axis.
    #[arg(long, default_value_t = 121)]
    pub n_re: usize,
    /// Nodes along the imaginary axis.
    #[arg(long, default_value_t = 121)]
    pub n_im: usize,
    /// Write `re,im,value` lines instead of a matrix.
    #[arg(long)]
    pub long: bool,
}

impl GridFlags {
    pub fn spec(&self) -> GridSpec {
        GridSpec {
            re_min: self.re_min,
            re_max: self.re_max,
            im_min: self.im_min,
            im_max: self.im_max,
            n_re: self.n_re,
            n_im: self.n_im,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub engine: EngineArgs,
    #[command(flatten)]
    pub grid: GridFlags,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct WignerArgs {
    #[command(flatten)]
    pub common: GridArgs,
    /// Drop the Fock coherences of the field state.
    #[arg(long)]
    pub diagonal_only: bool,
}

fn parse_axis(s: &str) -> Result<SweepAxis, String> {
    s.parse().map_err(|e: djcm::Error| e.to_string())
}

fn parse_witness(s: &str) -> Result<Witness, String> {
    s.parse().map_err(|e: djcm::Error| e.to_string())
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Time held fixed on axes other than time.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub t: f64,
    /// time, beta_mag, beta_complex_grid, omega_field or photon_index.
    #[arg(long, default_value = "time", value_parser = parse_axis)]
    pub axis: SweepAxis,
    /// Axis start; defaults depend on the axis.
    #[arg(long, allow_hyphen_values = true)]
    pub start: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub stop: Option<f64>,
    #[arg(long)]
    pub count: Option<usize>,
    /// Comma-separated subset of pnd, mandel, d1, squeeze, wigner, husimi.
    #[arg(long, value_delimiter = ',', default_value = "mandel", value_parser = parse_witness)]
    pub witness: Vec<Witness>,
    /// Semicolon-separated deformation kinds (poly coefficients use commas).
    #[arg(long, value_delimiter = ';', default_value = "sin;invsin;ln", value_parser = parse_deformation)]
    pub kinds: Vec<Deformation>,
    /// Photon number for the pnd witness.
    #[arg(long = "n", default_value_t = 5)]
    pub pnd_n: usize,
    /// Phase-space point for the wigner and husimi witnesses.
    #[arg(long, default_value = "0", value_parser = parse_complex, allow_hyphen_values = true)]
    pub probe: C64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct FiguresArgs {
    /// Directory receiving fig1.csv ... fig6.csv.
    #[arg(long, value_name = "DIR", default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// End of the integration window.
    #[arg(long, default_value_t = 5.0)]
    pub t_end: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub dt: f64,
    /// Largest number of substeps per dt for rapidly rotating manifolds.
    #[arg(long, default_value_t = 4096)]
    pub max_substeps: usize,
    /// Exit with status 1 when the deviation exceeds this.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
}
