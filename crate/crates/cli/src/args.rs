use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::sweep::Param;

#[derive(Parser, Debug)]
#[command(name = "oufet", version, about = "First-exit and first-passage times of Ornstein-Uhlenbeck processes")]
#[command(after_help = "Numeric parameters take a value, a range lo..hi (see --count, --log) or a list a,b,c.\n\
At most one parameter may be swept. Set OUFET_OUT_DIR to write <command>.<ext> there instead of stdout.")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Mean exit time from an interval, a ball or its exterior
    MeanExit(MeanExitArgs),
    /// Eigenvalues lambda_n = alpha_n^2 of the backward operator
    Spectrum(SpectrumArgs),
    /// Survival probability S(z0, t) from the spectral sum
    Survival(SpectralArgs),
    /// First-exit-time density q(z0, t) from the spectral sum
    Density(SpectralArgs),
    /// Moment-generating function <exp(-s tau)>
    Mgf(MgfArgs),
    /// Probability of leaving the interval through its upper end
    Splitting(SplittingArgs),
    /// First passage to a single level
    SingleBarrier(SingleBarrierArgs),
    /// Propagator of the quadratic double-well potential
    DoubleWell(DoubleWellArgs),
    /// First exit through the expanding boundary sqrt(2 b (t + t0))
    SqrtBoundary(SqrtBoundaryArgs),
    /// Survival of the subdiffusive (CTRW) trapped walk
    Ctrw(CtrwArgs),
    /// Monte Carlo exit times, one row per path
    Simulate(SimulateArgs),
    /// Write the data behind every figure panel with a manifest
    FigurePack(FigurePackArgs),
    #[command(hide = true)]
    Specfun {
        #[command(subcommand)]
        op: SpecfunOp,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Pretty,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// JSON object of flag values (keys are flag names); command-line flags win
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Output file [default: $OUFET_OUT_DIR/<command>.<ext>, else stdout]
    #[arg(long, short, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct SweepArgs {
    /// Number of points in a range
    #[arg(long, default_value_t = 41)]
    pub count: usize,
    /// Space range points geometrically
    #[arg(long)]
    pub log: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Geom {
    Interval,
    Interior,
    Exterior,
    ExteriorForced,
}

fn param(s: &str) -> Result<Param, String> {
    Param::parse(s)
}

#[derive(Args, Debug)]
pub struct MeanExitArgs {
    #[arg(long, value_enum, default_value = "interval")]
    pub geometry: Geom,
    /// Trap strength k L^2 / (2 kB T)
    #[arg(long, default_value = "0..10", value_parser = param)]
    pub kappa: Param,
    /// Force F0 / (k L)
    #[arg(long, default_value = "0", value_parser = param)]
    pub phi: Param,
    /// Start x0 / L
    #[arg(long, default_value = "0", value_parser = param)]
    pub z0: Param,
    #[arg(long, default_value_t = 1)]
    pub d: u32,
    /// Add the large-kappa approximation as a column (interval only)
    #[arg(long)]
    pub asymptotic: bool,
    /// Trap stiffness in N/m; switches to physical units (needs --length)
    #[arg(long, value_parser = param)]
    pub stiffness: Option<Param>,
    /// Half-width or radius L in m
    #[arg(long, value_parser = param)]
    pub length: Option<Param>,
    /// Tracer radius in m (Stokes drag)
    #[arg(long, default_value = "1e-6", value_parser = param)]
    pub bead_radius: Param,
    /// Viscosity in Pa s
    #[arg(long, default_value = "1e-3", value_parser = param)]
    pub viscosity: Param,
    /// Temperature in K
    #[arg(long, default_value = "300", value_parser = param)]
    pub temperature: Param,
    /// Constant force in N
    #[arg(long, default_value = "0", value_parser = param)]
    pub force: Param,
    #[command(flatten)]
    pub sweep: SweepArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct SpectrumArgs {
    #[arg(long, value_enum, default_value = "interior")]
    pub geometry: Geom,
    #[arg(long, default_value = "0..20", value_parser = param)]
    pub kappa: Param,
    #[arg(long, default_value = "0", value_parser = param)]
    pub phi: Param,
    #[arg(long, default_value_t = 3)]
    pub d: u32,
    /// Number of eigenvalues
    #[arg(long, default_value_t = 3)]
    pub modes: usize,
    /// Also write the full basis (roots, weights, diagnostics) as JSON; single point only
    #[arg(long, value_name = "PATH")]
    pub basis_json: Option<PathBuf>,
    #[command(flatten)]
    pub sweep: SweepArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct SpectralArgs {
    #[arg(long, value_enum, default_value = "interval")]
    pub geometry: Geom,
    #[arg(long, default_value = "1", value_parser = param)]
    pub kappa: Param,
    #[arg(long, default_value = "0", value_parser = param)]
    pub phi: Param,
    #[arg(long, default_value = "-1..1", value_parser = param)]
    pub z0: Param,
    /// Time in units of L^2/D; a list gives one column per time
    #[arg(long, alias = "times", default_value = "1", value_parser = param)]
    pub t: Param,
    #[arg(long, default_value_t = 1)]
    pub d: u32,
    /// Terms kept in the spectral sum
    #[arg(long, default_value_t = 30)]
    pub modes: usize,
    #[command(flatten)]
    pub sweep: SweepArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct MgfArgs {
    #[arg(long, value_enum, default_value = "interval")]
    pub geometry: Geom,
    #[arg(long, default_value = "1", value_parser = param)]
    pub kappa: Param,
    #[arg(long, default_value = "0", value_parser = param)]
    pub phi: Param,
    #[arg(long, default_value = "-1..1", value_parser = param)]
    pub z0: Param,
    /// Laplace variable in units of D/L^2; a list gives one column per value
    #[arg(long, default_value = "1", value_parser = param)]
    pub s: Param,
    #[arg(long, default_value_t = 1)]
    pub d: u32,
    #[command(flatten)]
    pub sweep: SweepArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct SplittingArgs {
    #[arg(long, default_value = "1", value_parser = param)]
    pub kappa: Param,
    #[arg(long, default_value = "0", value_parser = param)]
    pub phi: Param,
    #[arg(long, default_value = "-1..1", value_parser = param)]
    pub z0: Param,
    #[command(flatten)]
    pub sweep: SweepArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BarrierQuantity {
    Density,
    Survival,
    Mgf,
}

#[derive(Args, Debug)]
pub struct SingleBarrierArgs {
    /// Stiffness
    #[arg(long, default_value = "1", value_parser = param)]
    pub k: Param,
    /// Drag coefficient
    #[arg(long, default_value = "1", value_parser = param)]
    pub gamma: Param,
    #[arg(long, default_value = "1", value_parser = param)]
    pub diffusion: Param,
    /// Barrier position (>= 0)
    #[arg(long, default_value = "1", value_parser = param)]
    pub ell: Param,
    #[arg(long, default_value = "0", value_parser = param)]
    pub x0: Param,
    #[arg(long, default_value = "0.05..5", value_parser = param)]
    pub t: Param,
    #[arg(long, default_value = "0..5", value_parser = param)]
    pub s: Param,
    #[arg(long, value_enum, default_value = "density")]
    pub quantity: BarrierQuantity,
    /// Terms kept in the series
    #[arg(long, default_value_t = 60)]
    pub modes: usize,
    #[command(flatten)]
    pub sweep: SweepArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct DoubleWellArgs {
    /// Left minimum at -x1
    #[arg(long, default_value = "1", value_parser = param)]
    pub x1: Param,
    /// Right minimum at x2
    #[arg(long, default_value = "1", value_parser = param)]
    pub x2: Param,
    #[arg(long, default_value = "2", value_parser = param)]
    pub kappa1: Param,
    #[arg(long, default_value = "1", value_parser = param)]
    pub kappa2: Param,
    #[arg(long, default_value = "1", value_parser = param)]
    pub diffusion: Param,
    #[arg(long, default_value = "2", value_parser = param)]
    pub x0: Param,
    #[arg(long, default_value = "-3..4", value_parser = param)]
    pub x: Param,
    /// Times; a list gives one column per time
    #[arg(long, alias = "times", default_value = "0.5,2", value_parser = param)]
    pub t: Param,
    #[arg(long, default_value_t = 50)]
    pub modes: usize,
    #[command(flatten)]
    pub sweep: SweepArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SqrtQuantity {
    Density,
    Survival,
    Moment,
}

#[derive(Args, Debug)]
pub struct SqrtBoundaryArgs {
    #[arg(long, default_value_t = 1)]
    pub d: u32,
    #[arg(long, default_value = "0.5", value_parser = param)]
    pub b: Param,
    #[arg(long, default_value = "1", value_parser = param)]
    pub diffusion: Param,
    #[arg(long, default_value = "1", value_parser = param)]
    pub t0: Param,
    /// Start as a fraction of the initial boundary sqrt(2 b t0)
    #[arg(long, default_value = "0", value_parser = param)]
    pub z0: Param,
    #[arg(long, default_value = "0.05..20", value_parser = param)]
    pub t: Param,
    /// Exponent of the moment <(tau + t0)^nu>
    #[arg(long, default_value = "0..0.9", value_parser = param)]
    pub nu: Param,
    #[arg(long, value_enum, default_value = "density")]
    pub quantity: SqrtQuantity,
    #[arg(long, default_value_t = 30)]
    pub modes: usize,
    #[command(flatten)]
    pub sweep: SweepArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct CtrwArgs {
    #[arg(long, value_enum, default_value = "interval")]
    pub geometry: Geom,
    #[arg(long, default_value = "1", value_parser = param)]
    pub kappa: Param,
    #[arg(long, default_value = "0", value_parser = param)]
    pub phi: Param,
    #[arg(long, default_value = "0", value_parser = param)]
    pub z0: Param,
    /// Anomalous exponent in (0, 1]
    #[arg(long, default_value = "0.5", value_parser = param)]
    pub alpha: Param,
    /// Generalised diffusion coefficient, in units where L = 1
    #[arg(long, default_value = "1", value_parser = param)]
    pub d_alpha: Param,
    #[arg(long, alias = "times", default_value = "0.01..100", value_parser = param)]
    pub t: Param,
    #[arg(long, default_value_t = 1)]
    pub d: u32,
    #[arg(long, default_value_t = 30)]
    pub modes: usize,
    #[command(flatten)]
    pub sweep: SweepArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BoundaryArg {
    Interval,
    Ball,
    Exterior,
    Barrier,
    Sqrt,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Bridge,
    Ar1,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value = "interval")]
    pub boundary: BoundaryArg,
    #[arg(long, default_value_t = 1.0)]
    pub kappa: f64,
    #[arg(long, default_value_t = 0.0)]
    pub phi: f64,
    #[arg(long, default_value_t = 1)]
    pub d: u32,
    /// Start (first coordinate), in units of L
    #[arg(long, default_value_t = 0.0)]
    pub z0: f64,
    /// Ball or exterior radius
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    /// Barrier level
    #[arg(long, default_value_t = 1.0)]
    pub level: f64,
    /// Growth rate of the square-root boundary
    #[arg(long, default_value_t = 0.5)]
    pub b: f64,
    #[arg(long, default_value_t = 1.0)]
    pub t0: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub delta: f64,
    #[arg(long, default_value_t = 10_000)]
    pub paths: usize,
    /// Paths still inside at t_max are censored
    #[arg(long, default_value_t = 30.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "bridge")]
    pub scheme: SchemeArg,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct FigurePackArgs {
    /// Output directory [default: $OUFET_OUT_DIR, else ./figures]
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Monte Carlo paths behind the double-well histograms
    #[arg(long, default_value_t = 100_000)]
    pub paths: usize,
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum SpecfunOp {
    /// Evaluate one special function and print JSON
    Eval(SpecfunEvalArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SpecialFunction {
    KummerM,
    KummerMDa,
    TricomiU,
    TricomiUDa,
    ParabolicD,
    ParabolicDDnu,
    Gamma,
    Lgamma,
    Digamma,
    Erf,
    Erfc,
    Erfcx,
    Erfi,
    Dawson,
    BesselJ,
    MittagLeffler,
}

#[derive(Args, Debug)]
pub struct SpecfunEvalArgs {
    pub function: SpecialFunction,
    #[arg(long, allow_negative_numbers = true)]
    pub a: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub b: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub z: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub nu: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub x: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
}
