//! Command-line surface. Every numeric flag is optional so that values from
//! a config file apply unless a flag is given.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "delayfront", version, about = "Fronts of the delayed monostable reaction-diffusion equation")]
pub struct Cli {
    /// Directory for CSV/JSON outputs and the run manifest
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// TOML file of `key = value` parameters; flags take precedence
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Not supported: every command is deterministic
    #[arg(long, global = true, hide = true)]
    pub seed: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Real characteristic roots at both equilibria
    Roots(RootsArgs),
    /// Speed curves over a delay grid
    Curves(CurvesArgs),
    /// Minimal speed, transition delays and limits of the piecewise-linear model
    Toy(ToyArgs),
    /// Build and export a front profile
    Profile(ProfileArgs),
    /// Fundamental solutions psi, theta and N
    Kernel(KernelArgs),
    /// One Crank-Nicolson run from step initial data
    Simulate(SimulateArgs),
    /// Analytic and simulated speeds for h = 0.5, 1, ..., 6
    Table(TableArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Roots(_) => "roots",
            Command::Curves(_) => "curves",
            Command::Toy(_) => "toy",
            Command::Profile(_) => "profile",
            Command::Kernel(_) => "kernel",
            Command::Simulate(_) => "simulate",
            Command::Table(_) => "table",
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct RootsArgs {
    /// Slope g'(0) of the birth law
    #[arg(long)]
    pub k: Option<f64>,
    /// Wave speed
    #[arg(long)]
    pub c: Option<f64>,
    /// Delay
    #[arg(long)]
    pub h: Option<f64>,
    /// Slope g'(kappa) at the positive equilibrium
    #[arg(long, allow_hyphen_values = true)]
    pub slope_kappa: Option<f64>,
    /// Positive equilibrium
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Junction point of the birth law
    #[arg(long)]
    pub theta: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct CurvesArgs {
    #[arg(long)]
    pub k: Option<f64>,
    /// Last delay of the grid
    #[arg(long)]
    pub h_max: Option<f64>,
    /// Grid spacing
    #[arg(long)]
    pub h_step: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct ToyArgs {
    #[arg(long)]
    pub k: Option<f64>,
    /// Delay at which to report c*, c#, the regime and T1, T2
    #[arg(long)]
    pub h: Option<f64>,
    /// Also report the large-delay limits
    #[arg(long)]
    pub limits: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct ProfileArgs {
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long)]
    pub h: Option<f64>,
    /// Speed; defaults to c*(h)
    #[arg(long)]
    pub c: Option<f64>,
    /// End of the integration window
    #[arg(long)]
    pub t_max: Option<f64>,
    /// Largest integration step
    #[arg(long)]
    pub grid_step: Option<f64>,
    /// Length of tail exported left of the junction
    #[arg(long)]
    pub tail_span: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct KernelArgs {
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long)]
    pub h: Option<f64>,
    /// Speed; defaults to c*(h)
    #[arg(long)]
    pub c: Option<f64>,
    /// Half-width of the grid; defaults to a 1e-10 decay of the slowest mode
    #[arg(long)]
    pub t_max: Option<f64>,
    /// Grid step; defaults to ch/200 clamped to [1e-3, 5e-3]
    #[arg(long)]
    pub step: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub x_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub x_max: Option<f64>,
    #[arg(long)]
    pub dx: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub bc_left: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub bc_right: Option<f64>,
    /// Tracked level
    #[arg(long, allow_hyphen_values = true)]
    pub level: Option<f64>,
    /// Position of the initial step
    #[arg(long, allow_hyphen_values = true)]
    pub step_at: Option<f64>,
    /// Comma-separated snapshot times
    #[arg(long, value_delimiter = ',')]
    pub snapshots: Option<Vec<f64>>,
    /// Trailing fraction of the trajectory used for the speed fit
    #[arg(long)]
    pub window_fraction: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct TableArgs {
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long)]
    pub dx: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub x_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub x_max: Option<f64>,
}
