//! `capa`: analytical and simulated matched-filter SNR distributions of a
//! one-dimensional continuous aperture array.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod error;
mod output;
mod scenario;
mod validate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use error::CliError;
use scenario::{read_config_file, Model, Sampler, ScenarioSpec};

#[derive(Parser, Debug)]
#[command(
    name = "capa",
    version,
    about = "SNR distribution of continuous aperture arrays under correlated Rayleigh fading"
)]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// Correlation model: sinc or jakes (ray-based).
    #[arg(long, global = true)]
    model: Option<Model>,
    /// Aperture length W in metres.
    #[arg(long, global = true, allow_hyphen_values = true)]
    width: Option<f64>,
    /// Carrier frequency in Hz.
    #[arg(long, global = true, allow_hyphen_values = true)]
    freq: Option<f64>,
    /// Mean SNR of a 1 m aperture, in dB.
    #[arg(long, global = true, allow_hyphen_values = true)]
    snr_db: Option<f64>,
    /// Number of KL modes N.
    #[arg(long, global = true)]
    modes: Option<usize>,
    /// Number of rays R for the jakes model.
    #[arg(long, global = true)]
    rays: Option<usize>,
    /// Monte Carlo replicates.
    #[arg(long, global = true)]
    reps: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// kl, grid, ray or discrete[:fraction].
    #[arg(long, global = true)]
    sampler: Option<Sampler>,
    /// Fraction of the aperture covered by discrete elements.
    #[arg(long, global = true, allow_hyphen_values = true)]
    energy_fraction: Option<f64>,
    /// Number of discrete elements.
    #[arg(long, global = true)]
    elements: Option<usize>,
    /// Grid points for the grid, ray and discrete samplers.
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Output file (default: $CAPA_OUT_DIR/<command>.csv, else stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// key=value scenario file; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// KL eigenvalues and cumulative energy.
    Eigen,
    /// PDF and CDF of the gamma-corrected model and the gamma baseline.
    Dist {
        /// Number of x points.
        #[arg(long)]
        points: Option<usize>,
        /// Right end of the x grid (default mean + 10 std).
        #[arg(long, allow_hyphen_values = true)]
        x_max: Option<f64>,
    },
    /// Outage probability over a threshold grid in dB.
    Outage {
        #[arg(long, allow_hyphen_values = true)]
        th_min: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        th_max: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        th_step: Option<f64>,
        /// Add a Monte Carlo column from the selected sampler.
        #[arg(long)]
        mc: bool,
    },
    /// Monte Carlo quantiles and summary statistics.
    Simulate,
    /// Run the oracle cross-checks.
    Validate {
        /// Perturb the leading closed-form eigenvalue by this relative amount.
        #[arg(long, hide = true)]
        corrupt_eigenvalue: Option<f64>,
    },
}

/// Values given on the command line; `None` falls through to the config file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub model: Option<Model>,
    pub width: Option<f64>,
    pub freq: Option<f64>,
    pub snr_db: Option<f64>,
    pub modes: Option<usize>,
    pub rays: Option<usize>,
    pub reps: Option<usize>,
    pub seed: Option<u64>,
    pub sampler: Option<Sampler>,
    pub energy_fraction: Option<f64>,
    pub elements: Option<usize>,
    pub grid: Option<usize>,
    pub out: Option<PathBuf>,
    pub points: Option<usize>,
    pub x_max: Option<f64>,
    pub th_min: Option<f64>,
    pub th_max: Option<f64>,
    pub th_step: Option<f64>,
    pub mc: bool,
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let c = cli.common;
    let mut flags = Overrides {
        model: c.model,
        width: c.width,
        freq: c.freq,
        snr_db: c.snr_db,
        modes: c.modes,
        rays: c.rays,
        reps: c.reps,
        seed: c.seed,
        sampler: c.sampler,
        energy_fraction: c.energy_fraction,
        elements: c.elements,
        grid: c.grid,
        out: c.out,
        ..Default::default()
    };
    match &cli.command {
        Command::Dist { points, x_max } => {
            flags.points = *points;
            flags.x_max = *x_max;
        }
        Command::Outage {
            th_min,
            th_max,
            th_step,
            mc,
        } => {
            flags.th_min = *th_min;
            flags.th_max = *th_max;
            flags.th_step = *th_step;
            flags.mc = *mc;
        }
        _ => {}
    }
    let file = match &c.config {
        Some(p) => read_config_file(p)?,
        None => Default::default(),
    };
    let spec = ScenarioSpec::resolve(&flags, file)?;
    match cli.command {
        Command::Eigen => commands::eigen(&spec).map(|_| true),
        Command::Dist { .. } => commands::dist(&spec).map(|_| true),
        Command::Outage { .. } => commands::outage(&spec).map(|_| true),
        Command::Simulate => commands::simulate(&spec).map(|_| true),
        Command::Validate { corrupt_eigenvalue } => validate::run(&spec, corrupt_eigenvalue),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("capa: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
