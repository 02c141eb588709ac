mod commands;
mod output;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use settings::{GridRange, PointArgs, Solver};

#[derive(Debug, Parser)]
#[command(
    name = "mdhopf",
    version,
    about = "Double Hopf analysis of a predator-prey model with memory-based diffusion"
)]
pub struct Cli {
    /// Model file (TOML). Verb sections in the same file supply defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads for parallel sweeps (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Seed for randomized sweeps and noisy initial data.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub verb: Verb,
}

#[derive(Debug, Subcommand)]
pub enum Verb {
    /// Positive equilibrium and Jacobian.
    Equilibrium,
    /// Stability verdicts on a (d21, tau) grid with Hopf curve overlays.
    StabilityMap {
        #[arg(long)]
        d21: Option<GridRange>,
        #[arg(long)]
        tau: Option<GridRange>,
        /// Hopf curves to overlay, e.g. `2+1`; repeatable.
        #[arg(long = "curve")]
        curves: Vec<settings::Curve>,
    },
    /// Sample Hopf curves tau_{n,j}^± over a d21 range.
    HopfCurves {
        #[arg(long)]
        d21: Option<GridRange>,
        #[arg(long)]
        n_max: Option<u32>,
        #[arg(long)]
        j_max: Option<u32>,
    },
    /// Locate the crossing of two Hopf curves.
    DoubleHopf {
        #[command(flatten)]
        point: PointArgs,
    },
    /// Normal form coefficients at the double Hopf point.
    NormalForm {
        #[command(flatten)]
        point: PointArgs,
        #[arg(long, value_enum)]
        solver: Option<Solver>,
    },
    /// Classify (d21, tau) points by the amplitude equations.
    Classify {
        #[command(flatten)]
        point: PointArgs,
        /// A single point as `d21:tau`; repeatable.
        #[arg(long = "at", value_parser = settings::parse_pair)]
        at: Vec<[f64; 2]>,
        #[arg(long)]
        d21: Option<GridRange>,
        #[arg(long)]
        tau: Option<GridRange>,
    },
    /// Integrate the delayed PDE at the model file's (d21, tau).
    Simulate {
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        amp_u: Option<f64>,
        #[arg(long)]
        amp_v: Option<f64>,
        /// Wavenumber of the initial perturbation cos(k x).
        #[arg(long)]
        k: Option<f64>,
        #[arg(long)]
        noise: Option<f64>,
        #[arg(long)]
        tail: Option<f64>,
    },
    /// Double Hopf point, normal form, region lines and a classification grid.
    Pipeline {
        #[command(flatten)]
        point: PointArgs,
        #[arg(long, value_enum)]
        solver: Option<Solver>,
    },
    /// Run the acceptance criteria and report pass/fail per criterion.
    Validate {
        /// Include the simulation criteria (minutes to hours).
        #[arg(long)]
        simulations: bool,
        /// Run only the simulation criteria.
        #[arg(long)]
        simulations_only: bool,
        /// Skip the randomized property suites.
        #[arg(long)]
        no_properties: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
