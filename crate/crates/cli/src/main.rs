//! `lcf`: synthesize multi-cycle reaction networks, simulate them, certify
//! their limit cycles and replicate the reference figures.
//!
//! Exit codes: 0 success or pass, 1 usage or configuration error, 2 failed
//! certification (or a simulation in which every seed failed).

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "lcf", version, about = "Reaction networks with many stable limit cycles")]
pub struct Cli {
    /// Directory for generated files; LCF_OUTPUT_DIR takes precedence.
    #[arg(long, global = true, default_value = "lcf-out")]
    pub output_dir: PathBuf,
    /// Form of the summary printed on stdout; `csv` also selects CSV
    /// trajectories in `simulate` (the default there).
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Run batches on one thread.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Args, Debug, Clone)]
pub struct SystemArgs {
    /// Number of centers; defaults to the length of --centers.
    #[arg(long = "K", value_name = "K")]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub eps: f64,
    #[arg(long, default_value_t = 0.01)]
    pub delta: f64,
    /// Flat list `a1,b1,a2,b2,...`; defaults to a_i = b_i = 8iK.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub centers: Option<Vec<f64>>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct SolverArgs {
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[arg(long)]
    pub abs_tol: Option<f64>,
    #[arg(long)]
    pub max_step: Option<f64>,
    /// Spacing of the reported samples.
    #[arg(long)]
    pub stride: Option<f64>,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    DormandPrince,
    Rosenbrock,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MergeArg {
    PerTerm,
    MergeSharedReactants,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SystemArg {
    Planar,
    XfactoredPlanar,
    Naive,
    Tikhonov,
    Factored,
    SecondOrder,
    Thm3,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write the network of theorem 1 or 2, or the polynomial system of
    /// theorem 3.
    Synthesize {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        theorem: u8,
        #[command(flatten)]
        system: SystemArgs,
        /// Realization of the theorem 1 network.
        #[arg(long, value_enum, default_value_t = MergeArg::MergeSharedReactants)]
        merge_policy: MergeArg,
        /// Refuse centers whose rate constants exceed 2^53.
        #[arg(long)]
        strict: bool,
    },
    /// Integrate a system from a set of seeds; one CSV per seed plus
    /// `index.json`.
    Simulate {
        #[arg(long, value_enum, default_value_t = SystemArg::Planar)]
        system: SystemArg,
        #[command(flatten)]
        params: SystemArgs,
        /// Mass-action network in text or JSON form instead of --system.
        #[arg(long, conflicts_with = "figure")]
        crn: Option<PathBuf>,
        /// Use a figure configuration (system, centers, seeds, settings).
        #[arg(long)]
        figure: Option<String>,
        /// Seed file: one `x,y` or full state per line.
        #[arg(long)]
        seeds: Option<PathBuf>,
        /// Fast variables start at this multiple of their slow-manifold value.
        #[arg(long, default_value_t = 1.0)]
        init_scale: f64,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Certify trapping annuli and count cycles; exit 2 unless the verdict
    /// is pass.
    Verify {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[command(flatten)]
        params: SystemArgs,
        #[arg(long, default_value_t = 720)]
        flux_samples: usize,
        #[arg(long, default_value_t = 120)]
        grid_n: usize,
        #[arg(long)]
        cluster_tol: Option<f64>,
        #[arg(long)]
        transient: Option<f64>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Run a reference figure configuration (1a, 1b, 2a, 2b, 3a, 3b).
    ReplicateFigure {
        figure: String,
        /// Skip the per-seed trajectory files.
        #[arg(long)]
        summary_only: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Planar,
    XfactoredPlanar,
    Tikhonov,
    Factored,
    SecondOrder,
    Thm3,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match commands::run(&cli) {
        Ok(commands::Status::Success) => ExitCode::SUCCESS,
        Ok(commands::Status::Failed) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
