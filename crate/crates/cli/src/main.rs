//! `platelet`: simulate, summarize, calibrate and check the deposition model.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::CliError;

#[derive(Debug, Parser)]
#[command(name = "platelet", version, about = "Platelet deposition model and likelihood-free calibration")]
struct Cli {
    /// Master seed; overrides the seed in the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for output files (default: config `out_dir`, else `.`).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the forward model and write the observable series.
    Simulate {
        #[command(flatten)]
        theta: ThetaArgs,
        /// Also write the final platelet stacks as a PGM image.
        #[arg(long)]
        grid_pgm: bool,
    },
    /// Compute the 24 summary statistics of a series CSV.
    Summarize {
        #[arg(long)]
        input: PathBuf,
    },
    /// Approximate the posterior of the model parameters.
    Infer(InferArgs),
    /// Posterior predictive bands from a posterior CSV.
    Predict {
        #[arg(long)]
        posterior: PathBuf,
        #[arg(long)]
        n_draws: Option<usize>,
        #[arg(long)]
        workers: Option<usize>,
        /// Observed series to locate within the bands.
        #[arg(long)]
        observed: Option<PathBuf>,
    },
    /// Compare chunked and dynamic task allocation.
    SchedBench(SchedArgs),
    /// Generate a synthetic observed dataset.
    Synth {
        #[command(flatten)]
        theta: ThetaArgs,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct ThetaArgs {
    /// Parameters as `p_Ag,p_Ad,p_T,p_F,a_T`.
    #[arg(long)]
    theta: Option<String>,
    /// JSON file with fields p_Ag, p_Ad, p_T, p_F, a_T.
    #[arg(long)]
    params: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SamplerArg {
    Rejection,
    Sabc,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StrategyArg {
    Chunked,
    Dynamic,
}

#[derive(Debug, Args)]
struct InferArgs {
    /// Observed series CSV (default: config `observed`).
    #[arg(long)]
    observed: Option<PathBuf>,
    #[arg(long, value_enum)]
    sampler: Option<SamplerArg>,
    #[arg(long)]
    n_particles: Option<usize>,
    #[arg(long)]
    n_steps: Option<usize>,
    /// Acceptance-rate cutoff of the annealing sampler.
    #[arg(long)]
    cutoff: Option<f64>,
    /// Threshold of rejection ABC.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_enum)]
    strategy: Option<StrategyArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, ValueEnum)]
enum DistArg {
    Constant,
    Uniform,
    Lognormal,
    File,
}

#[derive(Debug, Clone, Copy, PartialEq, ValueEnum)]
enum BenchStrategy {
    Chunked,
    Dynamic,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, ValueEnum)]
enum Clock {
    Simulated,
    Real,
}

#[derive(Debug, Args)]
struct SchedArgs {
    /// Number of tasks.
    #[arg(long, default_value_t = 64)]
    m: usize,
    /// Number of workers.
    #[arg(long, default_value_t = 8)]
    n: usize,
    #[arg(long, value_enum, default_value_t = DistArg::Lognormal)]
    dist: DistArg,
    /// Durations file (one number per line) for `--dist file`.
    #[arg(long)]
    durations: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = BenchStrategy::Both)]
    strategy: BenchStrategy,
    #[arg(long, value_enum, default_value_t = Clock::Simulated)]
    clock: Clock,
    /// Wall-clock seconds per unit of duration with `--clock real`.
    #[arg(long, default_value_t = 0.001)]
    time_scale: f64,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.render().to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            CliError::usage(first.trim_start_matches("error: ")).report();
            return ExitCode::from(2);
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            e.report();
            ExitCode::from(e.exit_code())
        }
    }
}
