use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use odefilter::fourier::FourierParams;
use odefilter::hybrid::{TrainNoise, TrainPolicy};
use odefilter::runner::{
    cmd_plot, cmd_solve, convergence_study, format_convergence, Method, RunConfig,
};
use odefilter::taylor::TaylorParams;
use odefilter::Error;

#[derive(Parser)]
#[command(
    name = "odefilter",
    version,
    about = "Gaussian ODE filtering with Taylor and Fourier priors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a problem and write the trajectory as CSV.
    Solve(SolveArgs),
    /// Render a trajectory CSV as an SVG line chart.
    Plot {
        /// Input CSV written by `solve`.
        input: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Global error and fitted order of the Taylor filter over several step sizes.
    Converge(ConvergeArgs),
}

#[derive(Args)]
struct ModelArgs {
    /// vdp, fhn, linear, constant or cosine
    #[arg(long, default_value = "vdp")]
    problem: String,
    /// Final time; defaults to the problem's horizon.
    #[arg(long = "T")]
    t_end: Option<f64>,
    /// Number of modeled derivatives of the Taylor prior.
    #[arg(long, default_value_t = 1)]
    q: usize,
    #[arg(long = "sigma2-taylor", default_value_t = 1.0)]
    sigma2_taylor: f64,
    /// Measurement noise of the ODE filter.
    #[arg(long = "R", default_value_t = 0.0)]
    r: f64,
    /// Use (x1 + a - b x2) / tau as the FitzHugh–Nagumo recovery equation.
    #[arg(long)]
    fhn_standard: bool,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// taylor or hybrid
    #[arg(long, default_value = "hybrid")]
    method: String,
    #[arg(long, default_value_t = 0.01)]
    h: f64,
    /// Prediction time of the hybrid solver; defaults to 3T/4.
    #[arg(long = "Tp")]
    t_pred: Option<f64>,
    /// Fourier truncation order.
    #[arg(long = "J", default_value_t = 3)]
    order: usize,
    #[arg(long, default_value_t = 1.0)]
    w0: f64,
    /// Periodic-kernel lengthscale.
    #[arg(long, default_value_t = 3.0)]
    l: f64,
    #[arg(long = "sigma2-fourier", default_value_t = 1.0)]
    sigma2_fourier: f64,
    /// values-all, stride:<k> or values-and-derivatives
    #[arg(long = "train-policy", default_value = "values-all")]
    train_policy: String,
    /// jitter:<eps> or taylor-variance
    #[arg(long = "train-noise", default_value = "jitter:1e-10")]
    train_noise: String,
    /// Append ref_i columns holding a reference solution.
    #[arg(long)]
    reference: bool,
    /// Output CSV path; stdout when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ConvergeArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Comma-separated, strictly decreasing step sizes.
    #[arg(long = "h", value_delimiter = ',', num_args = 1.., required = true)]
    steps: Vec<f64>,
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Solve(args) => {
            let config = RunConfig {
                problem: args.model.problem,
                method: args.method.parse::<Method>()?,
                h: args.h,
                t_end: args.model.t_end,
                t_pred: args.t_pred,
                taylor: TaylorParams::new(args.model.q, args.model.sigma2_taylor)?,
                fourier: FourierParams::new(args.order, args.w0, args.l, args.sigma2_fourier)?,
                r: args.model.r,
                train_policy: args.train_policy.parse::<TrainPolicy>()?,
                train_noise: args.train_noise.parse::<TrainNoise>()?,
                fhn_standard: args.model.fhn_standard,
                with_reference: args.reference,
            };
            let csv = cmd_solve(&config)?;
            match args.output {
                Some(path) => fs::write(path, csv)?,
                None => std::io::stdout().lock().write_all(&csv)?,
            }
        }
        Command::Plot { input, output } => {
            let text = fs::read_to_string(input)?;
            fs::write(output, cmd_plot(&text)?)?;
        }
        Command::Converge(args) => {
            let config = RunConfig {
                problem: args.model.problem,
                t_end: args.model.t_end,
                fhn_standard: args.model.fhn_standard,
                ..RunConfig::default()
            };
            let spec = config.spec()?;
            let taylor = TaylorParams::new(args.model.q, args.model.sigma2_taylor)?;
            let study = convergence_study(&spec, taylor, args.model.r, &args.steps)?;
            print!("{}", format_convergence(&study));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
