use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cmop_cli::experiment::{
    run_check, run_experiment, run_sweep, CheckOptions, RunOptions, SweepOptions,
};
use cmop_cli::instance::{DEFAULT_ETA, DEFAULT_K, DEFAULT_M, DEFAULT_N, DEFAULT_RANGE, DEFAULT_SEED};
use cmop_cli::{gen_instance, AlphaSpec, CliError, Method, MonitorTag, Source, Status};

#[derive(Parser)]
#[command(name = "cmop", version, about = "Gradient and projected-gradient solvers for complex matrix least squares")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded random instance.
    Gen {
        #[arg(long, default_value_t = DEFAULT_M)]
        m: usize,
        #[arg(long, default_value_t = DEFAULT_N)]
        n: usize,
        #[arg(long, default_value_t = DEFAULT_K)]
        k: usize,
        /// Components of H and A are uniform in [-range, range].
        #[arg(long, default_value_t = DEFAULT_RANGE)]
        range: f64,
        #[arg(long, default_value_t = DEFAULT_ETA)]
        eta: f64,
        #[arg(long, env = "CMOP_SEED", default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Output path; stdout when absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run one solver and print a summary line.
    Solve {
        instance: PathBuf,
        #[arg(long, value_enum, default_value = "pgd")]
        method: Method,
        #[command(flatten)]
        run: RunArgs,
        /// Trace CSV output.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Solution JSON output.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Measure per-iteration wall time (traces are then not reproducible).
        #[arg(long)]
        timing: bool,
    },
    /// Evaluate convergence and optimality monitors.
    Check {
        instance: PathBuf,
        #[arg(long, value_enum, default_value = "pgd")]
        source: Source,
        /// Solution JSON for --source file.
        #[arg(long)]
        w: Option<PathBuf>,
        /// Trace CSV for --source file.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Constrained optimum for thm3; computed by the oracle when absent.
        #[arg(long)]
        w_opt: Option<PathBuf>,
        #[arg(long, value_enum, value_delimiter = ',', required = true)]
        monitors: Vec<MonitorTag>,
        #[command(flatten)]
        run: RunArgs,
        /// Seed of the sampled monitors.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run one method over several step sizes.
    Sweep {
        instance: PathBuf,
        #[arg(long, value_enum, default_value = "gd")]
        method: Method,
        /// Comma-separated numbers or f<fraction> entries.
        #[arg(long, value_delimiter = ',', required = true)]
        alphas: Vec<AlphaSpec>,
        #[arg(long, default_value_t = 1e-14)]
        tau: f64,
        #[arg(long, default_value_t = 1_000_000)]
        max_iter: usize,
        /// Relative gap to the limiting objective counted as reached.
        #[arg(long, default_value_t = 1e-6)]
        threshold: f64,
        #[arg(long)]
        radius_is_eta: bool,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Step size: a number, or f<frac> for that fraction of the guaranteed interval.
    #[arg(long, default_value = "f0.5")]
    alpha: AlphaSpec,
    #[arg(long, default_value_t = 1e-14)]
    tau: f64,
    #[arg(long, default_value_t = 1_000_000)]
    max_iter: usize,
    /// Treat eta as the row-norm radius instead of the row power budget.
    #[arg(long)]
    radius_is_eta: bool,
}

fn run(cli: Cli) -> Result<Status, CliError> {
    match cli.command {
        Command::Gen {
            m,
            n,
            k,
            range,
            eta,
            seed,
            output,
        } => {
            let file = gen_instance(m, n, k, range, eta, seed)?;
            match output {
                Some(path) => file.write(&path)?,
                None => print!("{}", file.to_json()),
            }
            Ok(Status::Ok)
        }
        Command::Solve {
            instance,
            method,
            run,
            trace,
            output,
            timing,
        } => {
            let opts = RunOptions {
                tau: run.tau,
                max_iter: run.max_iter,
                timing,
                ..RunOptions::new(method, run.alpha)
            };
            let outcome = run_experiment(&instance, &opts, run.radius_is_eta, trace.as_deref(), output.as_deref())?;
            if let Some(w) = outcome.warning() {
                eprintln!("{w}");
            }
            println!("{}", outcome.summary_line());
            Ok(if outcome.diverged() { Status::Diverged } else { Status::Ok })
        }
        Command::Check {
            instance,
            source,
            w,
            trace,
            w_opt,
            monitors,
            run,
            seed,
            report,
        } => {
            let opts = CheckOptions {
                alpha: run.alpha,
                tau: run.tau,
                max_iter: run.max_iter,
                w_path: w,
                trace_path: trace,
                w_opt_path: w_opt,
                seed,
                radius_is_eta: run.radius_is_eta,
                ..CheckOptions::new(source, monitors)
            };
            let outcome = run_check(&instance, &opts, report.as_deref())?;
            for line in outcome.lines.iter().filter(|l| l.starts_with("# monitor")) {
                println!("{}", &line[2..]);
            }
            Ok(if outcome.passed() { Status::Ok } else { Status::MonitorFailed })
        }
        Command::Sweep {
            instance,
            method,
            alphas,
            tau,
            max_iter,
            threshold,
            radius_is_eta,
            out_dir,
        } => {
            let opts = SweepOptions {
                tau,
                max_iter,
                threshold,
                ..SweepOptions::new(method, alphas)
            };
            let sweep = run_sweep(&instance, &opts, radius_is_eta, &out_dir)?;
            print!("{}", sweep.summary_csv());
            Ok(Status::Ok)
        }
    }
}

fn main() -> ExitCode {
    let status = match run(Cli::parse()) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            Status::InputError
        }
    };
    ExitCode::from(status.code() as u8)
}
