use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ikm::cli::{self, CliError, EXIT_USAGE};

/// Inertial Krasnoselskii-Mann experiments and certificates.
#[derive(Parser)]
#[command(name = "ikm", version)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configured experiment and write its trace CSV.
    Run { config: PathBuf },
    /// Evaluate the parameter conditions for constant alpha and lambda.
    CheckParams {
        /// Inertia, in [0, 1).
        #[arg(long)]
        alpha: f64,
        /// Relaxation, > 0.
        #[arg(long)]
        lambda: f64,
        /// Quasi-contraction factor of T; setting q or xi adds the H2 check.
        #[arg(long)]
        q: Option<f64>,
        /// Contraction weight, in [0, 1]; defaults to 1 when only q is set.
        #[arg(long)]
        xi: Option<f64>,
        /// Averagedness constant of T; H1 is checked on gamma * lambda. Defaults to 1.
        #[arg(long)]
        gamma: Option<f64>,
    },
    /// Tabulate lambda_{alpha,q} on a grid.
    LambdaGrid {
        /// Grid rows: alpha = i / alpha_steps.
        #[arg(long, default_value_t = 100)]
        alpha_steps: usize,
        /// Grid columns: q = j / (q_steps + 1).
        #[arg(long, default_value_t = 99)]
        q_steps: usize,
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare schedules listed in `sweep.schedules` on one problem.
    Sweep { config: PathBuf },
    /// Re-check an exported trace CSV.
    Certify { trace: PathBuf },
}

fn dispatch(cmd: Command) -> Result<i32, CliError> {
    let stdout = io::stdout();
    let stderr = io::stderr();
    let (mut out, mut err) = (stdout.lock(), stderr.lock());
    match cmd {
        Command::Run { config } => cli::cmd_run(&config, &mut out, &mut err),
        Command::CheckParams {
            alpha,
            lambda,
            q,
            xi,
            gamma,
        } => cli::cmd_check_params(alpha, lambda, q, xi, gamma, &mut out),
        Command::LambdaGrid {
            alpha_steps,
            q_steps,
            out: path,
        } => cli::cmd_lambda_grid(alpha_steps, q_steps, path.as_deref(), &mut out),
        Command::Sweep { config } => cli::cmd_sweep(&config, &mut out, &mut err),
        Command::Certify { trace } => cli::cmd_certify(&trace, &mut out),
    }
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            return ExitCode::from(code as u8);
        }
    };
    let code = match dispatch(args.command) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(io::stderr(), "ikm: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
