use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod cli;

#[derive(Parser, Debug)]
#[command(
    name = "caputo",
    version,
    about = "Caputo-in-time Cauchy-Dirichlet solver and regularity checks"
)]
struct Args {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (INI).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `[output] directory`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Halve the space and time steps this many times.
    #[arg(long, global = true, default_value_t = 0)]
    refine: u32,
    /// Seed for the randomized probes.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Solve and write the solution CSV and a residual report.
    Solve,
    /// Check the compatibility conditions on the data.
    CheckCompat,
    /// Measure the regularity of the computed solution.
    VerifyRegularity,
    /// Cross-check the scalar kernels (contour vs real axis, scaling laws).
    KernelTest,
    /// Compare the solver with Mittag-Leffler and heat-semigroup modes.
    Oracle,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let opts = cli::Options {
        config: args.config,
        out: args.out,
        refine: args.refine,
        seed: args.seed,
    };
    let result = match args.command {
        Command::Solve => cli::solve(&opts),
        Command::CheckCompat => cli::check_compat(&opts),
        Command::VerifyRegularity => cli::verify_regularity(&opts),
        Command::KernelTest => cli::kernel_test(&opts),
        Command::Oracle => cli::oracle(&opts),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code(&e))
        }
    }
}
