//! Command-line front end: single-channel evaluations, parameter sweeps,
//! 2-user rate-region export, and multi-aperture reports.

mod matrix;
mod output;
mod region;
mod siso;
mod sweep;

use clap::{Parser, Subcommand};

/// Exit code for invalid inputs (bad flags, malformed files).
pub const EXIT_USAGE: i32 = 2;
/// Exit code for solver non-convergence; partial output goes to stderr.
pub const EXIT_NO_CONVERGENCE: i32 = 3;

#[derive(Parser)]
#[command(
    name = "imdd",
    about = "Capacity and capacity bounds of IM/DD Gaussian optical wireless channels",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Capacity and bounds of a single-user channel.
    Siso(siso::SisoArgs),
    /// Sweep a constraint parameter and tabulate methods (CSV or JSON).
    Sweep(sweep::SweepArgs),
    /// Broadcast / multiple-access rate regions as JSON.
    Region(region::RegionArgs),
    /// Parallel, SIMO, MISO, and MIMO reports from a gain-matrix file.
    Mimo(matrix::MimoArgs),
}

fn main() {
    init_thread_pool();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Siso(args) => siso::run(args),
        Command::Sweep(args) => sweep::run(args),
        Command::Region(args) => region::run(args),
        Command::Mimo(args) => matrix::run(args),
    };
    if let Err(err) = outcome {
        eprintln!("error: {err:#}");
        let code = err
            .downcast_ref::<output::CliError>()
            .map(|e| e.exit_code)
            .unwrap_or(EXIT_USAGE);
        std::process::exit(code);
    }
}

/// IMDD_THREADS caps the worker pool; unset uses the rayon default.
fn init_thread_pool() {
    if let Ok(v) = std::env::var("IMDD_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}
