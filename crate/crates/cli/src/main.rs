//! `carnot-lusin`: lift, interpolate, approximate, verify and push forward
//! horizontal curves in step-2 Carnot groups.
//!
//! Exit codes: 0 success, 2 bad input, 3 numeric failure, 4 quality bound unmet.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "carnot-lusin", version, about = "Horizontal curves in step-2 Carnot groups")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Lift planar data to a horizontal curve in the free group.
    Lift {
        /// Curve file with a `planar` entry or samples without `y`.
        input: PathBuf,
        /// Vertical coordinates of the start point (comma separated); zero by default.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        start_y: Option<Vec<f64>>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Replace a sampled horizontal curve by a C^1 horizontal curve that
    /// agrees with it outside a set of small measure.
    Approximate {
        input: PathBuf,
        #[command(flatten)]
        select: SelectArgs,
        /// Target structure (with optional generator map `h`) for data in a general group.
        #[arg(long)]
        structure: Option<PathBuf>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Interpolate between two boundary points with prescribed horizontal derivatives.
    Interp {
        /// Boundary file with `a`, `b`, `ga`, `gb`, `va`, `vb` and optional `eps`.
        #[arg(long)]
        boundary: PathBuf,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Check a curve file: C^1 stitching and horizontality, and agreement
    /// with the original samples when `--samples` is given.
    Verify {
        input: PathBuf,
        /// Sample file the curve claims to approximate.
        #[arg(long)]
        samples: Option<PathBuf>,
        #[command(flatten)]
        select: SelectArgs,
        #[arg(long, env = "CARNOT_LUSIN_TOL", default_value = "1e-10")]
        tol: f64,
        /// Write the report here instead of stdout.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Push a free curve forward along a homomorphism onto a target group.
    Pushforward {
        input: PathBuf,
        /// Target structure with optional generator map `h` (identity when absent).
        #[arg(long)]
        structure: PathBuf,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Args, Debug, Clone)]
struct SelectArgs {
    /// Allowed measure of the set where the result may differ from the input.
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    /// Derivative oscillation threshold of the good set.
    #[arg(long, default_value_t = 0.1)]
    eta: f64,
    /// Window length of the oscillation test.
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
}

#[derive(Args, Debug, Clone)]
struct OutputArgs {
    /// Output curve file.
    #[arg(short, long)]
    output: PathBuf,
    /// Write the report here instead of stdout.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Also write dense samples as CSV (t, x..., y..., dx...).
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Dense samples per segment in the output.
    #[arg(long, default_value_t = 8)]
    grid: usize,
    /// Horizontality tolerance.
    #[arg(long, env = "CARNOT_LUSIN_TOL", default_value = "1e-10")]
    tol: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Lift { input, start_y, out } => commands::lift(&input, start_y, &out),
        Command::Approximate { input, select, structure, out } => {
            commands::approximate(&input, &select, structure.as_deref(), &out)
        }
        Command::Interp { boundary, out } => commands::interp(&boundary, &out),
        Command::Verify { input, samples, select, tol, report } => {
            commands::verify(&input, samples.as_deref(), &select, tol, report.as_deref())
        }
        Command::Pushforward { input, structure, out } => commands::pushforward(&input, &structure, &out),
    };
    match outcome {
        Ok(status) => {
            if let Some(msg) = &status.message {
                eprintln!("{msg}");
            }
            ExitCode::from(status.code)
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
