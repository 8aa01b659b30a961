use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;

use commands::CliError;

/// Constrained complex TV denoising and single-intensity phase retrieval.
///
/// Exit status: 0 success, 1 malformed or unreadable input file, 2 invalid
/// configuration, 3 shape mismatch between measurement and reference.
#[derive(Debug, Parser)]
#[command(name = "ctv", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Denoise a complex field with constrained TV (FGP or GP on the dual).
    ///
    /// Uses `lambda`, `tv_variant`, `alpha`, `constraint` and `inner_iters`
    /// (the dual iteration count) from the config; `algorithm` may be `fgp`
    /// (default) or `gp`.
    Denoise {
        input: PathBuf,
        output: PathBuf,
        #[arg(short, long)]
        config: Option<PathBuf>,
        /// Ground-truth field; enables the rmse_before/rmse_after report.
        #[arg(short, long)]
        reference: Option<PathBuf>,
    },
    /// Reconstruct an object from an intensity measurement.
    ///
    /// The measurement is a field file with zero imaginary part or an 8-bit
    /// PGM. A CSV trace is written next to the output (same stem, `.csv`).
    Retrieve {
        measurement: PathBuf,
        output: PathBuf,
        #[arg(short, long)]
        config: Option<PathBuf>,
        /// Ground-truth object; enables the rmse column of the trace.
        #[arg(short, long)]
        reference: Option<PathBuf>,
    },
    /// Simulate a noisy intensity measurement of an object.
    ///
    /// The object is a field file or an 8-bit PGM read as a pure phase
    /// object with phase π·pixel/255.
    Simulate {
        object: PathBuf,
        output: PathBuf,
        #[arg(short, long)]
        config: Option<PathBuf>,
        /// Also write the complex object as a field file.
        #[arg(long)]
        save_object: Option<PathBuf>,
    },
    /// Export one channel of a field as an 8-bit PGM.
    ///
    /// Phase maps (−π, π] onto 0..255; the other channels are min–max scaled.
    /// The conversion is lossy.
    ExportPgm {
        field: PathBuf,
        output: PathBuf,
        #[arg(long, default_value = "phase")]
        channel: String,
    },
    /// Propagate a field by the configured distance.
    Propagate {
        input: PathBuf,
        output: PathBuf,
        #[arg(short, long)]
        config: Option<PathBuf>,
        /// Overrides `distance_m`.
        #[arg(long, allow_hyphen_values = true)]
        distance: Option<f64>,
    },
    /// Write the built-in test image as an 8-bit PGM.
    Phantom {
        output: PathBuf,
        #[arg(long, default_value_t = 128)]
        rows: usize,
        #[arg(long, default_value_t = 128)]
        cols: usize,
        /// Add smooth background shading (the retrieval benchmark object).
        #[arg(long)]
        shaded: bool,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Denoise {
            input,
            output,
            config,
            reference,
        } => commands::denoise(&input, &output, config.as_deref(), reference.as_deref()),
        Command::Retrieve {
            measurement,
            output,
            config,
            reference,
        } => commands::retrieve(&measurement, &output, config.as_deref(), reference.as_deref()),
        Command::Simulate {
            object,
            output,
            config,
            save_object,
        } => commands::simulate(&object, &output, config.as_deref(), save_object.as_deref()),
        Command::ExportPgm { field, output, channel } => commands::export_pgm(&field, &output, &channel),
        Command::Propagate {
            input,
            output,
            config,
            distance,
        } => commands::propagate(&input, &output, config.as_deref(), distance),
        Command::Phantom {
            output,
            rows,
            cols,
            shaded,
        } => commands::phantom(&output, rows, cols, shaded),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
