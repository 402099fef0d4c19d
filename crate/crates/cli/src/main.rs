//! `cqad` — command-line frontend for the qubit/phonon-cluster simulator.
//!
//! Exit codes: 0 success, 1 usage error, 2 validation error, 3 numerical
//! failure. Errors go to stderr as machine-parsable `error: ...` lines.

mod commands;
mod manifest;

use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use commands::{DickeRun, Failure, RabiRun, ReadoutRun, SpectroscopyRun, TraceRun};

#[derive(Parser)]
#[command(
    name = "cqad",
    version,
    about = "Simulator and analysis toolkit for a superconducting qubit coupled to \
             clusters of near-resonant acoustic modes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutArg {
    /// Output directory for data files and the run manifest
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the qubit across a cluster and emit dressed transition lines
    Spectroscopy {
        /// Device file (see docs/device-schema.json)
        #[arg(long)]
        config: PathBuf,
        /// Cluster name from the device file
        #[arg(long)]
        cluster: String,
        /// Sweep start, GHz
        #[arg(long)]
        fmin: f64,
        /// Sweep end, GHz
        #[arg(long)]
        fmax: f64,
        /// Grid points (>= 2)
        #[arg(long)]
        points: usize,
        #[command(flatten)]
        out: OutArg,
    },
    /// Simulate a 2D vacuum-Rabi grid over (qubit frequency x time)
    Rabi {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        cluster: String,
        /// Frequency grid start, GHz
        #[arg(long)]
        fmin: f64,
        /// Frequency grid end, GHz
        #[arg(long)]
        fmax: f64,
        /// Frequency grid points (>= 2)
        #[arg(long)]
        fpoints: usize,
        /// Free-evolution window, µs
        #[arg(long = "tmax-us", default_value_t = 1.0)]
        tmax_us: f64,
        /// Time samples including both endpoints (>= 2)
        #[arg(long)]
        tsteps: usize,
        /// Optional relaxation-time envelope on the excited population, µs
        #[arg(long = "t1-us")]
        t1_us: Option<f64>,
        /// Worker threads for the frequency rows (0 = automatic)
        #[arg(long, default_value_t = 0)]
        threads: usize,
        #[command(flatten)]
        out: OutArg,
    },
    /// Simulate a population/purity trace at a fixed qubit frequency
    Trace {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        cluster: String,
        /// Qubit frequency, GHz (default: cluster hybridization center)
        #[arg(long = "fq-ghz")]
        fq_ghz: Option<f64>,
        #[arg(long = "tmax-us", default_value_t = 1.0)]
        tmax_us: f64,
        #[arg(long, default_value_t = 1001)]
        tsteps: usize,
        #[arg(long = "t1-us")]
        t1_us: Option<f64>,
        /// Add a column with the population normalized by the static
        /// collective-exchange reference (masked near its zeros)
        #[arg(long)]
        normalized: bool,
        #[command(flatten)]
        out: OutArg,
    },
    /// Collective-dynamics report: couplings, transition and minimum-purity
    /// times, fidelity and purity curves
    Dicke {
        /// Device file; requires --cluster
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        cluster: Option<String>,
        /// Synthetic cluster: number of modes
        #[arg(long = "n-modes")]
        n_modes: Option<usize>,
        /// Synthetic cluster: per-mode coupling, MHz
        #[arg(long = "coupling-mhz")]
        coupling_mhz: Option<f64>,
        /// Synthetic cluster: highest mode frequency, GHz
        #[arg(long = "frequency-ghz")]
        frequency_ghz: Option<f64>,
        /// Synthetic cluster: uniform spacing, MHz (0 = degenerate)
        #[arg(long = "spacing-mhz")]
        spacing_mhz: Option<f64>,
        /// Qubit frequency, GHz (default: cluster hybridization center)
        #[arg(long = "fq-ghz")]
        fq_ghz: Option<f64>,
        /// Fidelity floor defining the timed-Dicke transition time
        #[arg(long = "fidelity-floor", default_value_t = 0.9)]
        fidelity_floor: f64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Apply readout-error correction to measured probabilities
    Readout {
        #[arg(long)]
        config: PathBuf,
        /// Qubit whose response matrix applies
        #[arg(long)]
        qubit: String,
        /// Measured ground-state probability (with --p1)
        #[arg(long)]
        p0: Option<f64>,
        /// Measured excited-state probability (with --p0)
        #[arg(long)]
        p1: Option<f64>,
        /// Measured ground-state shot count (with --n1)
        #[arg(long)]
        n0: Option<u64>,
        /// Measured excited-state shot count (with --n0)
        #[arg(long)]
        n1: Option<u64>,
        /// CSV of measured probabilities (header p0,p1) or counts (header n0,n1)
        #[arg(long)]
        input: Option<PathBuf>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Re-run a recorded manifest and reproduce its outputs byte-identically
    Replay {
        /// Manifest written by a previous run
        #[arg(long)]
        manifest: PathBuf,
        #[command(flatten)]
        out: OutArg,
    },
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Spectroscopy {
            config,
            cluster,
            fmin,
            fmax,
            points,
            out,
        } => SpectroscopyRun {
            config,
            cluster,
            fmin,
            fmax,
            points,
        }
        .run(&out.out),
        Command::Rabi {
            config,
            cluster,
            fmin,
            fmax,
            fpoints,
            tmax_us,
            tsteps,
            t1_us,
            threads,
            out,
        } => RabiRun {
            config,
            cluster,
            fmin,
            fmax,
            fpoints,
            tmax_us,
            tsteps,
            t1_us,
            threads,
        }
        .run(&out.out),
        Command::Trace {
            config,
            cluster,
            fq_ghz,
            tmax_us,
            tsteps,
            t1_us,
            normalized,
            out,
        } => TraceRun {
            config,
            cluster,
            fq_ghz,
            tmax_us,
            tsteps,
            t1_us,
            normalized,
        }
        .run(&out.out),
        Command::Dicke {
            config,
            cluster,
            n_modes,
            coupling_mhz,
            frequency_ghz,
            spacing_mhz,
            fq_ghz,
            fidelity_floor,
            out,
        } => DickeRun {
            config,
            cluster,
            synthetic_n: n_modes,
            synthetic_g_mhz: coupling_mhz,
            synthetic_f0_ghz: frequency_ghz,
            synthetic_spacing_mhz: spacing_mhz,
            fq_ghz,
            fidelity_floor,
        }
        .run(&out.out),
        Command::Readout {
            config,
            qubit,
            p0,
            p1,
            n0,
            n1,
            input,
            out,
        } => ReadoutRun {
            config,
            qubit,
            p0,
            p1,
            n0,
            n1,
            input,
        }
        .run(&out.out),
        Command::Replay { manifest, out } => commands::replay(&manifest, &out.out),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return;
        }
        Err(e) => {
            eprintln!("error: {e}");
            eprintln!(
                "note: device files follow docs/device-schema.json; \
                 all file formats are described in docs/formats.md"
            );
            std::process::exit(1);
        }
    };
    if let Err(failure) = dispatch(cli.command) {
        eprintln!("error: {}", failure.message());
        std::process::exit(failure.exit_code());
    }
}
