//! `dsp`: decide, reduce and classify Jordan-form tuples, check spectra and
//! search for numerical witnesses.
//!
//! Exit codes: 0 success, 2 negative verdict, 3 budget or convergence
//! failure, 64 usage or input error.

mod commands;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub const EXIT_OK: u8 = 0;
pub const EXIT_NEGATIVE: u8 = 2;
pub const EXIT_BUDGET: u8 = 3;
pub const EXIT_USAGE: u8 = 64;

#[derive(Parser, Debug)]
#[command(name = "dsp", version, about = "Deligne-Simpson problem toolkit")]
struct Cli {
    /// Print machine-readable JSON instead of a table.
    #[arg(long, global = true)]
    json: bool,

    #[command(flatten)]
    budget: Budget,

    #[command(subcommand)]
    command: Command,
}

/// Flags shared by the numerical commands.
#[derive(Args, Debug, Clone)]
struct Budget {
    /// Random seed; defaults to $DSP_SEED, then 0.
    #[arg(long, global = true, env = "DSP_SEED")]
    seed: Option<u64>,
    /// Number of random restarts.
    #[arg(long, global = true)]
    restarts: Option<usize>,
    /// Convergence tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Worker threads for the restarts (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum ModeArg {
    Additive,
    Multiplicative,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum TargetArg {
    Generic,
    Relative,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum ObjectiveArg {
    ClassDefect,
    Product,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the reduction to a verdict; also classify κ = 0 tuples.
    Decide { tuple: PathBuf },
    /// Apply the reduction step to a class tuple.
    Reduce {
        tuple: PathBuf,
        /// Maximum number of steps.
        #[arg(long, default_value_t = 1)]
        steps: usize,
    },
    /// Match the terminal tuple of a κ = 0 input against the four degenerate families.
    Classify { tuple: PathBuf },
    /// Check a spectrum for non-genericity relations.
    Genericity {
        spectrum: PathBuf,
        /// Allow the basic relation and its corollaries.
        #[arg(long)]
        relative: bool,
    },
    /// Print q, k, ξ and l of a spectrum.
    GcdData { spectrum: PathBuf },
    /// Sample an exact spectrum with the given multiplicities.
    Sample {
        /// Multiplicity vector of one form, e.g. `2,2`; repeat for every form.
        #[arg(long = "mv", required = true)]
        mv: Vec<String>,
        #[arg(long, value_enum, default_value = "multiplicative")]
        mode: ModeArg,
        #[arg(long, value_enum, default_value = "generic")]
        target: TargetArg,
        /// Angle k/q of ξ for multiplicative targets.
        #[arg(long)]
        xi: Option<String>,
        #[arg(long, default_value_t = 1000)]
        denominator_bound: u64,
    },
    /// Multistart search for a matrix tuple in the given classes.
    Search {
        classes: PathBuf,
        #[arg(long, default_value_t = 300)]
        iterations: usize,
        #[arg(long, value_enum, default_value = "class-defect")]
        objective: ObjectiveArg,
        /// Also write the best witness to this file.
        #[arg(long)]
        witness_out: Option<PathBuf>,
    },
    /// Continue a witness from its classes to nearby target classes.
    Deform {
        witness: PathBuf,
        source: PathBuf,
        target: PathBuf,
        #[arg(long, default_value_t = 20)]
        steps: usize,
        #[arg(long)]
        witness_out: Option<PathBuf>,
    },
    /// Diagnose a witness against its classes.
    Verify { witness: PathBuf, classes: PathBuf },
    /// Run a built-in experiment preset or replay a manifest.
    Experiment {
        /// Preset name; omit with --list or --replay.
        preset: Option<String>,
        #[arg(long)]
        list: bool,
        /// Re-run a manifest and compare report digests.
        #[arg(long, conflicts_with = "preset")]
        replay: Option<PathBuf>,
        #[arg(long, default_value_t = 300)]
        iterations: usize,
        #[arg(long)]
        manifest_out: Option<PathBuf>,
        #[arg(long)]
        report_out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(&cli) {
        Ok(out) => {
            let text = if cli.json {
                dsp_core::io::pretty(&out.doc) + "\n"
            } else {
                out.text
            };
            // a closed pipe (e.g. `| head`) is not an error worth reporting
            let _ = std::io::stdout().lock().write_all(text.as_bytes());
            ExitCode::from(out.code)
        }
        Err(e) => {
            eprintln!("dsp: {e}");
            ExitCode::from(e.code())
        }
    }
}
