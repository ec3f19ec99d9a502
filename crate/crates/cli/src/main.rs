//! `lindstedt`: compute, analyze and validate high-precision response
//! expansions of the dissipative standard map.
//!
//! Exit codes: 0 success, 2 bad configuration or flags, 3 computation
//! failure, 4 a validation gate failed, 5 I/O or archive corruption.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lindstedt_core::Error;

mod commands;
mod config;

use config::{FileConfig, FlagValues};

#[derive(Parser)]
#[command(
    name = "lindstedt",
    version,
    about = "Perturbative expansions of quasi-periodic responses of the dissipative standard map",
    after_help = "Flags override the --config file, which overrides built-in defaults \
                  (600 digits, 500 orders, grid 2^13, fit window [100, 300]). \
                  The LINDSTEDT_OUT environment variable names the default output root."
)]
struct Cli {
    /// TOML file with default option values
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compute a series archive order by order, or resume an interrupted one
    Expand {
        /// Frequency preset (golden, sqrt2, ...) or descriptor p,q,d,r
        #[arg(long)]
        omega: Option<String>,
        /// Working precision in decimal digits (>= 30)
        #[arg(long)]
        digits: Option<u32>,
        /// Highest order to compute
        #[arg(long)]
        orders: Option<usize>,
        /// log2 of the validation grid size (8..=16)
        #[arg(long = "grid-exp")]
        grid_exp: Option<u32>,
        /// Output root; the archive lands in <out>/<omega>-d<digits>
        #[arg(long)]
        out: Option<PathBuf>,
        /// Continue an existing archive instead of refusing to touch it
        #[arg(long)]
        resume: bool,
    },
    /// Growth sequences and power-law fits for an existing archive
    Analyze {
        /// Archive directory produced by expand
        #[arg(long)]
        archive: PathBuf,
        /// Analyticity width for the weighted norm (repeatable)
        #[arg(long)]
        rho: Vec<String>,
        /// Derivative order for the Sobolev norm (repeatable)
        #[arg(long = "sobolev-r")]
        sobolev_r: Vec<u32>,
        /// First order of the fit window
        #[arg(long = "fit-lo")]
        fit_lo: Option<usize>,
        /// Last order of the fit window
        #[arg(long = "fit-hi")]
        fit_hi: Option<usize>,
        /// Norm normalization: sqrt (default) or literal
        #[arg(long = "norm-convention")]
        norm_convention: Option<String>,
        /// Where to write CSVs (default <archive>/analysis)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also measure the factorial-scaled diagnostic
        #[arg(long)]
        factorial: bool,
        /// Also fit the three-parameter shifted model
        #[arg(long)]
        shifted: bool,
    },
    /// Residual checks; exits 4 when a validation gate fails
    Validate {
        /// Archive directory produced by expand
        #[arg(long)]
        archive: PathBuf,
        /// Perturbation strength for invariance sweeps (repeatable)
        #[arg(long)]
        eps: Vec<String>,
        /// First truncation order of the sweep (default 1)
        #[arg(long = "n-lo")]
        n_lo: Option<usize>,
        /// Last truncation order of the sweep (default min(35, N))
        #[arg(long = "n-hi")]
        n_hi: Option<usize>,
        /// Second archive of the same frequency to compare against
        #[arg(long)]
        cross: Option<PathBuf>,
        /// Where to write CSVs (default <archive>/analysis)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Centralized sequences and oscillation detection
    Centralize {
        /// Archive directory produced by expand
        #[arg(long)]
        archive: Option<PathBuf>,
        /// Growth sequence CSV (k,value) to analyze instead of an archive
        #[arg(long = "from-csv")]
        from_csv: Option<PathBuf>,
        /// Analyticity width of the measured norm (archives only)
        #[arg(long)]
        rho: Option<String>,
        /// First order of the analysis window
        #[arg(long = "fit-lo")]
        fit_lo: Option<usize>,
        /// Last order of the analysis window
        #[arg(long = "fit-hi")]
        fit_hi: Option<usize>,
        /// Working precision for CSV input
        #[arg(long)]
        digits: Option<u32>,
        /// Norm normalization: sqrt (default) or literal
        #[arg(long = "norm-convention")]
        norm_convention: Option<String>,
        /// Where to write CSVs
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_)
        | Error::RationalFrequency(_)
        | Error::DegenerateRange(_)
        | Error::Mismatch(_)
        | Error::Aliasing { .. }
        | Error::FormatVersion { .. }
        | Error::PrecisionDowngrade { .. } => 2,
        Error::ZeroDivisor(_)
        | Error::Unsolvable { .. }
        | Error::AtOrder { .. }
        | Error::UndefinedLog { .. }
        | Error::FloorSaturated { .. } => 3,
        Error::Corrupted(_) | Error::Io(_) => 5,
    }
}

fn dispatch(cli: Cli) -> lindstedt_core::Result<bool> {
    let file = FileConfig::load(cli.config.as_deref())?;
    match cli.cmd {
        Cmd::Expand {
            omega,
            digits,
            orders,
            grid_exp,
            out,
            resume,
        } => {
            let r = config::resolve(
                FlagValues {
                    omega,
                    digits,
                    orders,
                    grid_exp,
                    out,
                    ..FlagValues::default()
                },
                file,
            );
            commands::cmd_expand(&r, resume)?;
            Ok(true)
        }
        Cmd::Analyze {
            archive,
            rho,
            sobolev_r,
            fit_lo,
            fit_hi,
            norm_convention,
            out,
            factorial,
            shifted,
        } => {
            let r = config::resolve(
                FlagValues {
                    rho,
                    sobolev_r,
                    fit_lo,
                    fit_hi,
                    norm_convention,
                    out,
                    ..FlagValues::default()
                },
                file,
            );
            commands::cmd_analyze(&r, &archive, factorial, shifted)?;
            Ok(true)
        }
        Cmd::Validate {
            archive,
            eps,
            n_lo,
            n_hi,
            cross,
            out,
        } => {
            let r = config::resolve(
                FlagValues {
                    eps,
                    out,
                    ..FlagValues::default()
                },
                file,
            );
            commands::cmd_validate(&r, &archive, cross.as_deref(), n_lo, n_hi)
        }
        Cmd::Centralize {
            archive,
            from_csv,
            rho,
            fit_lo,
            fit_hi,
            digits,
            norm_convention,
            out,
        } => {
            let r = config::resolve(
                FlagValues {
                    rho: rho.into_iter().collect(),
                    fit_lo,
                    fit_hi,
                    digits,
                    norm_convention,
                    out,
                    ..FlagValues::default()
                },
                file,
            );
            commands::cmd_centralize(&r, archive.as_deref(), from_csv.as_deref())?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("validation gate failed");
            ExitCode::from(4)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
