//! `homodyne`: run scenarios and figure reproductions, write artifacts.
//!
//! Exit codes: 0 success, 1 bad input or failed validation, 2 numerical
//! failure (divergence, unresolved step size).

mod commands;
mod presets;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use homodyne_core::artifacts::Format;
use homodyne_core::config::Route;

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "HOMODYNE_OUT";

#[derive(Debug, Parser)]
#[command(
    name = "homodyne",
    version = homodyne_core::VERSION,
    about = "Atomic homodyne detection on a two-mode condensate",
    after_help = "Output goes to --out, else [output] dir of the config, else $HOMODYNE_OUT/<name>, else ./out/<name>."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Options,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Mean-field Bloch equations.
    Meanfield,
    /// Closed-form perturbative solution (needs J(0) along J_y).
    Perturbative,
    /// Unconditional master equation.
    Master,
    /// Conditional stochastic trajectories.
    Trajectory,
    /// Homodyne current of the rigid rotation (--variant a|b, default both).
    Fig3,
    /// Unconditional damped current, both parameterizations.
    Fig4,
    /// Conditional currents, ensemble mean and master equation.
    Fig5,
    /// Self-trapping order parameter over (κN/Ω, η/κ).
    Sweep,
    /// Cross-validate routes on the given config or on every preset.
    Validate,
    /// List the shipped presets, or print one.
    Presets { name: Option<String> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
    Svg,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
            FormatArg::Svg => Format::Svg,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Options {
    /// Run configuration file.
    #[arg(long, global = true, value_name = "PATH", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Shipped configuration (see `homodyne presets`).
    #[arg(long, global = true, value_name = "NAME")]
    preset: Option<String>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Base seed for stochastic runs.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Artifact format; repeat for several.
    #[arg(long = "format", global = true, value_enum, value_name = "FORMAT")]
    formats: Vec<FormatArg>,
    /// fig3: a|b. meanfield: closed|rabi_limit|light_coupled|damped_moments.
    #[arg(long, global = true)]
    variant: Option<String>,
    #[arg(long, global = true, value_name = "N")]
    n_atoms: Option<u32>,
    #[arg(long, global = true, value_name = "N")]
    trajectories: Option<usize>,
}

impl Options {
    fn formats(&self) -> Option<Vec<Format>> {
        (!self.formats.is_empty()).then(|| self.formats.iter().map(|&f| f.into()).collect())
    }
}

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or configuration; exit 1.
    Usage(String),
    /// Cross-validation ran and some check failed; exit 1.
    Validation(String),
    /// Numerics failed somewhere in a batch; exit 2.
    Numerical(String),
    Core(homodyne_core::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Numerical(_) => 2,
            CliError::Core(e) if e.is_numerical() => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Validation(m) | CliError::Numerical(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<homodyne_core::Error> for CliError {
    fn from(e: homodyne_core::Error) -> Self {
        CliError::Core(e)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let o = &cli.opts;
    let result = match &cli.command {
        Command::Meanfield => commands::scenario(Route::Meanfield, o),
        Command::Perturbative => commands::scenario(Route::Perturbative, o),
        Command::Master => commands::scenario(Route::Master, o),
        Command::Trajectory => commands::scenario(Route::Trajectory, o),
        Command::Fig3 => commands::fig3(o),
        Command::Fig4 => commands::fig4(o),
        Command::Fig5 => commands::fig5(o),
        Command::Sweep => commands::sweep(o),
        Command::Validate => commands::validate(o),
        Command::Presets { name } => commands::presets(name.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use homodyne_core::Error;

    #[test]
    fn exit_codes() {
        let numeric = CliError::Core(Error::StepSize {
            time: 1.0,
            reason: "x".into(),
        });
        assert_eq!(numeric.exit_code(), 2);
        assert_eq!(CliError::Numerical("x".into()).exit_code(), 2);
        assert_eq!(CliError::Core(Error::ConfigInvalid(vec![])).exit_code(), 1);
        assert_eq!(CliError::Usage("x".into()).exit_code(), 1);
        assert_eq!(CliError::Validation("x".into()).exit_code(), 1);
    }
}
