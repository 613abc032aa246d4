//! `franson`: config-driven simulation and analysis of an ultrafast
//! two-photon interferometry experiment.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::CmdError;

#[derive(Parser)]
#[command(name = "franson", version, about = "Franson interferometer simulation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render joint spectral/temporal intensity maps to CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed from the config file.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value = "csv")]
        format: String,
    },
    /// Run a two-photon phase scan and fit the coincidence fringe.
    Fringe {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value = "csv")]
        format: String,
    },
    /// Simulate the 16-setting Bell measurement, or replay the published
    /// count table through the analysis with --table2.
    Bell {
        #[arg(long, required_unless_present = "table2")]
        config: Option<PathBuf>,
        /// Analyze the bundled published count table instead of simulating.
        #[arg(long)]
        table2: bool,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value = "csv")]
        format: String,
    },
    /// Fit a histogram CSV: 2D Gaussian, diagonal/heralded widths, and
    /// response deconvolution.
    Fit {
        /// Histogram2D CSV to analyze.
        #[arg(long)]
        input: PathBuf,
        /// Config providing the [detector] response and [scan] kind.
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Re-run a bundled reference pipeline and compare against expected
    /// values (targets: table1, table2, fig3, fig4, bell-sim).
    Reproduce {
        target: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CmdError> {
    match cli.command {
        Command::Simulate { config, seed, out, format } => {
            commands::check_format(&format)?;
            commands::cmd_simulate(&config, seed, &out)
        }
        Command::Fringe { config, seed, out, format } => {
            commands::check_format(&format)?;
            commands::cmd_fringe(&config, seed, &out)
        }
        Command::Bell { config, table2, seed, out, format } => {
            commands::check_format(&format)?;
            commands::cmd_bell(config.as_deref(), table2, seed, &out)
        }
        Command::Fit { input, config, out } => commands::cmd_fit(&input, &config, &out),
        Command::Reproduce { target, seed, out } => commands::cmd_reproduce(&target, seed, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CmdError::Comparison(msg)) => {
            eprintln!("comparison failed: {msg}");
            ExitCode::from(1)
        }
        Err(CmdError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
