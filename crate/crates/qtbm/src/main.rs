use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use qtbm::commands::{self, CliError};
use qtbm::config::RunConfig;

/// Ballistic transport through a double-barrier device, and fitting the
/// device to target I-V data.
#[derive(Debug, Parser)]
#[command(name = "qtbm", version)]
struct Cli {
    /// Run configuration (`section.key = value` lines); defaults if omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Wavefunction at one energy and bias.
    Wavefunction {
        #[arg(long, value_name = "EV")]
        energy: f64,
        #[arg(long, value_name = "EV", default_value_t = 0.0)]
        bias: f64,
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
    /// Transmission over [0, fermi_ev] at one bias.
    Transmission {
        #[arg(long, value_name = "EV", default_value_t = 0.0)]
        bias: f64,
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
    /// Current at each bias (repeat --bias or give a comma list).
    Iv {
        #[arg(long, value_name = "EV", value_delimiter = ',', required = true)]
        bias: Vec<f64>,
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
    /// Fit barriers and Fermi level to invert.targets.
    Invert {
        /// Overrides invert.seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Compare the loss gradient with finite differences.
    Gradcheck,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    match cli.command {
        Command::Wavefunction { energy, bias, out } => {
            commands::wavefunction(&config, energy, bias, &out)
        }
        Command::Transmission { bias, out } => commands::transmission(&config, bias, &out),
        Command::Iv { bias, out } => commands::iv(&config, &bias, &out),
        Command::Invert { seed, out } => {
            let run = commands::invert(&config, seed, &out)?;
            println!(
                "best loss {:e} from start {} of {} (seed {})",
                run.best_loss,
                run.start_index,
                run.starts.len(),
                run.seed
            );
            Ok(())
        }
        Command::Gradcheck => {
            commands::gradcheck(&config, &mut std::io::stdout().lock()).map(|_| ())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
