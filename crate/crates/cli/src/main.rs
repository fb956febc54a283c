use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mrrpa_cli::{run, scan, selftest, write_report, RunConfig};

#[derive(Parser)]
#[command(
    name = "mrrpa",
    about = "Multi-reference RPA/SOSEX correlation energies from FCIDUMP integrals",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single-point calculation from a configuration file.
    Run { config: PathBuf },
    /// Potential-energy-curve scan over the configured geometry list.
    Scan { config: PathBuf },
    /// Built-in consistency checks on the bundled lattice models.
    Selftest,
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { config } => {
            let cfg = match RunConfig::load(&config) {
                Ok(cfg) => cfg,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(e.exit_code() as u8);
                }
            };
            match run(&cfg) {
                Ok(report) => {
                    if let Err(e) = write_report(&report, &cfg.output) {
                        eprintln!("error: {e}");
                        return ExitCode::from(1);
                    }
                    ExitCode::from(report.exit_code() as u8)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
        Command::Scan { config } => {
            let cfg = match RunConfig::load(&config) {
                Ok(cfg) => cfg,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(e.exit_code() as u8);
                }
            };
            let report = scan(&cfg);
            for failure in &report.failures {
                eprintln!("failed geometry {}: {}", failure.label, failure.error);
            }
            if let Err(e) = write_report(&report, &cfg.output) {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
            ExitCode::from(report.exit_code() as u8)
        }
        Command::Selftest => {
            if selftest(std::io::stdout()) {
                println!("selftest: all checks passed");
                ExitCode::SUCCESS
            } else {
                eprintln!("selftest: failures detected");
                ExitCode::from(1)
            }
        }
    }
}
