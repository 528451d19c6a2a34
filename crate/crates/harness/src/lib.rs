//! Experiment runner: dataset generation, cross-validated training, noise and
//! qubit sweeps, and model comparison, writing CSV and SVG reports.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod report;
pub mod svg;

pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};

use cli::Command;

/// Runs a parsed command; `progress` gets running commentary, `out` the results.
pub fn run(command: &Command, progress: &mut dyn FnMut(&str), out: &mut dyn FnMut(&str)) -> Result<()> {
    let cfg = command.flags().resolve()?;
    match command {
        Command::Generate(_) => {
            let s = commands::generate(&cfg)?;
            out(&s.to_string());
        }
        Command::Train(_) => {
            for s in commands::train(&cfg, progress)? {
                out(&s.to_string());
            }
        }
        Command::NoiseSweep(_) => {
            let s = commands::noise_sweep(&cfg, progress)?;
            out(&format!("{} rows -> {} and {}", s.table.rows.len(), s.csv.display(), s.svg.display()));
        }
        Command::QubitSweep(_) => {
            let s = commands::qubit_sweep(&cfg, progress)?;
            out(&format!("{} rows -> {} and {}", s.table.rows.len(), s.csv.display(), s.svg.display()));
        }
        Command::Compare(_) => {
            let s = commands::compare(&cfg)?;
            for row in &s.levene.rows {
                out(&format!("Levene across {}: W={} p={} ({})", row[0], row[1], row[2], row[3]));
            }
            for row in &s.pairs.rows {
                out(&format!("{} vs {}: t={} p={} ({})", row[0], row[1], row[2], row[3], row[4]));
            }
        }
    }
    Ok(())
}
