//! Flag parsing. Every flag is optional so a `--config` file can supply it.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::ExperimentConfig;

#[derive(Debug, Parser)]
#[command(name = "qcnn", version, about = "QCNN-LSTM experiments on sequential images")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic cohort: PGM frames plus manifest.tsv.
    Generate(Flags),
    /// Split, 5-fold cross-validate and evaluate on the holdout.
    Train(Flags),
    /// Holdout ROC-AUC and F1 of trained models across noise levels.
    NoiseSweep(Flags),
    /// Validation curves at several qubit counts.
    QubitSweep(Flags),
    /// Levene and pairwise paired-t tests over fold AUCs.
    Compare(Flags),
}

impl Command {
    pub fn flags(&self) -> &Flags {
        match self {
            Command::Generate(f)
            | Command::Train(f)
            | Command::NoiseSweep(f)
            | Command::QubitSweep(f)
            | Command::Compare(f) => f,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Dataset manifest; qubit-sweep takes one per size, comma-separated or repeated
    #[arg(long, value_delimiter = ',')]
    pub manifest: Vec<PathBuf>,
    /// mps, mera or ttn; comma-separated for several [default: all three, mps for qubit-sweep]
    #[arg(long, value_delimiter = ',')]
    pub ansatz: Vec<String>,
    /// Qubit counts; generate derives the image side from it [default: 8]
    #[arg(long, value_delimiter = ',')]
    pub qubits: Vec<usize>,
    /// RNG seed [default: 7 for generate, 0 otherwise]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Maximum epochs per fold [default: 50]
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Samples per gradient step [default: 4]
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// LSTM hidden units [default: 32]
    #[arg(long)]
    pub hidden: Option<usize>,
    /// depolarizing, amplitude-damping, phase-damping, bit-flip [default: all]
    #[arg(long, value_delimiter = ',')]
    pub noise_channels: Vec<String>,
    /// Channel strength λ; noise-sweep takes a list [default: none for train, 0,0.25,0.5,0.75,1 for noise-sweep]
    #[arg(long, value_delimiter = ',')]
    pub noise_level: Vec<f64>,
    /// Trajectories per noisy expectation [default: 1000]
    #[arg(long)]
    pub shots: Option<usize>,
    /// Also sample noisy read-outs during training
    #[arg(long)]
    pub noise_during_training: bool,
    /// Output directory [default: data for generate, runs otherwise]
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Directory holding train outputs, one subdirectory per ansatz [default: --out-dir, else runs]
    #[arg(long)]
    pub runs: Option<PathBuf>,
    /// metrics.csv files to compare, as PATH or NAME=PATH [default: <runs>/<ansatz>/metrics.csv]
    #[arg(long)]
    pub metrics: Vec<String>,
    /// Patients to generate [default: 60]
    #[arg(long)]
    pub patients: Option<usize>,
    /// Image side in pixels; overrides --qubits for generate [default: 16]
    #[arg(long)]
    pub side: Option<usize>,
    /// Dropout on the final LSTM state [default: 0.5]
    #[arg(long)]
    pub dropout: Option<f64>,
    /// Adam step size for circuit angles [default: 0.01]
    #[arg(long)]
    pub lr_quantum: Option<f64>,
    /// Adam step size for LSTM and dense weights [default: 0.001]
    #[arg(long)]
    pub lr_classical: Option<f64>,
    /// Early stop after this many validation-loss rises past the threshold epoch [default: 10]
    #[arg(long)]
    pub patience: Option<usize>,
    /// Epochs before rises are counted [default: 30]
    #[arg(long)]
    pub threshold_epoch: Option<usize>,
    /// Cross-validation folds [default: 5]
    #[arg(long)]
    pub folds: Option<usize>,
    /// Seeded holdout evaluations [default: 3]
    #[arg(long)]
    pub eval_repeats: Option<usize>,
    /// Z read-outs per frame, on the last active wires [default: 1]
    #[arg(long)]
    pub readouts: Option<usize>,
    /// TOML file with any of the above, keyed by flag name; flags win
    #[arg(long)]
    pub config: Option<PathBuf>,
}

impl From<&Flags> for ExperimentConfig {
    fn from(f: &Flags) -> Self {
        ExperimentConfig {
            manifest: f.manifest.clone(),
            ansatz: f.ansatz.clone(),
            qubits: f.qubits.clone(),
            seed: f.seed,
            epochs: f.epochs,
            batch_size: f.batch_size,
            hidden: f.hidden,
            noise_channels: f.noise_channels.clone(),
            noise_level: f.noise_level.clone(),
            shots: f.shots,
            noise_during_training: f.noise_during_training.then_some(true),
            out_dir: f.out_dir.clone(),
            runs: f.runs.clone(),
            metrics: f.metrics.clone(),
            patients: f.patients,
            side: f.side,
            dropout: f.dropout,
            lr_quantum: f.lr_quantum,
            lr_classical: f.lr_classical,
            patience: f.patience,
            threshold_epoch: f.threshold_epoch,
            folds: f.folds,
            eval_repeats: f.eval_repeats,
            readouts: f.readouts,
        }
    }
}

impl Flags {
    /// Config file values overlaid with the flags actually given.
    pub fn resolve(&self) -> crate::error::Result<ExperimentConfig> {
        let base = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        Ok(base.overlay(ExperimentConfig::from(self)))
    }
}
