//! Experiment settings gathered from an optional TOML file and the flags.

use std::path::{Path, PathBuf};

use qcnn_core::ansatz::AnsatzKind;
use qcnn_core::noise::{Channel, NoiseConfig};
use qcnn_core::pipeline::TrainConfig;
use serde::Deserialize;

use crate::error::{HarnessError, Result};

pub const DEFAULT_NOISE_LEVELS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
pub const DEFAULT_RUNS_DIR: &str = "runs";

/// Every field is optional; unset fields fall back to per-command defaults.
/// Keys in the file use the flag spelling, e.g. `batch-size = 4`.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct ExperimentConfig {
    pub manifest: Vec<PathBuf>,
    pub ansatz: Vec<String>,
    pub qubits: Vec<usize>,
    pub seed: Option<u64>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub hidden: Option<usize>,
    pub noise_channels: Vec<String>,
    pub noise_level: Vec<f64>,
    pub shots: Option<usize>,
    pub noise_during_training: Option<bool>,
    pub out_dir: Option<PathBuf>,
    pub runs: Option<PathBuf>,
    pub metrics: Vec<String>,
    pub patients: Option<usize>,
    pub side: Option<usize>,
    pub dropout: Option<f64>,
    pub lr_quantum: Option<f64>,
    pub lr_classical: Option<f64>,
    pub patience: Option<usize>,
    pub threshold_epoch: Option<usize>,
    pub folds: Option<usize>,
    pub eval_repeats: Option<usize>,
    pub readouts: Option<usize>,
}

fn pick<T>(flag: Option<T>, file: Option<T>) -> Option<T> {
    flag.or(file)
}

fn pick_vec<T>(flag: Vec<T>, file: Vec<T>) -> Vec<T> {
    if flag.is_empty() {
        file
    } else {
        flag
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, origin: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| HarnessError::Format(format!("{origin}: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::File(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text, &path.display().to_string())
    }

    /// `flags` wins wherever it sets a value.
    pub fn overlay(self, flags: ExperimentConfig) -> Self {
        Self {
            manifest: pick_vec(flags.manifest, self.manifest),
            ansatz: pick_vec(flags.ansatz, self.ansatz),
            qubits: pick_vec(flags.qubits, self.qubits),
            seed: pick(flags.seed, self.seed),
            epochs: pick(flags.epochs, self.epochs),
            batch_size: pick(flags.batch_size, self.batch_size),
            hidden: pick(flags.hidden, self.hidden),
            noise_channels: pick_vec(flags.noise_channels, self.noise_channels),
            noise_level: pick_vec(flags.noise_level, self.noise_level),
            shots: pick(flags.shots, self.shots),
            noise_during_training: pick(flags.noise_during_training, self.noise_during_training),
            out_dir: pick(flags.out_dir, self.out_dir),
            runs: pick(flags.runs, self.runs),
            metrics: pick_vec(flags.metrics, self.metrics),
            patients: pick(flags.patients, self.patients),
            side: pick(flags.side, self.side),
            dropout: pick(flags.dropout, self.dropout),
            lr_quantum: pick(flags.lr_quantum, self.lr_quantum),
            lr_classical: pick(flags.lr_classical, self.lr_classical),
            patience: pick(flags.patience, self.patience),
            threshold_epoch: pick(flags.threshold_epoch, self.threshold_epoch),
            folds: pick(flags.folds, self.folds),
            eval_repeats: pick(flags.eval_repeats, self.eval_repeats),
            readouts: pick(flags.readouts, self.readouts),
        }
    }

    pub fn ansatz_kinds(&self, default: &[AnsatzKind]) -> Result<Vec<AnsatzKind>> {
        if self.ansatz.is_empty() {
            return Ok(default.to_vec());
        }
        let mut kinds = Vec::new();
        for name in &self.ansatz {
            let k: AnsatzKind = name.parse().map_err(|_| HarnessError::Usage(format!("unknown ansatz '{name}'")))?;
            if !kinds.contains(&k) {
                kinds.push(k);
            }
        }
        Ok(kinds)
    }

    pub fn channels(&self) -> Result<Vec<Channel>> {
        if self.noise_channels.is_empty() {
            return Ok(Channel::ALL.to_vec());
        }
        self.noise_channels
            .iter()
            .map(|c| c.parse().map_err(|_| HarnessError::Usage(format!("unknown noise channel '{c}'"))))
            .collect()
    }

    pub fn noise_levels(&self) -> Result<Vec<f64>> {
        let levels = if self.noise_level.is_empty() { DEFAULT_NOISE_LEVELS.to_vec() } else { self.noise_level.clone() };
        if let Some(bad) = levels.iter().find(|l| !(0.0..=1.0).contains(*l)) {
            return Err(HarnessError::Usage(format!("noise level {bad} outside [0, 1]")));
        }
        Ok(levels)
    }

    pub fn noise_at(&self, level: f64) -> Result<NoiseConfig> {
        let cfg = NoiseConfig {
            strength: level,
            channels: self.channels()?,
            shots: self.shots.unwrap_or(qcnn_core::noise::DEFAULT_SHOTS),
            during_training: self.noise_during_training.unwrap_or(false),
            ..NoiseConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn out_dir(&self, default: &str) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from(default))
    }

    /// Where `train` left its per-ansatz run directories.
    pub fn runs_dir(&self) -> PathBuf {
        self.runs.clone().or_else(|| self.out_dir.clone()).unwrap_or_else(|| PathBuf::from(DEFAULT_RUNS_DIR))
    }

    pub fn single_manifest(&self) -> Result<&Path> {
        match self.manifest.as_slice() {
            [one] => Ok(one),
            [] => Err(HarnessError::Usage("--manifest is required".into())),
            _ => Err(HarnessError::Usage("this command takes a single --manifest".into())),
        }
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        let d = TrainConfig::default();
        let noise = match self.noise_level.as_slice() {
            [] => None,
            [level] => Some(self.noise_at(*level)?),
            _ => return Err(HarnessError::Usage("training takes a single --noise-level".into())),
        };
        let cfg = TrainConfig {
            batch_size: self.batch_size.unwrap_or(d.batch_size),
            max_epochs: self.epochs.unwrap_or(d.max_epochs),
            threshold_epoch: self.threshold_epoch.unwrap_or(d.threshold_epoch),
            patience: self.patience.unwrap_or(d.patience),
            lr_quantum: self.lr_quantum.unwrap_or(d.lr_quantum),
            lr_classical: self.lr_classical.unwrap_or(d.lr_classical),
            hidden_dim: self.hidden.unwrap_or(d.hidden_dim),
            dropout: self.dropout.unwrap_or(d.dropout),
            readouts: self.readouts.unwrap_or(d.readouts),
            folds: self.folds.unwrap_or(d.folds),
            eval_repeats: self.eval_repeats.unwrap_or(d.eval_repeats),
            seed: self.seed.unwrap_or(d.seed),
            noise,
            ..d
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
