use std::path::PathBuf;

use qcnn_core::datagen::{self, SynthConfig, MANIFEST_FILE};

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GenerateSummary {
    pub manifest: PathBuf,
    /// Patients per label.
    pub counts: [usize; 2],
    pub frames: usize,
    pub image_side: usize,
    pub num_qubits: usize,
    pub seed: u64,
}

impl std::fmt::Display for GenerateSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} patients ({} label 0, {} label 1), {} frames, {}x{} pixels ({} qubits), seed {} -> {}",
            self.counts[0] + self.counts[1],
            self.counts[0],
            self.counts[1],
            self.frames,
            self.image_side,
            self.image_side,
            self.num_qubits,
            self.seed,
            self.manifest.display()
        )
    }
}

fn image_side(cfg: &ExperimentConfig) -> Result<usize> {
    if let Some(side) = cfg.side {
        return Ok(side);
    }
    match cfg.qubits.as_slice() {
        [] => Ok(SynthConfig::default().image_side),
        [q] if q % 2 == 0 && (2..=32).contains(q) => Ok(1 << (q / 2)),
        [q] => Err(HarnessError::Usage(format!("square images need an even qubit count, got {q}"))),
        _ => Err(HarnessError::Usage("generate takes a single --qubits value".into())),
    }
}

pub fn generate(cfg: &ExperimentConfig) -> Result<GenerateSummary> {
    let d = SynthConfig::default();
    let synth = SynthConfig {
        num_patients: cfg.patients.unwrap_or(d.num_patients),
        image_side: image_side(cfg)?,
        seed: cfg.seed.unwrap_or(d.seed),
        ..d
    };
    let out = cfg.out_dir("data");
    let manifest = datagen::generate(&synth, &out)?;
    let ones = manifest.records.iter().filter(|r| r.label == 1).count();
    Ok(GenerateSummary {
        manifest: out.join(MANIFEST_FILE),
        counts: [manifest.records.len() - ones, ones],
        frames: manifest.records.iter().map(|r| r.frames.len()).sum(),
        image_side: synth.image_side,
        num_qubits: synth.num_qubits(),
        seed: synth.seed,
    })
}
