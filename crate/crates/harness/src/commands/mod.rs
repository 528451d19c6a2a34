//! One function per CLI command. Each takes the resolved configuration and
//! a progress sink, writes its files and returns what it wrote.

mod compare;
mod generate;
mod noise_sweep;
mod qubit_sweep;
mod train;

pub use compare::{compare, fold_aucs, CompareSummary};
pub use generate::{generate, GenerateSummary};
pub use noise_sweep::{noise_sweep, noise_sweep_chart, NoiseSweepSummary};
pub use qubit_sweep::{qubit_sweep, qubit_sweep_chart, QubitSweepSummary};
pub use train::{fold_history_chart, train, TrainSummary};

use qcnn_core::ansatz::AnsatzKind;

use crate::error::{HarnessError, Result};

pub const METRICS_CSV: &str = "metrics.csv";
pub const FOLD_HISTORY_CSV: &str = "fold_history.csv";
pub const TIMING_CSV: &str = "timing.csv";
pub const HOLDOUT_CSV: &str = "holdout.csv";
pub const BEST_CHECKPOINT: &str = "best.ckpt";

pub type Progress<'a> = &'a mut dyn FnMut(&str);

fn check_topology(kind: AnsatzKind, num_qubits: usize) -> Result<()> {
    kind.build(num_qubits)
        .map(|_| ())
        .map_err(|e| HarnessError::Usage(format!("{kind} cannot run on {num_qubits} qubits: {e}")))
}
