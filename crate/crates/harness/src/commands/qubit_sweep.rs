use std::collections::BTreeMap;
use std::path::PathBuf;

use qcnn_core::ansatz::AnsatzKind;
use qcnn_core::datagen::{load_dataset, DatasetManifest};
use qcnn_core::pipeline::{rng_stream, split_dataset, stratified_kfold, train_fold, HybridModel, PatientSequence, TrainEvent};

use super::{check_topology, Progress};
use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::report::{num, opt_num, write_atomic, Table};
use crate::svg::{line_chart, Chart, Series};

#[derive(Debug, Clone)]
pub struct QubitSweepSummary {
    pub csv: PathBuf,
    pub svg: PathBuf,
    pub table: Table,
}

/// Trains on the first cross-validation fold at each qubit count and records
/// the per-epoch curves.
pub fn qubit_sweep(cfg: &ExperimentConfig, progress: Progress<'_>) -> Result<QubitSweepSummary> {
    if cfg.manifest.is_empty() {
        return Err(HarnessError::Usage("qubit-sweep needs a --manifest per qubit count".into()));
    }
    let mut by_qubits: BTreeMap<usize, PathBuf> = BTreeMap::new();
    for path in &cfg.manifest {
        let m = DatasetManifest::read(path)?;
        by_qubits.insert(m.num_qubits(), path.clone());
    }
    let wanted: Vec<usize> = if cfg.qubits.is_empty() { by_qubits.keys().copied().collect() } else { cfg.qubits.clone() };
    let kinds = cfg.ansatz_kinds(&[AnsatzKind::Mps])?;
    for &k in &kinds {
        for &n in &wanted {
            check_topology(k, n)?;
        }
    }
    let tc = cfg.train_config()?;

    let mut table = Table::new(&["ansatz", "qubits", "epoch", "train_loss", "val_loss", "val_auc"]);
    for &n in &wanted {
        let path = by_qubits
            .get(&n)
            .ok_or_else(|| HarnessError::File(format!("no --manifest holds a {n}-qubit dataset")))?;
        let (_, data) = load_dataset(path)?;
        let labels: Vec<u8> = data.iter().map(|s| s.label).collect();
        let split = split_dataset(&labels, tc.seed)?;
        let (train_idx, val_idx) = stratified_kfold(&labels, &split.train_pool, tc.folds, tc.seed)?.swap_remove(0);
        let train: Vec<&PatientSequence> = train_idx.iter().map(|&i| &data[i]).collect();
        let val: Vec<&PatientSequence> = val_idx.iter().map(|&i| &data[i]).collect();
        for &kind in &kinds {
            let model = HybridModel::new(kind, n, tc.hidden_dim, tc.readouts, &mut rng_stream(tc.seed, 3000))?;
            let out = train_fold(model, &train, &val, &tc, 0, &mut |e| {
                if let TrainEvent::Epoch { record, .. } = e {
                    progress(&format!("{kind} {n} qubits epoch {:>3}  val {:.4}", record.epoch, record.val_loss));
                }
            })?;
            for r in &out.history {
                table.push(vec![
                    kind.name().into(),
                    n.to_string(),
                    r.epoch.to_string(),
                    num(r.train_loss),
                    num(r.val_loss),
                    opt_num(r.val_auc),
                ]);
            }
        }
    }
    let out = cfg.out_dir(crate::config::DEFAULT_RUNS_DIR);
    let (csv, svg) = (out.join("qubit_sweep.csv"), out.join("qubit_sweep.svg"));
    table.write(&csv)?;
    write_atomic(&svg, qubit_sweep_chart(&table)?.as_bytes())?;
    Ok(QubitSweepSummary { csv, svg, table })
}

/// Validation loss against epoch, one line per (ansatz, qubit count).
pub fn qubit_sweep_chart(table: &Table) -> Result<String> {
    let a = table.column("ansatz")?;
    let q = table.column("qubits")?;
    let epoch = table.numbers("epoch")?;
    let loss = table.numbers("val_loss")?;
    let mut series: Vec<Series> = Vec::new();
    for (k, r) in table.rows.iter().enumerate() {
        let name = format!("{} {} qubits", r[a], r[q]);
        if series.last().is_none_or(|s| s.name != name) {
            series.push(Series { name, points: Vec::new(), dashed: false, color: series.len() });
        }
        if let (Some(e), Some(l)) = (epoch[k], loss[k]) {
            series.last_mut().expect("just pushed").points.push((e, l));
        }
    }
    Ok(line_chart(&Chart {
        title: "Validation loss by qubit count".into(),
        x_label: "epoch".into(),
        y_label: "validation BCE".into(),
        series,
        y_range: None,
    }))
}
