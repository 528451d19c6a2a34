use std::path::{Path, PathBuf};

use qcnn_core::ansatz::AnsatzKind;
use qcnn_core::datagen::load_dataset;
use qcnn_core::metrics::MetricsReport;
use qcnn_core::pipeline::{
    cross_validate, evaluate, save_checkpoint, MeanMetrics, PatientSequence, ProtocolResult, TrainEvent,
};

use super::{check_topology, Progress, BEST_CHECKPOINT, FOLD_HISTORY_CSV, HOLDOUT_CSV, METRICS_CSV, TIMING_CSV};
use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::report::{num, opt_num, write_atomic, Table};
use crate::svg::{line_chart, Chart, Series};

const METRICS_HEADER: [&str; 15] = [
    "set", "fold", "status", "roc_auc", "accuracy", "precision", "recall", "f1", "tn", "fp", "fn", "tp",
    "best_epoch", "epochs_run", "stopped_epoch",
];

#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub kind: AnsatzKind,
    pub dir: PathBuf,
    pub result: ProtocolResult,
    pub holdout: MeanMetrics,
}

impl std::fmt::Display for TrainSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let h = &self.holdout;
        write!(
            f,
            "{}: holdout AUC {} accuracy {:.3} F1 {:.3} (fold {} model) -> {}",
            self.kind,
            h.roc_auc.map_or("n/a".to_string(), |a| format!("{a:.3}")),
            h.accuracy,
            h.f1,
            self.result.best_fold + 1,
            self.dir.display()
        )
    }
}

fn report_cells(r: &MetricsReport) -> Vec<String> {
    let c = r.prf.confusion;
    vec![
        opt_num(r.roc_auc),
        num(r.prf.accuracy),
        num(r.prf.weighted.precision),
        num(r.prf.weighted.recall),
        num(r.prf.weighted.f1),
        c.tn.to_string(),
        c.fp.to_string(),
        c.fn_.to_string(),
        c.tp.to_string(),
    ]
}

fn mean_cells(m: &MeanMetrics) -> Vec<String> {
    let mut cells = vec![opt_num(m.roc_auc)];
    cells.extend([m.accuracy, m.precision, m.recall, m.f1, m.tn, m.fp, m.fn_, m.tp].map(num));
    cells
}

fn write_outputs(dir: &Path, data: &[PatientSequence], res: &ProtocolResult, threshold: f64, seed: u64) -> Result<MeanMetrics> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::File(format!("{}: {e}", dir.display())))?;
    let mut metrics = Table::new(&METRICS_HEADER);
    let mut history = Table::new(&["fold", "epoch", "train_loss", "val_loss", "val_auc"]);
    let mut timing = Table::new(&["fold", "seconds", "epochs_run"]);
    for f in &res.folds {
        let o = &f.outcome;
        let val: Vec<&PatientSequence> = f.val.iter().map(|&i| &data[i]).collect();
        let eval = evaluate(&o.model, &val, threshold, 1, seed, None)?;
        let mut row = vec!["fold".into(), (f.fold + 1).to_string(), "ok".into()];
        row.extend(report_cells(&eval.reports[0]));
        row.extend([o.best_epoch.to_string(), o.history.len().to_string(), o.stopped_at.map(|e| e.to_string()).unwrap_or_default()]);
        metrics.push(row);
        for r in &o.history {
            history.push(vec![(f.fold + 1).to_string(), r.epoch.to_string(), num(r.train_loss), num(r.val_loss), opt_num(r.val_auc)]);
        }
        timing.push(vec![(f.fold + 1).to_string(), format!("{:.3}", o.seconds), o.history.len().to_string()]);
        save_checkpoint(&o.model, &dir.join(format!("fold_{}.ckpt", f.fold + 1)))?;
    }
    let mean = res.holdout.mean();
    let mut row = vec!["holdout".into(), (res.best_fold + 1).to_string(), "ok".into()];
    row.extend(mean_cells(&mean));
    row.extend([String::new(), String::new(), String::new()]);
    metrics.push(row);

    let mut holdout = Table::new(&["patient_id", "label", "prob"]);
    let repeats = res.holdout.scores.len() as f64;
    for (k, &i) in res.split.holdout.iter().enumerate() {
        let p = res.holdout.scores.iter().map(|s| s[k]).sum::<f64>() / repeats;
        holdout.push(vec![data[i].patient_id.clone(), data[i].label.to_string(), num(p)]);
    }

    save_checkpoint(res.best_model(), &dir.join(BEST_CHECKPOINT))?;
    history.write(&dir.join(FOLD_HISTORY_CSV))?;
    write_atomic(&dir.join("fold_history.svg"), fold_history_chart(&history)?.as_bytes())?;
    holdout.write(&dir.join(HOLDOUT_CSV))?;
    timing.write(&dir.join(TIMING_CSV))?;
    metrics.write(&dir.join(METRICS_CSV))?;
    Ok(mean)
}

/// Validation loss per fold, rebuilt from `fold_history.csv`.
pub fn fold_history_chart(history: &Table) -> Result<String> {
    let folds = history.numbers("fold")?;
    let epochs = history.numbers("epoch")?;
    let losses = history.numbers("val_loss")?;
    let mut series: Vec<Series> = Vec::new();
    for ((f, e), l) in folds.iter().zip(&epochs).zip(&losses) {
        let (Some(f), Some(e), Some(l)) = (f, e, l) else {
            return Err(HarnessError::Format("blank cell in fold history".into()));
        };
        let name = format!("fold {f}");
        if series.last().is_none_or(|s| s.name != name) {
            series.push(Series { name, points: Vec::new(), dashed: false, color: series.len() });
        }
        series.last_mut().expect("just pushed").points.push((*e, *l));
    }
    Ok(line_chart(&Chart {
        title: "Validation loss by fold".into(),
        x_label: "epoch".into(),
        y_label: "validation BCE".into(),
        series,
        y_range: None,
    }))
}

/// Runs the full protocol for each requested ansatz into `<out-dir>/<ansatz>/`.
pub fn train(cfg: &ExperimentConfig, progress: Progress<'_>) -> Result<Vec<TrainSummary>> {
    let manifest_path = cfg.single_manifest()?;
    let (manifest, data) = load_dataset(manifest_path)?;
    let n = manifest.num_qubits();
    let kinds = cfg.ansatz_kinds(&AnsatzKind::ALL)?;
    for &k in &kinds {
        check_topology(k, n)?;
    }
    let tc = cfg.train_config()?;
    let out = cfg.out_dir(crate::config::DEFAULT_RUNS_DIR);

    let mut summaries = Vec::new();
    for kind in kinds {
        let dir = out.join(kind.name());
        progress(&format!("{kind}: {} patients, {n} qubits, {} folds", data.len(), tc.folds));
        let mut current_fold = 0;
        let res = cross_validate(&data, kind, &tc, &mut |fold, e| {
            current_fold = fold;
            if let TrainEvent::Epoch { record, stop, .. } = e {
                progress(&format!(
                    "{kind} fold {} epoch {:>3}  train {:.4}  val {:.4}  auc {}{}",
                    fold + 1,
                    record.epoch,
                    record.train_loss,
                    record.val_loss,
                    record.val_auc.map_or("n/a".into(), |a| format!("{a:.3}")),
                    if *stop { "  (early stop)" } else { "" }
                ));
            }
        });
        let res = match res {
            Ok(r) => r,
            Err(e @ qcnn_core::Error::Divergence { .. }) => {
                let mut metrics = Table::new(&METRICS_HEADER);
                let mut row = vec!["fold".to_string(), (current_fold + 1).to_string(), format!("diverged: {e}")];
                row.resize(METRICS_HEADER.len(), String::new());
                metrics.push(row);
                metrics.write(&dir.join(METRICS_CSV))?;
                return Err(HarnessError::Divergence(format!("{kind} fold {}: {e}", current_fold + 1)));
            }
            Err(e) => return Err(e.into()),
        };
        let holdout = write_outputs(&dir, &data, &res, tc.threshold, tc.seed)?;
        summaries.push(TrainSummary { kind, dir, result: res, holdout });
    }
    Ok(summaries)
}
