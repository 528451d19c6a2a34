use std::collections::HashMap;
use std::path::PathBuf;

use qcnn_core::ansatz::AnsatzKind;
use qcnn_core::datagen::load_dataset;
use qcnn_core::pipeline::{evaluate, load_checkpoint_for, PatientSequence, TrainConfig};

use super::{Progress, BEST_CHECKPOINT, HOLDOUT_CSV};
use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::report::{num, opt_num, write_atomic, Table};
use crate::svg::{line_chart, Chart, Series};

#[derive(Debug, Clone)]
pub struct NoiseSweepSummary {
    pub csv: PathBuf,
    pub svg: PathBuf,
    pub table: Table,
}

/// Holdout members named in a run's `holdout.csv`, looked up in the dataset.
fn holdout_set<'a>(table: &Table, data: &'a [PatientSequence]) -> Result<Vec<&'a PatientSequence>> {
    let by_id: HashMap<&str, &PatientSequence> = data.iter().map(|p| (p.patient_id.as_str(), p)).collect();
    let col = table.column("patient_id")?;
    table
        .rows
        .iter()
        .map(|r| {
            by_id
                .get(r[col].as_str())
                .copied()
                .ok_or_else(|| HarnessError::Format(format!("holdout patient '{}' is not in the manifest", r[col])))
        })
        .collect()
}

/// Holdout ROC-AUC and F1 of each trained ansatz at each noise level.
pub fn noise_sweep(cfg: &ExperimentConfig, progress: Progress<'_>) -> Result<NoiseSweepSummary> {
    let (manifest, data) = load_dataset(cfg.single_manifest()?)?;
    let n = manifest.num_qubits();
    let kinds = cfg.ansatz_kinds(&AnsatzKind::ALL)?;
    let levels = cfg.noise_levels()?;
    let runs = cfg.runs_dir();
    let d = TrainConfig::default();
    let (seed, repeats) = (cfg.seed.unwrap_or(d.seed), cfg.eval_repeats.unwrap_or(d.eval_repeats));

    let mut table = Table::new(&["ansatz", "lambda", "roc_auc", "f1"]);
    for kind in kinds {
        let dir = runs.join(kind.name());
        let model = load_checkpoint_for(&dir.join(BEST_CHECKPOINT), kind, n)?;
        let holdout = holdout_set(&Table::read(&dir.join(HOLDOUT_CSV))?, &data)?;
        for &level in &levels {
            let noise = cfg.noise_at(level)?;
            let m = evaluate(&model, &holdout, d.threshold, repeats, seed, Some(&noise))?.mean();
            progress(&format!(
                "{kind} λ={level}: AUC {} F1 {:.3}",
                m.roc_auc.map_or("n/a".into(), |a| format!("{a:.3}")),
                m.f1
            ));
            table.push(vec![kind.name().into(), num(level), opt_num(m.roc_auc), num(m.f1)]);
        }
    }
    let out = cfg.out_dir(crate::config::DEFAULT_RUNS_DIR);
    let (csv, svg) = (out.join("noise_sweep.csv"), out.join("noise_sweep.svg"));
    table.write(&csv)?;
    write_atomic(&svg, noise_sweep_chart(&table)?.as_bytes())?;
    Ok(NoiseSweepSummary { csv, svg, table })
}

/// One solid AUC line and one dashed F1 line per ansatz, from the sweep CSV.
pub fn noise_sweep_chart(table: &Table) -> Result<String> {
    let col = table.column("ansatz")?;
    let lambda = table.numbers("lambda")?;
    let auc = table.numbers("roc_auc")?;
    let f1 = table.numbers("f1")?;
    let mut names: Vec<&str> = Vec::new();
    for r in &table.rows {
        if !names.contains(&r[col].as_str()) {
            names.push(&r[col]);
        }
    }
    let mut series = Vec::new();
    for (i, name) in names.iter().enumerate() {
        for (metric, values, dashed) in [("ROC-AUC", &auc, false), ("F1", &f1, true)] {
            let points = table
                .rows
                .iter()
                .enumerate()
                .filter(|(_, r)| r[col] == *name)
                .filter_map(|(k, _)| Some((lambda[k]?, values[k]?)))
                .collect();
            series.push(Series { name: format!("{name} {metric}"), points, dashed, color: i });
        }
    }
    Ok(line_chart(&Chart {
        title: "Holdout performance under noise".into(),
        x_label: "noise level λ".into(),
        y_label: "score".into(),
        series,
        y_range: Some((0.0, 1.0)),
    }))
}
