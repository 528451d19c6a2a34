use std::path::{Path, PathBuf};

use qcnn_core::ansatz::AnsatzKind;
use qcnn_core::metrics::{levene_test, paired_ttest};

use super::METRICS_CSV;
use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::report::{num, Table};

#[derive(Debug, Clone)]
pub struct CompareSummary {
    pub models: Vec<String>,
    pub levene: Table,
    pub pairs: Table,
    pub matrix: Table,
    pub files: Vec<PathBuf>,
}

/// `NAME=PATH`, or a bare path named after its directory.
fn parse_source(spec: &str) -> (String, PathBuf) {
    if let Some((name, path)) = spec.split_once('=') {
        return (name.to_string(), PathBuf::from(path));
    }
    let path = PathBuf::from(spec);
    let name = path
        .parent()
        .and_then(Path::file_name)
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| spec.to_string());
    (name, path)
}

/// Validation AUCs of the fold rows of a `metrics.csv`.
pub fn fold_aucs(table: &Table) -> Result<Vec<f64>> {
    let set = table.column("set")?;
    let auc = table.numbers("roc_auc")?;
    table
        .rows
        .iter()
        .zip(auc)
        .filter(|(r, _)| r[set] == "fold")
        .map(|(_, a)| a.ok_or_else(|| HarnessError::Format("fold row without a ROC-AUC".into())))
        .collect()
}

fn status(e: &qcnn_core::Error) -> String {
    match e {
        qcnn_core::Error::DegenerateTest(_) => "degenerate".into(),
        other => format!("error: {other}"),
    }
}

pub fn compare(cfg: &ExperimentConfig) -> Result<CompareSummary> {
    let sources: Vec<(String, PathBuf)> = if cfg.metrics.is_empty() {
        let runs = cfg.runs_dir();
        cfg.ansatz_kinds(&AnsatzKind::ALL)?
            .into_iter()
            .map(|k| (k.name().to_string(), runs.join(k.name()).join(METRICS_CSV)))
            .filter(|(_, p)| !cfg.ansatz.is_empty() || p.exists())
            .collect()
    } else {
        cfg.metrics.iter().map(|s| parse_source(s)).collect()
    };
    if sources.len() < 2 {
        return Err(HarnessError::Usage(format!("compare needs at least 2 models, found {}", sources.len())));
    }
    let mut groups = Vec::new();
    for (name, path) in &sources {
        let aucs = fold_aucs(&Table::read(path)?)?;
        if aucs.len() < 2 {
            return Err(HarnessError::Format(format!("{name}: {} fold AUC(s), need at least 2", aucs.len())));
        }
        groups.push(aucs);
    }
    if groups.iter().any(|g| g.len() != groups[0].len()) {
        let counts: Vec<String> = sources.iter().zip(&groups).map(|((n, _), g)| format!("{n}={}", g.len())).collect();
        return Err(HarnessError::Format(format!("mismatched fold counts: {}", counts.join(", "))));
    }
    let models: Vec<String> = sources.iter().map(|(n, _)| n.clone()).collect();

    let mut levene = Table::new(&["models", "statistic", "p_value", "status"]);
    levene.push(match levene_test(&groups) {
        Ok((w, p)) => vec![models.join(";"), num(w), num(p), "ok".into()],
        Err(e) => vec![models.join(";"), String::new(), String::new(), status(&e)],
    });

    let mut pairs = Table::new(&["model_a", "model_b", "t", "p_value", "status"]);
    let mut header = vec!["model"];
    header.extend(models.iter().map(String::as_str));
    let mut matrix = Table::new(&header);
    for i in 0..models.len() {
        let mut row = vec![models[i].clone()];
        for j in 0..models.len() {
            if j >= i {
                row.push(String::new());
                continue;
            }
            let cell = match paired_ttest(&groups[i], &groups[j]) {
                Ok((t, p)) => {
                    pairs.push(vec![models[i].clone(), models[j].clone(), num(t), num(p), "ok".into()]);
                    num(p)
                }
                Err(e) => {
                    let s = status(&e);
                    pairs.push(vec![models[i].clone(), models[j].clone(), String::new(), String::new(), s.clone()]);
                    s
                }
            };
            row.push(cell);
        }
        matrix.push(row);
    }

    let out = cfg.out_dir(crate::config::DEFAULT_RUNS_DIR);
    let files = vec![out.join("compare_levene.csv"), out.join("compare_pairs.csv"), out.join("compare_matrix.csv")];
    levene.write(&files[0])?;
    pairs.write(&files[1])?;
    matrix.write(&files[2])?;
    Ok(CompareSummary { models, levene, pairs, matrix, files })
}
