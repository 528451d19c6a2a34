use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use qcnn_core::ansatz::AnsatzKind;
use qcnn_core::datagen::{load_dataset, MANIFEST_FILE};
use qcnn_core::metrics::roc_auc;
use qcnn_core::noise::{density_matrix_expectation, Channel, NoiseConfig};
use qcnn_core::pipeline::{save_checkpoint, HybridModel};
use qcnn_core::statevector::amplitude_encode;
use qcnn_harness::commands::{
    self, compare, fold_history_chart, generate, noise_sweep, noise_sweep_chart, qubit_sweep, qubit_sweep_chart,
    train,
};
use qcnn_harness::report::Table;
use qcnn_harness::{ExperimentConfig, HarnessError};
use qcnn_oracles::lstm_reference;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn quiet() -> impl FnMut(&str) {
    |_: &str| {}
}

fn toy_data(dir: &Path, patients: usize) -> PathBuf {
    let cfg = ExperimentConfig {
        out_dir: Some(dir.to_path_buf()),
        qubits: vec![4],
        patients: Some(patients),
        ..Default::default()
    };
    generate(&cfg).unwrap().manifest
}

fn tree_files(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn generate_is_reproducible_and_complete() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let m = toy_data(a.path(), 12);
    toy_data(b.path(), 12);
    let files = tree_files(a.path());
    assert_eq!(files, tree_files(b.path()));
    let (manifest, _) = load_dataset(&m).unwrap();
    let frames: usize = manifest.records.iter().map(|r| r.frames.len()).sum();
    assert_eq!(files.len(), frames + 1);
    assert!(files.iter().any(|(p, _)| p == Path::new(MANIFEST_FILE)));
}

#[test]
fn train_writes_five_folds_and_a_holdout_row_reproducibly() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = toy_data(&dir.path().join("data"), 20);
    let cfg = |out: &str| ExperimentConfig {
        manifest: vec![manifest.clone()],
        ansatz: vec!["ttn".into()],
        epochs: Some(3),
        hidden: Some(4),
        out_dir: Some(dir.path().join(out)),
        ..Default::default()
    };
    let s = train(&cfg("a"), &mut quiet()).unwrap();
    train(&cfg("b"), &mut quiet()).unwrap();
    assert_eq!(s.len(), 1);

    let run = dir.path().join("a/ttn");
    let metrics = Table::read(&run.join("metrics.csv")).unwrap();
    let set = metrics.column("set").unwrap();
    let sets: Vec<&str> = metrics.rows.iter().map(|r| r[set].as_str()).collect();
    assert_eq!(sets, ["fold", "fold", "fold", "fold", "fold", "holdout"]);
    assert_eq!(commands::fold_aucs(&metrics).unwrap().len(), 5);

    let timing = Table::read(&run.join("timing.csv")).unwrap();
    assert_eq!(timing.rows.len(), 5);
    assert!(timing.numbers("seconds").unwrap().iter().all(|s| s.is_some_and(|s| s >= 0.0)));

    for f in ["metrics.csv", "fold_history.csv", "holdout.csv", "fold_history.svg", "best.ckpt"] {
        assert_eq!(fs::read(run.join(f)).unwrap(), fs::read(dir.path().join("b/ttn").join(f)).unwrap(), "{f}");
    }
    let history = Table::read(&run.join("fold_history.csv")).unwrap();
    assert_eq!(history.rows.len(), 15);
    assert_eq!(fold_history_chart(&history).unwrap().into_bytes(), fs::read(run.join("fold_history.svg")).unwrap());
}

#[test]
fn tree_ansatz_rejects_six_qubits() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig { out_dir: Some(dir.path().into()), qubits: vec![6], patients: Some(10), ..Default::default() };
    let manifest = generate(&cfg).unwrap().manifest;
    let cfg = ExperimentConfig { manifest: vec![manifest], ansatz: vec!["ttn".into()], ..Default::default() };
    assert!(matches!(train(&cfg, &mut quiet()), Err(HarnessError::Usage(_))));
}

/// Writes a model and a hand-picked holdout whose sequence lengths all
/// differ, so scores stay untied when every frame reads zero.
fn staged_run(root: &Path, data_manifest: &Path) -> Vec<(String, u8, usize)> {
    let (_, data) = load_dataset(data_manifest).unwrap();
    let mut picked: Vec<(String, u8, usize)> = Vec::new();
    for len in 2..=7 {
        let want = (len % 2) as u8;
        if let Some(p) = data.iter().find(|p| p.frames.len() == len && p.label == want) {
            picked.push((p.patient_id.clone(), p.label, len));
        }
    }
    let mut t = Table::new(&["patient_id", "label", "prob"]);
    for (id, label, _) in &picked {
        t.push(vec![id.clone(), label.to_string(), String::new()]);
    }
    let run = root.join("ttn");
    t.write(&run.join("holdout.csv")).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut model = HybridModel::new(AnsatzKind::Ttn, 4, 8, 1, &mut rng).unwrap();
    // nonzero biases make the score depend on sequence length alone
    for v in model.lstm_mut().values_mut().iter_mut() {
        *v = rng.random_range(-1.5..1.5);
    }
    for v in model.dense_mut().values_mut().iter_mut() {
        *v = rng.random_range(-1.5..1.5);
    }
    save_checkpoint(&model, &run.join("best.ckpt")).unwrap();
    picked
}

/// Density-matrix features pushed through the reference LSTM and dense layer.
fn oracle_auc(model: &HybridModel, frames: &[Vec<Vec<f64>>], labels: &[u8], noise: &NoiseConfig) -> (f64, Vec<f64>) {
    let lstm = model.lstm();
    let h = lstm.hidden_dim();
    let w: Vec<Vec<Vec<f64>>> =
        (0..4).map(|g| (0..h).map(|u| (0..1 + h).map(|c| lstm.weight(g, u, c)).collect()).collect()).collect();
    let b: Vec<Vec<f64>> = (0..4).map(|g| (0..h).map(|u| lstm.bias(g, u)).collect()).collect();
    let probs: Vec<f64> = frames
        .iter()
        .map(|seq| {
            let xs: Vec<Vec<f64>> = seq
                .iter()
                .map(|f| vec![density_matrix_expectation(model.circuit(), model.theta(), &amplitude_encode(f).unwrap(), noise).unwrap()])
                .collect();
            let hidden = lstm_reference(&xs, &w, &b);
            let z = model.dense().bias() + hidden.iter().zip(model.dense().weights()).map(|(a, b)| a * b).sum::<f64>();
            1.0 / (1.0 + (-z).exp())
        })
        .collect();
    (roc_auc(&probs, labels).unwrap(), probs)
}

#[test]
fn full_depolarizing_sweep_matches_density_matrix_auc() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = toy_data(&dir.path().join("data"), 60);
    let runs = dir.path().join("runs");
    let picked = staged_run(&runs, &manifest);
    assert!(picked.len() >= 4 && picked.iter().any(|p| p.1 == 0) && picked.iter().any(|p| p.1 == 1));

    let cfg = ExperimentConfig {
        manifest: vec![manifest.clone()],
        ansatz: vec!["ttn".into()],
        noise_channels: vec!["depolarizing".into()],
        noise_level: vec![0.75],
        runs: Some(runs.clone()),
        out_dir: Some(runs.clone()),
        ..Default::default()
    };
    let s = noise_sweep(&cfg, &mut quiet()).unwrap();
    let swept = s.table.numbers("roc_auc").unwrap()[0].unwrap();

    let (_, data) = load_dataset(&manifest).unwrap();
    let frames: Vec<Vec<Vec<f64>>> =
        picked.iter().map(|(id, _, _)| data.iter().find(|p| &p.patient_id == id).unwrap().frames.clone()).collect();
    let labels: Vec<u8> = picked.iter().map(|p| p.1).collect();
    let model = qcnn_core::pipeline::load_checkpoint(&runs.join("ttn/best.ckpt")).unwrap();
    let noise = NoiseConfig { strength: 0.75, channels: vec![Channel::Depolarizing], ..NoiseConfig::default() };
    let (exact, probs) = oracle_auc(&model, &frames, &labels, &noise);

    let mut sorted = probs.clone();
    sorted.sort_by(f64::total_cmp);
    let gap = sorted.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    assert!(gap > 1e-3, "oracle scores too close to order reliably: {probs:?}");
    assert!((swept - exact).abs() <= 0.02, "swept {swept} vs density matrix {exact}");
}

#[test]
fn noise_sweep_grid_and_noiseless_row() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = toy_data(&dir.path().join("data"), 20);
    let runs = dir.path().join("runs");
    let base = ExperimentConfig {
        manifest: vec![manifest],
        epochs: Some(2),
        hidden: Some(4),
        out_dir: Some(runs.clone()),
        ..Default::default()
    };
    train(&base, &mut quiet()).unwrap();
    let sweep = ExperimentConfig { shots: Some(50), ..base.clone() };
    let s = noise_sweep(&sweep, &mut quiet()).unwrap();
    assert_eq!(s.table.rows.len(), 15);
    assert_eq!(s.table.header, ["ansatz", "lambda", "roc_auc", "f1"]);
    let first = fs::read(&s.csv).unwrap();
    noise_sweep(&sweep, &mut quiet()).unwrap();
    assert_eq!(fs::read(&s.csv).unwrap(), first);
    assert_eq!(noise_sweep_chart(&Table::read(&s.csv).unwrap()).unwrap().into_bytes(), fs::read(&s.svg).unwrap());

    for (k, kind) in ["mps", "mera", "ttn"].iter().enumerate() {
        let row = &s.table.rows[k * 5];
        assert_eq!((row[0].as_str(), row[1].as_str()), (*kind, "0"));
        let m = Table::read(&runs.join(kind).join("metrics.csv")).unwrap();
        let hold = m.rows.last().unwrap();
        assert_eq!(row[2], hold[m.column("roc_auc").unwrap()]);
        assert_eq!(row[3], hold[m.column("f1").unwrap()]);
    }

    let missing = ExperimentConfig { runs: Some(dir.path().join("absent")), ..sweep };
    assert!(matches!(noise_sweep(&missing, &mut quiet()), Err(HarnessError::File(_))));
}

#[test]
fn qubit_sweep_groups_and_row_count() {
    let dir = tempfile::tempdir().unwrap();
    let m4 = toy_data(&dir.path().join("q4"), 20);
    let m6 = generate(&ExperimentConfig {
        out_dir: Some(dir.path().join("q6")),
        qubits: vec![6],
        patients: Some(20),
        ..Default::default()
    })
    .unwrap()
    .manifest;
    let cfg = ExperimentConfig {
        manifest: vec![m4, m6],
        qubits: vec![4, 6],
        epochs: Some(3),
        hidden: Some(4),
        out_dir: Some(dir.path().join("out")),
        ..Default::default()
    };
    let s = qubit_sweep(&cfg, &mut quiet()).unwrap();
    let q = s.table.column("qubits").unwrap();
    let mut groups: Vec<&str> = s.table.rows.iter().map(|r| r[q].as_str()).collect();
    groups.dedup();
    assert_eq!(groups, ["4", "6"]);
    assert_eq!(s.table.rows.len(), 6);
    let first = fs::read(&s.csv).unwrap();
    qubit_sweep(&cfg, &mut quiet()).unwrap();
    assert_eq!(fs::read(&s.csv).unwrap(), first);
    assert_eq!(qubit_sweep_chart(&Table::read(&s.csv).unwrap()).unwrap().into_bytes(), fs::read(&s.svg).unwrap());

    let missing = ExperimentConfig { qubits: vec![8], ..cfg };
    assert!(matches!(qubit_sweep(&missing, &mut quiet()), Err(HarnessError::File(_))));
}

fn fake_metrics(path: &Path, aucs: &[f64]) {
    let mut t = Table::new(&["set", "fold", "roc_auc"]);
    for (i, a) in aucs.iter().enumerate() {
        t.push(vec!["fold".into(), (i + 1).to_string(), a.to_string()]);
    }
    t.push(vec!["holdout".into(), "1".into(), "0.5".into()]);
    t.write(path).unwrap();
}

#[test]
fn compare_fills_the_lower_triangle() {
    let dir = tempfile::tempdir().unwrap();
    let vectors = [
        [0.70, 0.72, 0.75, 0.71, 0.69],
        [0.80, 0.78, 0.83, 0.79, 0.81],
        [0.60, 0.66, 0.61, 0.64, 0.65],
        [0.90, 0.91, 0.88, 0.93, 0.87],
        [0.90, 0.91, 0.88, 0.93, 0.87],
    ];
    let mut specs = Vec::new();
    for (i, v) in vectors.iter().enumerate() {
        let p = dir.path().join(format!("m{i}.csv"));
        fake_metrics(&p, v);
        specs.push(format!("model{i}={}", p.display()));
    }
    let cfg = ExperimentConfig { metrics: specs.clone(), out_dir: Some(dir.path().join("out")), ..Default::default() };
    let s = compare(&cfg).unwrap();
    assert_eq!(s.pairs.rows.len(), 10);
    assert_eq!(s.matrix.rows.len(), 5);
    for (i, row) in s.matrix.rows.iter().enumerate() {
        for (j, cell) in row[1..].iter().enumerate() {
            assert_eq!(cell.is_empty(), j >= i, "cell ({i},{j})");
        }
    }
    assert!(s.pairs.rows.iter().all(|r| r[0] != r[1]));
    let degenerate: Vec<&Vec<String>> = s.pairs.rows.iter().filter(|r| r[4] == "degenerate").collect();
    assert_eq!(degenerate.len(), 1);
    assert_eq!((degenerate[0][0].as_str(), degenerate[0][1].as_str()), ("model4", "model3"));
    assert_eq!(s.matrix.rows[4][4], "degenerate");
    assert_eq!(s.levene.rows[0][3], "ok");

    let short = dir.path().join("short.csv");
    fake_metrics(&short, &[0.5, 0.6, 0.7]);
    let mut bad = specs[..2].to_vec();
    bad.push(format!("short={}", short.display()));
    let cfg = ExperimentConfig { metrics: bad, out_dir: Some(dir.path().join("out")), ..Default::default() };
    assert!(matches!(compare(&cfg), Err(HarnessError::Format(_))));
    let one = ExperimentConfig { metrics: specs[..1].to_vec(), ..Default::default() };
    assert!(matches!(compare(&one), Err(HarnessError::Usage(_))));
}

fn qcnn(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_qcnn")).args(args).output().unwrap()
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert_eq!(qcnn(&["generate", "--qubits", "5", "--out-dir", d]).status.code(), Some(2));
    assert_eq!(qcnn(&["generate", "--side", "12", "--out-dir", d]).status.code(), Some(2));
    assert_eq!(qcnn(&["train", "--bogus"]).status.code(), Some(2));
    assert_eq!(qcnn(&["train"]).status.code(), Some(2));
    let absent = format!("{d}/absent.tsv");
    assert_eq!(qcnn(&["train", "--manifest", &absent]).status.code(), Some(3));
    let junk = format!("{d}/junk.tsv");
    fs::write(&junk, "no metadata here\n").unwrap();
    assert_eq!(qcnn(&["train", "--manifest", &junk]).status.code(), Some(4));
    let toml = format!("{d}/exp.toml");
    fs::write(&toml, "epochz = 3\n").unwrap();
    assert_eq!(qcnn(&["train", "--config", &toml]).status.code(), Some(4));

    let out = qcnn(&["generate", "--qubits", "4", "--patients", "6", "--out-dir", d]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("6 patients (3 label 0, 3 label 1)"));
    let help = String::from_utf8_lossy(&qcnn(&["train", "--help"]).stdout).into_owned();
    for flag in ["--manifest", "--ansatz", "--qubits", "--seed", "--epochs", "--batch-size", "--hidden", "--noise-channels", "--noise-level", "--shots", "--out-dir", "--config"] {
        assert!(help.contains(flag), "{flag} missing from help");
    }
    assert!(help.contains("[default: 50]"));
}

#[test]
fn divergence_maps_to_its_own_exit_code() {
    let e: HarnessError = qcnn_core::Error::Divergence { epoch: 3, reason: "nan".into() }.into();
    assert_eq!(e.exit_code(), 5);
    let e: HarnessError = qcnn_core::Error::Io("x".into()).into();
    assert_eq!(e.exit_code(), 3);
}
