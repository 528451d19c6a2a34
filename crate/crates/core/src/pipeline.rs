//! The hybrid model and its training protocol.
//!
//! Per frame: amplitude encoding, circuit, Z read-outs. The read-out sequence
//! feeds the LSTM head. Circuit parameters are shared by all frames, so their
//! gradient is the upstream-weighted sum of per-frame circuit gradients.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ansatz::{run_circuit_readouts, AnsatzKind, CircuitSpec};
use crate::autodiff::{circuit_jacobian, hybrid_chain, GradientVector};
use crate::error::{Error, Result};
use crate::metrics::{metrics_report, MetricsReport};
use crate::neural::{
    self, bce_grad, bce_loss, head_backward, head_forward, Adam, AdamConfig, DenseParams, DropoutConfig, HeadCache,
    LstmParams, Mode,
};
use crate::noise::{noisy_readouts, NoiseConfig};
use crate::statevector::{amplitude_encode, QuantumState};

/// Deterministic sub-stream of a master seed.
pub fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatientSequence {
    pub patient_id: String,
    pub frames: Vec<Vec<f64>>,
    pub label: u8,
}

impl PatientSequence {
    pub fn new(patient_id: String, frames: Vec<Vec<f64>>, label: u8) -> Result<Self> {
        if label > 1 {
            return Err(Error::Label(format!("patient {patient_id}: label {label} is not 0 or 1")));
        }
        if frames.len() < 2 {
            return Err(Error::Shape(format!("patient {patient_id} has {} frame(s), need at least 2", frames.len())));
        }
        let len = frames[0].len();
        if frames.iter().any(|f| f.len() != len) {
            return Err(Error::Shape(format!("patient {patient_id} has frames of different sizes")));
        }
        if frames.iter().flatten().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Parameter(format!("patient {patient_id} has pixels outside [0, 1]")));
        }
        Ok(Self { patient_id, frames, label })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridModel {
    kind: AnsatzKind,
    circuit: CircuitSpec,
    theta: Vec<f64>,
    theta_generation: u64,
    lstm: LstmParams,
    dense: DenseParams,
    readout_wires: Vec<usize>,
}

impl HybridModel {
    /// Angles uniform in [0, 2π), Glorot LSTM and dense weights.
    pub fn new<R: Rng + ?Sized>(
        kind: AnsatzKind,
        num_qubits: usize,
        hidden_dim: usize,
        readouts: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let circuit = kind.build(num_qubits)?;
        let theta = (0..circuit.param_count).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
        let lstm = LstmParams::glorot(readouts, hidden_dim, rng)?;
        let dense = DenseParams::glorot(hidden_dim, rng);
        Self::from_parts(kind, num_qubits, theta, lstm, dense)
    }

    pub fn from_parts(
        kind: AnsatzKind,
        num_qubits: usize,
        theta: Vec<f64>,
        lstm: LstmParams,
        dense: DenseParams,
    ) -> Result<Self> {
        let circuit = kind.build(num_qubits)?;
        if theta.len() != circuit.param_count {
            return Err(Error::Shape(format!(
                "{kind} at {num_qubits} qubits needs {} angles, got {}",
                circuit.param_count,
                theta.len()
            )));
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::Parameter("circuit angles must be finite".into()));
        }
        if dense.weights().len() != lstm.hidden_dim() {
            return Err(Error::Shape(format!(
                "dense layer has {} weights for hidden dim {}",
                dense.weights().len(),
                lstm.hidden_dim()
            )));
        }
        let readout_wires = circuit.readout_wires(lstm.input_dim())?;
        Ok(Self { kind, circuit, theta, theta_generation: neural::next_generation(), lstm, dense, readout_wires })
    }

    pub fn kind(&self) -> AnsatzKind {
        self.kind
    }

    pub fn circuit(&self) -> &CircuitSpec {
        &self.circuit
    }

    pub fn num_qubits(&self) -> usize {
        self.circuit.num_qubits
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn theta_mut(&mut self) -> &mut [f64] {
        self.theta_generation = neural::next_generation();
        &mut self.theta
    }

    pub fn lstm(&self) -> &LstmParams {
        &self.lstm
    }

    pub fn lstm_mut(&mut self) -> &mut LstmParams {
        &mut self.lstm
    }

    pub fn dense(&self) -> &DenseParams {
        &self.dense
    }

    pub fn dense_mut(&mut self) -> &mut DenseParams {
        &mut self.dense
    }

    pub fn readout_wires(&self) -> &[usize] {
        &self.readout_wires
    }

    pub fn num_params(&self) -> usize {
        self.theta.len() + self.lstm.len() + self.dense.values().len()
    }
}

/// How a forward pass treats dropout and noise.
#[derive(Debug, Clone, Copy)]
pub struct ForwardOptions<'a> {
    pub mode: Mode,
    pub dropout: f64,
    pub noise: Option<&'a NoiseConfig>,
}

impl<'a> ForwardOptions<'a> {
    pub fn eval() -> Self {
        Self { mode: Mode::Eval, dropout: 0.0, noise: None }
    }

    pub fn train(dropout: f64) -> Self {
        Self { mode: Mode::Train, dropout, noise: None }
    }

    pub fn with_noise(self, noise: Option<&'a NoiseConfig>) -> Self {
        Self { noise, ..self }
    }
}

#[derive(Debug, Clone)]
pub struct ForwardCache {
    mode: Mode,
    theta_generation: u64,
    states: Vec<QuantumState>,
    features: Vec<Vec<f64>>,
    head: HeadCache,
}

impl ForwardCache {
    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn prob(&self) -> f64 {
        self.head.prob()
    }
}

/// Read-outs of one frame: analytic, or trajectory estimates when noise applies.
fn frame_features<R: Rng + ?Sized>(
    model: &HybridModel,
    state: &QuantumState,
    opts: &ForwardOptions<'_>,
    rng: &mut R,
) -> Result<Vec<f64>> {
    match opts.noise {
        Some(noise) if !noise.is_silent() && (opts.mode == Mode::Eval || noise.during_training) => {
            noisy_readouts(&model.circuit, &model.theta, state, noise, &model.readout_wires, rng)
        }
        _ => run_circuit_readouts(&model.circuit, &model.theta, state, &model.readout_wires),
    }
}

/// Probability of label 1 for a frame sequence.
pub fn forward<R: Rng + ?Sized>(
    model: &HybridModel,
    frames: &[Vec<f64>],
    opts: &ForwardOptions<'_>,
    rng: &mut R,
) -> Result<(f64, ForwardCache)> {
    if frames.is_empty() {
        return Err(Error::Shape("sequence has no frames".into()));
    }
    let want = 1usize << model.num_qubits();
    let mut states = Vec::with_capacity(frames.len());
    let mut features = Vec::with_capacity(frames.len());
    for (t, f) in frames.iter().enumerate() {
        if f.len() != want {
            return Err(Error::Shape(format!("frame {t} has {} pixels, model expects {want}", f.len())));
        }
        let state = amplitude_encode(f)?;
        features.push(frame_features(model, &state, opts, rng)?);
        states.push(state);
    }
    let dropout = match opts.mode {
        Mode::Train => DropoutConfig::new(opts.dropout, Mode::Train)?,
        Mode::Eval => DropoutConfig::eval(),
    };
    let (prob, head) = head_forward(&features, &model.lstm, &model.dense, &dropout, rng)?;
    Ok((prob, ForwardCache { mode: opts.mode, theta_generation: model.theta_generation, states, features, head }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub theta: Vec<f64>,
    pub lstm: Vec<f64>,
    pub dense: Vec<f64>,
}

impl Gradients {
    pub fn zeros(model: &HybridModel) -> Self {
        Self {
            theta: vec![0.0; model.theta.len()],
            lstm: vec![0.0; model.lstm.len()],
            dense: vec![0.0; model.dense.values().len()],
        }
    }

    pub fn add_scaled(&mut self, other: &Gradients, scale: f64) {
        for (a, b) in [(&mut self.theta, &other.theta), (&mut self.lstm, &other.lstm), (&mut self.dense, &other.dense)] {
            for (x, y) in a.iter_mut().zip(b) {
                *x += scale * y;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.theta.iter().chain(&self.lstm).chain(&self.dense).all(|x| x.is_finite())
    }
}

/// BCE loss and its gradient for every parameter.
pub fn backward(model: &HybridModel, cache: &ForwardCache, label: u8) -> Result<(f64, Gradients)> {
    if cache.mode != Mode::Train {
        return Err(Error::State("backward needs a cache from a train-mode forward pass".into()));
    }
    if cache.theta_generation != model.theta_generation {
        return Err(Error::State("circuit angles changed since the forward pass".into()));
    }
    let y = label as f64;
    let p = cache.head.prob();
    let loss = bce_loss(p, y)?;
    let head = head_backward(&cache.head, &model.lstm, &model.dense, bce_grad(p, y)?)?;

    let mut upstream = Vec::new();
    let mut frame_grads: Vec<GradientVector> = Vec::new();
    for (state, d_feat) in cache.states.iter().zip(&head.features) {
        let (_, jac) = circuit_jacobian(&model.circuit, &model.theta, state, &model.readout_wires)?;
        upstream.extend_from_slice(d_feat);
        frame_grads.extend(jac);
    }
    let theta = hybrid_chain(&upstream, &frame_grads)?.into_inner();
    Ok((loss, Gradients { theta, lstm: head.lstm, dense: head.dense }))
}

/// Train pool and holdout, as indices into the dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train_pool: Vec<usize>,
    pub holdout: Vec<usize>,
}

fn class_members(labels: &[u8], idx: &[usize], class: u8) -> Vec<usize> {
    idx.iter().copied().filter(|&i| labels[i] == class).collect()
}

fn shuffle<R: Rng + ?Sized>(v: &mut [usize], rng: &mut R) {
    for i in (1..v.len()).rev() {
        v.swap(i, rng.random_range(0..=i));
    }
}

/// Stratified 80:20 split.
pub fn split_dataset(labels: &[u8], seed: u64) -> Result<Split> {
    let all: Vec<usize> = (0..labels.len()).collect();
    let mut rng = rng_stream(seed, 101);
    let mut split = Split { train_pool: Vec::new(), holdout: Vec::new() };
    for class in 0..2u8 {
        let mut members = class_members(labels, &all, class);
        if members.len() < 2 {
            return Err(Error::Stratification(format!(
                "class {class} has {} sample(s); the split needs at least 2",
                members.len()
            )));
        }
        shuffle(&mut members, &mut rng);
        let hold = ((members.len() as f64 * 0.2).round() as usize).clamp(1, members.len() - 1);
        split.holdout.extend_from_slice(&members[..hold]);
        split.train_pool.extend_from_slice(&members[hold..]);
    }
    split.train_pool.sort_unstable();
    split.holdout.sort_unstable();
    Ok(split)
}

/// `(train, validation)` index pairs; each class is dealt round-robin across
/// folds, continuing where the previous class stopped.
pub fn stratified_kfold(labels: &[u8], pool: &[usize], k: usize, seed: u64) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    if k < 2 {
        return Err(Error::Parameter(format!("k-fold needs k >= 2, got {k}")));
    }
    let mut rng = rng_stream(seed, 102);
    let mut val: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut next = 0;
    for class in 0..2u8 {
        let mut members = class_members(labels, pool, class);
        if members.len() < k {
            return Err(Error::Stratification(format!(
                "class {class} has {} sample(s) in the pool, fewer than k = {k}",
                members.len()
            )));
        }
        shuffle(&mut members, &mut rng);
        for m in members {
            val[next].push(m);
            next = (next + 1) % k;
        }
    }
    Ok(val
        .into_iter()
        .map(|mut v| {
            v.sort_unstable();
            let train = pool.iter().copied().filter(|i| v.binary_search(i).is_err()).collect();
            (train, v)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Early stopping only counts epochs after this one.
    pub threshold_epoch: usize,
    /// Stop once validation loss has exceeded its best on more than this many epochs.
    pub patience: usize,
    pub lr_quantum: f64,
    pub lr_classical: f64,
    pub hidden_dim: usize,
    pub dropout: f64,
    /// Z read-outs per frame (LSTM input width).
    pub readouts: usize,
    pub folds: usize,
    pub eval_repeats: usize,
    pub threshold: f64,
    pub seed: u64,
    pub noise: Option<NoiseConfig>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 4,
            max_epochs: 50,
            threshold_epoch: 30,
            patience: 10,
            lr_quantum: 1e-2,
            lr_classical: 1e-3,
            hidden_dim: 32,
            dropout: 0.5,
            readouts: 1,
            folds: 5,
            eval_repeats: 3,
            threshold: 0.5,
            seed: 0,
            noise: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Parameter("batch size must be at least 1".into()));
        }
        if self.max_epochs == 0 {
            return Err(Error::Parameter("max epochs must be at least 1".into()));
        }
        for (name, lr) in [("quantum", self.lr_quantum), ("classical", self.lr_classical)] {
            if !(lr > 0.0 && lr.is_finite()) {
                return Err(Error::Parameter(format!("{name} learning rate must be positive, got {lr}")));
            }
        }
        if self.hidden_dim == 0 || self.readouts == 0 || self.eval_repeats == 0 {
            return Err(Error::Parameter("hidden dim, readouts and eval repeats must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Parameter(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        if let Some(n) = &self.noise {
            n.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_auc: Option<f64>,
}

/// Progress notifications from [`train_fold`].
#[derive(Debug, Clone, PartialEq)]
pub enum TrainEvent {
    /// An optimizer update is about to be applied.
    Step { epoch: usize, batch: usize },
    /// An epoch finished; `stop` is true when early stopping fired.
    Epoch { record: EpochRecord, exceed_count: usize, stop: bool },
}

#[derive(Debug, Clone)]
pub struct FoldOutcome {
    /// Parameters at the lowest validation loss.
    pub model: HybridModel,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    /// Epoch at which early stopping fired.
    pub stopped_at: Option<usize>,
    pub seconds: f64,
}

/// Mean BCE and per-sample probabilities in eval mode.
fn eval_pass(model: &HybridModel, samples: &[&PatientSequence]) -> Result<(f64, Vec<f64>)> {
    let mut rng = rng_stream(0, 0);
    let mut loss = 0.0;
    let mut probs = Vec::with_capacity(samples.len());
    for s in samples {
        let (p, _) = forward(model, &s.frames, &ForwardOptions::eval(), &mut rng)?;
        loss += bce_loss(p, s.label as f64)?;
        probs.push(p);
    }
    Ok((loss / samples.len() as f64, probs))
}

fn auc_or_none(scores: &[f64], labels: &[u8]) -> Result<Option<f64>> {
    match crate::metrics::roc_auc(scores, labels) {
        Ok(a) => Ok(Some(a)),
        Err(Error::UndefinedMetric(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Mini-batch Adam with early stopping; returns the best-validation model.
pub fn train_fold(
    mut model: HybridModel,
    train: &[&PatientSequence],
    val: &[&PatientSequence],
    cfg: &TrainConfig,
    stream: u64,
    observer: &mut dyn FnMut(&TrainEvent),
) -> Result<FoldOutcome> {
    cfg.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(Error::Shape("training and validation sets must be non-empty".into()));
    }
    let start = Instant::now();
    let mut rng = rng_stream(cfg.seed, 1000 + stream);
    let mut opt_theta = Adam::new(model.theta.len(), AdamConfig::with_lr(cfg.lr_quantum));
    let mut opt_lstm = Adam::new(model.lstm.len(), AdamConfig::with_lr(cfg.lr_classical));
    let mut opt_dense = Adam::new(model.dense.values().len(), AdamConfig::with_lr(cfg.lr_classical));
    let opts = ForwardOptions::train(cfg.dropout).with_noise(cfg.noise.as_ref());
    let val_labels: Vec<u8> = val.iter().map(|s| s.label).collect();

    let mut history = Vec::new();
    let mut best = (f64::INFINITY, 0usize, model.clone());
    let mut exceed = 0usize;
    let mut stopped_at = None;
    let mut order: Vec<usize> = (0..train.len()).collect();

    for epoch in 1..=cfg.max_epochs {
        shuffle(&mut order, &mut rng);
        let mut epoch_loss = 0.0;
        for (batch, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let mut acc = Gradients::zeros(&model);
            for &i in chunk {
                let s = train[i];
                let (_, cache) = forward(&model, &s.frames, &opts, &mut rng)?;
                let (loss, g) = backward(&model, &cache, s.label)?;
                if !loss.is_finite() || !g.is_finite() {
                    return Err(Error::Divergence { epoch, reason: format!("non-finite loss or gradient on {}", s.patient_id) });
                }
                epoch_loss += loss;
                acc.add_scaled(&g, 1.0 / chunk.len() as f64);
            }
            observer(&TrainEvent::Step { epoch, batch });
            opt_theta.step(model.theta_mut(), &acc.theta)?;
            opt_lstm.step(model.lstm.values_mut(), &acc.lstm)?;
            opt_dense.step(model.dense.values_mut(), &acc.dense)?;
        }
        let train_loss = epoch_loss / train.len() as f64;
        let (val_loss, probs) = eval_pass(&model, val)?;
        if !train_loss.is_finite() || !val_loss.is_finite() {
            return Err(Error::Divergence { epoch, reason: "loss became non-finite".into() });
        }
        let record = EpochRecord { epoch, train_loss, val_loss, val_auc: auc_or_none(&probs, &val_labels)? };

        if epoch > cfg.threshold_epoch && val_loss > best.0 {
            exceed += 1;
        }
        if val_loss < best.0 {
            best = (val_loss, epoch, model.clone());
        }
        let stop = exceed > cfg.patience;
        observer(&TrainEvent::Epoch { record: record.clone(), exceed_count: exceed, stop });
        history.push(record);
        if stop {
            stopped_at = Some(epoch);
            break;
        }
    }
    Ok(FoldOutcome {
        model: best.2,
        history,
        best_epoch: best.1,
        best_val_loss: best.0,
        stopped_at,
        seconds: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// Per repeat, one probability per sample.
    pub scores: Vec<Vec<f64>>,
    pub reports: Vec<MetricsReport>,
}

/// Means across repeats.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanMetrics {
    pub accuracy: f64,
    pub roc_auc: Option<f64>,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tn: f64,
    pub fp: f64,
    pub fn_: f64,
    pub tp: f64,
}

impl Evaluation {
    pub fn mean(&self) -> MeanMetrics {
        let n = self.reports.len() as f64;
        let avg = |f: &dyn Fn(&MetricsReport) -> f64| self.reports.iter().map(f).sum::<f64>() / n;
        let aucs: Option<Vec<f64>> = self.reports.iter().map(|r| r.roc_auc).collect();
        MeanMetrics {
            accuracy: avg(&|r| r.prf.accuracy),
            roc_auc: aucs.map(|a| a.iter().sum::<f64>() / n),
            precision: avg(&|r| r.prf.weighted.precision),
            recall: avg(&|r| r.prf.weighted.recall),
            f1: avg(&|r| r.prf.weighted.f1),
            tn: avg(&|r| r.prf.confusion.tn as f64),
            fp: avg(&|r| r.prf.confusion.fp as f64),
            fn_: avg(&|r| r.prf.confusion.fn_ as f64),
            tp: avg(&|r| r.prf.confusion.tp as f64),
        }
    }
}

/// Thresholded metrics; with noise each repeat draws its own trajectories,
/// without noise one analytic pass is shared by all repeats.
pub fn evaluate(
    model: &HybridModel,
    samples: &[&PatientSequence],
    threshold: f64,
    repeats: usize,
    seed: u64,
    noise: Option<&NoiseConfig>,
) -> Result<Evaluation> {
    if samples.is_empty() {
        return Err(Error::Shape("nothing to evaluate".into()));
    }
    if repeats == 0 {
        return Err(Error::Parameter("evaluation needs at least one repeat".into()));
    }
    let labels: Vec<u8> = samples.iter().map(|s| s.label).collect();
    let stochastic = noise.is_some_and(|n| !n.is_silent());
    let opts = ForwardOptions::eval().with_noise(noise);
    let mut scores: Vec<Vec<f64>> = Vec::with_capacity(repeats);
    for r in 0..repeats {
        if r > 0 && !stochastic {
            scores.push(scores[0].clone());
            continue;
        }
        let mut rng = rng_stream(seed, 2000 + r as u64);
        let probs = samples
            .iter()
            .map(|s| forward(model, &s.frames, &opts, &mut rng).map(|(p, _)| p))
            .collect::<Result<Vec<_>>>()?;
        scores.push(probs);
    }
    let reports = scores.iter().map(|s| metrics_report(s, &labels, threshold)).collect::<Result<Vec<_>>>()?;
    Ok(Evaluation { scores, reports })
}

#[derive(Debug, Clone)]
pub struct FoldReport {
    pub fold: usize,
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub outcome: FoldOutcome,
    /// Validation AUC of the returned (best) model.
    pub val_auc: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ProtocolResult {
    pub split: Split,
    pub folds: Vec<FoldReport>,
    /// Fold whose model is evaluated on the holdout.
    pub best_fold: usize,
    pub holdout: Evaluation,
}

impl ProtocolResult {
    pub fn best_model(&self) -> &HybridModel {
        &self.folds[self.best_fold].outcome.model
    }
}

/// 80:20 split, k-fold training from fresh initializations, then holdout
/// evaluation of the fold model with the lowest validation loss.
pub fn cross_validate(
    data: &[PatientSequence],
    kind: AnsatzKind,
    cfg: &TrainConfig,
    observer: &mut dyn FnMut(usize, &TrainEvent),
) -> Result<ProtocolResult> {
    cfg.validate()?;
    let Some(first) = data.first() else {
        return Err(Error::Shape("empty dataset".into()));
    };
    let pixels = first.frames[0].len();
    if !pixels.is_power_of_two() {
        return Err(Error::Shape(format!("frames of {pixels} pixels are not a power of two")));
    }
    let num_qubits = pixels.trailing_zeros() as usize;
    let labels: Vec<u8> = data.iter().map(|s| s.label).collect();
    let split = split_dataset(&labels, cfg.seed)?;
    let folds = stratified_kfold(&labels, &split.train_pool, cfg.folds, cfg.seed)?;

    let mut reports = Vec::with_capacity(folds.len());
    for (f, (train_idx, val_idx)) in folds.into_iter().enumerate() {
        let mut init = rng_stream(cfg.seed, 3000 + f as u64);
        let model = HybridModel::new(kind, num_qubits, cfg.hidden_dim, cfg.readouts, &mut init)?;
        let train: Vec<&PatientSequence> = train_idx.iter().map(|&i| &data[i]).collect();
        let val: Vec<&PatientSequence> = val_idx.iter().map(|&i| &data[i]).collect();
        let outcome = train_fold(model, &train, &val, cfg, f as u64, &mut |e| observer(f, e))?;
        let val_auc = outcome.history.get(outcome.best_epoch.saturating_sub(1)).and_then(|r| r.val_auc);
        reports.push(FoldReport { fold: f, train: train_idx, val: val_idx, outcome, val_auc });
    }
    let best_fold = reports
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.outcome.best_val_loss.total_cmp(&b.1.outcome.best_val_loss))
        .map(|(i, _)| i)
        .expect("at least two folds");
    let holdout_set: Vec<&PatientSequence> = split.holdout.iter().map(|&i| &data[i]).collect();
    let holdout = evaluate(
        &reports[best_fold].outcome.model,
        &holdout_set,
        cfg.threshold,
        cfg.eval_repeats,
        cfg.seed,
        cfg.noise.as_ref(),
    )?;
    Ok(ProtocolResult { split, folds: reports, best_fold, holdout })
}

const MAGIC: &[u8; 8] = b"QCNNCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Binary checkpoint: magic, version, ansatz code, qubits, input and hidden
/// dims, three array lengths, then the arrays as little-endian f64.
pub fn checkpoint_bytes(model: &HybridModel) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.push(model.kind.code());
    for v in [model.num_qubits(), model.lstm.input_dim(), model.lstm.hidden_dim()] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    for len in [model.theta.len(), model.lstm.len(), model.dense.values().len()] {
        out.extend_from_slice(&(len as u64).to_le_bytes());
    }
    for x in model.theta.iter().chain(model.lstm.values()).chain(model.dense.values()) {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

/// Writes via a temporary file and a rename, so readers never see a partial file.
pub fn save_checkpoint(model: &HybridModel, path: &Path) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&checkpoint_bytes(model))?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

struct Cursor<'a>(&'a [u8]);

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.0.len() < n {
            return Err(Error::Format("checkpoint is truncated".into()));
        }
        let (head, rest) = self.0.split_at(n);
        self.0 = rest;
        Ok(head)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<usize> {
        usize::try_from(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
            .map_err(|_| Error::Format("array length overflows".into()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| Error::Format("array length overflows".into()))?)?;
        Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
}

pub fn model_from_checkpoint(bytes: &[u8]) -> Result<HybridModel> {
    let mut c = Cursor(bytes);
    if c.take(MAGIC.len())? != MAGIC {
        return Err(Error::Format("not a checkpoint (bad magic)".into()));
    }
    let version = c.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Format(format!("checkpoint version {version}, expected {CHECKPOINT_VERSION}")));
    }
    let code = c.take(1)?[0];
    let kind = AnsatzKind::from_code(code).ok_or_else(|| Error::Format(format!("unknown ansatz code {code}")))?;
    let (n, d, h) = (c.u32()? as usize, c.u32()? as usize, c.u32()? as usize);
    let (lt, ll, ld) = (c.u64()?, c.u64()?, c.u64()?);
    let theta = c.f64s(lt)?;
    let lstm = c.f64s(ll)?;
    let dense = c.f64s(ld)?;
    if !c.0.is_empty() {
        return Err(Error::Format(format!("{} trailing bytes after checkpoint payload", c.0.len())));
    }
    let lstm = LstmParams::from_values(d, h, lstm)?;
    let dense = DenseParams::from_values(dense)?;
    HybridModel::from_parts(kind, n, theta, lstm, dense)
}

pub fn load_checkpoint(path: &Path) -> Result<HybridModel> {
    let bytes = fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    model_from_checkpoint(&bytes)
}

/// Loads and checks the topology against what the caller expects.
pub fn load_checkpoint_for(path: &Path, kind: AnsatzKind, num_qubits: usize) -> Result<HybridModel> {
    let model = load_checkpoint(path)?;
    if model.kind != kind || model.num_qubits() != num_qubits {
        return Err(Error::Shape(format!(
            "checkpoint holds {} at {} qubits, expected {kind} at {num_qubits}",
            model.kind,
            model.num_qubits()
        )));
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_balanced_samples_split_eight_two() {
        let labels = [0, 1, 0, 1, 0, 1, 0, 1, 0, 1];
        let s = split_dataset(&labels, 3).unwrap();
        assert_eq!(s.train_pool.len(), 8);
        assert_eq!(s.holdout.len(), 2);
        assert_eq!(s.holdout.iter().filter(|&&i| labels[i] == 1).count(), 1);
        assert_eq!(s, split_dataset(&labels, 3).unwrap());
    }

    #[test]
    fn missing_class_cannot_stratify() {
        assert!(matches!(split_dataset(&[1, 1, 1, 0], 0), Err(Error::Stratification(_))));
        let labels = [0, 1, 0, 1, 0, 1];
        assert!(matches!(stratified_kfold(&labels, &[0, 1, 2, 3, 4, 5], 5, 0), Err(Error::Stratification(_))));
    }

    #[test]
    fn sequences_need_two_frames() {
        assert!(PatientSequence::new("a".into(), vec![vec![0.5; 4]], 0).is_err());
        assert!(PatientSequence::new("a".into(), vec![vec![0.5; 4]; 2], 2).is_err());
    }
}
