//! LSTM head with dropout, a dense sigmoid output, BCE loss and Adam.
//!
//! Gate order everywhere is input, forget, candidate, output. The gate
//! weights are stored row-major as one `4H × (D + H)` block followed by the
//! `4H` biases, so the optimizer can treat the whole layer as one slice.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower clamp for predicted probabilities before taking logs.
pub const PROB_EPS: f64 = 1e-7;
pub const FORGET_BIAS: f64 = 1.0;

static GENERATION: std::sync::atomic::AtomicU64 = std::sync::atomic::AtomicU64::new(1);

pub(crate) fn next_generation() -> u64 {
    GENERATION.fetch_add(1, std::sync::atomic::Ordering::Relaxed)
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn check_finite(values: &[f64], what: &str) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::Parameter(format!("{what} entry {i} is not finite"))),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    input_dim: usize,
    hidden_dim: usize,
    values: Vec<f64>,
    /// Changes on every mutation so caches from older values are detectable.
    generation: u64,
}

impl LstmParams {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Result<Self> {
        if input_dim == 0 || hidden_dim == 0 {
            return Err(Error::Shape(format!("LSTM dims must be positive, got D={input_dim} H={hidden_dim}")));
        }
        let len = 4 * hidden_dim * (input_dim + hidden_dim + 1);
        Ok(Self { input_dim, hidden_dim, values: vec![0.0; len], generation: next_generation() })
    }

    /// Glorot-uniform weights per gate, zero biases except the forget gate.
    pub fn glorot<R: Rng + ?Sized>(input_dim: usize, hidden_dim: usize, rng: &mut R) -> Result<Self> {
        let mut p = Self::zeros(input_dim, hidden_dim)?;
        let limit = (6.0 / (input_dim + 2 * hidden_dim) as f64).sqrt();
        let nw = p.weight_len();
        for w in &mut p.values[..nw] {
            *w = rng.random_range(-limit..limit);
        }
        for u in 0..hidden_dim {
            p.values[nw + hidden_dim + u] = FORGET_BIAS;
        }
        Ok(p)
    }

    /// Rebuilds parameters from a flat vector in storage order.
    pub fn from_values(input_dim: usize, hidden_dim: usize, values: Vec<f64>) -> Result<Self> {
        let mut p = Self::zeros(input_dim, hidden_dim)?;
        if values.len() != p.values.len() {
            return Err(Error::Shape(format!("expected {} LSTM values, got {}", p.values.len(), values.len())));
        }
        check_finite(&values, "LSTM parameter")?;
        p.values = values;
        Ok(p)
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    /// Mutable access to every value; invalidates outstanding caches.
    pub fn values_mut(&mut self) -> &mut [f64] {
        self.generation = next_generation();
        &mut self.values
    }

    fn cols(&self) -> usize {
        self.input_dim + self.hidden_dim
    }

    fn weight_len(&self) -> usize {
        4 * self.hidden_dim * self.cols()
    }

    /// Weight for gate `g` (0..4), hidden unit `u`, column `c` of `[x; h]`.
    pub fn weight(&self, g: usize, u: usize, c: usize) -> f64 {
        self.values[(g * self.hidden_dim + u) * self.cols() + c]
    }

    pub fn bias(&self, g: usize, u: usize) -> f64 {
        self.values[self.weight_len() + g * self.hidden_dim + u]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseParams {
    /// `H` weights then the bias.
    values: Vec<f64>,
    generation: u64,
}

impl DenseParams {
    pub fn zeros(hidden_dim: usize) -> Self {
        Self { values: vec![0.0; hidden_dim + 1], generation: next_generation() }
    }

    pub fn glorot<R: Rng + ?Sized>(hidden_dim: usize, rng: &mut R) -> Self {
        let mut d = Self::zeros(hidden_dim);
        let limit = (6.0 / (hidden_dim + 1) as f64).sqrt();
        for w in &mut d.values[..hidden_dim] {
            *w = rng.random_range(-limit..limit);
        }
        d
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Shape("dense layer needs at least one weight and a bias".into()));
        }
        check_finite(&values, "dense parameter")?;
        Ok(Self { values, generation: next_generation() })
    }

    pub fn weights(&self) -> &[f64] {
        &self.values[..self.values.len() - 1]
    }

    pub fn bias(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        self.generation = next_generation();
        &mut self.values
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Train,
    Eval,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DropoutConfig {
    pub rate: f64,
    pub mode: Mode,
}

impl DropoutConfig {
    pub fn new(rate: f64, mode: Mode) -> Result<Self> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::Parameter(format!("dropout rate {rate} outside [0, 1)")));
        }
        Ok(Self { rate, mode })
    }

    pub fn eval() -> Self {
        Self { rate: 0.0, mode: Mode::Eval }
    }
}

/// Intermediates of one forward pass, enough for exact BPTT.
#[derive(Debug, Clone)]
pub struct LstmCache {
    generation: u64,
    inputs: Vec<Vec<f64>>,
    /// Per step: activated gates `[i, f, g, o]`, each of length H.
    gates: Vec<[Vec<f64>; 4]>,
    /// `c_0 = 0, c_1, …, c_T`.
    cells: Vec<Vec<f64>>,
    /// `h_0 = 0, h_1, …, h_T` (before dropout).
    hiddens: Vec<Vec<f64>>,
    /// Inverted-dropout multipliers on `h_T`; `None` in eval mode.
    mask: Option<Vec<f64>>,
}

impl LstmCache {
    pub fn mask(&self) -> Option<&[f64]> {
        self.mask.as_deref()
    }

    pub fn steps(&self) -> usize {
        self.inputs.len()
    }
}

/// Runs the recurrence from zero state and returns the (dropped-out) final
/// hidden vector.
pub fn lstm_forward<R: Rng + ?Sized>(
    features: &[Vec<f64>],
    params: &LstmParams,
    dropout: &DropoutConfig,
    rng: &mut R,
) -> Result<(Vec<f64>, LstmCache)> {
    if features.is_empty() {
        return Err(Error::Shape("LSTM needs at least one time step".into()));
    }
    let (d, h) = (params.input_dim, params.hidden_dim);
    if let Some(x) = features.iter().find(|x| x.len() != d) {
        return Err(Error::Shape(format!("feature vector of length {} for input dim {d}", x.len())));
    }
    let mut cache = LstmCache {
        generation: params.generation,
        inputs: features.to_vec(),
        gates: Vec::with_capacity(features.len()),
        cells: vec![vec![0.0; h]],
        hiddens: vec![vec![0.0; h]],
        mask: None,
    };
    let cols = d + h;
    let mut z = vec![0.0; cols];
    for x in features {
        let h_prev = cache.hiddens.last().unwrap();
        let c_prev = cache.cells.last().unwrap();
        z[..d].copy_from_slice(x);
        z[d..].copy_from_slice(h_prev);
        let mut acts: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; h]);
        for (g, act) in acts.iter_mut().enumerate() {
            for (u, a) in act.iter_mut().enumerate() {
                let row = &params.values[(g * h + u) * cols..(g * h + u + 1) * cols];
                let pre = params.bias(g, u) + row.iter().zip(&z).map(|(w, v)| w * v).sum::<f64>();
                *a = if g == 2 { pre.tanh() } else { sigmoid(pre) };
            }
        }
        let c: Vec<f64> = (0..h).map(|u| acts[1][u] * c_prev[u] + acts[0][u] * acts[2][u]).collect();
        let hn: Vec<f64> = (0..h).map(|u| acts[3][u] * c[u].tanh()).collect();
        cache.gates.push(acts);
        cache.cells.push(c);
        cache.hiddens.push(hn);
    }
    let mut out = cache.hiddens.last().unwrap().clone();
    if dropout.mode == Mode::Train && dropout.rate > 0.0 {
        let keep = 1.0 - dropout.rate;
        let mask: Vec<f64> = (0..h).map(|_| if rng.random::<f64>() < dropout.rate { 0.0 } else { 1.0 / keep }).collect();
        for (o, m) in out.iter_mut().zip(&mask) {
            *o *= m;
        }
        cache.mask = Some(mask);
    }
    Ok((out, cache))
}

/// Exact BPTT from `d_out` (gradient at the dropped-out final hidden).
/// Returns parameter gradients in storage order and one gradient per input.
pub fn lstm_backward(cache: &LstmCache, params: &LstmParams, d_out: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    if cache.generation != params.generation {
        return Err(Error::State("LSTM cache was produced with different parameter values".into()));
    }
    let (d, h) = (params.input_dim, params.hidden_dim);
    if d_out.len() != h {
        return Err(Error::Shape(format!("upstream gradient of length {} for hidden dim {h}", d_out.len())));
    }
    let cols = d + h;
    let nw = params.weight_len();
    let mut grads = vec![0.0; params.values.len()];
    let mut d_inputs = vec![vec![0.0; d]; cache.steps()];

    let mut dh: Vec<f64> = match &cache.mask {
        Some(m) => d_out.iter().zip(m).map(|(g, m)| g * m).collect(),
        None => d_out.to_vec(),
    };
    let mut dc = vec![0.0; h];
    let mut da = [vec![0.0; h], vec![0.0; h], vec![0.0; h], vec![0.0; h]];
    let mut z = vec![0.0; cols];
    for t in (0..cache.steps()).rev() {
        let [gi, gf, gg, go] = &cache.gates[t];
        let (c, c_prev) = (&cache.cells[t + 1], &cache.cells[t]);
        for u in 0..h {
            let tc = c[u].tanh();
            let d_o = dh[u] * tc;
            dc[u] += dh[u] * go[u] * (1.0 - tc * tc);
            da[0][u] = dc[u] * gg[u] * gi[u] * (1.0 - gi[u]);
            da[1][u] = dc[u] * c_prev[u] * gf[u] * (1.0 - gf[u]);
            da[2][u] = dc[u] * gi[u] * (1.0 - gg[u] * gg[u]);
            da[3][u] = d_o * go[u] * (1.0 - go[u]);
            dc[u] *= gf[u];
        }
        z[..d].copy_from_slice(&cache.inputs[t]);
        z[d..].copy_from_slice(&cache.hiddens[t]);
        let mut dz = vec![0.0; cols];
        for (g, dag) in da.iter().enumerate() {
            for (u, &a) in dag.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let base = (g * h + u) * cols;
                let row = &params.values[base..base + cols];
                for c in 0..cols {
                    grads[base + c] += a * z[c];
                    dz[c] += a * row[c];
                }
                grads[nw + g * h + u] += a;
            }
        }
        d_inputs[t].copy_from_slice(&dz[..d]);
        dh.copy_from_slice(&dz[d..]);
    }
    Ok((grads, d_inputs))
}

/// `σ(w·h + b)`.
pub fn dense_sigmoid(hidden: &[f64], dense: &DenseParams) -> Result<f64> {
    let w = dense.weights();
    if hidden.len() != w.len() {
        return Err(Error::Shape(format!("hidden vector of length {} for {} dense weights", hidden.len(), w.len())));
    }
    Ok(sigmoid(dense.bias() + w.iter().zip(hidden).map(|(a, b)| a * b).sum::<f64>()))
}

fn check_label(y: f64) -> Result<()> {
    if y != 0.0 && y != 1.0 {
        return Err(Error::Label(format!("label {y} is not 0 or 1")));
    }
    Ok(())
}

pub fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_EPS, 1.0 - PROB_EPS)
}

/// `−[y ln p + (1 − y) ln(1 − p)]` with `p` clamped away from 0 and 1.
pub fn bce_loss(p: f64, y: f64) -> Result<f64> {
    check_label(y)?;
    let p = clamp_prob(p);
    Ok(-(y * p.ln() + (1.0 - y) * (1.0 - p).ln()))
}

/// `dL/dp` at the clamped probability.
pub fn bce_grad(p: f64, y: f64) -> Result<f64> {
    check_label(y)?;
    let p = clamp_prob(p);
    Ok(-y / p + (1.0 - y) / (1.0 - p))
}

/// Forward state of LSTM + dropout + dense head for one sequence.
#[derive(Debug, Clone)]
pub struct HeadCache {
    lstm: LstmCache,
    dense_generation: u64,
    hidden: Vec<f64>,
    prob: f64,
}

impl HeadCache {
    pub fn prob(&self) -> f64 {
        self.prob
    }

    pub fn hidden(&self) -> &[f64] {
        &self.hidden
    }

    pub fn lstm(&self) -> &LstmCache {
        &self.lstm
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeadGradients {
    pub lstm: Vec<f64>,
    pub dense: Vec<f64>,
    /// `dLoss/dFeature` per time step.
    pub features: Vec<Vec<f64>>,
}

pub fn head_forward<R: Rng + ?Sized>(
    features: &[Vec<f64>],
    lstm: &LstmParams,
    dense: &DenseParams,
    dropout: &DropoutConfig,
    rng: &mut R,
) -> Result<(f64, HeadCache)> {
    let (hidden, cache) = lstm_forward(features, lstm, dropout, rng)?;
    let prob = dense_sigmoid(&hidden, dense)?;
    Ok((prob, HeadCache { lstm: cache, dense_generation: dense.generation, hidden, prob }))
}

/// Backpropagates `dLoss/dProb` through the dense layer and the LSTM.
pub fn head_backward(cache: &HeadCache, lstm: &LstmParams, dense: &DenseParams, d_prob: f64) -> Result<HeadGradients> {
    if cache.dense_generation != dense.generation {
        return Err(Error::State("dense cache was produced with different parameter values".into()));
    }
    let d_logit = d_prob * cache.prob * (1.0 - cache.prob);
    let mut d_dense: Vec<f64> = cache.hidden.iter().map(|h| d_logit * h).collect();
    d_dense.push(d_logit);
    let d_hidden: Vec<f64> = dense.weights().iter().map(|w| d_logit * w).collect();
    let (d_lstm, d_features) = lstm_backward(&cache.lstm, lstm, &d_hidden)?;
    Ok(HeadGradients { lstm: d_lstm, dense: d_dense, features: d_features })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// One bias-corrected Adam update at step `t` (1-based).
pub fn adam_step(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    cfg: &AdamConfig,
    t: u64,
) -> Result<()> {
    if grads.len() != params.len() || m.len() != params.len() || v.len() != params.len() {
        return Err(Error::Shape(format!(
            "Adam shapes differ: params {}, grads {}, m {}, v {}",
            params.len(),
            grads.len(),
            m.len(),
            v.len()
        )));
    }
    if t == 0 {
        return Err(Error::Parameter("Adam step counter starts at 1".into()));
    }
    let c1 = 1.0 - cfg.beta1.powi(t as i32);
    let c2 = 1.0 - cfg.beta2.powi(t as i32);
    for i in 0..params.len() {
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grads[i];
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
        params[i] -= cfg.lr * (m[i] / c1) / ((v[i] / c2).sqrt() + cfg.eps);
    }
    Ok(())
}

/// Adam with its moment buffers and step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub cfg: AdamConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(len: usize, cfg: AdamConfig) -> Self {
        Self { cfg, m: vec![0.0; len], v: vec![0.0; len], t: 0 }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        self.t += 1;
        adam_step(params, grads, &mut self.m, &mut self.v, &self.cfg, self.t)
    }
}
