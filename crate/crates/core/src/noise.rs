//! Single-qubit error channels, applied either by trajectory sampling on
//! statevectors or exactly on small density matrices.
//!
//! Channels act on every still-active wire after each circuit layer, in the
//! fixed order depolarizing, amplitude damping, phase damping, bit flip.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ansatz::{CircuitSpec, CompiledCircuit};
use crate::error::{Error, Result};
use crate::gates::{pauli_x, pauli_y, pauli_z};
use crate::statevector::{GateMatrix, QuantumState, C64};

/// Largest register the density-matrix path accepts.
pub const MAX_DENSITY_QUBITS: usize = 6;
pub const DEFAULT_SHOTS: usize = 1000;

type M2 = [[C64; 2]; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Channel {
    Depolarizing,
    AmplitudeDamping,
    PhaseDamping,
    BitFlip,
}

impl Channel {
    pub const ALL: [Channel; 4] = [Channel::Depolarizing, Channel::AmplitudeDamping, Channel::PhaseDamping, Channel::BitFlip];

    pub fn name(self) -> &'static str {
        match self {
            Channel::Depolarizing => "depolarizing",
            Channel::AmplitudeDamping => "amplitude-damping",
            Channel::PhaseDamping => "phase-damping",
            Channel::BitFlip => "bit-flip",
        }
    }
}

impl std::str::FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Channel::ALL
            .into_iter()
            .find(|c| c.name() == s.to_ascii_lowercase().replace('_', "-"))
            .ok_or_else(|| Error::Parameter(format!("unknown noise channel '{s}'")))
    }
}

/// Where channels are inserted. Only one placement is implemented.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Placement {
    #[default]
    AfterEachLayer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    /// Shared λ for every enabled channel.
    pub strength: f64,
    pub channels: Vec<Channel>,
    pub shots: usize,
    pub placement: Placement,
    /// Per-channel λ that overrides `strength`.
    pub overrides: Vec<(Channel, f64)>,
    /// Use noisy forward values while training too (gradients stay analytic).
    pub during_training: bool,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            strength: 0.0,
            channels: Channel::ALL.to_vec(),
            shots: DEFAULT_SHOTS,
            placement: Placement::AfterEachLayer,
            overrides: Vec::new(),
            during_training: false,
        }
    }
}

impl NoiseConfig {
    /// All four channels at one shared strength.
    pub fn uniform(strength: f64, shots: usize) -> Result<Self> {
        let cfg = Self { strength, shots, ..Self::default() };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        check_lambda(self.strength)?;
        for &(_, l) in &self.overrides {
            check_lambda(l)?;
        }
        if self.shots == 0 {
            return Err(Error::Parameter("noise shots must be at least 1".into()));
        }
        Ok(())
    }

    pub fn lambda(&self, channel: Channel) -> f64 {
        self.overrides.iter().rev().find(|(c, _)| *c == channel).map_or(self.strength, |&(_, l)| l)
    }

    /// Enabled channels with their Kraus sets, in application order. Channels
    /// whose λ is zero reduce to the identity and are dropped.
    fn active_sets(&self) -> Result<Vec<KrausSet>> {
        let mut out = Vec::new();
        for c in Channel::ALL {
            if self.channels.contains(&c) && self.lambda(c) > 0.0 {
                out.push(kraus_ops(c, self.lambda(c))?);
            }
        }
        Ok(out)
    }

    /// True when no channel can change the state.
    pub fn is_silent(&self) -> bool {
        Channel::ALL.iter().all(|&c| !self.channels.contains(&c) || self.lambda(c) == 0.0)
    }
}

fn check_lambda(l: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&l) {
        return Err(Error::Parameter(format!("noise strength {l} outside [0, 1]")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct KrausSet {
    pub operators: Vec<M2>,
}

impl KrausSet {
    /// max |Σ K†K − I|.
    pub fn completeness_error(&self) -> f64 {
        let mut sum = [[C64::new(0.0, 0.0); 2]; 2];
        for k in &self.operators {
            for r in 0..2 {
                for c in 0..2 {
                    sum[r][c] += k[0][r].conj() * k[0][c] + k[1][r].conj() * k[1][c];
                }
            }
        }
        let mut err: f64 = 0.0;
        for r in 0..2 {
            for c in 0..2 {
                let want = if r == c { 1.0 } else { 0.0 };
                err = err.max((sum[r][c] - want).norm());
            }
        }
        err
    }
}

fn scaled(m: M2, s: f64) -> M2 {
    m.map(|row| row.map(|x| x * s))
}

fn real(rows: [[f64; 2]; 2]) -> M2 {
    rows.map(|row| row.map(|x| C64::new(x, 0.0)))
}

pub fn kraus_ops(channel: Channel, lambda: f64) -> Result<KrausSet> {
    check_lambda(lambda)?;
    let keep = (1.0 - lambda).sqrt();
    let eye = real([[1.0, 0.0], [0.0, 1.0]]);
    let operators = match channel {
        Channel::Depolarizing => {
            let p = (lambda / 3.0).sqrt();
            vec![scaled(eye, keep), scaled(pauli_x(), p), scaled(pauli_y(), p), scaled(pauli_z(), p)]
        }
        Channel::BitFlip => vec![scaled(eye, keep), scaled(pauli_x(), lambda.sqrt())],
        Channel::AmplitudeDamping => vec![real([[1.0, 0.0], [0.0, keep]]), real([[0.0, lambda.sqrt()], [0.0, 0.0]])],
        Channel::PhaseDamping => vec![real([[1.0, 0.0], [0.0, keep]]), real([[0.0, 0.0], [0.0, lambda.sqrt()]])],
    };
    Ok(KrausSet { operators })
}

/// Picks one Kraus branch with its Born weight and renormalizes.
fn apply_set<R: Rng + ?Sized>(state: &mut QuantumState, set: &KrausSet, wire: usize, rng: &mut R) {
    let r: f64 = rng.random();
    let mut cum = 0.0;
    let last = set.operators.len() - 1;
    for (k, op) in set.operators.iter().enumerate() {
        let w = state.branch_weight(op, wire);
        cum += w;
        if (r < cum || k == last) && w > 0.0 {
            state.apply_2x2(op, wire);
            state.rescale(1.0 / w.sqrt());
            return;
        }
    }
    // Round-off left r above the total weight and the last branch is empty;
    // fall back to the heaviest branch.
    let (op, w) = set
        .operators
        .iter()
        .map(|op| (op, state.branch_weight(op, wire)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("Kraus sets are non-empty");
    state.apply_2x2(op, wire);
    state.rescale(1.0 / w.sqrt());
}

/// One stochastic application of `channel` on `wire`.
pub fn apply_channel_trajectory<R: Rng + ?Sized>(
    state: &QuantumState,
    channel: Channel,
    lambda: f64,
    wire: usize,
    rng: &mut R,
) -> Result<QuantumState> {
    let set = kraus_ops(channel, lambda)?;
    if wire >= state.num_qubits() {
        return Err(Error::Index(format!("wire {wire} out of range for {} qubits", state.num_qubits())));
    }
    let mut out = state.clone();
    apply_set(&mut out, &set, wire, rng);
    Ok(out)
}

/// Runs one noisy trajectory in place, starting from `input`.
fn run_trajectory<R: Rng + ?Sized>(
    plan: &CompiledCircuit<'_>,
    matrices: &[GateMatrix],
    sets: &[KrausSet],
    actives: &[Vec<usize>],
    state: &mut QuantumState,
    rng: &mut R,
) {
    for (s, m) in matrices.iter().enumerate() {
        plan.apply_stage(state, s, m);
        if plan.ends_layer(s) {
            for &w in &actives[plan.stage_layer(s)] {
                for set in sets {
                    apply_set(state, set, w, rng);
                }
            }
        }
    }
}

/// Mean of `noise.shots` single-shot ±1 outcomes, one per noisy trajectory.
pub fn noisy_expectation<R: Rng + ?Sized>(
    spec: &CircuitSpec,
    theta: &[f64],
    input: &QuantumState,
    noise: &NoiseConfig,
    rng: &mut R,
) -> Result<f64> {
    Ok(noisy_readouts(spec, theta, input, noise, &[spec.measure_wire], rng)?[0])
}

/// Like [`noisy_expectation`] for several read-out wires; each trajectory
/// contributes one sample per wire.
pub fn noisy_readouts<R: Rng + ?Sized>(
    spec: &CircuitSpec,
    theta: &[f64],
    input: &QuantumState,
    noise: &NoiseConfig,
    wires: &[usize],
    rng: &mut R,
) -> Result<Vec<f64>> {
    noise.validate()?;
    spec.check_inputs(theta, input)?;
    let plan = CompiledCircuit::new(spec);
    let matrices = plan.stage_matrices(theta)?;
    let sets = noise.active_sets()?;
    let actives: Vec<Vec<usize>> = (0..spec.num_layers).map(|l| spec.active_after_layer(l)).collect();
    let master: u64 = rng.random();

    let mut sums = vec![0.0; wires.len()];
    let mut state = input.clone();
    if sets.is_empty() {
        for (s, m) in matrices.iter().enumerate() {
            plan.apply_stage(&mut state, s, m);
        }
    }
    for shot in 0..noise.shots {
        let mut traj = ChaCha8Rng::seed_from_u64(master);
        traj.set_stream(shot as u64);
        if !sets.is_empty() {
            state.clone_from(input);
            run_trajectory(&plan, &matrices, &sets, &actives, &mut state, &mut traj);
        }
        for (sum, &w) in sums.iter_mut().zip(wires) {
            *sum += state.sample_shots(w, 1, &mut traj)?;
        }
    }
    Ok(sums.into_iter().map(|s| s / noise.shots as f64).collect())
}

fn conj2(m: &M2) -> M2 {
    m.map(|row| row.map(|x| x.conj()))
}

/// Exact `tr(ρ Z_measure)` with every gate and channel applied to ρ.
///
/// ρ is stored as a `2n`-wire buffer whose first `n` wires index rows and last
/// `n` index columns, so `U ρ U†` is `U` on the row wires and `conj(U)` on the
/// column wires.
pub fn density_matrix_expectation(
    spec: &CircuitSpec,
    theta: &[f64],
    input: &QuantumState,
    noise: &NoiseConfig,
) -> Result<f64> {
    noise.validate()?;
    spec.check_inputs(theta, input)?;
    let n = spec.num_qubits;
    if n > MAX_DENSITY_QUBITS {
        return Err(Error::Capacity(format!(
            "density matrices are limited to {MAX_DENSITY_QUBITS} qubits, circuit has {n}"
        )));
    }
    let psi = input.amplitudes();
    let rho: Vec<C64> = psi.iter().flat_map(|r| psi.iter().map(move |c| r * c.conj())).collect();
    let mut rho = QuantumState::from_raw(2 * n, rho);
    let sets = noise.active_sets()?;

    for (i, op) in spec.ops.iter().enumerate() {
        match (op.matrix(theta)?, op.wires.as_slice()) {
            (GateMatrix::Single(u), &[w]) => {
                rho.apply_2x2(&u, w);
                rho.apply_2x2(&conj2(&u), n + w);
            }
            (GateMatrix::Double(u), &[a, b]) => {
                rho.apply_4x4(&u, a, b);
                rho.apply_4x4(&u.map(|row| row.map(|x| x.conj())), n + a, n + b);
            }
            _ => return Err(Error::Circuit(format!("op {i} has inconsistent arity"))),
        }
        let layer_done = spec.ops.get(i + 1).is_none_or(|next| next.layer != op.layer);
        if layer_done {
            for w in spec.active_after_layer(op.layer) {
                for set in &sets {
                    let mut acc = vec![C64::new(0.0, 0.0); rho.dim()];
                    for k in &set.operators {
                        let mut branch = rho.clone();
                        branch.apply_2x2(k, w);
                        branch.apply_2x2(&conj2(k), n + w);
                        for (a, b) in acc.iter_mut().zip(branch.amplitudes()) {
                            *a += b;
                        }
                    }
                    rho = QuantumState::from_raw(2 * n, acc);
                }
            }
        }
    }

    let dim = 1usize << n;
    let amps = rho.amplitudes();
    let stride = 1usize << (n - 1 - spec.measure_wire);
    let mut acc = 0.0;
    for i in 0..dim {
        let sign = if i & stride == 0 { 1.0 } else { -1.0 };
        acc += sign * amps[i * dim + i].re;
    }
    Ok(acc)
}
