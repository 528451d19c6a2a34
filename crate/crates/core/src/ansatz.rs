//! QCNN circuit programs: MPS chain, reverse MERA and tree tensor network.
//!
//! A [`CircuitSpec`] is an ordered op list over parameter slots. Every
//! topology is built from the same pieces: a 15-slot convolution block
//! (`U3⊗U3, XX, YY, ZZ, U3⊗U3`), CNOT pooling from a control wire that is
//! frozen afterwards into a surviving target, and a 15-slot two-qubit
//! arbitrary unitary on the last surviving pair. The observable is Pauli-Z on
//! the final survivor.

use std::fmt::Write as _;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates;
use crate::statevector::{mul4, GateMatrix, QuantumState, C64, MAX_QUBITS};

pub const CONV_BLOCK_SLOTS: usize = 15;
pub const DENSE_SLOTS: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AnsatzKind {
    Mps,
    ReverseMera,
    Ttn,
}

impl AnsatzKind {
    pub const ALL: [AnsatzKind; 3] = [AnsatzKind::Mps, AnsatzKind::ReverseMera, AnsatzKind::Ttn];

    pub fn name(self) -> &'static str {
        match self {
            AnsatzKind::Mps => "mps",
            AnsatzKind::ReverseMera => "mera",
            AnsatzKind::Ttn => "ttn",
        }
    }

    pub fn code(self) -> u8 {
        match self {
            AnsatzKind::Mps => 0,
            AnsatzKind::ReverseMera => 1,
            AnsatzKind::Ttn => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.code() == code)
    }

    pub fn build(self, num_qubits: usize) -> Result<CircuitSpec> {
        match self {
            AnsatzKind::Mps => build_mps(num_qubits),
            AnsatzKind::ReverseMera => build_reverse_mera(num_qubits),
            AnsatzKind::Ttn => build_ttn(num_qubits),
        }
    }
}

impl std::fmt::Display for AnsatzKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for AnsatzKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mps" => Ok(AnsatzKind::Mps),
            "mera" | "reverse-mera" | "reverse_mera" => Ok(AnsatzKind::ReverseMera),
            "ttn" => Ok(AnsatzKind::Ttn),
            other => Err(Error::Parameter(format!("unknown ansatz '{other}' (expected mps, mera or ttn)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OpKind {
    U3,
    IsingXX,
    IsingYY,
    IsingZZ,
    Cnot,
    ArbitraryUnitary,
}

impl OpKind {
    pub fn name(self) -> &'static str {
        match self {
            OpKind::U3 => "u3",
            OpKind::IsingXX => "ising_xx",
            OpKind::IsingYY => "ising_yy",
            OpKind::IsingZZ => "ising_zz",
            OpKind::Cnot => "cnot",
            OpKind::ArbitraryUnitary => "arbitrary_unitary",
        }
    }

    /// Whether every slot of this gate sits in a single Pauli rotation, so the
    /// two-point shift rule is exact.
    pub fn shift_rule_applies(self) -> bool {
        !matches!(self, OpKind::ArbitraryUnitary)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Op {
    pub kind: OpKind,
    pub wires: Vec<usize>,
    pub slots: Range<usize>,
    pub layer: usize,
}

impl Op {
    /// Gate matrix for this op under parameter vector `theta`.
    pub fn matrix(&self, theta: &[f64]) -> Result<GateMatrix> {
        let p = &theta[self.slots.clone()];
        match self.kind {
            OpKind::U3 => gates::u3(p[0], p[1], p[2]),
            OpKind::IsingXX => gates::ising_xx(p[0]),
            OpKind::IsingYY => gates::ising_yy(p[0]),
            OpKind::IsingZZ => gates::ising_zz(p[0]),
            OpKind::Cnot => Ok(gates::cnot()),
            OpKind::ArbitraryUnitary => gates::arbitrary_unitary(p, self.wires.len()),
        }
    }

    pub fn apply(&self, state: &mut QuantumState, theta: &[f64]) -> Result<()> {
        let m = self.matrix(theta)?;
        match self.wires.as_slice() {
            [w] => state.apply_1q(&m, *w),
            [a, b] => state.apply_2q(&m, *a, *b),
            _ => Err(Error::Circuit("ops act on one or two wires".into())),
        }
    }
}

/// Immutable gate program with a single Pauli-Z readout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitSpec {
    pub kind: Option<AnsatzKind>,
    pub num_qubits: usize,
    pub ops: Vec<Op>,
    pub param_count: usize,
    pub measure_wire: usize,
    pub num_layers: usize,
    /// Wires in the order pooling froze them.
    pub discard_order: Vec<usize>,
}

impl CircuitSpec {
    /// Checks slot coverage, wire bookkeeping and the single-survivor rule.
    pub fn validate(&self) -> Result<()> {
        let n = self.num_qubits;
        let mut slot_uses = vec![0usize; self.param_count];
        let mut discarded = vec![false; n];
        let mut order = Vec::new();
        let mut last_layer = 0;
        for (i, op) in self.ops.iter().enumerate() {
            if op.layer < last_layer {
                return Err(Error::Circuit(format!("op {i} goes back to layer {}", op.layer)));
            }
            last_layer = op.layer;
            let want_arity = match op.kind {
                OpKind::U3 => 1,
                _ => 2,
            };
            if op.wires.len() != want_arity {
                return Err(Error::Circuit(format!("op {i} ({}) has {} wires", op.kind.name(), op.wires.len())));
            }
            if op.wires.len() == 2 && op.wires[0] == op.wires[1] {
                return Err(Error::Circuit(format!("op {i} repeats wire {}", op.wires[0])));
            }
            for &w in &op.wires {
                if w >= n {
                    return Err(Error::Circuit(format!("op {i} touches wire {w} of {n}")));
                }
                if discarded[w] {
                    return Err(Error::Circuit(format!("op {i} touches discarded wire {w}")));
                }
            }
            let want_slots = match op.kind {
                OpKind::U3 => 3,
                OpKind::IsingXX | OpKind::IsingYY | OpKind::IsingZZ => 1,
                OpKind::Cnot => 0,
                OpKind::ArbitraryUnitary => gates::arbitrary_unitary_param_count(op.wires.len())?,
            };
            if op.slots.len() != want_slots || op.slots.end > self.param_count {
                return Err(Error::Circuit(format!("op {i} has bad slot range {:?}", op.slots)));
            }
            for s in op.slots.clone() {
                slot_uses[s] += 1;
            }
            if op.kind == OpKind::Cnot {
                discarded[op.wires[0]] = true;
                order.push(op.wires[0]);
            }
        }
        if let Some(s) = slot_uses.iter().position(|&u| u != 1) {
            return Err(Error::Circuit(format!("slot {s} referenced {} times", slot_uses[s])));
        }
        let survivors: Vec<usize> = (0..n).filter(|&w| !discarded[w]).collect();
        if survivors != [self.measure_wire] {
            return Err(Error::Circuit(format!(
                "expected single survivor {}, found {survivors:?}",
                self.measure_wire
            )));
        }
        if order != self.discard_order {
            return Err(Error::Circuit("discard order does not match pooling ops".into()));
        }
        Ok(())
    }

    /// Wires still active once `layer` (and its pooling) has finished.
    pub fn active_after_layer(&self, layer: usize) -> Vec<usize> {
        let mut discarded = vec![false; self.num_qubits];
        for op in self.ops.iter().filter(|op| op.layer <= layer && op.kind == OpKind::Cnot) {
            discarded[op.wires[0]] = true;
        }
        (0..self.num_qubits).filter(|&w| !discarded[w]).collect()
    }

    /// The measure wire followed by the most recently frozen wires, `k` in total.
    pub fn readout_wires(&self, k: usize) -> Result<Vec<usize>> {
        if k == 0 || k > self.num_qubits {
            return Err(Error::Parameter(format!("readout count {k} out of range 1..={}", self.num_qubits)));
        }
        let mut wires = vec![self.measure_wire];
        wires.extend(self.discard_order.iter().rev().take(k - 1));
        Ok(wires)
    }

    /// Op index and offset within that op for a parameter slot.
    pub fn slot_owner(&self, slot: usize) -> Result<(usize, usize)> {
        self.ops
            .iter()
            .position(|op| op.slots.contains(&slot))
            .map(|i| (i, slot - self.ops[i].slots.start))
            .ok_or_else(|| Error::Index(format!("slot {slot} out of range 0..{}", self.param_count)))
    }

    pub fn check_inputs(&self, theta: &[f64], input: &QuantumState) -> Result<()> {
        if theta.len() != self.param_count {
            return Err(Error::Shape(format!(
                "theta has {} entries, circuit needs {}",
                theta.len(),
                self.param_count
            )));
        }
        if input.num_qubits() != self.num_qubits {
            return Err(Error::Shape(format!(
                "input has {} qubits, circuit needs {}",
                input.num_qubits(),
                self.num_qubits
            )));
        }
        Ok(())
    }

    /// One op per line: `kind<TAB>wires<TAB>slot range<TAB>layer`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# ansatz={} qubits={} params={} measure={} layers={}",
            self.kind.map_or("custom", AnsatzKind::name),
            self.num_qubits,
            self.param_count,
            self.measure_wire,
            self.num_layers
        );
        for op in &self.ops {
            let wires: Vec<String> = op.wires.iter().map(ToString::to_string).collect();
            let _ = writeln!(
                out,
                "{}\t{}\t{}..{}\t{}",
                op.kind.name(),
                wires.join(","),
                op.slots.start,
                op.slots.end,
                op.layer
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("circuit spec is always serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: CircuitSpec = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }
}

/// Incremental circuit construction with discard tracking.
#[derive(Debug, Clone)]
pub struct CircuitBuilder {
    kind: Option<AnsatzKind>,
    num_qubits: usize,
    ops: Vec<Op>,
    next_slot: usize,
    discarded: Vec<bool>,
    discard_order: Vec<usize>,
    layer: usize,
}

impl CircuitBuilder {
    pub fn new(num_qubits: usize) -> Result<Self> {
        if !(1..=MAX_QUBITS).contains(&num_qubits) {
            return Err(Error::Parameter(format!("{num_qubits} qubits outside 1..={MAX_QUBITS}")));
        }
        Ok(Self {
            kind: None,
            num_qubits,
            ops: Vec::new(),
            next_slot: 0,
            discarded: vec![false; num_qubits],
            discard_order: Vec::new(),
            layer: 0,
        })
    }

    fn check_active(&self, wires: &[usize]) -> Result<()> {
        for &w in wires {
            if w >= self.num_qubits {
                return Err(Error::Circuit(format!("wire {w} out of range")));
            }
            if self.discarded[w] {
                return Err(Error::Circuit(format!("wire {w} was discarded by pooling")));
            }
        }
        if wires.len() == 2 && wires[0] == wires[1] {
            return Err(Error::Circuit(format!("pair uses wire {} twice", wires[0])));
        }
        Ok(())
    }

    fn push(&mut self, kind: OpKind, wires: Vec<usize>, slots: usize) -> Range<usize> {
        let range = self.next_slot..self.next_slot + slots;
        self.next_slot += slots;
        self.ops.push(Op { kind, wires, slots: range.clone(), layer: self.layer });
        range
    }

    /// Appends a 15-slot convolution block on `(a, b)`.
    pub fn conv_block(&mut self, a: usize, b: usize) -> Result<Range<usize>> {
        self.check_active(&[a, b])?;
        let start = self.next_slot;
        self.push(OpKind::U3, vec![a], 3);
        self.push(OpKind::U3, vec![b], 3);
        self.push(OpKind::IsingXX, vec![a, b], 1);
        self.push(OpKind::IsingYY, vec![a, b], 1);
        self.push(OpKind::IsingZZ, vec![a, b], 1);
        self.push(OpKind::U3, vec![a], 3);
        self.push(OpKind::U3, vec![b], 3);
        Ok(start..self.next_slot)
    }

    /// A lone U3 on `wire`, for hand-built circuits.
    pub fn u3(&mut self, wire: usize) -> Result<Range<usize>> {
        self.check_active(&[wire])?;
        Ok(self.push(OpKind::U3, vec![wire], 3))
    }

    /// A lone Ising coupling (`IsingXX`, `IsingYY` or `IsingZZ`) on `(a, b)`.
    pub fn ising(&mut self, kind: OpKind, a: usize, b: usize) -> Result<Range<usize>> {
        if !matches!(kind, OpKind::IsingXX | OpKind::IsingYY | OpKind::IsingZZ) {
            return Err(Error::Circuit(format!("{} is not an Ising coupling", kind.name())));
        }
        self.check_active(&[a, b])?;
        Ok(self.push(kind, vec![a, b], 1))
    }

    /// CNOT from `control` into `target`; `control` is frozen afterwards.
    pub fn pool(&mut self, control: usize, target: usize) -> Result<()> {
        self.check_active(&[control, target])?;
        self.push(OpKind::Cnot, vec![control, target], 0);
        self.discarded[control] = true;
        self.discard_order.push(control);
        Ok(())
    }

    /// Two-qubit arbitrary unitary acting as the dense layer.
    pub fn dense(&mut self, a: usize, b: usize) -> Result<Range<usize>> {
        self.check_active(&[a, b])?;
        Ok(self.push(OpKind::ArbitraryUnitary, vec![a, b], DENSE_SLOTS))
    }

    pub fn end_layer(&mut self) {
        if self.ops.last().is_some_and(|op| op.layer == self.layer) {
            self.layer += 1;
        }
    }

    pub fn active(&self) -> Vec<usize> {
        (0..self.num_qubits).filter(|&w| !self.discarded[w]).collect()
    }

    pub fn finish(mut self, measure_wire: usize) -> Result<CircuitSpec> {
        self.end_layer();
        let spec = CircuitSpec {
            kind: self.kind,
            num_qubits: self.num_qubits,
            ops: self.ops,
            param_count: self.next_slot,
            measure_wire,
            num_layers: self.layer,
            discard_order: self.discard_order,
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn check_tree_size(n: usize) -> Result<()> {
    if !(2..=MAX_QUBITS).contains(&n) || !n.is_power_of_two() {
        return Err(Error::Parameter(format!(
            "tree ansätze need a power-of-two qubit count in 2..={MAX_QUBITS}, got {n}"
        )));
    }
    Ok(())
}

/// Binary tree: per layer, blocks on aligned pairs then pooling; halves the
/// active wires until one remains.
pub fn build_ttn(n: usize) -> Result<CircuitSpec> {
    check_tree_size(n)?;
    let mut b = CircuitBuilder::new(n)?;
    b.kind = Some(AnsatzKind::Ttn);
    halving_layers(&mut b, false)?;
    b.finish(n - 1)
}

/// Like the tree, but each layer first entangles the offset pairs
/// `(w1,w2), (w3,w4), …` of the active wires before the aligned pairs.
pub fn build_reverse_mera(n: usize) -> Result<CircuitSpec> {
    check_tree_size(n)?;
    let mut b = CircuitBuilder::new(n)?;
    b.kind = Some(AnsatzKind::ReverseMera);
    halving_layers(&mut b, true)?;
    b.finish(n - 1)
}

fn halving_layers(b: &mut CircuitBuilder, interleave: bool) -> Result<()> {
    loop {
        let active = b.active();
        if active.len() == 1 {
            return Ok(());
        }
        if interleave {
            for pair in active[1..].chunks_exact(2) {
                b.conv_block(pair[0], pair[1])?;
            }
        }
        let pairs: Vec<(usize, usize)> = active.chunks_exact(2).map(|p| (p[0], p[1])).collect();
        for &(x, y) in &pairs {
            b.conv_block(x, y)?;
            if pairs.len() == 1 {
                b.dense(x, y)?;
            }
        }
        for &(x, y) in &pairs {
            b.pool(x, y)?;
        }
        b.end_layer();
    }
}

/// Linear cascade `0→1→…→n-1`, one block and one pool per layer.
pub fn build_mps(n: usize) -> Result<CircuitSpec> {
    if !(2..=MAX_QUBITS).contains(&n) {
        return Err(Error::Parameter(format!("MPS needs 2..={MAX_QUBITS} qubits, got {n}")));
    }
    let mut b = CircuitBuilder::new(n)?;
    b.kind = Some(AnsatzKind::Mps);
    for w in 0..n - 1 {
        b.conv_block(w, w + 1)?;
        if w == n - 2 {
            b.dense(w, w + 1)?;
        }
        b.pool(w, w + 1)?;
        b.end_layer();
    }
    b.finish(n - 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum StageWires {
    One(usize),
    Two(usize, usize),
}

impl StageWires {
    fn contains(self, w: usize) -> bool {
        match self {
            StageWires::One(x) => x == w,
            StageWires::Two(a, b) => a == w || b == w,
        }
    }
}

#[derive(Debug, Clone)]
struct Stage {
    wires: StageWires,
    ops: Vec<usize>,
    layer: usize,
}

/// Execution plan that fuses runs of ops on the same wire pair into single
/// 4×4 (or 2×2) stages. Stages never cross a layer boundary, so noise can be
/// inserted between layers.
#[derive(Debug, Clone)]
pub struct CompiledCircuit<'a> {
    spec: &'a CircuitSpec,
    stages: Vec<Stage>,
    op_stage: Vec<usize>,
    /// Index of the last stage in each layer.
    layer_ends: Vec<usize>,
}

impl<'a> CompiledCircuit<'a> {
    pub fn new(spec: &'a CircuitSpec) -> Self {
        let mut stages: Vec<Option<Stage>> = Vec::new();
        let mut last: Vec<Option<usize>> = vec![None; spec.num_qubits];
        for (i, op) in spec.ops.iter().enumerate() {
            let same_layer = |s: &Option<Stage>| s.as_ref().is_some_and(|s| s.layer == op.layer);
            match *op.wires.as_slice() {
                [w] => match last[w] {
                    Some(s) if same_layer(&stages[s]) => stages[s].as_mut().unwrap().ops.push(i),
                    _ => {
                        stages.push(Some(Stage { wires: StageWires::One(w), ops: vec![i], layer: op.layer }));
                        last[w] = Some(stages.len() - 1);
                    }
                },
                [a, b] => {
                    let joint = match (last[a], last[b]) {
                        (Some(sa), Some(sb)) if sa == sb && same_layer(&stages[sa]) => {
                            let st = stages[sa].as_ref().unwrap();
                            (st.wires == StageWires::Two(a, b) || st.wires == StageWires::Two(b, a)).then_some(sa)
                        }
                        _ => None,
                    };
                    if let Some(s) = joint {
                        stages[s].as_mut().unwrap().ops.push(i);
                        continue;
                    }
                    let mut absorbed = Vec::new();
                    for w in [a, b] {
                        if let Some(s) = last[w] {
                            let single = stages[s]
                                .as_ref()
                                .is_some_and(|st| st.layer == op.layer && st.wires == StageWires::One(w));
                            if single {
                                absorbed.extend(stages[s].take().unwrap().ops);
                            }
                        }
                    }
                    absorbed.push(i);
                    stages.push(Some(Stage { wires: StageWires::Two(a, b), ops: absorbed, layer: op.layer }));
                    last[a] = Some(stages.len() - 1);
                    last[b] = Some(stages.len() - 1);
                }
                _ => unreachable!("validated specs only hold 1- and 2-wire ops"),
            }
        }
        let stages: Vec<Stage> = stages.into_iter().flatten().collect();
        let mut op_stage = vec![0; spec.ops.len()];
        for (s, st) in stages.iter().enumerate() {
            for &o in &st.ops {
                op_stage[o] = s;
            }
        }
        let mut layer_ends = vec![0; spec.num_layers];
        for (s, st) in stages.iter().enumerate() {
            layer_ends[st.layer] = s;
        }
        Self { spec, stages, op_stage, layer_ends }
    }

    pub fn spec(&self) -> &CircuitSpec {
        self.spec
    }

    pub fn num_stages(&self) -> usize {
        self.stages.len()
    }

    pub fn stage_of_op(&self, op: usize) -> usize {
        self.op_stage[op]
    }

    pub fn stage_layer(&self, stage: usize) -> usize {
        self.stages[stage].layer
    }

    /// True when `stage` is the final stage of its layer.
    pub fn ends_layer(&self, stage: usize) -> bool {
        self.layer_ends[self.stages[stage].layer] == stage
    }

    /// Fused matrix of one stage.
    pub fn stage_matrix(&self, stage: usize, theta: &[f64]) -> Result<GateMatrix> {
        let st = &self.stages[stage];
        match st.wires {
            StageWires::One(_) => {
                let mut acc = GateMatrix::identity(1);
                for &o in &st.ops {
                    acc = self.spec.ops[o].matrix(theta)?.matmul(&acc)?;
                }
                Ok(acc)
            }
            StageWires::Two(a, _) => {
                let eye = [[C64::new(1.0, 0.0), C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), C64::new(1.0, 0.0)]];
                let mut acc = match GateMatrix::identity(2) {
                    GateMatrix::Double(m) => m,
                    GateMatrix::Single(_) => unreachable!(),
                };
                for &o in &st.ops {
                    let op = &self.spec.ops[o];
                    let lifted = match (op.matrix(theta)?, op.wires.as_slice()) {
                        (GateMatrix::Single(u), [w]) if *w == a => GateMatrix::kron(&u, &eye),
                        (GateMatrix::Single(u), [_]) => GateMatrix::kron(&eye, &u),
                        (g @ GateMatrix::Double(_), [x, _]) if *x == a => g,
                        (GateMatrix::Double(m), _) => GateMatrix::Double(swap_wires(&m)),
                        _ => unreachable!(),
                    };
                    if let GateMatrix::Double(l) = lifted {
                        acc = mul4(&l, &acc);
                    }
                }
                Ok(GateMatrix::Double(acc))
            }
        }
    }

    pub fn stage_matrices(&self, theta: &[f64]) -> Result<Vec<GateMatrix>> {
        (0..self.stages.len()).map(|s| self.stage_matrix(s, theta)).collect()
    }

    pub fn apply_stage(&self, state: &mut QuantumState, stage: usize, matrix: &GateMatrix) {
        match (self.stages[stage].wires, matrix) {
            (StageWires::One(w), GateMatrix::Single(m)) => state.apply_2x2(m, w),
            (StageWires::Two(a, b), GateMatrix::Double(m)) => state.apply_4x4(m, a, b),
            _ => unreachable!("stage matrix arity matches its wires"),
        }
    }

    /// Whether `wire` is touched by `stage`.
    pub fn stage_touches(&self, stage: usize, wire: usize) -> bool {
        self.stages[stage].wires.contains(wire)
    }

    /// Runs the whole program on a copy of `input`.
    pub fn evolve(&self, theta: &[f64], input: &QuantumState) -> Result<QuantumState> {
        self.spec.check_inputs(theta, input)?;
        let mut state = input.clone();
        for (s, m) in self.stage_matrices(theta)?.iter().enumerate() {
            self.apply_stage(&mut state, s, m);
        }
        Ok(state)
    }
}

fn swap_wires(m: &[[C64; 4]; 4]) -> [[C64; 4]; 4] {
    let swap = |k: usize| ((k & 1) << 1) | (k >> 1);
    let mut out = [[C64::new(0.0, 0.0); 4]; 4];
    for r in 0..4 {
        for c in 0..4 {
            out[r][c] = m[swap(r)][swap(c)];
        }
    }
    out
}

/// Final state after running `spec` on `input`.
pub fn evolve(spec: &CircuitSpec, theta: &[f64], input: &QuantumState) -> Result<QuantumState> {
    CompiledCircuit::new(spec).evolve(theta, input)
}

/// Z expectation of the measure wire after running the circuit.
pub fn run_circuit(spec: &CircuitSpec, theta: &[f64], input: &QuantumState) -> Result<f64> {
    evolve(spec, theta, input)?.expectation_z(spec.measure_wire)
}

/// Z expectations on several wires after one run.
pub fn run_circuit_readouts(
    spec: &CircuitSpec,
    theta: &[f64],
    input: &QuantumState,
    wires: &[usize],
) -> Result<Vec<f64>> {
    let state = evolve(spec, theta, input)?;
    wires.iter().map(|&w| state.expectation_z(w)).collect()
}
