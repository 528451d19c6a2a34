#![allow(dead_code)]

use num_complex::Complex64 as C64;
use qcnn_core::ansatz::{CircuitSpec, OpKind};
use qcnn_core::statevector::{GateMatrix, QuantumState};
use qcnn_oracles::{CMat, RefGate};
use rand::Rng;

pub fn to_cmat(g: &GateMatrix) -> CMat {
    (0..g.dim()).map(|r| (0..g.dim()).map(|c| g.get(r, c)).collect()).collect()
}

pub fn ref_gate(spec: &CircuitSpec, op_index: usize, theta: &[f64]) -> (RefGate, Vec<usize>) {
    let op = &spec.ops[op_index];
    let p = &theta[op.slots.clone()];
    let g = match op.kind {
        OpKind::U3 => RefGate::U3(p[0], p[1], p[2]),
        OpKind::IsingXX => RefGate::Ising('X', p[0]),
        OpKind::IsingYY => RefGate::Ising('Y', p[0]),
        OpKind::IsingZZ => RefGate::Ising('Z', p[0]),
        OpKind::Cnot => RefGate::Cnot,
        OpKind::ArbitraryUnitary => RefGate::Arbitrary(p.to_vec()),
    };
    (g, op.wires.clone())
}

pub fn ref_ops(spec: &CircuitSpec, theta: &[f64]) -> Vec<(RefGate, Vec<usize>)> {
    (0..spec.ops.len()).map(|i| ref_gate(spec, i, theta)).collect()
}

pub fn random_state(n: usize, rng: &mut impl Rng) -> QuantumState {
    let mut amps: Vec<C64> = (0..1 << n).map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    for a in &mut amps {
        *a /= norm;
    }
    QuantumState::from_amplitudes(amps).unwrap()
}

pub fn random_theta(len: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-3.0..3.0)).collect()
}
