//! Gradients of circuit read-outs with respect to the circuit parameters.
//!
//! Slots inside U3 and Ising gates use the two-point parameter-shift rule.
//! U3 factors as `e^{i(φ+δ)/2} RZ(φ) RY(θ) RZ(δ)`, so each of its angles sits
//! in exactly one Pauli rotation and the ±π/2 shift is exact. Arbitrary-unitary
//! slots are generated by Gell-Mann matrices that are not Pauli strings, so
//! they fall back to central finite differences.

use std::f64::consts::FRAC_PI_2;
use std::ops::Deref;

use crate::ansatz::{run_circuit, CircuitSpec, CompiledCircuit};
use crate::error::{Error, Result};
use crate::statevector::{GateMatrix, QuantumState};

/// Central-difference step used for arbitrary-unitary slots.
pub const FD_STEP: f64 = 1e-5;

/// Partial derivatives aligned with a circuit's parameter slots.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientVector(Vec<f64>);

impl GradientVector {
    pub fn new(partials: Vec<f64>) -> Result<Self> {
        if let Some(i) = partials.iter().position(|p| !p.is_finite()) {
            return Err(Error::Parameter(format!("non-finite partial derivative at slot {i}")));
        }
        Ok(Self(partials))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for GradientVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// `[f(θ + π/2 e_slot) − f(θ − π/2 e_slot)] / 2`.
pub fn shift_rule_partial(spec: &CircuitSpec, theta: &[f64], input: &QuantumState, slot: usize) -> Result<f64> {
    spec.check_inputs(theta, input)?;
    let (op, _) = spec.slot_owner(slot)?;
    if !spec.ops[op].kind.shift_rule_applies() {
        return Err(Error::UnsupportedShiftRule(slot));
    }
    let mut shifted = theta.to_vec();
    shifted[slot] = theta[slot] + FRAC_PI_2;
    let plus = run_circuit(spec, &shifted, input)?;
    shifted[slot] = theta[slot] - FRAC_PI_2;
    let minus = run_circuit(spec, &shifted, input)?;
    Ok((plus - minus) / 2.0)
}

/// Central differences on every slot.
pub fn finite_diff_gradient(
    spec: &CircuitSpec,
    theta: &[f64],
    input: &QuantumState,
    step: f64,
) -> Result<GradientVector> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Parameter(format!("finite-difference step must be positive, got {step}")));
    }
    spec.check_inputs(theta, input)?;
    let mut shifted = theta.to_vec();
    let mut partials = Vec::with_capacity(theta.len());
    for slot in 0..theta.len() {
        shifted[slot] = theta[slot] + step;
        let plus = run_circuit(spec, &shifted, input)?;
        shifted[slot] = theta[slot] - step;
        let minus = run_circuit(spec, &shifted, input)?;
        shifted[slot] = theta[slot];
        partials.push((plus - minus) / (2.0 * step));
    }
    GradientVector::new(partials)
}

/// Gradient of the measure-wire expectation: shift rule on Pauli slots,
/// finite differences on arbitrary-unitary slots.
pub fn circuit_gradient(spec: &CircuitSpec, theta: &[f64], input: &QuantumState) -> Result<GradientVector> {
    let (_, mut grads) = circuit_jacobian(spec, theta, input, &[spec.measure_wire])?;
    Ok(grads.remove(0))
}

/// Read-out values and one gradient per read-out wire.
///
/// Shifted evaluations restart from the cached state just before the fused
/// stage that owns the slot, so only the suffix of the circuit is re-run.
pub fn circuit_jacobian(
    spec: &CircuitSpec,
    theta: &[f64],
    input: &QuantumState,
    wires: &[usize],
) -> Result<(Vec<f64>, Vec<GradientVector>)> {
    spec.check_inputs(theta, input)?;
    let plan = CompiledCircuit::new(spec);
    let base = plan.stage_matrices(theta)?;

    let mut prefix = Vec::with_capacity(plan.num_stages() + 1);
    prefix.push(input.clone());
    for (s, m) in base.iter().enumerate() {
        let mut next = prefix[s].clone();
        plan.apply_stage(&mut next, s, m);
        prefix.push(next);
    }
    let final_state = &prefix[plan.num_stages()];
    let values = wires.iter().map(|&w| final_state.expectation_z(w)).collect::<Result<Vec<_>>>()?;

    let mut scratch = input.clone();
    let mut shifted = theta.to_vec();
    let mut eval = |stage: usize, shifted: &[f64], out: &mut [f64]| -> Result<()> {
        let m: GateMatrix = plan.stage_matrix(stage, shifted)?;
        scratch.clone_from(&prefix[stage]);
        plan.apply_stage(&mut scratch, stage, &m);
        for (t, bm) in base.iter().enumerate().skip(stage + 1) {
            plan.apply_stage(&mut scratch, t, bm);
        }
        for (o, &w) in out.iter_mut().zip(wires) {
            *o = scratch.expectation_z(w)?;
        }
        Ok(())
    };

    let mut partials = vec![vec![0.0; theta.len()]; wires.len()];
    let mut plus = vec![0.0; wires.len()];
    let mut minus = vec![0.0; wires.len()];
    for (op_index, op) in spec.ops.iter().enumerate() {
        let stage = plan.stage_of_op(op_index);
        let (shift, denom) = if op.kind.shift_rule_applies() { (FRAC_PI_2, 2.0) } else { (FD_STEP, 2.0 * FD_STEP) };
        for slot in op.slots.clone() {
            shifted[slot] = theta[slot] + shift;
            eval(stage, &shifted, &mut plus)?;
            shifted[slot] = theta[slot] - shift;
            eval(stage, &shifted, &mut minus)?;
            shifted[slot] = theta[slot];
            for k in 0..wires.len() {
                partials[k][slot] = (plus[k] - minus[k]) / denom;
            }
        }
    }
    let grads = partials.into_iter().map(GradientVector::new).collect::<Result<Vec<_>>>()?;
    Ok((values, grads))
}

/// `Σ_t upstream_t · frame_grads_t`, accumulated in frame order.
pub fn hybrid_chain(upstream: &[f64], frame_grads: &[GradientVector]) -> Result<GradientVector> {
    if upstream.len() != frame_grads.len() {
        return Err(Error::Shape(format!(
            "{} upstream values for {} frame gradients",
            upstream.len(),
            frame_grads.len()
        )));
    }
    let Some(first) = frame_grads.first() else {
        return Err(Error::Shape("no frames to chain".into()));
    };
    let mut acc = vec![0.0; first.len()];
    for (u, g) in upstream.iter().zip(frame_grads) {
        if g.len() != acc.len() {
            return Err(Error::Shape("frame gradients differ in length".into()));
        }
        for (a, x) in acc.iter_mut().zip(g.iter()) {
            *a += u * x;
        }
    }
    GradientVector::new(acc)
}
