mod common;

use std::f64::consts::FRAC_PI_2;

use qcnn_core::ansatz::{self, AnsatzKind, CircuitBuilder, CircuitSpec, OpKind};
use qcnn_core::autodiff::{self, circuit_gradient, circuit_jacobian, finite_diff_gradient, shift_rule_partial};
use qcnn_core::statevector::QuantumState;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{random_state, random_theta};

fn single_u3() -> CircuitSpec {
    let mut b = CircuitBuilder::new(1).unwrap();
    b.u3(0).unwrap();
    b.finish(0).unwrap()
}

fn ising_pair(kind: OpKind) -> CircuitSpec {
    let mut b = CircuitBuilder::new(2).unwrap();
    b.u3(0).unwrap();
    b.u3(1).unwrap();
    b.ising(kind, 0, 1).unwrap();
    b.pool(0, 1).unwrap();
    b.finish(1).unwrap()
}

#[test]
fn rx_partial_is_minus_sine() {
    // RX(θ) = U3(θ, −π/2, π/2); ⟨Z⟩ = cos θ on |0⟩.
    let spec = single_u3();
    let zero = QuantumState::zero(1).unwrap();
    for k in -20..=20 {
        let t = k as f64 * 0.31;
        let theta = [t, -FRAC_PI_2, FRAC_PI_2];
        let d = shift_rule_partial(&spec, &theta, &zero, 0).unwrap();
        assert!((d + t.sin()).abs() < 1e-12, "θ={t}: {d}");
    }
    let d0 = shift_rule_partial(&spec, &[0.0, -FRAC_PI_2, FRAC_PI_2], &zero, 0).unwrap();
    assert!(d0.abs() < 1e-15);
}

#[test]
fn ising_slots_match_finite_difference() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for kind in [OpKind::IsingXX, OpKind::IsingYY, OpKind::IsingZZ] {
        let spec = ising_pair(kind);
        for _ in 0..20 {
            let theta = random_theta(spec.param_count, &mut rng);
            let input = random_state(2, &mut rng);
            let fd = finite_diff_gradient(&spec, &theta, &input, 1e-5).unwrap();
            let shift = shift_rule_partial(&spec, &theta, &input, 6).unwrap();
            assert!((shift - fd[6]).abs() < 1e-6, "{}: {shift} vs {}", kind.name(), fd[6]);
        }
    }
}

#[test]
fn zero_angles_give_zero_gradient_on_even_circuit() {
    // On |00⟩ the read-out is cos-like in every angle, hence even about zero.
    let spec = ising_pair(OpKind::IsingXX);
    let input = QuantumState::zero(2).unwrap();
    let theta = vec![0.0; spec.param_count];
    let g = circuit_gradient(&spec, &theta, &input).unwrap();
    assert!(g.iter().all(|x| x.abs() < 1e-12), "{g:?}");
    let fd = finite_diff_gradient(&spec, &theta, &input, 1e-5).unwrap();
    assert!(fd.iter().all(|x| x.abs() < 1e-10));
}

#[test]
fn shift_rule_agrees_with_finite_differences_for_every_ansatz() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for kind in AnsatzKind::ALL {
        let spec = kind.build(4).unwrap();
        for _ in 0..50 {
            let theta = random_theta(spec.param_count, &mut rng);
            let input = random_state(4, &mut rng);
            let g = circuit_gradient(&spec, &theta, &input).unwrap();
            let fd = finite_diff_gradient(&spec, &theta, &input, 1e-5).unwrap();
            assert_eq!(g.len(), spec.param_count);
            for (slot, (a, b)) in g.iter().zip(fd.iter()).enumerate() {
                assert!((a - b).abs() < 1e-5, "{kind} slot {slot}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn cached_gradient_matches_plain_shift_rule() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let spec = ansatz::build_ttn(8).unwrap();
    let theta = random_theta(spec.param_count, &mut rng);
    let input = random_state(8, &mut rng);
    let g = circuit_gradient(&spec, &theta, &input).unwrap();
    for (slot, got) in g.iter().enumerate() {
        let (op, _) = spec.slot_owner(slot).unwrap();
        if spec.ops[op].kind.shift_rule_applies() {
            let want = shift_rule_partial(&spec, &theta, &input, slot).unwrap();
            assert!((got - want).abs() < 1e-12, "slot {slot}");
        }
    }
}

#[test]
fn jacobian_is_linear_in_the_observable() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let spec = AnsatzKind::Ttn.build(4).unwrap();
    let wires = spec.readout_wires(2).unwrap();
    let (a, b) = (0.7, -1.3);
    for _ in 0..10 {
        let theta = random_theta(spec.param_count, &mut rng);
        let input = random_state(4, &mut rng);
        let (values, jac) = circuit_jacobian(&spec, &theta, &input, &wires).unwrap();
        let plain = ansatz::run_circuit_readouts(&spec, &theta, &input, &wires).unwrap();
        assert_eq!(values, plain);
        let h = 1e-5;
        let mut shifted = theta.clone();
        for slot in 0..theta.len() {
            shifted[slot] = theta[slot] + h;
            let p = ansatz::run_circuit_readouts(&spec, &shifted, &input, &wires).unwrap();
            shifted[slot] = theta[slot] - h;
            let m = ansatz::run_circuit_readouts(&spec, &shifted, &input, &wires).unwrap();
            shifted[slot] = theta[slot];
            let fd = (a * (p[0] - m[0]) + b * (p[1] - m[1])) / (2.0 * h);
            let combined = a * jac[0][slot] + b * jac[1][slot];
            assert!((fd - combined).abs() < 1e-5, "slot {slot}");
        }
    }
}

#[test]
fn gradients_are_bitwise_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    let spec = AnsatzKind::ReverseMera.build(8).unwrap();
    let theta = random_theta(spec.param_count, &mut rng);
    let input = random_state(8, &mut rng);
    let a = circuit_gradient(&spec, &theta, &input).unwrap();
    let b = circuit_gradient(&spec, &theta, &input).unwrap();
    assert!(a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
}

#[test]
fn chain_sums_weighted_frame_gradients() {
    let g1 = autodiff::GradientVector::new(vec![1.0, 2.0]).unwrap();
    let g2 = autodiff::GradientVector::new(vec![-1.0, 0.5]).unwrap();
    let c = autodiff::hybrid_chain(&[2.0, 4.0], &[g1, g2]).unwrap();
    assert_eq!(&*c, &[-2.0, 6.0]);
}
