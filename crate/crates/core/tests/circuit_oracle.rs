mod common;

use num_complex::Complex64 as C64;
use proptest::prelude::*;
use qcnn_core::ansatz::{self, AnsatzKind, CircuitBuilder, OpKind};
use qcnn_core::gates;
use qcnn_core::statevector::{amplitude_encode, GateMatrix, QuantumState};
use qcnn_oracles::{self as oracle, RefGate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{random_state, random_theta, ref_ops, to_cmat};

fn random_2q(rng: &mut impl Rng) -> GateMatrix {
    let p: Vec<f64> = (0..15).map(|_| rng.random_range(-2.0..2.0)).collect();
    gates::arbitrary_unitary(&p, 2).unwrap()
}

#[test]
fn two_qubit_gate_on_non_adjacent_wires_matches_dense() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (a, b) in [(0, 2), (2, 0), (1, 2), (0, 1)] {
        let g = random_2q(&mut rng);
        let mut state = random_state(3, &mut rng);
        let dense = oracle::embed_2q(&to_cmat(&g), a, b, 3);
        let want = oracle::apply(&dense, state.amplitudes());
        state.apply_2q(&g, a, b).unwrap();
        for (x, y) in state.amplitudes().iter().zip(&want) {
            assert!((x - y).norm() < 1e-13);
        }
    }
}

#[test]
fn single_qubit_gate_matches_dense_and_keeps_other_marginals() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for n in 1..=4 {
        for wire in 0..n {
            let g = gates::u3(rng.random(), rng.random(), rng.random()).unwrap();
            let mut state = random_state(n, &mut rng);
            let before: Vec<f64> = (0..n).map(|w| state.expectation_z(w).unwrap()).collect();
            let want = oracle::apply(&oracle::embed_1q(&to_cmat(&g), wire, n), state.amplitudes());
            state.apply_1q(&g, wire).unwrap();
            for (x, y) in state.amplitudes().iter().zip(&want) {
                assert!((x - y).norm() < 1e-13);
            }
            for w in (0..n).filter(|&w| w != wire) {
                assert!((state.expectation_z(w).unwrap() - before[w]).abs() < 1e-12);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn random_gate_sequences_preserve_norm(seed in any::<u64>(), n in 2usize..7, steps in 1usize..30) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut state = random_state(n, &mut rng);
        for _ in 0..steps {
            if rng.random::<bool>() {
                let g = gates::u3(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)).unwrap();
                state.apply_1q(&g, rng.random_range(0..n)).unwrap();
            } else {
                let a = rng.random_range(0..n);
                let b = (a + rng.random_range(1..n)) % n;
                state.apply_2q(&random_2q(&mut rng), a, b).unwrap();
            }
        }
        prop_assert!((state.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn encoding_is_unit_norm(values in prop::collection::vec(0.0f64..1.0, 16), bump in 0usize..16) {
        let mut values = values;
        values[bump] += 0.5;
        let s = amplitude_encode(&values).unwrap();
        prop_assert!((s.norm() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn gates_are_unitary_and_match_series_exponentials() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..1000 {
        let (t, p, d) = (rng.random_range(-7.0..7.0), rng.random_range(-7.0..7.0), rng.random_range(-7.0..7.0));
        let u = gates::u3(t, p, d).unwrap();
        assert!(u.unitarity_error() < 1e-12);
        assert!(oracle::max_abs_diff(&to_cmat(&u), &oracle::u3_series(t, p, d)) < 1e-12);

        let phi = rng.random_range(-7.0..7.0);
        for (g, which) in [(gates::ising_xx(phi), 'X'), (gates::ising_yy(phi), 'Y'), (gates::ising_zz(phi), 'Z')] {
            let g = g.unwrap();
            assert!(g.unitarity_error() < 1e-12);
            assert!(oracle::max_abs_diff(&to_cmat(&g), &oracle::ising_series(which, phi)) < 1e-12);
        }

        let params: Vec<f64> = (0..15).map(|_| rng.random_range(-1.0..1.0)).collect();
        let au = gates::arbitrary_unitary(&params, 2).unwrap();
        assert!(au.unitarity_error() < 1e-12);
        assert!(oracle::max_abs_diff(&to_cmat(&au), &oracle::arbitrary_unitary_series(&params, 4)) < 1e-12);
    }
}

#[test]
fn conv_block_matches_dense_product() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut b = CircuitBuilder::new(2).unwrap();
    b.conv_block(0, 1).unwrap();
    b.pool(0, 1).unwrap();
    let spec = b.finish(1).unwrap();
    let theta = random_theta(spec.param_count, &mut rng);
    let block_only: Vec<_> = ref_ops(&spec, &theta).into_iter().filter(|(g, _)| !matches!(g, RefGate::Cnot)).collect();
    let u = oracle::circuit_unitary(2, &block_only);

    for basis in 0..4 {
        let mut s = QuantumState::basis(2, basis).unwrap();
        for op in spec.ops.iter().filter(|op| op.kind != OpKind::Cnot) {
            op.apply(&mut s, &theta).unwrap();
        }
        let col: Vec<C64> = (0..4).map(|r| u[r][basis]).collect();
        for (x, y) in s.amplitudes().iter().zip(&col) {
            assert!((x - y).norm() < 1e-12);
        }
    }
}

#[test]
fn zero_parameter_block_is_identity() {
    let mut b = CircuitBuilder::new(2).unwrap();
    b.conv_block(0, 1).unwrap();
    b.pool(0, 1).unwrap();
    let spec = b.finish(1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let input = random_state(2, &mut rng);
    let mut s = input.clone();
    for op in spec.ops.iter().filter(|op| op.kind != OpKind::Cnot) {
        op.apply(&mut s, &[0.0; 15]).unwrap();
    }
    assert_eq!(s, input);
}

#[test]
fn all_ansaetze_match_dense_oracle_at_four_qubits() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for kind in AnsatzKind::ALL {
        let spec = kind.build(4).unwrap();
        for _ in 0..100 {
            let theta = random_theta(spec.param_count, &mut rng);
            let input = random_state(4, &mut rng);
            let u = oracle::circuit_unitary(4, &ref_ops(&spec, &theta));
            let want = oracle::expectation_z(&oracle::apply(&u, input.amplitudes()), spec.measure_wire, 4);
            let got = ansatz::run_circuit(&spec, &theta, &input).unwrap();
            assert!((got - want).abs() < 1e-10, "{kind}: {got} vs {want}");
            assert!(got.abs() <= 1.0);
        }
    }
}

#[test]
fn fused_execution_matches_op_by_op_at_eight_qubits() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for kind in AnsatzKind::ALL {
        let spec = kind.build(8).unwrap();
        let theta = random_theta(spec.param_count, &mut rng);
        let input = random_state(8, &mut rng);
        let mut slow = input.clone();
        for op in &spec.ops {
            op.apply(&mut slow, &theta).unwrap();
        }
        let fast = ansatz::evolve(&spec, &theta, &input).unwrap();
        for (x, y) in fast.amplitudes().iter().zip(slow.amplitudes()) {
            assert!((x - y).norm() < 1e-12);
        }
    }
}

#[test]
fn zero_parameters_reduce_to_pooled_parity() {
    // With every angle at zero only the CNOT pooling remains. Each pool maps
    // Z on its target to Z⊗Z on (control, target), so the read-out equals the
    // parity of all wires feeding the measure wire: every wire, for these trees.
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for kind in AnsatzKind::ALL {
        for n in [4, 8] {
            let spec = kind.build(n).unwrap();
            let input = random_state(n, &mut rng);
            let got = ansatz::run_circuit(&spec, &vec![0.0; spec.param_count], &input).unwrap();
            let want = oracle::parity_expectation(input.amplitudes());
            assert!((got - want).abs() < 1e-12, "{kind} n={n}");
        }
    }
}

#[test]
fn specs_validate_and_slot_counts_hold() {
    for n in [4, 8, 16] {
        for kind in AnsatzKind::ALL {
            kind.build(n).unwrap().validate().unwrap();
        }
        let blocks_tree = n - 1;
        assert_eq!(ansatz::build_ttn(n).unwrap().param_count, blocks_tree * 15 + 15);
        assert_eq!(ansatz::build_mps(n).unwrap().param_count, (n - 1) * 15 + 15);
        // offset pairs per layer: (active - 2) / 2 for active ≥ 4
        let mut active = n;
        let mut blocks = 0;
        while active > 1 {
            blocks += active / 2 + (active.saturating_sub(2)) / 2;
            active /= 2;
        }
        assert_eq!(ansatz::build_reverse_mera(n).unwrap().param_count, blocks * 15 + 15);
    }
}
