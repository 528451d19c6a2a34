//! Parametrized gate constructors.
//!
//! Conventions follow the usual `e^{-i(α/2)P}` rotation form. The two-qubit
//! Ising gates are the exact exponentials of `P ⊗ P` for `P ∈ {X, Y, Z}`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::statevector::{GateMatrix, C64};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Angles for one gate, tagged by the gate family they parametrize.
#[derive(Debug, Clone, PartialEq)]
pub enum GateParams {
    U3 { theta: f64, phi: f64, delta: f64 },
    Ising(f64),
    /// `4^qubits - 1` generator coefficients.
    ArbitraryUnitary { qubits: usize, params: Vec<f64> },
}

impl GateParams {
    pub fn angles(&self) -> Vec<f64> {
        match self {
            GateParams::U3 { theta, phi, delta } => vec![*theta, *phi, *delta],
            GateParams::Ising(a) => vec![*a],
            GateParams::ArbitraryUnitary { params, .. } => params.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let GateParams::ArbitraryUnitary { qubits, params } = self {
            let want = arbitrary_unitary_param_count(*qubits)?;
            if params.len() != want {
                return Err(Error::Shape(format!(
                    "{qubits}-qubit arbitrary unitary takes {want} parameters, got {}",
                    params.len()
                )));
            }
        }
        check_finite(&self.angles())
    }
}

fn check_finite(values: &[f64]) -> Result<()> {
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Parameter(format!("non-finite gate angle {v}")));
    }
    Ok(())
}

pub fn pauli_x() -> [[C64; 2]; 2] {
    [[ZERO, ONE], [ONE, ZERO]]
}

pub fn pauli_y() -> [[C64; 2]; 2] {
    [[ZERO, -I], [I, ZERO]]
}

pub fn pauli_z() -> [[C64; 2]; 2] {
    [[ONE, ZERO], [ZERO, -ONE]]
}

/// `U3(θ, φ, δ)`.
pub fn u3(theta: f64, phi: f64, delta: f64) -> Result<GateMatrix> {
    check_finite(&[theta, phi, delta])?;
    let (s, c) = (theta / 2.0).sin_cos();
    Ok(GateMatrix::Single([
        [C64::new(c, 0.0), -C64::from_polar(s, delta)],
        [C64::from_polar(s, phi), C64::from_polar(c, phi + delta)],
    ]))
}

pub fn rz(angle: f64) -> GateMatrix {
    GateMatrix::Single([
        [C64::from_polar(1.0, -angle / 2.0), ZERO],
        [ZERO, C64::from_polar(1.0, angle / 2.0)],
    ])
}

pub fn ry(angle: f64) -> GateMatrix {
    let (s, c) = (angle / 2.0).sin_cos();
    GateMatrix::Single([[C64::new(c, 0.0), C64::new(-s, 0.0)], [C64::new(s, 0.0), C64::new(c, 0.0)]])
}

pub fn rx(angle: f64) -> GateMatrix {
    let (s, c) = (angle / 2.0).sin_cos();
    GateMatrix::Single([[C64::new(c, 0.0), C64::new(0.0, -s)], [C64::new(0.0, -s), C64::new(c, 0.0)]])
}

pub fn phase_shift(angle: f64) -> GateMatrix {
    GateMatrix::Single([[ONE, ZERO], [ZERO, C64::from_polar(1.0, angle)]])
}

/// General rotation `RZ(ω) RY(θ) RZ(φ)`.
pub fn rot(phi: f64, theta: f64, omega: f64) -> GateMatrix {
    let m = ry(theta).matmul(&rz(phi)).expect("same arity");
    rz(omega).matmul(&m).expect("same arity")
}

/// `exp(-i(φ/2) X⊗X)`.
pub fn ising_xx(phi: f64) -> Result<GateMatrix> {
    check_finite(&[phi])?;
    let (s, c) = (phi / 2.0).sin_cos();
    let (c, ms) = (C64::new(c, 0.0), C64::new(0.0, -s));
    Ok(GateMatrix::Double([
        [c, ZERO, ZERO, ms],
        [ZERO, c, ms, ZERO],
        [ZERO, ms, c, ZERO],
        [ms, ZERO, ZERO, c],
    ]))
}

/// `exp(-i(φ/2) Y⊗Y)`.
pub fn ising_yy(phi: f64) -> Result<GateMatrix> {
    check_finite(&[phi])?;
    let (s, c) = (phi / 2.0).sin_cos();
    let (c, ps, ms) = (C64::new(c, 0.0), C64::new(0.0, s), C64::new(0.0, -s));
    Ok(GateMatrix::Double([
        [c, ZERO, ZERO, ps],
        [ZERO, c, ms, ZERO],
        [ZERO, ms, c, ZERO],
        [ps, ZERO, ZERO, c],
    ]))
}

/// `exp(-i(φ/2) Z⊗Z)`.
pub fn ising_zz(phi: f64) -> Result<GateMatrix> {
    check_finite(&[phi])?;
    let minus = C64::from_polar(1.0, -phi / 2.0);
    let plus = C64::from_polar(1.0, phi / 2.0);
    Ok(GateMatrix::Double([
        [minus, ZERO, ZERO, ZERO],
        [ZERO, plus, ZERO, ZERO],
        [ZERO, ZERO, plus, ZERO],
        [ZERO, ZERO, ZERO, minus],
    ]))
}

/// Controlled NOT with the control on the higher-order wire.
pub fn cnot() -> GateMatrix {
    let mut m = [[ZERO; 4]; 4];
    m[0][0] = ONE;
    m[1][1] = ONE;
    m[2][3] = ONE;
    m[3][2] = ONE;
    GateMatrix::Double(m)
}

pub fn arbitrary_unitary_param_count(qubits: usize) -> Result<usize> {
    match qubits {
        1 | 2 => Ok((1 << (2 * qubits)) - 1),
        _ => Err(Error::Parameter(format!("arbitrary unitary supports 1 or 2 qubits, got {qubits}"))),
    }
}

/// Generalized Gell-Mann basis of traceless Hermitian `d×d` matrices.
///
/// Order: symmetric `|j⟩⟨k| + |k⟩⟨j|` for `j < k` (lexicographic), then
/// antisymmetric `-i|j⟩⟨k| + i|k⟩⟨j|` in the same pair order, then the
/// diagonals `sqrt(2/(l(l+1))) (Σ_{m<l} |m⟩⟨m| - l|l⟩⟨l|)` for `l = 1..d`.
/// For `d = 2` this is exactly `X, Y, Z`.
pub fn gell_mann_basis(d: usize) -> Vec<DMatrix<C64>> {
    let mut pairs = Vec::new();
    for j in 0..d {
        for k in (j + 1)..d {
            pairs.push((j, k));
        }
    }
    let mut basis = Vec::with_capacity(d * d - 1);
    for &(j, k) in &pairs {
        let mut m = DMatrix::from_element(d, d, ZERO);
        m[(j, k)] = ONE;
        m[(k, j)] = ONE;
        basis.push(m);
    }
    for &(j, k) in &pairs {
        let mut m = DMatrix::from_element(d, d, ZERO);
        m[(j, k)] = -I;
        m[(k, j)] = I;
        basis.push(m);
    }
    for l in 1..d {
        let scale = (2.0 / (l * (l + 1)) as f64).sqrt();
        let mut m = DMatrix::from_element(d, d, ZERO);
        for i in 0..l {
            m[(i, i)] = C64::new(scale, 0.0);
        }
        m[(l, l)] = C64::new(-scale * l as f64, 0.0);
        basis.push(m);
    }
    basis
}

/// `exp(-i H)` for Hermitian `H`, via its eigendecomposition.
pub fn expm_hermitian(h: &DMatrix<C64>) -> DMatrix<C64> {
    let eig = SymmetricEigen::new(h.clone());
    let v = &eig.eigenvectors;
    let phases = DMatrix::from_diagonal(&eig.eigenvalues.map(|lambda| C64::from_polar(1.0, -lambda)));
    v * phases * v.adjoint()
}

/// `exp(-i Σ_j params_j G_j)` over the Gell-Mann basis of dimension `2^qubits`.
pub fn arbitrary_unitary(params: &[f64], qubits: usize) -> Result<GateMatrix> {
    GateParams::ArbitraryUnitary { qubits, params: params.to_vec() }.validate()?;
    let d = 1usize << qubits;
    let mut h = DMatrix::from_element(d, d, ZERO);
    for (p, g) in params.iter().zip(gell_mann_basis(d)) {
        h += g * C64::new(*p, 0.0);
    }
    let u = expm_hermitian(&h);
    let rows: Vec<Vec<C64>> = (0..d).map(|r| (0..d).map(|c| u[(r, c)]).collect()).collect();
    GateMatrix::from_rows(&rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn max_diff(a: &GateMatrix, b: &GateMatrix) -> f64 {
        let d = a.dim();
        let mut worst = 0.0f64;
        for r in 0..d {
            for c in 0..d {
                worst = worst.max((a.get(r, c) - b.get(r, c)).norm());
            }
        }
        worst
    }

    #[test]
    fn zero_angles_are_identity() {
        assert_eq!(u3(0.0, 0.0, 0.0).unwrap(), GateMatrix::identity(1));
        for g in [ising_xx(0.0), ising_yy(0.0), ising_zz(0.0)] {
            assert_eq!(g.unwrap(), GateMatrix::identity(2));
        }
        assert!(max_diff(&arbitrary_unitary(&[0.0; 15], 2).unwrap(), &GateMatrix::identity(2)) < 1e-15);
    }

    #[test]
    fn u3_pi_zero_pi_is_pauli_x() {
        let g = u3(PI, 0.0, PI).unwrap();
        assert!(max_diff(&g, &GateMatrix::Single(pauli_x())) < 1e-15);
    }

    #[test]
    fn ising_zz_pi() {
        let g = ising_zz(PI).unwrap();
        let want = [C64::new(0.0, -1.0), I, I, C64::new(0.0, -1.0)];
        for (k, w) in want.iter().enumerate() {
            assert!((g.get(k, k) - w).norm() < 1e-15);
        }
    }

    #[test]
    fn ising_yy_on_ground_state() {
        let phi = 0.83;
        let g = ising_yy(phi).unwrap();
        assert!((g.get(0, 0) - C64::new((phi / 2.0).cos(), 0.0)).norm() < 1e-15);
        assert!((g.get(3, 0) - C64::new(0.0, (phi / 2.0).sin())).norm() < 1e-15);
    }

    #[test]
    fn u3_decomposes_into_phase_and_rotation() {
        let (t, p, d) = (1.1, -0.4, 2.3);
        let composed = phase_shift(p + d).matmul(&rot(d, t, -d)).unwrap();
        assert!(max_diff(&u3(t, p, d).unwrap(), &composed) < 1e-14);

        // The same gate up to a global phase is RZ(φ) RY(θ) RZ(δ).
        let zyz = rz(p).matmul(&ry(t).matmul(&rz(d)).unwrap()).unwrap();
        let phase = C64::from_polar(1.0, (p + d) / 2.0);
        let scaled = match zyz {
            GateMatrix::Single(m) => GateMatrix::Single(m.map(|row| row.map(|x| x * phase))),
            _ => unreachable!(),
        };
        assert!(max_diff(&u3(t, p, d).unwrap(), &scaled) < 1e-14);
    }

    #[test]
    fn cnot_is_permutation() {
        let g = cnot();
        assert_eq!(g.get(3, 2), ONE);
        assert_eq!(g.get(2, 3), ONE);
        assert_eq!(g.get(1, 1), ONE);
    }

    #[test]
    fn gell_mann_two_is_pauli() {
        let b = gell_mann_basis(2);
        let paulis = [pauli_x(), pauli_y(), pauli_z()];
        for (g, p) in b.iter().zip(paulis.iter()) {
            for r in 0..2 {
                for c in 0..2 {
                    assert_eq!(g[(r, c)], p[r][c]);
                }
            }
        }
    }

    #[test]
    fn gell_mann_four_is_orthogonal_and_traceless() {
        let b = gell_mann_basis(4);
        assert_eq!(b.len(), 15);
        for (i, gi) in b.iter().enumerate() {
            assert!(gi.trace().norm() < 1e-15);
            assert_eq!(gi.adjoint(), *gi);
            for (j, gj) in b.iter().enumerate() {
                let ip = (gi * gj).trace();
                let want = if i == j { 2.0 } else { 0.0 };
                assert!((ip - C64::new(want, 0.0)).norm() < 1e-12, "({i},{j}) -> {ip}");
            }
        }
    }

    #[test]
    fn arbitrary_unitary_param_counts() {
        assert!(matches!(arbitrary_unitary(&[0.1; 14], 2), Err(Error::Shape(_))));
        assert!(matches!(arbitrary_unitary(&[0.1; 4], 1), Err(Error::Shape(_))));
        assert!(matches!(arbitrary_unitary(&[0.1; 63], 3), Err(Error::Parameter(_))));
        assert!(arbitrary_unitary(&[0.1; 3], 1).is_ok());
    }

    #[test]
    fn single_qubit_arbitrary_unitary_is_rotation() {
        // exp(-i a X) = RX(2a)
        let g = arbitrary_unitary(&[0.3, 0.0, 0.0], 1).unwrap();
        assert!(max_diff(&g, &rx(0.6)) < 1e-14);
    }

    #[test]
    fn non_finite_angles_rejected() {
        assert!(matches!(u3(f64::NAN, 0.0, 0.0), Err(Error::Parameter(_))));
        assert!(matches!(ising_xx(f64::INFINITY), Err(Error::Parameter(_))));
        assert!(matches!(arbitrary_unitary(&[f64::NAN, 0.0, 0.0], 1), Err(Error::Parameter(_))));
    }
}
