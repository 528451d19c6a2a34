//! Dense statevector register.
//!
//! Basis index `i` of an `n`-qubit register stores qubit 0 in its most
//! significant bit, so wire `w` maps to bit position `n - 1 - w`. Circuit
//! diagrams read top to bottom in the same order as the binary digits of `i`.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const MAX_QUBITS: usize = 16;
pub const NORM_TOLERANCE: f64 = 1e-10;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Dense unitary acting on one or two wires.
///
/// For the two-qubit form, rows and columns are indexed by `2 * bit_a + bit_b`
/// where `a` is the first wire the gate is applied to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateMatrix {
    Single([[C64; 2]; 2]),
    Double([[C64; 4]; 4]),
}

impl GateMatrix {
    pub fn identity(arity: usize) -> Self {
        match arity {
            1 => GateMatrix::Single([[ONE, ZERO], [ZERO, ONE]]),
            _ => {
                let mut m = [[ZERO; 4]; 4];
                for (i, row) in m.iter_mut().enumerate() {
                    row[i] = ONE;
                }
                GateMatrix::Double(m)
            }
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            GateMatrix::Single(_) => 1,
            GateMatrix::Double(_) => 2,
        }
    }

    pub fn dim(&self) -> usize {
        1 << self.arity()
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        match self {
            GateMatrix::Single(m) => m[row][col],
            GateMatrix::Double(m) => m[row][col],
        }
    }

    /// Builds a gate from a row-major square matrix of dimension 2 or 4.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let d = rows.len();
        if !(d == 2 || d == 4) || rows.iter().any(|r| r.len() != d) {
            return Err(Error::Shape(format!("gate matrix must be 2x2 or 4x4, got {d} rows")));
        }
        Ok(if d == 2 {
            GateMatrix::Single([[rows[0][0], rows[0][1]], [rows[1][0], rows[1][1]]])
        } else {
            let mut m = [[ZERO; 4]; 4];
            for (r, row) in rows.iter().enumerate() {
                m[r].copy_from_slice(row);
            }
            GateMatrix::Double(m)
        })
    }

    pub fn dagger(&self) -> Self {
        match self {
            GateMatrix::Single(m) => {
                let mut out = [[ZERO; 2]; 2];
                for r in 0..2 {
                    for c in 0..2 {
                        out[r][c] = m[c][r].conj();
                    }
                }
                GateMatrix::Single(out)
            }
            GateMatrix::Double(m) => {
                let mut out = [[ZERO; 4]; 4];
                for r in 0..4 {
                    for c in 0..4 {
                        out[r][c] = m[c][r].conj();
                    }
                }
                GateMatrix::Double(out)
            }
        }
    }

    /// Matrix product `self * rhs`; both operands must have the same arity.
    pub fn matmul(&self, rhs: &GateMatrix) -> Result<GateMatrix> {
        match (self, rhs) {
            (GateMatrix::Single(a), GateMatrix::Single(b)) => {
                let mut out = [[ZERO; 2]; 2];
                for r in 0..2 {
                    for c in 0..2 {
                        out[r][c] = a[r][0] * b[0][c] + a[r][1] * b[1][c];
                    }
                }
                Ok(GateMatrix::Single(out))
            }
            (GateMatrix::Double(a), GateMatrix::Double(b)) => Ok(GateMatrix::Double(mul4(a, b))),
            _ => Err(Error::Shape("gate arity mismatch in product".into())),
        }
    }

    /// Tensor product `high ⊗ low`, with `high` on the higher-order bit.
    pub fn kron(high: &[[C64; 2]; 2], low: &[[C64; 2]; 2]) -> GateMatrix {
        let mut out = [[ZERO; 4]; 4];
        for r in 0..4 {
            for c in 0..4 {
                out[r][c] = high[r >> 1][c >> 1] * low[r & 1][c & 1];
            }
        }
        GateMatrix::Double(out)
    }

    /// Largest elementwise deviation of `U†U` from the identity.
    pub fn unitarity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for r in 0..d {
            for c in 0..d {
                let mut acc = ZERO;
                for k in 0..d {
                    acc += self.get(k, r).conj() * self.get(k, c);
                }
                let target = if r == c { ONE } else { ZERO };
                worst = worst.max((acc - target).norm());
            }
        }
        worst
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_error() <= tol
    }
}

pub(crate) fn mul4(a: &[[C64; 4]; 4], b: &[[C64; 4]; 4]) -> [[C64; 4]; 4] {
    let mut out = [[ZERO; 4]; 4];
    for r in 0..4 {
        for c in 0..4 {
            let mut acc = ZERO;
            for k in 0..4 {
                acc += a[r][k] * b[k][c];
            }
            out[r][c] = acc;
        }
    }
    out
}

/// Normalized amplitude vector of an `n`-qubit register.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    num_qubits: usize,
    amps: Vec<C64>,
}

impl QuantumState {
    /// The all-zero computational basis state.
    pub fn zero(num_qubits: usize) -> Result<Self> {
        Self::basis(num_qubits, 0)
    }

    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        check_qubits(num_qubits)?;
        let dim = 1usize << num_qubits;
        if index >= dim {
            return Err(Error::Index(format!("basis index {index} out of range for {num_qubits} qubits")));
        }
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Ok(Self { num_qubits, amps })
    }

    /// Wraps an already-normalized amplitude vector.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Shape(format!("amplitude vector length {len} is not a power of two")));
        }
        let num_qubits = len.trailing_zeros() as usize;
        check_qubits(num_qubits)?;
        let state = Self { num_qubits, amps };
        let norm = state.norm();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::Parameter(format!("amplitudes have norm {norm}, expected 1")));
        }
        Ok(state)
    }

    /// Unnormalized buffer, for kernels that reuse the register layout.
    pub(crate) fn from_raw(num_qubits: usize, amps: Vec<C64>) -> Self {
        debug_assert_eq!(amps.len(), 1 << num_qubits);
        Self { num_qubits, amps }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    fn check_wire(&self, wire: usize) -> Result<()> {
        if wire >= self.num_qubits {
            return Err(Error::Index(format!(
                "wire {wire} out of range for {} qubits",
                self.num_qubits
            )));
        }
        Ok(())
    }

    fn stride(&self, wire: usize) -> usize {
        1usize << (self.num_qubits - 1 - wire)
    }

    /// Applies a single-qubit gate to `target`.
    pub fn apply_1q(&mut self, gate: &GateMatrix, target: usize) -> Result<()> {
        self.check_wire(target)?;
        match gate {
            GateMatrix::Single(m) => {
                self.apply_2x2(m, target);
                Ok(())
            }
            GateMatrix::Double(_) => Err(Error::Shape("apply_1q needs a one-qubit gate".into())),
        }
    }

    /// Applies a two-qubit gate; `wire_a` is the higher-order bit of the gate's basis.
    pub fn apply_2q(&mut self, gate: &GateMatrix, wire_a: usize, wire_b: usize) -> Result<()> {
        self.check_wire(wire_a)?;
        self.check_wire(wire_b)?;
        if wire_a == wire_b {
            return Err(Error::Index(format!("two-qubit gate on repeated wire {wire_a}")));
        }
        match gate {
            GateMatrix::Double(m) => {
                self.apply_4x4(m, wire_a, wire_b);
                Ok(())
            }
            GateMatrix::Single(_) => Err(Error::Shape("apply_2q needs a two-qubit gate".into())),
        }
    }

    /// Applies any 2x2 matrix without checking unitarity.
    pub(crate) fn apply_2x2(&mut self, m: &[[C64; 2]; 2], target: usize) {
        let stride = self.stride(target);
        let (m00, m01, m10, m11) = (m[0][0], m[0][1], m[1][0], m[1][1]);
        for chunk in self.amps.chunks_exact_mut(2 * stride) {
            let (lo, hi) = chunk.split_at_mut(stride);
            for (x0, x1) in lo.iter_mut().zip(hi.iter_mut()) {
                let (a, b) = (*x0, *x1);
                *x0 = m00 * a + m01 * b;
                *x1 = m10 * a + m11 * b;
            }
        }
    }

    pub(crate) fn apply_4x4(&mut self, m: &[[C64; 4]; 4], wire_a: usize, wire_b: usize) {
        let n = self.num_qubits;
        let pa = n - 1 - wire_a;
        let pb = n - 1 - wire_b;
        let (lo, hi) = if pa < pb { (pa, pb) } else { (pb, pa) };
        let (ia, ib) = (1usize << pa, 1usize << pb);
        let lo_mask = (1usize << lo) - 1;
        let hi_mask = (1usize << hi) - 1;
        let quarter = self.amps.len() >> 2;
        let amps = &mut self.amps;
        for i in 0..quarter {
            // insert zero bits at `lo` then `hi`
            let t = ((i & !lo_mask) << 1) | (i & lo_mask);
            let base = ((t & !hi_mask) << 1) | (t & hi_mask);
            let idx = [base, base | ib, base | ia, base | ia | ib];
            let v = [amps[idx[0]], amps[idx[1]], amps[idx[2]], amps[idx[3]]];
            for r in 0..4 {
                amps[idx[r]] = m[r][0] * v[0] + m[r][1] * v[1] + m[r][2] * v[2] + m[r][3] * v[3];
            }
        }
    }

    /// Squared norm of `m |ψ⟩` for a 2x2 operator on `target`, without mutating.
    pub(crate) fn branch_weight(&self, m: &[[C64; 2]; 2], target: usize) -> f64 {
        let stride = self.stride(target);
        let mut acc = 0.0;
        for chunk in self.amps.chunks_exact(2 * stride) {
            let (lo, hi) = chunk.split_at(stride);
            for (a, b) in lo.iter().zip(hi) {
                acc += (m[0][0] * a + m[0][1] * b).norm_sqr() + (m[1][0] * a + m[1][1] * b).norm_sqr();
            }
        }
        acc
    }

    pub(crate) fn rescale(&mut self, factor: f64) {
        for a in &mut self.amps {
            *a *= factor;
        }
    }

    /// Analytic ⟨Z⟩ on `wire`: +1 weight for bit 0, −1 for bit 1.
    pub fn expectation_z(&self, wire: usize) -> Result<f64> {
        self.check_wire(wire)?;
        let stride = self.stride(wire);
        let mut acc = 0.0;
        for chunk in self.amps.chunks_exact(2 * stride) {
            let (lo, hi) = chunk.split_at(stride);
            acc += lo.iter().map(|a| a.norm_sqr()).sum::<f64>();
            acc -= hi.iter().map(|a| a.norm_sqr()).sum::<f64>();
        }
        Ok(acc.clamp(-1.0, 1.0))
    }

    /// Probability of reading 1 on `wire`.
    pub fn prob_one(&self, wire: usize) -> Result<f64> {
        self.check_wire(wire)?;
        let stride = self.stride(wire);
        let p: f64 = self
            .amps
            .chunks_exact(2 * stride)
            .map(|chunk| chunk[stride..].iter().map(|a| a.norm_sqr()).sum::<f64>())
            .sum();
        Ok(p.clamp(0.0, 1.0))
    }

    /// Estimates ⟨Z⟩ on `wire` from `shots` projective ±1 samples.
    pub fn sample_shots<R: Rng + ?Sized>(&self, wire: usize, shots: usize, rng: &mut R) -> Result<f64> {
        if shots == 0 {
            return Err(Error::Parameter("shot count must be at least 1".into()));
        }
        let p1 = self.prob_one(wire)?;
        let ones = (0..shots).filter(|_| rng.random::<f64>() < p1).count();
        Ok(1.0 - 2.0 * ones as f64 / shots as f64)
    }
}

fn check_qubits(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::Capacity(format!(
            "{n} qubits requested; supported range is 1..={MAX_QUBITS}"
        )));
    }
    Ok(())
}

/// Amplitude-encodes a real vector of length `2^n` (n ≥ 2) as `x / ‖x‖`.
///
/// No activation is applied before normalization; the raw values become the
/// amplitudes.
pub fn amplitude_encode(pixels: &[f64]) -> Result<QuantumState> {
    let len = pixels.len();
    if len < 4 || !len.is_power_of_two() {
        return Err(Error::Shape(format!(
            "amplitude encoding needs a power-of-two length of at least 4, got {len}"
        )));
    }
    let num_qubits = len.trailing_zeros() as usize;
    check_qubits(num_qubits)?;
    if pixels.iter().any(|p| !p.is_finite()) {
        return Err(Error::Parameter("non-finite pixel value".into()));
    }
    let norm = pixels.iter().map(|p| p * p).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::DegenerateInput("all-zero input has no valid normalization".into()));
    }
    let amps = pixels.iter().map(|&p| C64::new(p / norm, 0.0)).collect();
    Ok(QuantumState { num_qubits, amps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pauli_x() -> GateMatrix {
        GateMatrix::Single([[ZERO, ONE], [ONE, ZERO]])
    }

    fn cnot() -> GateMatrix {
        let mut m = [[ZERO; 4]; 4];
        m[0][0] = ONE;
        m[1][1] = ONE;
        m[2][3] = ONE;
        m[3][2] = ONE;
        GateMatrix::Double(m)
    }

    #[test]
    fn encodes_three_four_five() {
        let s = amplitude_encode(&[3.0, 0.0, 4.0, 0.0]).unwrap();
        let re: Vec<f64> = s.amplitudes().iter().map(|a| a.re).collect();
        assert_eq!(re, vec![0.6, 0.0, 0.8, 0.0]);
        assert!((s.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn encode_rejects_zero_and_bad_lengths() {
        assert!(matches!(amplitude_encode(&[0.0; 4]), Err(Error::DegenerateInput(_))));
        assert!(matches!(amplitude_encode(&[1.0; 6]), Err(Error::Shape(_))));
        assert!(matches!(amplitude_encode(&[1.0; 2]), Err(Error::Shape(_))));
        assert!(matches!(amplitude_encode(&vec![1.0; 1 << 17]), Err(Error::Capacity(_))));
    }

    #[test]
    fn endianness_contract() {
        let s = amplitude_encode(&[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(s.prob_one(1).unwrap(), 1.0);
        assert_eq!(s.prob_one(0).unwrap(), 0.0);
    }

    #[test]
    fn pauli_x_on_wire_zero_sets_msb() {
        let mut s = QuantumState::zero(3).unwrap();
        s.apply_1q(&pauli_x(), 0).unwrap();
        assert_eq!(s, QuantumState::basis(3, 0b100).unwrap());
    }

    #[test]
    fn identity_leaves_state_unchanged() {
        let mut s = amplitude_encode(&[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8]).unwrap();
        let before = s.clone();
        s.apply_1q(&GateMatrix::identity(1), 1).unwrap();
        s.apply_2q(&GateMatrix::identity(2), 2, 0).unwrap();
        assert_eq!(s, before);
    }

    #[test]
    fn cnot_truth_table() {
        let mut s = QuantumState::basis(2, 0b10).unwrap();
        s.apply_2q(&cnot(), 0, 1).unwrap();
        assert_eq!(s, QuantumState::basis(2, 0b11).unwrap());
        let mut s = QuantumState::zero(2).unwrap();
        s.apply_2q(&cnot(), 0, 1).unwrap();
        assert_eq!(s, QuantumState::zero(2).unwrap());
    }

    #[test]
    fn wire_errors() {
        let mut s = QuantumState::zero(2).unwrap();
        assert!(matches!(s.apply_1q(&pauli_x(), 2), Err(Error::Index(_))));
        assert!(matches!(s.apply_2q(&cnot(), 1, 1), Err(Error::Index(_))));
        assert!(matches!(s.expectation_z(5), Err(Error::Index(_))));
    }

    #[test]
    fn z_expectations() {
        let s = QuantumState::zero(2).unwrap();
        assert_eq!(s.expectation_z(1).unwrap(), 1.0);
        let s = QuantumState::basis(2, 1).unwrap();
        assert_eq!(s.expectation_z(1).unwrap(), -1.0);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let s = QuantumState::from_amplitudes(vec![C64::new(h, 0.0), C64::new(h, 0.0)]).unwrap();
        assert!(s.expectation_z(0).unwrap().abs() < 1e-15);
    }

    #[test]
    fn prob_one_single_qubit() {
        let s = QuantumState::from_amplitudes(vec![C64::new(0.6, 0.0), C64::new(0.8, 0.0)]).unwrap();
        assert!((s.prob_one(0).unwrap() - 0.64).abs() < 1e-15);
        assert_eq!(QuantumState::basis(1, 1).unwrap().prob_one(0).unwrap(), 1.0);
        assert_eq!(QuantumState::zero(1).unwrap().prob_one(0).unwrap(), 0.0);
    }

    #[test]
    fn shots() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let zero = QuantumState::zero(1).unwrap();
        assert_eq!(zero.sample_shots(0, 37, &mut rng).unwrap(), 1.0);
        assert!(matches!(zero.sample_shots(0, 0, &mut rng), Err(Error::Parameter(_))));

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = QuantumState::from_amplitudes(vec![C64::new(h, 0.0), C64::new(h, 0.0)]).unwrap();
        let est = plus.sample_shots(0, 10_000, &mut rng).unwrap();
        // 3σ for 10k fair ±1 draws is 0.03
        assert!(est.abs() < 0.05, "{est}");

        let a = plus.sample_shots(0, 500, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = plus.sample_shots(0, 500, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }
}
