//! Brute-force reference computations for tests.
//!
//! Nothing here shares code with the engine: gate matrices come from power
//! series, circuits are simulated as full `2^n × 2^n` products, and the
//! classical pieces are written as plain scalar loops.

use num_complex::Complex64 as C64;

pub type CMat = Vec<Vec<C64>>;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

pub fn identity(d: usize) -> CMat {
    (0..d).map(|r| (0..d).map(|c| if r == c { ONE } else { ZERO }).collect()).collect()
}

pub fn matmul(a: &CMat, b: &CMat) -> CMat {
    let n = a.len();
    let m = b[0].len();
    let k = b.len();
    let mut out = vec![vec![ZERO; m]; n];
    for r in 0..n {
        for j in 0..k {
            let x = a[r][j];
            if x == ZERO {
                continue;
            }
            for c in 0..m {
                out[r][c] += x * b[j][c];
            }
        }
    }
    out
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ra, ca, rb, cb) = (a.len(), a[0].len(), b.len(), b[0].len());
    let mut out = vec![vec![ZERO; ca * cb]; ra * rb];
    for i in 0..ra {
        for j in 0..ca {
            for k in 0..rb {
                for l in 0..cb {
                    out[i * rb + k][j * cb + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

pub fn adjoint(a: &CMat) -> CMat {
    let (r, c) = (a.len(), a[0].len());
    (0..c).map(|j| (0..r).map(|i| a[i][j].conj()).collect()).collect()
}

pub fn scale(a: &CMat, s: C64) -> CMat {
    a.iter().map(|row| row.iter().map(|x| x * s).collect()).collect()
}

pub fn add(a: &CMat, b: &CMat) -> CMat {
    a.iter().zip(b).map(|(x, y)| x.iter().zip(y).map(|(p, q)| p + q).collect()).collect()
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).norm()))
        .fold(0.0, f64::max)
}

pub fn pauli(which: char) -> CMat {
    let i = C64::new(0.0, 1.0);
    match which {
        'I' => identity(2),
        'X' => vec![vec![ZERO, ONE], vec![ONE, ZERO]],
        'Y' => vec![vec![ZERO, -i], vec![i, ZERO]],
        'Z' => vec![vec![ONE, ZERO], vec![ZERO, -ONE]],
        _ => panic!("unknown Pauli {which}"),
    }
}

/// `exp(A)` by Taylor series with scaling and squaring.
pub fn expm_series(a: &CMat) -> CMat {
    let norm: f64 = a.iter().map(|row| row.iter().map(|x| x.norm()).sum::<f64>()).fold(0.0, f64::max);
    let mut squarings = 0;
    let mut s = 1.0;
    while norm / s > 0.125 {
        s *= 2.0;
        squarings += 1;
    }
    let scaled = scale(a, C64::new(1.0 / s, 0.0));
    let d = a.len();
    let mut result = identity(d);
    let mut term = identity(d);
    for k in 1..40 {
        term = scale(&matmul(&term, &scaled), C64::new(1.0 / k as f64, 0.0));
        result = add(&result, &term);
    }
    for _ in 0..squarings {
        result = matmul(&result, &result);
    }
    result
}

/// `exp(-i (angle/2) P⊗P)`.
pub fn ising_series(p: char, angle: f64) -> CMat {
    let pp = kron(&pauli(p), &pauli(p));
    expm_series(&scale(&pp, C64::new(0.0, -angle / 2.0)))
}

/// `exp(-i (angle/2) P)`.
pub fn rotation_series(p: char, angle: f64) -> CMat {
    expm_series(&scale(&pauli(p), C64::new(0.0, -angle / 2.0)))
}

/// `U3(θ, φ, δ)` as `e^{i(φ+δ)/2} RZ(φ) RY(θ) RZ(δ)` from series rotations.
pub fn u3_series(theta: f64, phi: f64, delta: f64) -> CMat {
    let m = matmul(
        &rotation_series('Z', phi),
        &matmul(&rotation_series('Y', theta), &rotation_series('Z', delta)),
    );
    scale(&m, C64::from_polar(1.0, (phi + delta) / 2.0))
}

/// Generalized Gell-Mann basis: symmetric, antisymmetric, then diagonal.
pub fn gell_mann(d: usize) -> Vec<CMat> {
    let i = C64::new(0.0, 1.0);
    let mut sym = Vec::new();
    let mut asym = Vec::new();
    for j in 0..d {
        for k in (j + 1)..d {
            let mut s = vec![vec![ZERO; d]; d];
            s[j][k] = ONE;
            s[k][j] = ONE;
            sym.push(s);
            let mut a = vec![vec![ZERO; d]; d];
            a[j][k] = -i;
            a[k][j] = i;
            asym.push(a);
        }
    }
    let mut out = sym;
    out.extend(asym);
    for l in 1..d {
        let c = (2.0 / (l * (l + 1)) as f64).sqrt();
        let mut m = vec![vec![ZERO; d]; d];
        for (idx, row) in m.iter_mut().enumerate().take(l) {
            row[idx] = C64::new(c, 0.0);
        }
        m[l][l] = C64::new(-c * l as f64, 0.0);
        out.push(m);
    }
    out
}

/// `exp(-i Σ p_j G_j)` by series.
pub fn arbitrary_unitary_series(params: &[f64], d: usize) -> CMat {
    let mut h = vec![vec![ZERO; d]; d];
    for (p, g) in params.iter().zip(gell_mann(d)) {
        h = add(&h, &scale(&g, C64::new(*p, 0.0)));
    }
    expm_series(&scale(&h, C64::new(0.0, -1.0)))
}

pub fn cnot() -> CMat {
    let mut m = identity(4);
    m[2][2] = ZERO;
    m[3][3] = ZERO;
    m[2][3] = ONE;
    m[3][2] = ONE;
    m
}

/// A gate for the dense reference simulator.
#[derive(Debug, Clone)]
pub enum RefGate {
    U3(f64, f64, f64),
    Ising(char, f64),
    Cnot,
    Arbitrary(Vec<f64>),
    Matrix(CMat),
}

impl RefGate {
    pub fn matrix(&self) -> CMat {
        match self {
            RefGate::U3(t, p, d) => u3_series(*t, *p, *d),
            RefGate::Ising(p, a) => ising_series(*p, *a),
            RefGate::Cnot => cnot(),
            RefGate::Arbitrary(params) => {
                let d = if params.len() == 3 { 2 } else { 4 };
                arbitrary_unitary_series(params, d)
            }
            RefGate::Matrix(m) => m.clone(),
        }
    }
}

/// Embeds a 1-qubit gate on `wire` of `n` (wire 0 = most significant) by
/// Kronecker products with identities.
pub fn embed_1q(u: &CMat, wire: usize, n: usize) -> CMat {
    let eye = identity(2);
    let mut out = vec![vec![ONE]];
    for w in 0..n {
        out = kron(&out, if w == wire { u } else { &eye });
    }
    out
}

/// Embeds a 2-qubit gate on `(a, b)`, with `a` the higher-order bit of `u`.
/// Built elementwise: entry (i, j) is `u[ia ib][ja jb]` when all other bits
/// of `i` and `j` agree, zero otherwise.
pub fn embed_2q(u: &CMat, a: usize, b: usize, n: usize) -> CMat {
    let dim = 1 << n;
    let bit = |x: usize, w: usize| (x >> (n - 1 - w)) & 1;
    let others = |x: usize| x & !((1 << (n - 1 - a)) | (1 << (n - 1 - b)));
    let mut out = vec![vec![ZERO; dim]; dim];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            if others(i) == others(j) {
                *cell = u[2 * bit(i, a) + bit(i, b)][2 * bit(j, a) + bit(j, b)];
            }
        }
    }
    out
}

/// Full circuit unitary for a list of (gate, wires).
pub fn circuit_unitary(n: usize, ops: &[(RefGate, Vec<usize>)]) -> CMat {
    let mut u = identity(1 << n);
    for (g, wires) in ops {
        let m = g.matrix();
        let full = match wires.as_slice() {
            [w] => embed_1q(&m, *w, n),
            [a, b] => embed_2q(&m, *a, *b, n),
            _ => panic!("1- or 2-qubit gates only"),
        };
        u = matmul(&full, &u);
    }
    u
}

pub fn apply(u: &CMat, psi: &[C64]) -> Vec<C64> {
    u.iter().map(|row| row.iter().zip(psi).map(|(a, b)| a * b).sum()).collect()
}

/// `⟨ψ| Z_wire |ψ⟩` by explicit diagonal sum.
pub fn expectation_z(psi: &[C64], wire: usize, n: usize) -> f64 {
    psi.iter()
        .enumerate()
        .map(|(i, a)| if (i >> (n - 1 - wire)) & 1 == 0 { a.norm_sqr() } else { -a.norm_sqr() })
        .sum()
}

/// `⟨ψ| Z⊗…⊗Z |ψ⟩` over all wires.
pub fn parity_expectation(psi: &[C64]) -> f64 {
    psi.iter()
        .enumerate()
        .map(|(i, a)| if i.count_ones() % 2 == 0 { a.norm_sqr() } else { -a.norm_sqr() })
        .sum()
}

/// Kraus operators written out entry by entry, keyed by channel name.
pub fn kraus_reference(channel: &str, lambda: f64) -> Vec<CMat> {
    let r = |x: f64| C64::new(x, 0.0);
    let m = |a: C64, b: C64, c: C64, d: C64| vec![vec![a, b], vec![c, d]];
    let (z, one) = (ZERO, ONE);
    let i = C64::new(0.0, 1.0);
    let k = (1.0 - lambda).sqrt();
    let s = lambda.sqrt();
    match channel {
        "depolarizing" => {
            let p = (lambda / 3.0).sqrt();
            vec![
                m(r(k), z, z, r(k)),
                m(z, r(p), r(p), z),
                m(z, -i * p, i * p, z),
                m(r(p), z, z, r(-p)),
            ]
        }
        "amplitude-damping" => vec![m(one, z, z, r(k)), m(z, r(s), z, z)],
        "phase-damping" => vec![m(one, z, z, r(k)), m(z, z, z, r(s))],
        "bit-flip" => vec![m(r(k), z, z, r(k)), m(z, r(s), r(s), z)],
        other => panic!("unknown channel {other}"),
    }
}

/// One step of a noisy dense simulation.
#[derive(Debug, Clone)]
pub enum DensityStep {
    Gate(RefGate, Vec<usize>),
    Kraus(Vec<CMat>, usize),
}

/// Evolves `|ψ⟩⟨ψ|` through full-size `U ρ U†` and `Σ K ρ K†` products and
/// returns the final density matrix.
pub fn density_run(psi: &[C64], n: usize, steps: &[DensityStep]) -> CMat {
    let mut rho: CMat = psi.iter().map(|a| psi.iter().map(|b| a * b.conj()).collect()).collect();
    for step in steps {
        rho = match step {
            DensityStep::Gate(g, wires) => {
                let m = g.matrix();
                let u = match wires.as_slice() {
                    [w] => embed_1q(&m, *w, n),
                    [a, b] => embed_2q(&m, *a, *b, n),
                    _ => panic!("1- or 2-qubit gates only"),
                };
                matmul(&matmul(&u, &rho), &adjoint(&u))
            }
            DensityStep::Kraus(ops, wire) => {
                let mut acc = scale(&rho, ZERO);
                for k in ops {
                    let full = embed_1q(k, *wire, n);
                    acc = add(&acc, &matmul(&matmul(&full, &rho), &adjoint(&full)));
                }
                acc
            }
        };
    }
    rho
}

/// `tr(ρ Z_wire)`.
pub fn density_expectation_z(rho: &CMat, wire: usize, n: usize) -> f64 {
    (0..rho.len()).map(|i| if (i >> (n - 1 - wire)) & 1 == 0 { rho[i][i].re } else { -rho[i][i].re }).sum()
}

/// Mann-Whitney AUC by comparing every positive against every negative.
pub fn pairwise_auc(scores: &[f64], labels: &[u8]) -> f64 {
    let mut num = 0.0;
    let mut pairs = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        if labels[i] != 1 {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if labels[j] != 0 {
                continue;
            }
            pairs += 1.0;
            if si > sj {
                num += 1.0;
            } else if si == sj {
                num += 0.5;
            }
        }
    }
    num / pairs
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Scalar-loop LSTM reference. Weights are `[gate][unit][input ++ hidden]`
/// with gates ordered input, forget, candidate, output. Returns the final
/// hidden vector.
pub fn lstm_reference(xs: &[Vec<f64>], w: &[Vec<Vec<f64>>], b: &[Vec<f64>]) -> Vec<f64> {
    let hidden = b[0].len();
    let mut h = vec![0.0; hidden];
    let mut c = vec![0.0; hidden];
    for x in xs {
        let mut z: Vec<f64> = x.clone();
        z.extend_from_slice(&h);
        let mut new_h = vec![0.0; hidden];
        for u in 0..hidden {
            let pre = |g: usize| -> f64 { b[g][u] + w[g][u].iter().zip(&z).map(|(a, b)| a * b).sum::<f64>() };
            let ig = sigmoid(pre(0));
            let fg = sigmoid(pre(1));
            let gg = pre(2).tanh();
            let og = sigmoid(pre(3));
            c[u] = fg * c[u] + ig * gg;
            new_h[u] = og * c[u].tanh();
        }
        h = new_h;
    }
    h
}

pub const STATS_FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/stats_reference.json");

#[derive(Debug, Clone, serde::Deserialize)]
pub struct LeveneFixture {
    pub groups: Vec<Vec<f64>>,
    pub w: f64,
    pub p: f64,
}

#[derive(Debug, Clone, serde::Deserialize)]
pub struct PairedFixture {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub t: f64,
    pub p: f64,
}

#[derive(Debug, Clone, serde::Deserialize)]
pub struct StatsFixtures {
    pub levene: Vec<LeveneFixture>,
    pub paired_t: Vec<PairedFixture>,
}

/// Reference Levene (mean-centred) and paired-t values, computed ahead of
/// time with an established statistics package.
pub fn stats_fixtures() -> StatsFixtures {
    let text = std::fs::read_to_string(STATS_FIXTURES).expect("fixture file present");
    serde_json::from_str(&text).expect("fixture file parses")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_exponential_of_pauli_x_is_rx() {
        let m = rotation_series('X', 0.7);
        let (s, c) = (0.35f64.sin(), 0.35f64.cos());
        assert!((m[0][0] - C64::new(c, 0.0)).norm() < 1e-15);
        assert!((m[0][1] - C64::new(0.0, -s)).norm() < 1e-15);
    }

    #[test]
    fn embed_matches_kron_for_adjacent_wires() {
        let u = ising_series('X', 0.3);
        let via_kron = kron(&identity(2), &kron(&u, &identity(2)));
        assert!(max_abs_diff(&embed_2q(&u, 1, 2, 4), &via_kron) < 1e-15);
    }

    #[test]
    fn pairwise_auc_example() {
        assert_eq!(pairwise_auc(&[0.1, 0.4, 0.35, 0.8], &[0, 0, 1, 1]), 0.75);
    }
}
