use qcnn_core::neural::{
    bce_grad, bce_loss, dense_sigmoid, head_backward, head_forward, lstm_backward, lstm_forward, DenseParams,
    DropoutConfig, LstmParams, Mode,
};
use qcnn_oracles as oracle;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_lstm(d: usize, h: usize, rng: &mut impl Rng) -> LstmParams {
    let len = LstmParams::zeros(d, h).unwrap().len();
    LstmParams::from_values(d, h, (0..len).map(|_| rng.random_range(-0.8..0.8)).collect()).unwrap()
}

fn random_seq(d: usize, t: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    (0..t).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect()
}

#[test]
fn forward_matches_scalar_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (d, h, t) in [(1, 3, 4), (2, 5, 6), (1, 1, 1)] {
        let p = random_lstm(d, h, &mut rng);
        let xs = random_seq(d, t, &mut rng);
        let w: Vec<Vec<Vec<f64>>> =
            (0..4).map(|g| (0..h).map(|u| (0..d + h).map(|c| p.weight(g, u, c)).collect()).collect()).collect();
        let b: Vec<Vec<f64>> = (0..4).map(|g| (0..h).map(|u| p.bias(g, u)).collect()).collect();
        let want = oracle::lstm_reference(&xs, &w, &b);
        let (got, _) = lstm_forward(&xs, &p, &DropoutConfig::eval(), &mut rng).unwrap();
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn dense_matches_scalar_recomputation() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..50 {
        let h: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
        let vals: Vec<f64> = (0..7).map(|_| rng.random_range(-2.0..2.0)).collect();
        let mut z = vals[6];
        for i in 0..6 {
            z += vals[i] * h[i];
        }
        let want = 1.0 / (1.0 + (-z).exp());
        let got = dense_sigmoid(&h, &DenseParams::from_values(vals).unwrap()).unwrap();
        assert!((got - want).abs() < 1e-14);
    }
}

fn loss_of(xs: &[Vec<f64>], lstm: &LstmParams, dense: &DenseParams, y: f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (p, _) = head_forward(xs, lstm, dense, &DropoutConfig::eval(), &mut rng).unwrap();
    bce_loss(p, y).unwrap()
}

fn rel_close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-4 * a.abs().max(b.abs()).max(1e-3)
}

#[test]
fn head_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let step = 1e-5;
    for (d, h, t) in [(1, 4, 3), (3, 2, 5)] {
        for y in [0.0, 1.0] {
            let lstm = random_lstm(d, h, &mut rng);
            let dense = DenseParams::from_values((0..=h).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
            let xs = random_seq(d, t, &mut rng);
            let (p, cache) = head_forward(&xs, &lstm, &dense, &DropoutConfig::eval(), &mut rng).unwrap();
            let g = head_backward(&cache, &lstm, &dense, bce_grad(p, y).unwrap()).unwrap();

            for i in 0..lstm.len() {
                let mut plus = lstm.clone();
                plus.values_mut()[i] += step;
                let mut minus = lstm.clone();
                minus.values_mut()[i] -= step;
                let fd = (loss_of(&xs, &plus, &dense, y) - loss_of(&xs, &minus, &dense, y)) / (2.0 * step);
                assert!(rel_close(g.lstm[i], fd), "lstm[{i}]: {} vs {fd}", g.lstm[i]);
            }
            for i in 0..=h {
                let mut v = dense.values().to_vec();
                v[i] += step;
                let plus = DenseParams::from_values(v.clone()).unwrap();
                v[i] -= 2.0 * step;
                let minus = DenseParams::from_values(v).unwrap();
                let fd = (loss_of(&xs, &lstm, &plus, y) - loss_of(&xs, &lstm, &minus, y)) / (2.0 * step);
                assert!(rel_close(g.dense[i], fd), "dense[{i}]");
            }
            for s in 0..t {
                for k in 0..d {
                    let mut xp = xs.clone();
                    xp[s][k] += step;
                    let mut xm = xs.clone();
                    xm[s][k] -= step;
                    let fd = (loss_of(&xp, &lstm, &dense, y) - loss_of(&xm, &lstm, &dense, y)) / (2.0 * step);
                    assert!(rel_close(g.features[s][k], fd), "x[{s}][{k}]");
                }
            }
        }
    }
}

#[test]
fn zero_upstream_gives_zero_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let lstm = random_lstm(1, 4, &mut rng);
    let dense = DenseParams::glorot(4, &mut rng);
    let xs = random_seq(1, 3, &mut rng);
    let (_, cache) = head_forward(&xs, &lstm, &dense, &DropoutConfig::eval(), &mut rng).unwrap();
    let g = head_backward(&cache, &lstm, &dense, 0.0).unwrap();
    assert!(g.lstm.iter().chain(&g.dense).chain(g.features.iter().flatten()).all(|&x| x == 0.0));
}

#[test]
fn dropped_units_pass_no_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let lstm = random_lstm(1, 16, &mut rng);
    let xs = random_seq(1, 4, &mut rng);
    let train = DropoutConfig::new(0.5, Mode::Train).unwrap();
    let (h, cache) = lstm_forward(&xs, &lstm, &train, &mut rng).unwrap();
    let mask = cache.mask().unwrap().to_vec();
    assert!(mask.contains(&0.0) && mask.contains(&2.0));
    for (u, &m) in mask.iter().enumerate() {
        if m == 0.0 {
            assert_eq!(h[u], 0.0);
            // Only this unit's upstream is non-zero; it is dropped, so nothing flows.
            let mut d_out = vec![0.0; 16];
            d_out[u] = 1.0;
            let (g, dx) = lstm_backward(&cache, &lstm, &d_out).unwrap();
            assert!(g.iter().all(|&x| x == 0.0));
            assert!(dx.iter().flatten().all(|&x| x == 0.0));
        }
    }
}

#[test]
fn inverted_dropout_preserves_the_mean() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let lstm = random_lstm(1, 8, &mut rng);
    let xs = random_seq(1, 3, &mut rng);
    let (eval, _) = lstm_forward(&xs, &lstm, &DropoutConfig::eval(), &mut rng).unwrap();
    let train = DropoutConfig::new(0.5, Mode::Train).unwrap();
    let n = 10_000;
    let mut mean = [0.0; 8];
    for _ in 0..n {
        let (h, _) = lstm_forward(&xs, &lstm, &train, &mut rng).unwrap();
        for (m, x) in mean.iter_mut().zip(&h) {
            *m += x / n as f64;
        }
    }
    let total_eval: f64 = eval.iter().map(|x| x.abs()).sum();
    let total_diff: f64 = mean.iter().zip(&eval).map(|(a, b)| (a - b).abs()).sum();
    assert!(total_diff < 0.02 * total_eval, "{total_diff} vs {total_eval}");
}

#[test]
fn bce_is_lowest_on_the_label_side() {
    for y in [0.0, 1.0] {
        let mid = bce_loss(0.5, y).unwrap();
        for k in 1..10 {
            let p = if y == 1.0 { 0.5 + k as f64 * 0.05 } else { 0.5 - k as f64 * 0.05 };
            assert!(bce_loss(p, y).unwrap() < mid);
        }
    }
}
