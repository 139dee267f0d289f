//! Small feed-forward/recurrent building blocks used by the CNN and LSTM
//! classifiers: seeded initialization, softmax cross-entropy, dropout, and
//! the Adam/Adamax optimizers. Everything is `f64` and single-threaded so
//! training is bit-reproducible per seed.

pub mod cnn;
pub mod lstm;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Adam,
    Adamax,
}

/// Adam / Adamax over a flat list of parameter tensors.
pub struct Optimizer {
    kind: OptimizerKind,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64, shapes: &[usize]) -> Optimizer {
        Optimizer {
            kind,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn step(&mut self, params: &mut [&mut Vec<f64>], grads: &[Vec<f64>]) {
        self.t += 1;
        let bias1 = 1.0 - self.beta1.powi(self.t as i32);
        let bias2 = 1.0 - self.beta2.powi(self.t as i32);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            for i in 0..p.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                match self.kind {
                    OptimizerKind::Adam => {
                        v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                        let mhat = m[i] / bias1;
                        let vhat = v[i] / bias2;
                        p[i] -= self.lr * mhat / (vhat.sqrt() + self.eps);
                    }
                    OptimizerKind::Adamax => {
                        v[i] = (self.beta2 * v[i]).max(g[i].abs());
                        p[i] -= self.lr / bias1 * m[i] / (v[i] + self.eps);
                    }
                }
            }
        }
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Cross-entropy of the true label under softmax probabilities.
pub fn xent(probs: &[f64], label: usize) -> f64 {
    -(probs[label].max(1e-12)).ln()
}

/// Gradient of mean cross-entropy w.r.t. logits for one sample.
pub fn dlogits(probs: &[f64], label: usize) -> Vec<f64> {
    let mut d = probs.to_vec();
    d[label] -= 1.0;
    d
}

pub fn init_uniform(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-scale..scale)).collect()
}

/// Inverted dropout mask: entries are 0 or 1/(1-p).
pub fn dropout_mask(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Vec<f64> {
    if p <= 0.0 {
        return vec![1.0; n];
    }
    (0..n)
        .map(|_| if rng.gen::<f64>() < p { 0.0 } else { 1.0 / (1.0 - p) })
        .collect()
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// One dense layer `logits = W h + b` with `W` stored row-major (C x H).
pub fn dense_forward(w: &[f64], b: &[f64], h: &[f64]) -> Vec<f64> {
    let classes = b.len();
    let hidden = h.len();
    let mut out = b.to_vec();
    for (c, o) in out.iter_mut().enumerate() {
        let row = &w[c * hidden..(c + 1) * hidden];
        *o += row.iter().zip(h).map(|(wi, hi)| wi * hi).sum::<f64>();
    }
    debug_assert_eq!(out.len(), classes);
    out
}

/// Backward through the dense layer; returns dh and accumulates dw/db.
pub fn dense_backward(
    w: &[f64],
    h: &[f64],
    dout: &[f64],
    dw: &mut [f64],
    db: &mut [f64],
) -> Vec<f64> {
    let hidden = h.len();
    let mut dh = vec![0.0; hidden];
    for (c, &d) in dout.iter().enumerate() {
        db[c] += d;
        let row = &w[c * hidden..(c + 1) * hidden];
        let drow = &mut dw[c * hidden..(c + 1) * hidden];
        for i in 0..hidden {
            drow[i] += d * h[i];
            dh[i] += d * row[i];
        }
    }
    dh
}

/// Per-epoch training curves.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingHistory {
    pub train_loss: Vec<f64>,
    pub train_accuracy: Vec<f64>,
    pub val_loss: Vec<f64>,
    pub val_accuracy: Vec<f64>,
}

impl TrainingHistory {
    pub fn epochs(&self) -> usize {
        self.train_loss.len()
    }

    pub fn is_finite(&self) -> bool {
        self.train_loss
            .iter()
            .chain(&self.train_accuracy)
            .chain(&self.val_loss)
            .chain(&self.val_accuracy)
            .all(|v| v.is_finite())
    }
}

/// Compare an analytic gradient against central finite differences.
/// Returns the worst relative error, where the error for one coordinate is
/// `|a - f| / max(1, |a|, |f|)`.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &f)| (a - f).abs() / 1f64.max(a.abs()).max(f.abs()))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn softmax_sums_to_one() {
        let p = softmax(&[1.0, 2.0, 3.0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p[2] > p[1] && p[1] > p[0]);
    }

    #[test]
    fn dropout_mask_scales() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mask = dropout_mask(&mut rng, 1000, 0.5);
        for &m in &mask {
            assert!(m == 0.0 || (m - 2.0).abs() < 1e-12);
        }
        let kept = mask.iter().filter(|&&m| m > 0.0).count();
        assert!(kept > 350 && kept < 650);
    }

    #[test]
    fn dense_backward_matches_fd() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (classes, hidden) = (3, 4);
        let w = init_uniform(&mut rng, classes * hidden, 0.5);
        let b = init_uniform(&mut rng, classes, 0.5);
        let h = init_uniform(&mut rng, hidden, 1.0);
        let label = 1;
        let loss = |w: &[f64], b: &[f64]| xent(&softmax(&dense_forward(w, b, &h)), label);

        let probs = softmax(&dense_forward(&w, &b, &h));
        let dout = dlogits(&probs, label);
        let mut dw = vec![0.0; w.len()];
        let mut db = vec![0.0; b.len()];
        dense_backward(&w, &h, &dout, &mut dw, &mut db);

        let step = 1e-5;
        for i in 0..w.len() {
            let mut wp = w.clone();
            wp[i] += step;
            let mut wm = w.clone();
            wm[i] -= step;
            let fd = (loss(&wp, &b) - loss(&wm, &b)) / (2.0 * step);
            assert!((fd - dw[i]).abs() < 1e-6, "w[{i}]: fd={fd} an={}", dw[i]);
        }
    }

    #[test]
    fn adam_reduces_quadratic() {
        // minimize (x-3)^2
        let mut x = vec![0.0f64];
        let mut opt = Optimizer::new(OptimizerKind::Adam, 0.1, &[1]);
        for _ in 0..500 {
            let g = vec![2.0 * (x[0] - 3.0)];
            opt.step(&mut [&mut x], &[g]);
        }
        assert!((x[0] - 3.0).abs() < 1e-2);
    }

    #[test]
    fn adamax_reduces_quadratic() {
        let mut x = vec![10.0f64];
        let mut opt = Optimizer::new(OptimizerKind::Adamax, 0.2, &[1]);
        for _ in 0..500 {
            let g = vec![2.0 * (x[0] - 3.0)];
            opt.step(&mut [&mut x], &[g]);
        }
        assert!((x[0] - 3.0).abs() < 1e-2);
    }
}
