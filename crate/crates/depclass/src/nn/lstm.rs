//! Stacked LSTM text classifier: embedding (learned or fixed), one or more
//! recurrent layers, dropout on the final hidden state, and a softmax output
//! head. Gates are ordered input, forget, cell, output; gradients come from
//! full backpropagation through time.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::cnn::{argmax, CnnSample};
use super::{
    dense_backward, dense_forward, dlogits, dropout_mask, init_uniform, sigmoid, softmax, xent,
    Optimizer, OptimizerKind, TrainingHistory,
};

#[derive(Debug, Clone)]
pub struct LstmNet {
    pub embed_dim: usize,
    pub layers: usize,
    pub units: usize,
    pub n_classes: usize,
    pub dropout: f64,
    pub vocab_size: usize,
    /// `vocab_size x embed_dim` row-major when the embedding is learned.
    pub embedding: Option<Vec<f64>>,
    /// Per layer: `4*units x input_dim` row-major (gate order i, f, g, o).
    pub w_in: Vec<Vec<f64>>,
    /// Per layer: `4*units x units` row-major.
    pub w_rec: Vec<Vec<f64>>,
    /// Per layer: `4*units`; forget-gate slice starts at 1.0.
    pub bias: Vec<Vec<f64>>,
    pub dense_w: Vec<f64>,
    pub dense_b: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LstmGrads {
    pub embedding: Option<Vec<f64>>,
    pub w_in: Vec<Vec<f64>>,
    pub w_rec: Vec<Vec<f64>>,
    pub bias: Vec<Vec<f64>>,
    pub dense_w: Vec<f64>,
    pub dense_b: Vec<f64>,
}

/// Per-layer activations kept for backpropagation through time.
struct LayerTrace {
    xs: Vec<Vec<f64>>,
    gates: Vec<Vec<f64>>, // 4*units per step, post-nonlinearity
    cells: Vec<Vec<f64>>,
    tanh_c: Vec<Vec<f64>>,
    hs: Vec<Vec<f64>>,
}

struct ForwardCache {
    traces: Vec<LayerTrace>,
    hidden_dropped: Vec<f64>,
    probs: Vec<f64>,
}

impl LstmNet {
    pub fn new(
        vocab_size: Option<usize>,
        embed_dim: usize,
        layers: usize,
        units: usize,
        n_classes: usize,
        dropout: f64,
        seed: u64,
    ) -> LstmNet {
        assert!(layers >= 1, "at least one recurrent layer");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let embedding = vocab_size.map(|v| init_uniform(&mut rng, v * embed_dim, 0.1));
        let mut w_in = Vec::with_capacity(layers);
        let mut w_rec = Vec::with_capacity(layers);
        let mut bias = Vec::with_capacity(layers);
        for l in 0..layers {
            let input = if l == 0 { embed_dim } else { units };
            w_in.push(init_uniform(&mut rng, 4 * units * input, (1.0 / input as f64).sqrt()));
            w_rec.push(init_uniform(&mut rng, 4 * units * units, (1.0 / units as f64).sqrt()));
            let mut b = vec![0.0; 4 * units];
            b[units..2 * units].fill(1.0);
            bias.push(b);
        }
        let dense_w = init_uniform(&mut rng, n_classes * units, (1.0 / units as f64).sqrt());
        LstmNet {
            embed_dim,
            layers,
            units,
            n_classes,
            dropout,
            vocab_size: vocab_size.unwrap_or(0),
            embedding,
            w_in,
            w_rec,
            bias,
            dense_w,
            dense_b: vec![0.0; n_classes],
        }
    }

    pub fn zero_grads(&self) -> LstmGrads {
        LstmGrads {
            embedding: self.embedding.as_ref().map(|e| vec![0.0; e.len()]),
            w_in: self.w_in.iter().map(|w| vec![0.0; w.len()]).collect(),
            w_rec: self.w_rec.iter().map(|w| vec![0.0; w.len()]).collect(),
            bias: self.bias.iter().map(|b| vec![0.0; b.len()]).collect(),
            dense_w: vec![0.0; self.dense_w.len()],
            dense_b: vec![0.0; self.dense_b.len()],
        }
    }

    fn input_rows(&self, sample: &CnnSample) -> Vec<Vec<f64>> {
        match sample {
            CnnSample::Ids(ids) => {
                let e = self.embedding.as_ref().expect("learned embedding required for id input");
                ids.iter()
                    .map(|&id| e[id * self.embed_dim..(id + 1) * self.embed_dim].to_vec())
                    .collect()
            }
            CnnSample::Rows(rows) => rows.clone(),
        }
    }

    fn run_layer(&self, layer: usize, xs: Vec<Vec<f64>>) -> LayerTrace {
        let u = self.units;
        let steps = xs.len();
        let mut trace = LayerTrace {
            xs,
            gates: Vec::with_capacity(steps),
            cells: Vec::with_capacity(steps),
            tanh_c: Vec::with_capacity(steps),
            hs: Vec::with_capacity(steps),
        };
        let mut h = vec![0.0; u];
        let mut c = vec![0.0; u];
        for t in 0..steps {
            let x = &trace.xs[t];
            let input = x.len();
            let mut z = self.bias[layer].clone();
            for (r, zr) in z.iter_mut().enumerate() {
                let wrow = &self.w_in[layer][r * input..(r + 1) * input];
                for j in 0..input {
                    *zr += wrow[j] * x[j];
                }
                let urow = &self.w_rec[layer][r * u..(r + 1) * u];
                for j in 0..u {
                    *zr += urow[j] * h[j];
                }
            }
            let mut gates = vec![0.0; 4 * u];
            for j in 0..u {
                gates[j] = sigmoid(z[j]); // input
                gates[u + j] = sigmoid(z[u + j]); // forget
                gates[2 * u + j] = z[2 * u + j].tanh(); // cell candidate
                gates[3 * u + j] = sigmoid(z[3 * u + j]); // output
            }
            let mut tanh_c = vec![0.0; u];
            let mut new_c = vec![0.0; u];
            let mut new_h = vec![0.0; u];
            for j in 0..u {
                new_c[j] = gates[u + j] * c[j] + gates[j] * gates[2 * u + j];
                tanh_c[j] = new_c[j].tanh();
                new_h[j] = gates[3 * u + j] * tanh_c[j];
            }
            c = new_c.clone();
            h = new_h.clone();
            trace.gates.push(gates);
            trace.cells.push(new_c);
            trace.tanh_c.push(tanh_c);
            trace.hs.push(new_h);
        }
        trace
    }

    fn forward(&self, sample: &CnnSample, drop_mask: Option<&[f64]>) -> ForwardCache {
        let mut xs = self.input_rows(sample);
        let mut traces = Vec::with_capacity(self.layers);
        for l in 0..self.layers {
            let trace = self.run_layer(l, xs);
            xs = trace.hs.clone();
            traces.push(trace);
        }
        let hidden = traces
            .last()
            .and_then(|t| t.hs.last().cloned())
            .unwrap_or_else(|| vec![0.0; self.units]);
        let hidden_dropped: Vec<f64> = match drop_mask {
            Some(mask) => hidden.iter().zip(mask).map(|(h, m)| h * m).collect(),
            None => hidden,
        };
        let logits = dense_forward(&self.dense_w, &self.dense_b, &hidden_dropped);
        ForwardCache {
            traces,
            hidden_dropped,
            probs: softmax(&logits),
        }
    }

    pub fn predict_probs(&self, sample: &CnnSample) -> Vec<f64> {
        self.forward(sample, None).probs
    }

    pub fn loss_batch(&self, batch: &[(CnnSample, usize)]) -> f64 {
        batch
            .iter()
            .map(|(s, y)| xent(&self.forward(s, None).probs, *y))
            .sum::<f64>()
            / batch.len() as f64
    }

    /// Backpropagation through time for one layer. `dh_out[t]` is the external
    /// gradient on the hidden state at step `t`; returns gradients on the
    /// layer inputs.
    fn backward_layer(
        &self,
        layer: usize,
        trace: &LayerTrace,
        dh_out: &[Vec<f64>],
        grads: &mut LstmGrads,
    ) -> Vec<Vec<f64>> {
        let u = self.units;
        let steps = trace.xs.len();
        let mut dxs = vec![Vec::new(); steps];
        let mut dh_rec = vec![0.0; u];
        let mut dc_carry = vec![0.0; u];
        for t in (0..steps).rev() {
            let gates = &trace.gates[t];
            let tanh_c = &trace.tanh_c[t];
            let c_prev: &[f64] = if t == 0 { &[] } else { &trace.cells[t - 1] };
            let h_prev: &[f64] = if t == 0 { &[] } else { &trace.hs[t - 1] };
            let x = &trace.xs[t];
            let input = x.len();
            let mut dz = vec![0.0; 4 * u];
            for j in 0..u {
                let dh = dh_out[t][j] + dh_rec[j];
                let o = gates[3 * u + j];
                let dc = dc_carry[j] + dh * o * (1.0 - tanh_c[j] * tanh_c[j]);
                let i = gates[j];
                let f = gates[u + j];
                let g = gates[2 * u + j];
                let cp = if t == 0 { 0.0 } else { c_prev[j] };
                dz[j] = dc * g * i * (1.0 - i);
                dz[u + j] = dc * cp * f * (1.0 - f);
                dz[2 * u + j] = dc * i * (1.0 - g * g);
                dz[3 * u + j] = dh * tanh_c[j] * o * (1.0 - o);
                dc_carry[j] = dc * f;
            }
            let mut dx = vec![0.0; input];
            dh_rec = vec![0.0; u];
            for (r, &d) in dz.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                grads.bias[layer][r] += d;
                let wrow = &self.w_in[layer][r * input..(r + 1) * input];
                let gwrow = &mut grads.w_in[layer][r * input..(r + 1) * input];
                for j in 0..input {
                    gwrow[j] += d * x[j];
                    dx[j] += d * wrow[j];
                }
                if t > 0 {
                    let urow = &self.w_rec[layer][r * u..(r + 1) * u];
                    let gurow = &mut grads.w_rec[layer][r * u..(r + 1) * u];
                    for j in 0..u {
                        gurow[j] += d * h_prev[j];
                        dh_rec[j] += d * urow[j];
                    }
                }
            }
            dxs[t] = dx;
        }
        dxs
    }

    fn backward_sample(
        &self,
        sample: &CnnSample,
        label: usize,
        drop_mask: Option<&[f64]>,
        scale: f64,
        grads: &mut LstmGrads,
    ) -> (f64, bool) {
        let cache = self.forward(sample, drop_mask);
        let loss = xent(&cache.probs, label);
        let correct = argmax(&cache.probs) == label;
        let mut dout = dlogits(&cache.probs, label);
        for v in &mut dout {
            *v *= scale;
        }
        let mut dhidden = dense_backward(
            &self.dense_w,
            &cache.hidden_dropped,
            &dout,
            &mut grads.dense_w,
            &mut grads.dense_b,
        );
        if let Some(mask) = drop_mask {
            for (dh, m) in dhidden.iter_mut().zip(mask) {
                *dh *= m;
            }
        }
        let steps = cache.traces[0].xs.len();
        if steps == 0 {
            return (loss, correct);
        }
        // Only the final step of the top layer feeds the output head.
        let mut dh_out = vec![vec![0.0; self.units]; steps];
        dh_out[steps - 1] = dhidden;
        let mut dxs = Vec::new();
        for l in (0..self.layers).rev() {
            dxs = self.backward_layer(l, &cache.traces[l], &dh_out, grads);
            dh_out = dxs.clone();
        }
        if let (Some(gemb), CnnSample::Ids(ids)) = (grads.embedding.as_mut(), sample) {
            for (t, &id) in ids.iter().enumerate() {
                for j in 0..self.embed_dim {
                    gemb[id * self.embed_dim + j] += dxs[t][j];
                }
            }
        }
        (loss, correct)
    }

    /// Full-batch mean gradients with dropout off (used by gradient checks).
    pub fn grad_batch(&self, batch: &[(CnnSample, usize)]) -> LstmGrads {
        let mut grads = self.zero_grads();
        let scale = 1.0 / batch.len() as f64;
        for (s, y) in batch {
            self.backward_sample(s, *y, None, scale, &mut grads);
        }
        grads
    }

    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::new();
        if let Some(e) = &self.embedding {
            out.extend_from_slice(e);
        }
        for t in self.w_in.iter().chain(&self.w_rec).chain(&self.bias) {
            out.extend_from_slice(t);
        }
        out.extend_from_slice(&self.dense_w);
        out.extend_from_slice(&self.dense_b);
        out
    }

    pub fn assign_flat(&mut self, flat: &[f64]) {
        let mut at = 0;
        let mut take = |dst: &mut Vec<f64>| {
            let n = dst.len();
            dst.copy_from_slice(&flat[at..at + n]);
            at += n;
        };
        if let Some(e) = &mut self.embedding {
            take(e);
        }
        for t in self
            .w_in
            .iter_mut()
            .chain(self.w_rec.iter_mut())
            .chain(self.bias.iter_mut())
        {
            take(t);
        }
        take(&mut self.dense_w);
        take(&mut self.dense_b);
        assert_eq!(at, flat.len());
    }

    pub fn flat_grads(grads: &LstmGrads) -> Vec<f64> {
        let mut out = Vec::new();
        if let Some(e) = &grads.embedding {
            out.extend_from_slice(e);
        }
        for t in grads.w_in.iter().chain(&grads.w_rec).chain(&grads.bias) {
            out.extend_from_slice(t);
        }
        out.extend_from_slice(&grads.dense_w);
        out.extend_from_slice(&grads.dense_b);
        out
    }

    /// Seeded minibatch training. Records one history entry per epoch.
    pub fn train(
        &mut self,
        train: &[(CnnSample, usize)],
        validation: &[(CnnSample, usize)],
        epochs: usize,
        batch_size: usize,
        optimizer: OptimizerKind,
        lr: f64,
        seed: u64,
    ) -> TrainingHistory {
        let mut shapes = Vec::new();
        if let Some(e) = &self.embedding {
            shapes.push(e.len());
        }
        shapes.extend(self.w_in.iter().map(Vec::len));
        shapes.extend(self.w_rec.iter().map(Vec::len));
        shapes.extend(self.bias.iter().map(Vec::len));
        shapes.push(self.dense_w.len());
        shapes.push(self.dense_b.len());
        let mut opt = Optimizer::new(optimizer, lr, &shapes);

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut history = TrainingHistory::default();
        for _epoch in 0..epochs {
            let mut order: Vec<usize> = (0..train.len()).collect();
            order.shuffle(&mut rng);
            let mut epoch_loss = 0.0;
            let mut correct = 0usize;
            for chunk in order.chunks(batch_size.max(1)) {
                let mut grads = self.zero_grads();
                let scale = 1.0 / chunk.len() as f64;
                for &i in chunk {
                    let (sample, label) = &train[i];
                    let mask = if self.dropout > 0.0 {
                        Some(dropout_mask(&mut rng, self.units, self.dropout))
                    } else {
                        None
                    };
                    let (loss, ok) =
                        self.backward_sample(sample, *label, mask.as_deref(), scale, &mut grads);
                    epoch_loss += loss;
                    correct += ok as usize;
                }
                self.apply_step(&mut opt, &grads);
            }
            history.train_loss.push(epoch_loss / train.len() as f64);
            history
                .train_accuracy
                .push(correct as f64 / train.len() as f64);
            let (vl, va) = self.evaluate(validation);
            history.val_loss.push(vl);
            history.val_accuracy.push(va);
        }
        history
    }

    fn apply_step(&mut self, opt: &mut Optimizer, grads: &LstmGrads) {
        let mut params: Vec<&mut Vec<f64>> = Vec::new();
        let mut gvec: Vec<Vec<f64>> = Vec::new();
        if let Some(e) = &mut self.embedding {
            params.push(e);
            gvec.push(grads.embedding.clone().unwrap());
        }
        for (p, g) in self.w_in.iter_mut().zip(&grads.w_in) {
            params.push(p);
            gvec.push(g.clone());
        }
        for (p, g) in self.w_rec.iter_mut().zip(&grads.w_rec) {
            params.push(p);
            gvec.push(g.clone());
        }
        for (p, g) in self.bias.iter_mut().zip(&grads.bias) {
            params.push(p);
            gvec.push(g.clone());
        }
        params.push(&mut self.dense_w);
        gvec.push(grads.dense_w.clone());
        params.push(&mut self.dense_b);
        gvec.push(grads.dense_b.clone());
        opt.step(&mut params, &gvec);
    }

    /// (mean loss, accuracy) with dropout off.
    pub fn evaluate(&self, data: &[(CnnSample, usize)]) -> (f64, f64) {
        if data.is_empty() {
            return (0.0, 0.0);
        }
        let mut loss = 0.0;
        let mut correct = 0usize;
        for (s, y) in data {
            let probs = self.forward(s, None).probs;
            loss += xent(&probs, *y);
            correct += (argmax(&probs) == *y) as usize;
        }
        (loss / data.len() as f64, correct as f64 / data.len() as f64)
    }
}
