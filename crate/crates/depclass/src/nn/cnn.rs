//! 1-D convolutional text classifier: embedding (learned or fixed), parallel
//! convolutions over token positions, global max pooling, dropout, and a
//! softmax output head.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{
    dense_backward, dense_forward, dlogits, dropout_mask, init_uniform, softmax, xent,
    Optimizer, OptimizerKind, TrainingHistory,
};

/// One training/inference input: token ids for a learned embedding, or
/// precomputed embedding rows for a fixed table.
#[derive(Debug, Clone)]
pub enum CnnSample {
    Ids(Vec<usize>),
    Rows(Vec<Vec<f64>>),
}

#[derive(Debug, Clone)]
pub struct TextCnn {
    pub embed_dim: usize,
    pub widths: Vec<usize>,
    pub filters: usize,
    pub n_classes: usize,
    pub dropout: f64,
    pub vocab_size: usize,
    /// `vocab_size x embed_dim` row-major when the embedding is learned.
    pub embedding: Option<Vec<f64>>,
    /// Per width: `filters x (width * embed_dim)` row-major.
    pub conv_w: Vec<Vec<f64>>,
    pub conv_b: Vec<Vec<f64>>,
    pub dense_w: Vec<f64>,
    pub dense_b: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct CnnGrads {
    pub embedding: Option<Vec<f64>>,
    pub conv_w: Vec<Vec<f64>>,
    pub conv_b: Vec<Vec<f64>>,
    pub dense_w: Vec<f64>,
    pub dense_b: Vec<f64>,
}

struct ForwardCache {
    rows: Vec<Vec<f64>>,
    /// Per width, per filter: (argmax position, pre-relu value there).
    pool: Vec<Vec<(usize, f64)>>,
    hidden_dropped: Vec<f64>,
    probs: Vec<f64>,
}

impl TextCnn {
    pub fn new(
        vocab_size: Option<usize>,
        embed_dim: usize,
        widths: Vec<usize>,
        filters: usize,
        n_classes: usize,
        dropout: f64,
        seed: u64,
    ) -> TextCnn {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let embedding = vocab_size.map(|v| init_uniform(&mut rng, v * embed_dim, 0.1));
        let conv_w = widths
            .iter()
            .map(|&w| {
                let fan_in = (w * embed_dim) as f64;
                init_uniform(&mut rng, filters * w * embed_dim, (1.0 / fan_in).sqrt())
            })
            .collect();
        let conv_b = widths.iter().map(|_| vec![0.0; filters]).collect();
        let hidden = widths.len() * filters;
        let dense_w = init_uniform(&mut rng, n_classes * hidden, (1.0 / hidden as f64).sqrt());
        let dense_b = vec![0.0; n_classes];
        TextCnn {
            embed_dim,
            widths,
            filters,
            n_classes,
            dropout,
            vocab_size: vocab_size.unwrap_or(0),
            embedding,
            conv_w,
            conv_b,
            dense_w,
            dense_b,
        }
    }

    pub fn zero_grads(&self) -> CnnGrads {
        CnnGrads {
            embedding: self.embedding.as_ref().map(|e| vec![0.0; e.len()]),
            conv_w: self.conv_w.iter().map(|w| vec![0.0; w.len()]).collect(),
            conv_b: self.conv_b.iter().map(|b| vec![0.0; b.len()]).collect(),
            dense_w: vec![0.0; self.dense_w.len()],
            dense_b: vec![0.0; self.dense_b.len()],
        }
    }

    fn rows_for(&self, sample: &CnnSample) -> Vec<Vec<f64>> {
        let max_width = self.widths.iter().copied().max().unwrap_or(1);
        let mut rows: Vec<Vec<f64>> = match sample {
            CnnSample::Ids(ids) => {
                let e = self.embedding.as_ref().expect("learned embedding required for id input");
                ids.iter()
                    .map(|&id| e[id * self.embed_dim..(id + 1) * self.embed_dim].to_vec())
                    .collect()
            }
            CnnSample::Rows(rows) => rows.clone(),
        };
        while rows.len() < max_width {
            rows.push(vec![0.0; self.embed_dim]);
        }
        rows
    }

    fn forward(&self, sample: &CnnSample, drop_mask: Option<&[f64]>) -> ForwardCache {
        let rows = self.rows_for(sample);
        let len = rows.len();
        let d = self.embed_dim;
        let mut hidden = Vec::with_capacity(self.widths.len() * self.filters);
        let mut pool = Vec::with_capacity(self.widths.len());
        for (wi, &w) in self.widths.iter().enumerate() {
            let positions = len - w + 1;
            let mut best = vec![(0usize, f64::NEG_INFINITY); self.filters];
            for p in 0..positions {
                for f in 0..self.filters {
                    let weights = &self.conv_w[wi][f * w * d..(f + 1) * w * d];
                    let mut z = self.conv_b[wi][f];
                    for k in 0..w {
                        let row = &rows[p + k];
                        let wrow = &weights[k * d..(k + 1) * d];
                        for j in 0..d {
                            z += wrow[j] * row[j];
                        }
                    }
                    if z > best[f].1 {
                        best[f] = (p, z);
                    }
                }
            }
            for &(_, z) in &best {
                hidden.push(z.max(0.0));
            }
            pool.push(best);
        }
        let hidden_dropped: Vec<f64> = match drop_mask {
            Some(mask) => hidden.iter().zip(mask).map(|(h, m)| h * m).collect(),
            None => hidden,
        };
        let logits = dense_forward(&self.dense_w, &self.dense_b, &hidden_dropped);
        ForwardCache {
            rows,
            pool,
            hidden_dropped,
            probs: softmax(&logits),
        }
    }

    /// Inference probabilities (dropout off).
    pub fn predict_probs(&self, sample: &CnnSample) -> Vec<f64> {
        self.forward(sample, None).probs
    }

    /// Mean cross-entropy over a batch, dropout off.
    pub fn loss_batch(&self, batch: &[(CnnSample, usize)]) -> f64 {
        batch
            .iter()
            .map(|(s, y)| xent(&self.forward(s, None).probs, *y))
            .sum::<f64>()
            / batch.len() as f64
    }

    /// Backward pass for one sample; accumulates `scale`-weighted gradients.
    /// Returns (loss, correct).
    fn backward_sample(
        &self,
        sample: &CnnSample,
        label: usize,
        drop_mask: Option<&[f64]>,
        scale: f64,
        grads: &mut CnnGrads,
    ) -> (f64, bool) {
        let cache = self.forward(sample, drop_mask);
        let loss = xent(&cache.probs, label);
        let argmax = argmax(&cache.probs);
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
        let d = self.embed_dim;
        let mut drows = vec![vec![0.0; d]; cache.rows.len()];
        for (wi, &w) in self.widths.iter().enumerate() {
            for f in 0..self.filters {
                let (p, z) = cache.pool[wi][f];
                let dh = dhidden[wi * self.filters + f];
                if z <= 0.0 || dh == 0.0 {
                    continue;
                }
                grads.conv_b[wi][f] += dh;
                let weights = &self.conv_w[wi][f * w * d..(f + 1) * w * d];
                let gweights = &mut grads.conv_w[wi][f * w * d..(f + 1) * w * d];
                for k in 0..w {
                    let row = &cache.rows[p + k];
                    let drow = &mut drows[p + k];
                    for j in 0..d {
                        gweights[k * d + j] += dh * row[j];
                        drow[j] += dh * weights[k * d + j];
                    }
                }
            }
        }
        if let (Some(gemb), CnnSample::Ids(ids)) = (grads.embedding.as_mut(), sample) {
            for (i, &id) in ids.iter().enumerate() {
                for j in 0..d {
                    gemb[id * d + j] += drows[i][j];
                }
            }
        }
        (loss, argmax == label)
    }

    /// Full-batch mean gradients with dropout off (used by gradient checks).
    pub fn grad_batch(&self, batch: &[(CnnSample, usize)]) -> CnnGrads {
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
        for w in &self.conv_w {
            out.extend_from_slice(w);
        }
        for b in &self.conv_b {
            out.extend_from_slice(b);
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
        for w in &mut self.conv_w {
            take(w);
        }
        for b in &mut self.conv_b {
            take(b);
        }
        take(&mut self.dense_w);
        take(&mut self.dense_b);
        assert_eq!(at, flat.len());
    }

    pub fn flat_grads(grads: &CnnGrads) -> Vec<f64> {
        let mut out = Vec::new();
        if let Some(e) = &grads.embedding {
            out.extend_from_slice(e);
        }
        for w in &grads.conv_w {
            out.extend_from_slice(w);
        }
        for b in &grads.conv_b {
            out.extend_from_slice(b);
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
        shapes.extend(self.conv_w.iter().map(Vec::len));
        shapes.extend(self.conv_b.iter().map(Vec::len));
        shapes.push(self.dense_w.len());
        shapes.push(self.dense_b.len());
        let mut opt = Optimizer::new(optimizer, lr, &shapes);

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut history = TrainingHistory::default();
        let hidden = self.widths.len() * self.filters;
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
                        Some(dropout_mask(&mut rng, hidden, self.dropout))
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

    fn apply_step(&mut self, opt: &mut Optimizer, grads: &CnnGrads) {
        let mut params: Vec<&mut Vec<f64>> = Vec::new();
        let mut gvec: Vec<Vec<f64>> = Vec::new();
        if let Some(e) = &mut self.embedding {
            params.push(e);
            gvec.push(grads.embedding.clone().unwrap());
        }
        for (w, g) in self.conv_w.iter_mut().zip(&grads.conv_w) {
            params.push(w);
            gvec.push(g.clone());
        }
        for (b, g) in self.conv_b.iter_mut().zip(&grads.conv_b) {
            params.push(b);
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

pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}
