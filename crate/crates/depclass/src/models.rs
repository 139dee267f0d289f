//! The six classifier families behind one training/prediction contract:
//! multinomial Naive Bayes, linear SVM, random forest, CNN, LSTM, and a
//! fine-tuned contextual-encoder head. Every trainer is seeded and
//! bit-reproducible; artifacts record the full featurization pipeline so
//! `predict` can run it again from raw text.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::io::Read;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{DepressionClass, LabeledExample};
use crate::error::{Error, Result};
use crate::features::{
    count_transform, fit_vocabulary, hashed_embeddings, load_embeddings, save_embeddings,
    tfidf_transform, EmbeddingTable, EncoderAdapter, HashProjectionAdapter, SparseVector,
    Vocabulary,
};
use crate::nn::cnn::{argmax, CnnSample, TextCnn};
use crate::nn::lstm::LstmNet;
use crate::nn::{
    dense_backward, dense_forward, dlogits, dropout_mask, init_uniform, softmax, xent, Optimizer,
    OptimizerKind, TrainingHistory,
};
use crate::textprep::{
    self, encode, train_subword_vocab, NormalizationConfig, SubwordVocab,
};

/// Fixed convolution widths; the filter count is configurable via extras.
pub const CNN_WIDTHS: [usize; 3] = [3, 4, 5];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Nb,
    Svm,
    Rf,
    Cnn,
    CnnGlove,
    Lstm,
    LstmGlove,
    EncoderFt,
}

impl ModelKind {
    pub const ALL: [ModelKind; 8] = [
        ModelKind::Nb,
        ModelKind::Svm,
        ModelKind::Rf,
        ModelKind::Cnn,
        ModelKind::CnnGlove,
        ModelKind::Lstm,
        ModelKind::LstmGlove,
        ModelKind::EncoderFt,
    ];

    /// One representative per family; what `--model all` trains.
    pub const FAMILIES: [ModelKind; 6] = [
        ModelKind::Nb,
        ModelKind::Svm,
        ModelKind::Rf,
        ModelKind::Cnn,
        ModelKind::Lstm,
        ModelKind::EncoderFt,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Nb => "nb",
            ModelKind::Svm => "svm",
            ModelKind::Rf => "rf",
            ModelKind::Cnn => "cnn",
            ModelKind::CnnGlove => "cnn_glove",
            ModelKind::Lstm => "lstm",
            ModelKind::LstmGlove => "lstm_glove",
            ModelKind::EncoderFt => "encoder_ft",
        }
    }

    pub fn parse(name: &str) -> Result<ModelKind> {
        ModelKind::ALL
            .iter()
            .copied()
            .find(|k| k.as_str() == name)
            .ok_or_else(|| Error::Invalid(format!("unknown model kind '{name}'")))
    }

    pub fn is_neural(&self) -> bool {
        matches!(
            self,
            ModelKind::Cnn
                | ModelKind::CnnGlove
                | ModelKind::Lstm
                | ModelKind::LstmGlove
                | ModelKind::EncoderFt
        )
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Training hyperparameters. `extras` carries kind-specific knobs
/// (`nb_alpha`, `svm_c`, `rf_trees`, `cnn_filters`, `lstm_units`,
/// `lstm_layers`, `embed_dim`, `max_len`, ...).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub model_kind: ModelKind,
    pub epochs: usize,
    pub batch_size: usize,
    pub dropout: f64,
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub seed: u64,
    pub class_count: usize,
    pub extras: BTreeMap<String, f64>,
}

impl TrainConfig {
    /// Published defaults per kind: cnn trains ten epochs at batch 32 with
    /// adam; the pretrained-embedding cnn uses batch 64; lstm stacks two
    /// 64-unit layers with dropout 0.2; the pretrained-embedding lstm uses a
    /// single 300-unit layer, dropout 0.4, and adamax.
    pub fn defaults(kind: ModelKind) -> TrainConfig {
        let mut extras = BTreeMap::new();
        let mut set = |k: &str, v: f64| {
            extras.insert(k.to_string(), v);
        };
        set("embed_dim", 64.0);
        set("max_len", 64.0);
        set("min_df", 1.0);
        let (epochs, batch_size, dropout, optimizer, learning_rate) = match kind {
            ModelKind::Nb => {
                set("nb_alpha", 1.0);
                (1, 32, 0.0, OptimizerKind::Adam, 1e-3)
            }
            ModelKind::Svm => {
                set("svm_c", 1.0);
                (50, 32, 0.0, OptimizerKind::Adam, 1e-3)
            }
            ModelKind::Rf => {
                set("rf_trees", 100.0);
                set("rf_max_depth", 0.0);
                set("rf_feature_cap", 2000.0);
                (1, 32, 0.0, OptimizerKind::Adam, 1e-3)
            }
            ModelKind::Cnn => {
                set("cnn_filters", 64.0);
                (10, 32, 0.5, OptimizerKind::Adam, 1e-3)
            }
            ModelKind::CnnGlove => {
                set("cnn_filters", 64.0);
                (10, 64, 0.5, OptimizerKind::Adam, 1e-3)
            }
            ModelKind::Lstm => {
                set("lstm_layers", 2.0);
                set("lstm_units", 64.0);
                (10, 32, 0.2, OptimizerKind::Adam, 1e-3)
            }
            ModelKind::LstmGlove => {
                set("lstm_layers", 1.0);
                set("lstm_units", 300.0);
                (10, 32, 0.4, OptimizerKind::Adamax, 1e-3)
            }
            ModelKind::EncoderFt => {
                set("encoder_hidden", 64.0);
                set("subword_vocab", 200.0);
                (10, 32, 0.1, OptimizerKind::Adam, 2e-5)
            }
        };
        TrainConfig {
            model_kind: kind,
            epochs,
            batch_size,
            dropout,
            optimizer,
            learning_rate,
            seed: 0,
            class_count: 6,
            extras,
        }
    }

    pub fn extra(&self, key: &str, default: f64) -> f64 {
        self.extras.get(key).copied().unwrap_or(default)
    }

    pub fn extra_usize(&self, key: &str, default: usize) -> usize {
        self.extra(key, default as f64).round().max(0.0) as usize
    }
}

/// How raw tokens become model inputs; recorded at train time.
#[derive(Debug, Clone)]
pub enum FeatureSpec {
    /// Multinomial term counts over a fitted vocabulary.
    Counts { vocab: Vocabulary },
    /// L2-normalized TF-IDF over a fitted vocabulary.
    Tfidf { vocab: Vocabulary },
    /// Dense TF-IDF restricted to a document-frequency-capped feature list.
    TfidfDense { vocab: Vocabulary, feature_ids: Vec<usize> },
    /// Token ids into a learned embedding; unknown tokens map to the last id.
    WordIds { vocab: Vocabulary, max_len: usize },
    /// Rows from a fixed pretrained embedding table (zeros for unknowns).
    FixedEmbedding { table: EmbeddingTable, max_len: usize },
    /// Subword encoding fed to a contextual-encoder adapter.
    Encoder { subword: SubwordVocab, adapter: String, hidden_dim: usize },
}

/// Serializable descriptor for a [`FeatureSpec`]; the tables themselves live
/// in files next to `artifact.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum FeatureSpecMeta {
    Counts,
    Tfidf,
    TfidfDense { feature_ids: Vec<usize> },
    WordIds { max_len: usize },
    FixedEmbedding { max_len: usize, dim: usize },
    Encoder { adapter: String, hidden_dim: usize },
}

/// Text preprocessing recorded at train time and replayed on predict.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PreprocessSpec {
    pub normalization: NormalizationConfig,
    pub remove_stopwords: bool,
    /// Sorted stoplist applied when `remove_stopwords` is set.
    pub stoplist: Vec<String>,
}

impl PreprocessSpec {
    pub fn classical() -> PreprocessSpec {
        let mut stoplist: Vec<String> = textprep::default_stoplist().into_iter().collect();
        stoplist.sort();
        PreprocessSpec {
            normalization: NormalizationConfig::default(),
            remove_stopwords: true,
            stoplist,
        }
    }

    pub fn sequence() -> PreprocessSpec {
        PreprocessSpec {
            normalization: NormalizationConfig::default(),
            remove_stopwords: false,
            stoplist: Vec::new(),
        }
    }

    /// normalize -> tokenize -> optional stopword removal.
    pub fn tokens(&self, text: &str) -> Vec<String> {
        let clean = textprep::normalize(text, &self.normalization);
        let tokens = textprep::tokenize(&clean);
        if self.remove_stopwords {
            let set: HashSet<String> = self.stoplist.iter().cloned().collect();
            textprep::remove_stopwords(&tokens, &set)
        } else {
            tokens
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NaiveBayesParams {
    pub log_prior: Vec<f64>,
    /// `[class][term]` smoothed log-likelihoods.
    pub log_likelihood: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SvmParams {
    /// One weight vector per class (one-vs-rest).
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf { probs: Vec<f64> },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn leaf_probs<'a>(&'a self, x: &[f64]) -> &'a [f64] {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                TreeNode::Leaf { probs } => return probs,
                TreeNode::Split { feature, threshold, left, right } => {
                    at = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<Tree>,
    pub n_classes: usize,
}

#[derive(Debug, Clone)]
pub struct EncoderHead {
    pub dense_w: Vec<f64>,
    pub dense_b: Vec<f64>,
    pub hidden_dim: usize,
}

/// Trained parameters, by family.
#[derive(Debug, Clone)]
pub enum ModelParams {
    NaiveBayes(NaiveBayesParams),
    LinearSvm(SvmParams),
    Forest(Forest),
    Cnn(TextCnn),
    Lstm(LstmNet),
    EncoderHead(EncoderHead),
}

/// A trained model plus everything needed to run it on raw text.
pub struct ModelArtifact {
    pub kind: ModelKind,
    pub config: TrainConfig,
    pub label_order: Vec<DepressionClass>,
    pub feature_spec: FeatureSpec,
    pub preprocess: PreprocessSpec,
    pub params: ModelParams,
    pub history: Option<TrainingHistory>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: DepressionClass,
    pub probabilities: Vec<f64>,
}

impl Prediction {
    /// Argmax with ties broken by position in `label_order`.
    pub fn from_probs(probabilities: Vec<f64>, label_order: &[DepressionClass]) -> Prediction {
        let label = label_order[argmax(&probabilities)];
        Prediction { label, probabilities }
    }
}

// ---------------------------------------------------------------------------
// Family trainers
// ---------------------------------------------------------------------------

/// Multinomial Naive Bayes over term counts with additive smoothing.
pub fn train_naive_bayes(
    x: &[SparseVector],
    y: &[usize],
    n_classes: usize,
    alpha: f64,
) -> Result<NaiveBayesParams> {
    if alpha <= 0.0 {
        return Err(Error::Model(format!("smoothing alpha must be positive, got {alpha}")));
    }
    if x.is_empty() {
        return Err(Error::Model("empty training set".into()));
    }
    let dim = x[0].dim;
    let mut class_docs = vec![0usize; n_classes];
    let mut term_counts = vec![vec![0.0f64; dim]; n_classes];
    for (xi, &yi) in x.iter().zip(y) {
        class_docs[yi] += 1;
        for (&t, &w) in xi.indices.iter().zip(&xi.weights) {
            term_counts[yi][t] += w;
        }
    }
    if let Some(missing) = class_docs.iter().position(|&c| c == 0) {
        return Err(Error::Model(format!("class index {missing} has no training documents")));
    }
    let n = x.len() as f64;
    let log_prior = class_docs.iter().map(|&c| (c as f64 / n).ln()).collect();
    let log_likelihood = term_counts
        .iter()
        .map(|counts| {
            let total: f64 = counts.iter().sum::<f64>() + alpha * dim as f64;
            counts.iter().map(|&c| ((c + alpha) / total).ln()).collect()
        })
        .collect();
    Ok(NaiveBayesParams { log_prior, log_likelihood })
}

/// Unnormalized log-posterior per class for a count vector.
pub fn nb_log_posterior(params: &NaiveBayesParams, x: &SparseVector) -> Vec<f64> {
    params
        .log_prior
        .iter()
        .zip(&params.log_likelihood)
        .map(|(&lp, ll)| {
            lp + x
                .indices
                .iter()
                .zip(&x.weights)
                .map(|(&t, &w)| w * ll[t])
                .sum::<f64>()
        })
        .collect()
}

/// One-vs-rest linear SVM trained by subgradient descent on hinge loss with
/// L2 regularization (step size 1/(lambda*t), lambda = 1/(C*n)).
pub fn train_linear_svm(
    x: &[SparseVector],
    y: &[usize],
    n_classes: usize,
    c: f64,
    epochs: usize,
    seed: u64,
) -> Result<SvmParams> {
    if x.is_empty() {
        return Err(Error::Model("empty training set".into()));
    }
    if n_classes < 2 {
        return Err(Error::Model("svm needs at least 2 classes".into()));
    }
    let dense: Vec<Vec<f64>> = x.iter().map(SparseVector::to_dense).collect();
    if dense.iter().all(|d| d == &dense[0]) {
        return Err(Error::Model("degenerate training set: all feature vectors identical".into()));
    }
    let dim = x[0].dim;
    let n = x.len() as f64;
    let lambda = 1.0 / (c * n);
    let mut weights = vec![vec![0.0; dim]; n_classes];
    let mut bias = vec![0.0; n_classes];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = 0u64;
    for _ in 0..epochs {
        let mut order: Vec<usize> = (0..x.len()).collect();
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let lr = 1.0 / (lambda * t as f64);
            let xi = &dense[i];
            for class in 0..n_classes {
                let target = if y[i] == class { 1.0 } else { -1.0 };
                let w = &mut weights[class];
                let margin = w.iter().zip(xi).map(|(a, b)| a * b).sum::<f64>() + bias[class];
                let shrink = 1.0 - lr * lambda;
                for wj in w.iter_mut() {
                    *wj *= shrink;
                }
                if target * margin < 1.0 {
                    let step = lr / n;
                    for (wj, &xj) in w.iter_mut().zip(xi) {
                        *wj += step * target * xj;
                    }
                    bias[class] += step * target;
                }
            }
        }
    }
    Ok(SvmParams { weights, bias })
}

pub fn svm_margins(params: &SvmParams, x: &SparseVector) -> Vec<f64> {
    params
        .weights
        .iter()
        .zip(&params.bias)
        .map(|(w, &b)| x.dot_dense(w) + b)
        .collect()
}

#[derive(Debug, Clone, Copy)]
pub struct ForestOptions {
    pub n_trees: usize,
    /// 0 means unlimited depth.
    pub max_depth: usize,
    pub bootstrap: bool,
    /// Try only sqrt(n_features) candidate features per split.
    pub feature_subsample: bool,
    pub seed: u64,
}

/// Bootstrap-aggregated CART trees with Gini splits; prediction is the
/// majority vote with probability = vote fraction.
pub fn train_random_forest(
    x: &[Vec<f64>],
    y: &[usize],
    n_classes: usize,
    opts: ForestOptions,
) -> Result<Forest> {
    if x.is_empty() {
        return Err(Error::Model("empty training set".into()));
    }
    if opts.n_trees == 0 {
        return Err(Error::Model("forest needs at least one tree".into()));
    }
    let n_features = x[0].len();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut trees = Vec::with_capacity(opts.n_trees);
    for _ in 0..opts.n_trees {
        let indices: Vec<usize> = if opts.bootstrap {
            (0..x.len()).map(|_| rand::Rng::gen_range(&mut rng, 0..x.len())).collect()
        } else {
            (0..x.len()).collect()
        };
        let mut nodes = Vec::new();
        grow_tree(x, y, n_classes, n_features, &indices, 0, opts, &mut rng, &mut nodes);
        trees.push(Tree { nodes });
    }
    Ok(Forest { trees, n_classes })
}

fn gini(counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / t).powi(2)).sum::<f64>()
}

#[allow(clippy::too_many_arguments)]
fn grow_tree(
    x: &[Vec<f64>],
    y: &[usize],
    n_classes: usize,
    n_features: usize,
    indices: &[usize],
    depth: usize,
    opts: ForestOptions,
    rng: &mut ChaCha8Rng,
    nodes: &mut Vec<TreeNode>,
) -> usize {
    let mut counts = vec![0usize; n_classes];
    for &i in indices {
        counts[y[i]] += 1;
    }
    let total = indices.len();
    let make_leaf = |nodes: &mut Vec<TreeNode>| {
        let probs = counts.iter().map(|&c| c as f64 / total as f64).collect();
        nodes.push(TreeNode::Leaf { probs });
        nodes.len() - 1
    };
    let pure = counts.iter().any(|&c| c == total);
    let depth_capped = opts.max_depth > 0 && depth >= opts.max_depth;
    if pure || depth_capped || total < 2 {
        return make_leaf(nodes);
    }

    let candidates: Vec<usize> = if opts.feature_subsample {
        let k = (n_features as f64).sqrt().ceil() as usize;
        let mut all: Vec<usize> = (0..n_features).collect();
        all.shuffle(rng);
        let mut chosen: Vec<usize> = all.into_iter().take(k.max(1)).collect();
        chosen.sort_unstable();
        chosen
    } else {
        (0..n_features).collect()
    };

    let parent_impurity = gini(&counts);
    let mut best: Option<(f64, usize, f64)> = None; // (gain, feature, threshold)
    for &f in &candidates {
        let mut values: Vec<(f64, usize)> = indices.iter().map(|&i| (x[i][f], y[i])).collect();
        values.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut left = vec![0usize; n_classes];
        let mut right = counts.clone();
        for w in 0..values.len() - 1 {
            left[values[w].1] += 1;
            right[values[w].1] -= 1;
            if values[w].0 == values[w + 1].0 {
                continue;
            }
            let threshold = (values[w].0 + values[w + 1].0) / 2.0;
            let nl = w + 1;
            let nr = total - nl;
            let weighted = (nl as f64 * gini(&left) + nr as f64 * gini(&right)) / total as f64;
            let gain = parent_impurity - weighted;
            if gain > 1e-12 && best.map_or(true, |(bg, _, _)| gain > bg + 1e-12) {
                best = Some((gain, f, threshold));
            }
        }
    }
    let Some((_, feature, threshold)) = best else {
        return make_leaf(nodes);
    };
    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) =
        indices.iter().partition(|&&i| x[i][feature] <= threshold);
    // Reserve the split slot, then grow children.
    nodes.push(TreeNode::Leaf { probs: Vec::new() });
    let slot = nodes.len() - 1;
    let left = grow_tree(x, y, n_classes, n_features, &left_idx, depth + 1, opts, rng, nodes);
    let right = grow_tree(x, y, n_classes, n_features, &right_idx, depth + 1, opts, rng, nodes);
    nodes[slot] = TreeNode::Split { feature, threshold, left, right };
    slot
}

pub fn forest_vote(forest: &Forest, x: &[f64]) -> Vec<f64> {
    let mut votes = vec![0usize; forest.n_classes];
    for tree in &forest.trees {
        let probs = tree.leaf_probs(x);
        votes[argmax(probs)] += 1;
    }
    votes.iter().map(|&v| v as f64 / forest.trees.len() as f64).collect()
}

/// Dropout + dense softmax head over fixed input vectors; used for
/// encoder fine-tuning (head-only when the adapter is frozen).
#[allow(clippy::too_many_arguments)]
pub fn train_dense_head(
    x: &[Vec<f64>],
    y: &[usize],
    xv: &[Vec<f64>],
    yv: &[usize],
    n_classes: usize,
    cfg: &TrainConfig,
) -> Result<(EncoderHead, TrainingHistory)> {
    if x.is_empty() {
        return Err(Error::Model("empty training set".into()));
    }
    let hidden = x[0].len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut dense_w = init_uniform(&mut rng, n_classes * hidden, (1.0 / hidden as f64).sqrt());
    let mut dense_b = vec![0.0; n_classes];
    let mut opt = Optimizer::new(cfg.optimizer, cfg.learning_rate, &[dense_w.len(), dense_b.len()]);
    let mut history = TrainingHistory::default();
    for _ in 0..cfg.epochs {
        let mut order: Vec<usize> = (0..x.len()).collect();
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut correct = 0usize;
        for chunk in order.chunks(cfg.batch_size.max(1)) {
            let mut dw = vec![0.0; dense_w.len()];
            let mut db = vec![0.0; dense_b.len()];
            let scale = 1.0 / chunk.len() as f64;
            for &i in chunk {
                let mask = dropout_mask(&mut rng, hidden, cfg.dropout);
                let h: Vec<f64> = x[i].iter().zip(&mask).map(|(a, m)| a * m).collect();
                let probs = softmax(&dense_forward(&dense_w, &dense_b, &h));
                epoch_loss += xent(&probs, y[i]);
                correct += (argmax(&probs) == y[i]) as usize;
                let mut dout = dlogits(&probs, y[i]);
                for v in &mut dout {
                    *v *= scale;
                }
                dense_backward(&dense_w, &h, &dout, &mut dw, &mut db);
            }
            opt.step(&mut [&mut dense_w, &mut dense_b], &[dw, db]);
        }
        history.train_loss.push(epoch_loss / x.len() as f64);
        history.train_accuracy.push(correct as f64 / x.len() as f64);
        let (vl, va) = head_eval(&dense_w, &dense_b, xv, yv);
        history.val_loss.push(vl);
        history.val_accuracy.push(va);
    }
    Ok((EncoderHead { dense_w, dense_b, hidden_dim: hidden }, history))
}

fn head_eval(w: &[f64], b: &[f64], x: &[Vec<f64>], y: &[usize]) -> (f64, f64) {
    if x.is_empty() {
        return (0.0, 0.0);
    }
    let mut loss = 0.0;
    let mut correct = 0usize;
    for (xi, &yi) in x.iter().zip(y) {
        let probs = softmax(&dense_forward(w, b, xi));
        loss += xent(&probs, yi);
        correct += (argmax(&probs) == yi) as usize;
    }
    (loss / x.len() as f64, correct as f64 / x.len() as f64)
}

/// Look an adapter up by its registered name.
pub fn resolve_adapter(name: &str, hidden_dim: usize) -> Result<Box<dyn EncoderAdapter>> {
    match name {
        "hash-projection" => Ok(Box::new(HashProjectionAdapter::new(hidden_dim))),
        other => Err(Error::Model(format!(
            "encoder adapter '{other}' is unavailable; use the built-in \
             'hash-projection' adapter for head-only training"
        ))),
    }
}

// ---------------------------------------------------------------------------
// High-level training over labeled examples
// ---------------------------------------------------------------------------

/// Train one model kind on labeled examples. `embeddings` supplies the fixed
/// table for the *_glove kinds; when absent, a deterministic hashed table
/// over the training vocabulary stands in.
pub fn train_model(
    cfg: &TrainConfig,
    train: &[LabeledExample],
    validation: &[LabeledExample],
    embeddings: Option<&EmbeddingTable>,
) -> Result<ModelArtifact> {
    if train.is_empty() {
        return Err(Error::Model("empty training set".into()));
    }
    let present: BTreeSet<DepressionClass> = train.iter().map(|e| e.label).collect();
    let label_order: Vec<DepressionClass> = DepressionClass::ALL
        .iter()
        .copied()
        .filter(|c| present.contains(c))
        .collect();
    let n_classes = label_order.len();
    let class_index = |c: DepressionClass| label_order.iter().position(|&l| l == c).unwrap();

    let preprocess = if cfg.model_kind.is_neural() {
        PreprocessSpec::sequence()
    } else {
        PreprocessSpec::classical()
    };
    let docs: Vec<Vec<String>> = train.iter().map(|e| preprocess.tokens(&e.clean_text)).collect();
    let val_docs: Vec<Vec<String>> =
        validation.iter().map(|e| preprocess.tokens(&e.clean_text)).collect();
    let y: Vec<usize> = train.iter().map(|e| class_index(e.label)).collect();
    let yv: Vec<usize> = validation.iter().map(|e| class_index(e.label)).collect();

    let min_df = cfg.extra_usize("min_df", 1);
    let max_len = cfg.extra_usize("max_len", 64);
    let embed_dim = cfg.extra_usize("embed_dim", 64);

    let (feature_spec, params, history) = match cfg.model_kind {
        ModelKind::Nb => {
            let vocab = fit_vocabulary(&docs, min_df)?;
            let x: Vec<SparseVector> = docs.iter().map(|d| count_transform(d, &vocab)).collect();
            let alpha = cfg.extra("nb_alpha", 1.0);
            let params = train_naive_bayes(&x, &y, n_classes, alpha)?;
            (FeatureSpec::Counts { vocab }, ModelParams::NaiveBayes(params), None)
        }
        ModelKind::Svm => {
            let vocab = fit_vocabulary(&docs, min_df)?;
            let x: Vec<SparseVector> = docs.iter().map(|d| tfidf_transform(d, &vocab)).collect();
            let c = cfg.extra("svm_c", 1.0);
            let params = train_linear_svm(&x, &y, n_classes, c, cfg.epochs, cfg.seed)?;
            (FeatureSpec::Tfidf { vocab }, ModelParams::LinearSvm(params), None)
        }
        ModelKind::Rf => {
            let vocab = fit_vocabulary(&docs, min_df)?;
            let feature_ids = capped_feature_ids(&vocab, cfg.extra_usize("rf_feature_cap", 2000));
            let x: Vec<Vec<f64>> = docs
                .iter()
                .map(|d| dense_select(&tfidf_transform(d, &vocab), &feature_ids))
                .collect();
            let opts = ForestOptions {
                n_trees: cfg.extra_usize("rf_trees", 100),
                max_depth: cfg.extra_usize("rf_max_depth", 0),
                bootstrap: true,
                feature_subsample: true,
                seed: cfg.seed,
            };
            let forest = train_random_forest(&x, &y, n_classes, opts)?;
            (FeatureSpec::TfidfDense { vocab, feature_ids }, ModelParams::Forest(forest), None)
        }
        ModelKind::Cnn | ModelKind::Lstm => {
            let vocab = fit_vocabulary(&docs, min_df)?;
            let to_ids = |d: &Vec<String>| CnnSample::Ids(token_ids(d, &vocab, max_len));
            let data: Vec<(CnnSample, usize)> =
                docs.iter().map(to_ids).zip(y.iter().copied()).collect();
            let val: Vec<(CnnSample, usize)> =
                val_docs.iter().map(to_ids).zip(yv.iter().copied()).collect();
            let vocab_rows = vocab.len() + 1; // last row is the unknown token
            let (params, history) = if cfg.model_kind == ModelKind::Cnn {
                let mut net = TextCnn::new(
                    Some(vocab_rows),
                    embed_dim,
                    CNN_WIDTHS.to_vec(),
                    cfg.extra_usize("cnn_filters", 64),
                    n_classes,
                    cfg.dropout,
                    cfg.seed,
                );
                let h = net.train(&data, &val, cfg.epochs, cfg.batch_size, cfg.optimizer, cfg.learning_rate, cfg.seed);
                (ModelParams::Cnn(net), h)
            } else {
                let mut net = LstmNet::new(
                    Some(vocab_rows),
                    embed_dim,
                    cfg.extra_usize("lstm_layers", 2),
                    cfg.extra_usize("lstm_units", 64),
                    n_classes,
                    cfg.dropout,
                    cfg.seed,
                );
                let h = net.train(&data, &val, cfg.epochs, cfg.batch_size, cfg.optimizer, cfg.learning_rate, cfg.seed);
                (ModelParams::Lstm(net), h)
            };
            (FeatureSpec::WordIds { vocab, max_len }, params, Some(history))
        }
        ModelKind::CnnGlove | ModelKind::LstmGlove => {
            let table = match embeddings {
                Some(t) => t.clone(),
                None => {
                    // Deterministic stand-in when no pretrained table is given.
                    let mut terms: Vec<String> =
                        docs.iter().flatten().cloned().collect::<BTreeSet<_>>().into_iter().collect();
                    terms.sort();
                    hashed_embeddings(&terms, embed_dim)
                }
            };
            let to_rows = |d: &Vec<String>| {
                CnnSample::Rows(d.iter().take(max_len).map(|t| table.lookup(t)).collect())
            };
            let data: Vec<(CnnSample, usize)> =
                docs.iter().map(to_rows).zip(y.iter().copied()).collect();
            let val: Vec<(CnnSample, usize)> =
                val_docs.iter().map(to_rows).zip(yv.iter().copied()).collect();
            let (params, history) = if cfg.model_kind == ModelKind::CnnGlove {
                let mut net = TextCnn::new(
                    None,
                    table.dim,
                    CNN_WIDTHS.to_vec(),
                    cfg.extra_usize("cnn_filters", 64),
                    n_classes,
                    cfg.dropout,
                    cfg.seed,
                );
                let h = net.train(&data, &val, cfg.epochs, cfg.batch_size, cfg.optimizer, cfg.learning_rate, cfg.seed);
                (ModelParams::Cnn(net), h)
            } else {
                let mut net = LstmNet::new(
                    None,
                    table.dim,
                    cfg.extra_usize("lstm_layers", 1),
                    cfg.extra_usize("lstm_units", 300),
                    n_classes,
                    cfg.dropout,
                    cfg.seed,
                );
                let h = net.train(&data, &val, cfg.epochs, cfg.batch_size, cfg.optimizer, cfg.learning_rate, cfg.seed);
                (ModelParams::Lstm(net), h)
            };
            (FeatureSpec::FixedEmbedding { table, max_len }, params, Some(history))
        }
        ModelKind::EncoderFt => {
            let texts: Vec<String> = train.iter().map(|e| e.clean_text.clone()).collect();
            let target = cfg.extra_usize("subword_vocab", 200);
            let subword = train_subword_vocab(&texts, target, max_len)?;
            let hidden_dim = cfg.extra_usize("encoder_hidden", 64);
            let adapter = resolve_adapter("hash-projection", hidden_dim)?;
            // The built-in adapter is frozen, so training is head-only.
            let pooled = |d: &Vec<String>| adapter.encode(&encode(d, &subword)).pooled;
            let x: Vec<Vec<f64>> = docs.iter().map(pooled).collect();
            let xv: Vec<Vec<f64>> = val_docs.iter().map(pooled).collect();
            let (head, history) = train_dense_head(&x, &y, &xv, &yv, n_classes, cfg)?;
            (
                FeatureSpec::Encoder {
                    subword,
                    adapter: adapter.name().to_string(),
                    hidden_dim,
                },
                ModelParams::EncoderHead(head),
                Some(history),
            )
        }
    };

    Ok(ModelArtifact {
        kind: cfg.model_kind,
        config: cfg.clone(),
        label_order,
        feature_spec,
        preprocess,
        params,
        history,
    })
}

/// Term ids for a learned embedding; unknown tokens map to `vocab.len()`.
fn token_ids(tokens: &[String], vocab: &Vocabulary, max_len: usize) -> Vec<usize> {
    tokens
        .iter()
        .take(max_len)
        .map(|t| vocab.id(t).unwrap_or(vocab.len()))
        .collect()
}

/// Top-k term ids by document frequency (ties by term id, i.e. term order).
fn capped_feature_ids(vocab: &Vocabulary, cap: usize) -> Vec<usize> {
    let mut ids: Vec<usize> = (0..vocab.len()).collect();
    ids.sort_by_key(|&i| (std::cmp::Reverse(vocab.df(i)), i));
    ids.truncate(cap.max(1));
    ids.sort_unstable();
    ids
}

fn dense_select(x: &SparseVector, feature_ids: &[usize]) -> Vec<f64> {
    let dense = x.to_dense();
    feature_ids.iter().map(|&i| dense[i]).collect()
}

// ---------------------------------------------------------------------------
// Prediction
// ---------------------------------------------------------------------------

/// Run the artifact's recorded preprocessing + featurization on raw text.
pub fn predict(artifact: &ModelArtifact, text: &str) -> Result<Prediction> {
    let tokens = artifact.preprocess.tokens(text);
    predict_tokens(artifact, &tokens)
}

/// Predict from already-preprocessed tokens (used by attribution methods,
/// which delete tokens and re-score).
pub fn predict_tokens(artifact: &ModelArtifact, tokens: &[String]) -> Result<Prediction> {
    let probs = match (&artifact.params, &artifact.feature_spec) {
        (ModelParams::NaiveBayes(p), FeatureSpec::Counts { vocab }) => {
            softmax(&nb_log_posterior(p, &count_transform(tokens, vocab)))
        }
        (ModelParams::LinearSvm(p), FeatureSpec::Tfidf { vocab }) => {
            softmax(&svm_margins(p, &tfidf_transform(tokens, vocab)))
        }
        (ModelParams::Forest(f), FeatureSpec::TfidfDense { vocab, feature_ids }) => {
            forest_vote(f, &dense_select(&tfidf_transform(tokens, vocab), feature_ids))
        }
        (ModelParams::Cnn(net), FeatureSpec::WordIds { vocab, max_len }) => {
            net.predict_probs(&CnnSample::Ids(token_ids(tokens, vocab, *max_len)))
        }
        (ModelParams::Lstm(net), FeatureSpec::WordIds { vocab, max_len }) => {
            net.predict_probs(&CnnSample::Ids(token_ids(tokens, vocab, *max_len)))
        }
        (ModelParams::Cnn(net), FeatureSpec::FixedEmbedding { table, max_len }) => {
            let rows = tokens.iter().take(*max_len).map(|t| table.lookup(t)).collect();
            net.predict_probs(&CnnSample::Rows(rows))
        }
        (ModelParams::Lstm(net), FeatureSpec::FixedEmbedding { table, max_len }) => {
            let rows = tokens.iter().take(*max_len).map(|t| table.lookup(t)).collect();
            net.predict_probs(&CnnSample::Rows(rows))
        }
        (ModelParams::EncoderHead(h), FeatureSpec::Encoder { subword, adapter, hidden_dim }) => {
            let adapter = resolve_adapter(adapter, *hidden_dim)?;
            let pooled = adapter.encode(&encode(tokens, subword)).pooled;
            softmax(&dense_forward(&h.dense_w, &h.dense_b, &pooled))
        }
        _ => {
            return Err(Error::Model(
                "artifact parameters do not match its feature spec".into(),
            ))
        }
    };
    Ok(Prediction::from_probs(probs, &artifact.label_order))
}

// ---------------------------------------------------------------------------
// Artifact persistence
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct ArtifactMeta {
    kind: ModelKind,
    config: TrainConfig,
    label_order: Vec<DepressionClass>,
    feature_spec: FeatureSpecMeta,
    preprocess: PreprocessSpec,
    history: Option<TrainingHistory>,
}

const VOCAB_FILE: &str = "vocab.txt";
const EMBEDDINGS_FILE: &str = "embeddings.txt";
const SUBWORD_FILE: &str = "subword.txt";
const PARAMS_FILE: &str = "params.bin";
const TREES_FILE: &str = "trees.json";
const META_FILE: &str = "artifact.json";

impl ModelArtifact {
    /// Write `artifact.json`, the parameter dump, and the feature files into
    /// `dir` (created if needed).
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let feature_spec = match &self.feature_spec {
            FeatureSpec::Counts { vocab } => {
                vocab.save(&dir.join(VOCAB_FILE))?;
                FeatureSpecMeta::Counts
            }
            FeatureSpec::Tfidf { vocab } => {
                vocab.save(&dir.join(VOCAB_FILE))?;
                FeatureSpecMeta::Tfidf
            }
            FeatureSpec::TfidfDense { vocab, feature_ids } => {
                vocab.save(&dir.join(VOCAB_FILE))?;
                FeatureSpecMeta::TfidfDense { feature_ids: feature_ids.clone() }
            }
            FeatureSpec::WordIds { vocab, max_len } => {
                vocab.save(&dir.join(VOCAB_FILE))?;
                FeatureSpecMeta::WordIds { max_len: *max_len }
            }
            FeatureSpec::FixedEmbedding { table, max_len } => {
                save_embeddings(&dir.join(EMBEDDINGS_FILE), table)?;
                FeatureSpecMeta::FixedEmbedding { max_len: *max_len, dim: table.dim }
            }
            FeatureSpec::Encoder { subword, adapter, hidden_dim } => {
                subword.save(&dir.join(SUBWORD_FILE))?;
                FeatureSpecMeta::Encoder { adapter: adapter.clone(), hidden_dim: *hidden_dim }
            }
        };
        let meta = ArtifactMeta {
            kind: self.kind,
            config: self.config.clone(),
            label_order: self.label_order.clone(),
            feature_spec,
            preprocess: self.preprocess.clone(),
            history: self.history.clone(),
        };
        let meta_path = dir.join(META_FILE);
        let mut json = serde_json::to_string_pretty(&meta)?;
        json.push('\n');
        fs::write(&meta_path, json).map_err(|e| Error::io(meta_path, e))?;

        match &self.params {
            ModelParams::NaiveBayes(p) => {
                let flat: Vec<f64> = p.log_likelihood.iter().flatten().copied().collect();
                write_tensors(&dir.join(PARAMS_FILE), &[&p.log_prior, &flat])?;
            }
            ModelParams::LinearSvm(p) => {
                let flat: Vec<f64> = p.weights.iter().flatten().copied().collect();
                write_tensors(&dir.join(PARAMS_FILE), &[&flat, &p.bias])?;
            }
            ModelParams::Forest(f) => {
                let path = dir.join(TREES_FILE);
                let mut json = serde_json::to_string(f)?;
                json.push('\n');
                fs::write(&path, json).map_err(|e| Error::io(path, e))?;
            }
            ModelParams::Cnn(net) => {
                write_tensors(&dir.join(PARAMS_FILE), &[&net.flat_params()])?;
            }
            ModelParams::Lstm(net) => {
                write_tensors(&dir.join(PARAMS_FILE), &[&net.flat_params()])?;
            }
            ModelParams::EncoderHead(h) => {
                write_tensors(&dir.join(PARAMS_FILE), &[&h.dense_w, &h.dense_b])?;
            }
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<ModelArtifact> {
        let meta_path = dir.join(META_FILE);
        if !meta_path.exists() {
            return Err(Error::MissingFile(meta_path));
        }
        let raw = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        let meta: ArtifactMeta = serde_json::from_str(&raw)?;
        let feature_spec = match &meta.feature_spec {
            FeatureSpecMeta::Counts => {
                FeatureSpec::Counts { vocab: Vocabulary::load(&dir.join(VOCAB_FILE))? }
            }
            FeatureSpecMeta::Tfidf => {
                FeatureSpec::Tfidf { vocab: Vocabulary::load(&dir.join(VOCAB_FILE))? }
            }
            FeatureSpecMeta::TfidfDense { feature_ids } => FeatureSpec::TfidfDense {
                vocab: Vocabulary::load(&dir.join(VOCAB_FILE))?,
                feature_ids: feature_ids.clone(),
            },
            FeatureSpecMeta::WordIds { max_len } => FeatureSpec::WordIds {
                vocab: Vocabulary::load(&dir.join(VOCAB_FILE))?,
                max_len: *max_len,
            },
            FeatureSpecMeta::FixedEmbedding { max_len, dim } => FeatureSpec::FixedEmbedding {
                table: load_embeddings(&dir.join(EMBEDDINGS_FILE), *dim)?,
                max_len: *max_len,
            },
            FeatureSpecMeta::Encoder { adapter, hidden_dim } => FeatureSpec::Encoder {
                subword: SubwordVocab::load(&dir.join(SUBWORD_FILE))?,
                adapter: adapter.clone(),
                hidden_dim: *hidden_dim,
            },
        };
        let n_classes = meta.label_order.len();
        let cfg = &meta.config;
        let params = match meta.kind {
            ModelKind::Nb => {
                let tensors = read_tensors(&dir.join(PARAMS_FILE))?;
                let [prior, flat] = tensor_pair(tensors)?;
                let dim = flat.len() / n_classes;
                let log_likelihood = flat.chunks(dim).map(<[f64]>::to_vec).collect();
                ModelParams::NaiveBayes(NaiveBayesParams { log_prior: prior, log_likelihood })
            }
            ModelKind::Svm => {
                let tensors = read_tensors(&dir.join(PARAMS_FILE))?;
                let [flat, bias] = tensor_pair(tensors)?;
                let dim = flat.len() / n_classes;
                let weights = flat.chunks(dim).map(<[f64]>::to_vec).collect();
                ModelParams::LinearSvm(SvmParams { weights, bias })
            }
            ModelKind::Rf => {
                let path = dir.join(TREES_FILE);
                let raw = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                ModelParams::Forest(serde_json::from_str(&raw)?)
            }
            ModelKind::Cnn | ModelKind::CnnGlove => {
                let (vocab_rows, dim) = match &feature_spec {
                    FeatureSpec::WordIds { vocab, .. } => {
                        (Some(vocab.len() + 1), cfg.extra_usize("embed_dim", 64))
                    }
                    FeatureSpec::FixedEmbedding { table, .. } => (None, table.dim),
                    _ => return Err(Error::Model("cnn artifact has wrong feature spec".into())),
                };
                let mut net = TextCnn::new(
                    vocab_rows,
                    dim,
                    CNN_WIDTHS.to_vec(),
                    cfg.extra_usize("cnn_filters", 64),
                    n_classes,
                    cfg.dropout,
                    cfg.seed,
                );
                let tensors = read_tensors(&dir.join(PARAMS_FILE))?;
                net.assign_flat(&tensor_single(tensors)?);
                ModelParams::Cnn(net)
            }
            ModelKind::Lstm | ModelKind::LstmGlove => {
                let (vocab_rows, dim) = match &feature_spec {
                    FeatureSpec::WordIds { vocab, .. } => {
                        (Some(vocab.len() + 1), cfg.extra_usize("embed_dim", 64))
                    }
                    FeatureSpec::FixedEmbedding { table, .. } => (None, table.dim),
                    _ => return Err(Error::Model("lstm artifact has wrong feature spec".into())),
                };
                let default_layers = if meta.kind == ModelKind::Lstm { 2 } else { 1 };
                let default_units = if meta.kind == ModelKind::Lstm { 64 } else { 300 };
                let mut net = LstmNet::new(
                    vocab_rows,
                    dim,
                    cfg.extra_usize("lstm_layers", default_layers),
                    cfg.extra_usize("lstm_units", default_units),
                    n_classes,
                    cfg.dropout,
                    cfg.seed,
                );
                let tensors = read_tensors(&dir.join(PARAMS_FILE))?;
                net.assign_flat(&tensor_single(tensors)?);
                ModelParams::Lstm(net)
            }
            ModelKind::EncoderFt => {
                let tensors = read_tensors(&dir.join(PARAMS_FILE))?;
                let [dense_w, dense_b] = tensor_pair(tensors)?;
                let hidden_dim = dense_w.len() / n_classes;
                ModelParams::EncoderHead(EncoderHead { dense_w, dense_b, hidden_dim })
            }
        };
        Ok(ModelArtifact {
            kind: meta.kind,
            config: meta.config,
            label_order: meta.label_order,
            feature_spec,
            preprocess: meta.preprocess,
            params,
            history: meta.history,
        })
    }
}

fn tensor_single(mut tensors: Vec<Vec<f64>>) -> Result<Vec<f64>> {
    if tensors.len() != 1 {
        return Err(Error::Model(format!("expected 1 tensor, found {}", tensors.len())));
    }
    Ok(tensors.remove(0))
}

fn tensor_pair(tensors: Vec<Vec<f64>>) -> Result<[Vec<f64>; 2]> {
    <[Vec<f64>; 2]>::try_from(tensors)
        .map_err(|t| Error::Model(format!("expected 2 tensors, found {}", t.len())))
}

/// Parameter dump format: little-endian u64 tensor count, then per tensor a
/// u64 length followed by that many little-endian f64 values.
fn write_tensors(path: &Path, tensors: &[&Vec<f64>]) -> Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(&(tensors.len() as u64).to_le_bytes());
    for t in tensors {
        buf.extend_from_slice(&(t.len() as u64).to_le_bytes());
        for &v in t.iter() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

fn read_tensors(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut buf = Vec::new();
    file.read_to_end(&mut buf).map_err(|e| Error::io(path, e))?;
    let mut at = 0usize;
    let read_u64 = |at: &mut usize| -> Result<u64> {
        let bytes: [u8; 8] = buf
            .get(*at..*at + 8)
            .and_then(|s| s.try_into().ok())
            .ok_or_else(|| Error::Model(format!("truncated parameter file {}", path.display())))?;
        *at += 8;
        Ok(u64::from_le_bytes(bytes))
    };
    let count = read_u64(&mut at)?;
    let mut tensors = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let len = read_u64(&mut at)? as usize;
        let mut t = Vec::with_capacity(len);
        for _ in 0..len {
            let bytes: [u8; 8] = buf
                .get(at..at + 8)
                .and_then(|s| s.try_into().ok())
                .ok_or_else(|| {
                    Error::Model(format!("truncated parameter file {}", path.display()))
                })?;
            at += 8;
            t.push(f64::from_le_bytes(bytes));
        }
        tensors.push(t);
    }
    Ok(tensors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Provenance;

    fn sparse(vals: &[f64]) -> SparseVector {
        let mut indices = Vec::new();
        let mut weights = Vec::new();
        for (i, &v) in vals.iter().enumerate() {
            if v != 0.0 {
                indices.push(i);
                weights.push(v);
            }
        }
        SparseVector { indices, weights, dim: vals.len() }
    }

    #[test]
    fn nb_prior_is_class_frequency() {
        // 2 docs of class 0, 1 doc of class 1 -> prior(0) = 2/3.
        let x = vec![sparse(&[1.0]), sparse(&[1.0]), sparse(&[1.0])];
        let p = train_naive_bayes(&x, &[0, 0, 1], 2, 1.0).unwrap();
        assert!((p.log_prior[0].exp() - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn nb_smoothed_likelihood_hand_oracle() {
        // Corpus {A: ["x x"], B: ["y"]}, vocab {x, y}, alpha = 1:
        // P(x|A) = (2+1)/(2+2) = 3/4.
        let x = vec![sparse(&[2.0, 0.0]), sparse(&[0.0, 1.0])];
        let p = train_naive_bayes(&x, &[0, 1], 2, 1.0).unwrap();
        assert!((p.log_likelihood[0][0].exp() - 0.75).abs() < 1e-12);
        // posterior for the document "x" -> class A.
        let post = nb_log_posterior(&p, &sparse(&[1.0, 0.0]));
        assert!(post[0] > post[1]);
    }

    #[test]
    fn nb_rejects_bad_alpha_and_missing_class() {
        let x = vec![sparse(&[1.0])];
        assert!(train_naive_bayes(&x, &[0], 1, 0.0).is_err());
        assert!(train_naive_bayes(&x, &[0], 2, 1.0).is_err());
    }

    fn toy_two_class() -> (Vec<SparseVector>, Vec<usize>) {
        // Linearly separable on feature 0 vs feature 1.
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..10 {
            let a = 1.0 + 0.1 * i as f64;
            x.push(sparse(&[a, 0.1]));
            y.push(0);
            x.push(sparse(&[0.1, a]));
            y.push(1);
        }
        (x, y)
    }

    #[test]
    fn svm_separates_toy_set() {
        let (x, y) = toy_two_class();
        let p = train_linear_svm(&x, &y, 2, 1.0, 50, 3).unwrap();
        for (xi, &yi) in x.iter().zip(&y) {
            let m = svm_margins(&p, xi);
            assert_eq!(argmax(&m), yi);
        }
    }

    #[test]
    fn svm_is_deterministic() {
        let (x, y) = toy_two_class();
        let a = train_linear_svm(&x, &y, 2, 1.0, 20, 3).unwrap();
        let b = train_linear_svm(&x, &y, 2, 1.0, 20, 3).unwrap();
        assert_eq!(a.weights, b.weights);
        assert_eq!(a.bias, b.bias);
    }

    #[test]
    fn svm_scaling_with_adjusted_c_keeps_labels() {
        let (x, y) = toy_two_class();
        let base = train_linear_svm(&x, &y, 2, 1.0, 50, 3).unwrap();
        let scaled: Vec<SparseVector> = x
            .iter()
            .map(|v| SparseVector {
                indices: v.indices.clone(),
                weights: v.weights.iter().map(|w| w * 2.0).collect(),
                dim: v.dim,
            })
            .collect();
        // Doubling inputs quarters the squared norm penalty per unit margin,
        // so C scales by 4 to keep the same optimum.
        let adj = train_linear_svm(&scaled, &y, 2, 4.0, 50, 3).unwrap();
        for (orig, sc) in x.iter().zip(&scaled) {
            assert_eq!(argmax(&svm_margins(&base, orig)), argmax(&svm_margins(&adj, sc)));
        }
    }

    #[test]
    fn svm_rejects_degenerate_features() {
        let x = vec![sparse(&[1.0, 1.0]); 4];
        assert!(train_linear_svm(&x, &[0, 1, 0, 1], 2, 1.0, 5, 0).is_err());
    }

    fn toy_dense() -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..12 {
            let v = i as f64;
            x.push(vec![v, (i % 3) as f64]);
            y.push(usize::from(i >= 6));
        }
        (x, y)
    }

    #[test]
    fn single_tree_without_sampling_memorizes() {
        let (x, y) = toy_dense();
        let opts = ForestOptions {
            n_trees: 1,
            max_depth: 0,
            bootstrap: false,
            feature_subsample: false,
            seed: 0,
        };
        let forest = train_random_forest(&x, &y, 2, opts).unwrap();
        assert_eq!(forest.trees.len(), 1);
        for (xi, &yi) in x.iter().zip(&y) {
            assert_eq!(argmax(&forest_vote(&forest, xi)), yi);
        }
    }

    #[test]
    fn forest_is_deterministic() {
        let (x, y) = toy_dense();
        let opts = ForestOptions {
            n_trees: 7,
            max_depth: 0,
            bootstrap: true,
            feature_subsample: true,
            seed: 11,
        };
        let a = train_random_forest(&x, &y, 2, opts).unwrap();
        let b = train_random_forest(&x, &y, 2, opts).unwrap();
        for xi in &x {
            assert_eq!(forest_vote(&a, xi), forest_vote(&b, xi));
        }
    }

    #[test]
    fn forest_vote_is_a_probability() {
        let (x, y) = toy_dense();
        let opts = ForestOptions {
            n_trees: 9,
            max_depth: 3,
            bootstrap: true,
            feature_subsample: true,
            seed: 2,
        };
        let forest = train_random_forest(&x, &y, 2, opts).unwrap();
        let v = forest_vote(&forest, &x[0]);
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn default_configs_match_published_hyperparameters() {
        let cnn = TrainConfig::defaults(ModelKind::Cnn);
        assert_eq!((cnn.epochs, cnn.batch_size, cnn.optimizer), (10, 32, OptimizerKind::Adam));
        let cnn_glove = TrainConfig::defaults(ModelKind::CnnGlove);
        assert_eq!(cnn_glove.batch_size, 64);
        assert_eq!(cnn_glove.epochs, 10);
        let lstm = TrainConfig::defaults(ModelKind::Lstm);
        assert_eq!(lstm.extra_usize("lstm_layers", 0), 2);
        assert_eq!(lstm.extra_usize("lstm_units", 0), 64);
        assert!((lstm.dropout - 0.2).abs() < 1e-12);
        assert_eq!(lstm.batch_size, 32);
        let lg = TrainConfig::defaults(ModelKind::LstmGlove);
        assert_eq!(lg.extra_usize("lstm_units", 0), 300);
        assert!((lg.dropout - 0.4).abs() < 1e-12);
        assert_eq!(lg.optimizer, OptimizerKind::Adamax);
        let enc = TrainConfig::defaults(ModelKind::EncoderFt);
        assert!((enc.learning_rate - 2e-5).abs() < 1e-12);
    }

    fn tiny_corpus() -> Vec<LabeledExample> {
        let mut out = Vec::new();
        let phrases = [
            (DepressionClass::Bipolar, "i have bipolar disorder"),
            (DepressionClass::Major, "i have major depressive disorder"),
            (DepressionClass::NoDepression, "the garden was sunny today"),
        ];
        for (label, text) in phrases {
            for i in 0..6 {
                out.push(LabeledExample {
                    tweet_id: format!("{label}-{i}"),
                    clean_text: format!("{text} example {i}"),
                    tokens: text.split(' ').map(String::from).collect(),
                    label,
                    provenance: Provenance::Synthetic,
                });
            }
        }
        out
    }

    #[test]
    fn nb_end_to_end_memorizes_tiny_corpus() {
        let corpus = tiny_corpus();
        let cfg = TrainConfig::defaults(ModelKind::Nb);
        let artifact = train_model(&cfg, &corpus, &[], None).unwrap();
        for ex in &corpus {
            let pred = predict(&artifact, &ex.clean_text).unwrap();
            assert_eq!(pred.label, ex.label);
            assert!((pred.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn predict_on_empty_string_is_valid() {
        let corpus = tiny_corpus();
        let cfg = TrainConfig::defaults(ModelKind::Nb);
        let artifact = train_model(&cfg, &corpus, &[], None).unwrap();
        let pred = predict(&artifact, "").unwrap();
        assert!((pred.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        let again = predict(&artifact, "").unwrap();
        assert_eq!(pred, again);
    }

    #[test]
    fn encoder_head_overfits_separable_fixture() {
        let corpus = tiny_corpus();
        let mut cfg = TrainConfig::defaults(ModelKind::EncoderFt);
        cfg.epochs = 30;
        cfg.learning_rate = 0.05;
        let artifact = train_model(&cfg, &corpus, &corpus, None).unwrap();
        let history = artifact.history.as_ref().unwrap();
        assert_eq!(history.val_loss.len(), 30);
        let mut correct = 0;
        for ex in &corpus {
            if predict(&artifact, &ex.clean_text).unwrap().label == ex.label {
                correct += 1;
            }
        }
        assert!(correct as f64 / corpus.len() as f64 >= 0.95);
    }

    #[test]
    fn lstm_default_architecture_is_two_by_64() {
        let corpus = tiny_corpus();
        let mut cfg = TrainConfig::defaults(ModelKind::Lstm);
        cfg.epochs = 1;
        let artifact = train_model(&cfg, &corpus, &[], None).unwrap();
        match &artifact.params {
            ModelParams::Lstm(net) => {
                assert_eq!(net.layers, 2);
                assert_eq!(net.units, 64);
            }
            _ => panic!("expected lstm params"),
        }
    }

    #[test]
    fn artifact_round_trips_through_disk() {
        let corpus = tiny_corpus();
        for kind in [ModelKind::Nb, ModelKind::Svm, ModelKind::Rf, ModelKind::EncoderFt] {
            let mut cfg = TrainConfig::defaults(kind);
            cfg.epochs = cfg.epochs.min(3);
            let artifact = train_model(&cfg, &corpus, &[], None).unwrap();
            let dir = tempfile::tempdir().unwrap();
            artifact.save(dir.path()).unwrap();
            let back = ModelArtifact::load(dir.path()).unwrap();
            for ex in &corpus {
                assert_eq!(
                    predict(&artifact, &ex.clean_text).unwrap(),
                    predict(&back, &ex.clean_text).unwrap(),
                    "{kind} artifact changed after reload"
                );
            }
        }
    }

    #[test]
    fn neural_artifact_round_trips_through_disk() {
        let corpus = tiny_corpus();
        for kind in [ModelKind::Cnn, ModelKind::CnnGlove, ModelKind::Lstm, ModelKind::LstmGlove] {
            let mut cfg = TrainConfig::defaults(kind);
            cfg.epochs = 1;
            cfg.extras.insert("embed_dim".into(), 8.0);
            cfg.extras.insert("max_len".into(), 16.0);
            cfg.extras.insert("cnn_filters".into(), 4.0);
            cfg.extras.insert("lstm_units".into(), 6.0);
            let artifact = train_model(&cfg, &corpus, &[], None).unwrap();
            let dir = tempfile::tempdir().unwrap();
            artifact.save(dir.path()).unwrap();
            let back = ModelArtifact::load(dir.path()).unwrap();
            for ex in &corpus {
                assert_eq!(
                    predict(&artifact, &ex.clean_text).unwrap(),
                    predict(&back, &ex.clean_text).unwrap(),
                    "{kind} artifact changed after reload"
                );
            }
        }
    }

    #[test]
    fn curve_record_has_one_entry_per_epoch() {
        let corpus = tiny_corpus();
        let mut cfg = TrainConfig::defaults(ModelKind::Cnn);
        cfg.epochs = 3;
        cfg.extras.insert("embed_dim".into(), 8.0);
        cfg.extras.insert("cnn_filters".into(), 4.0);
        let artifact = train_model(&cfg, &corpus, &corpus, None).unwrap();
        let h = artifact.history.unwrap();
        assert_eq!(h.epochs(), 3);
        assert_eq!(h.val_accuracy.len(), 3);
        assert!(h.is_finite());
    }

    #[test]
    fn unknown_adapter_names_are_rejected() {
        let err = match resolve_adapter("bert-base", 8) {
            Err(e) => e,
            Ok(_) => panic!("unknown adapter should be rejected"),
        };
        assert!(err.to_string().contains("hash-projection"));
    }
}
