//! Detection of five depression types (plus a no-depression class) in short
//! social-media texts.
//!
//! The pipeline runs in stages, each with its own module:
//!
//! * [`corpus`] — CSV ingestion, exclusion filtering, stratified splits, and
//!   a synthetic corpus generator for tests and demos.
//! * [`lexicon`] — per-class phrase sets, multi-phrase matching, and the
//!   first-person weak-labeling rule.
//! * [`textprep`] — text normalization, stopword removal, and subword
//!   tokenization with CLS/SEP framing.
//! * [`features`] — bag-of-words / TF-IDF vectorization, pretrained word
//!   embeddings, and a pluggable contextual-encoder adapter.
//! * [`models`] — six classifier families behind one train/predict contract:
//!   multinomial naive Bayes, linear SVM, random forest, CNN, LSTM, and a
//!   fine-tuned contextual encoder head.
//! * [`eval`] — per-class metrics, confusion matrices, comparison tables,
//!   and training-curve plots.
//! * [`explain`] — occlusion and sampled-Shapley token attribution with
//!   highlight rendering.
//! * [`config`] — the run configuration file that ties a CLI run together.

pub mod config;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod explain;
pub mod features;
pub mod lexicon;
pub mod models;
pub mod nn;
pub mod plot;
pub mod textprep;

pub use error::{Error, Result};
