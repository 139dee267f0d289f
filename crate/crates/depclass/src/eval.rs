//! Evaluation: confusion matrices, per-class precision/recall/F1, overall
//! macro/weighted/micro aggregates, and model-comparison tables. Every metric
//! derives from the confusion matrix alone.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::{DepressionClass, LabeledExample};
use crate::error::{Error, Result};
use crate::models::{self, ModelArtifact};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    /// counts[true][predicted], indexed per `label_order`.
    pub counts: Vec<Vec<usize>>,
    pub label_order: Vec<DepressionClass>,
}

impl ConfusionMatrix {
    pub fn new(label_order: Vec<DepressionClass>) -> ConfusionMatrix {
        let n = label_order.len();
        ConfusionMatrix { counts: vec![vec![0; n]; n], label_order }
    }

    pub fn record(&mut self, truth: DepressionClass, predicted: DepressionClass) {
        let t = self.index_of(truth);
        let p = self.index_of(predicted);
        self.counts[t][p] += 1;
    }

    fn index_of(&self, class: DepressionClass) -> usize {
        self.label_order
            .iter()
            .position(|&c| c == class)
            .expect("class missing from label order")
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn support(&self, class_idx: usize) -> usize {
        self.counts[class_idx].iter().sum()
    }
}

/// Per-class rates. When a rate is 0/0 it is reported as 0 with the
/// corresponding `undefined_*` flag set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
    pub undefined_precision: bool,
    pub undefined_recall: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverallMetrics {
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub weighted_precision: f64,
    pub weighted_recall: f64,
    pub weighted_f1: f64,
    pub micro_precision: f64,
    pub micro_recall: f64,
    pub micro_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model_kind: String,
    pub dataset_id: String,
    pub per_class: BTreeMap<String, ClassMetrics>,
    pub overall: OverallMetrics,
    pub confusion: ConfusionMatrix,
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Compute a full report from a confusion matrix.
pub fn report_from_confusion(
    confusion: ConfusionMatrix,
    model_kind: &str,
    dataset_id: &str,
) -> Result<EvalReport> {
    let total = confusion.total();
    if total == 0 {
        return Err(Error::Invalid("cannot evaluate an empty example list".into()));
    }
    let n = confusion.label_order.len();
    let mut per_class = BTreeMap::new();
    let mut correct = 0usize;
    let (mut macro_p, mut macro_r, mut macro_f) = (0.0, 0.0, 0.0);
    let (mut weighted_p, mut weighted_r, mut weighted_f) = (0.0, 0.0, 0.0);
    for c in 0..n {
        let tp = confusion.counts[c][c];
        correct += tp;
        let support = confusion.support(c);
        let predicted: usize = (0..n).map(|t| confusion.counts[t][c]).sum();
        let undefined_precision = predicted == 0;
        let undefined_recall = support == 0;
        let precision = if undefined_precision { 0.0 } else { tp as f64 / predicted as f64 };
        let recall = if undefined_recall { 0.0 } else { tp as f64 / support as f64 };
        let f = f1(precision, recall);
        macro_p += precision;
        macro_r += recall;
        macro_f += f;
        weighted_p += support as f64 * precision;
        weighted_r += support as f64 * recall;
        weighted_f += support as f64 * f;
        per_class.insert(
            confusion.label_order[c].as_str().to_string(),
            ClassMetrics {
                precision,
                recall,
                f1: f,
                support,
                undefined_precision,
                undefined_recall,
            },
        );
    }
    let accuracy = correct as f64 / total as f64;
    // Single-label multi-class: micro precision = micro recall = accuracy.
    let overall = OverallMetrics {
        accuracy,
        macro_precision: macro_p / n as f64,
        macro_recall: macro_r / n as f64,
        macro_f1: macro_f / n as f64,
        weighted_precision: weighted_p / total as f64,
        weighted_recall: weighted_r / total as f64,
        weighted_f1: weighted_f / total as f64,
        micro_precision: accuracy,
        micro_recall: accuracy,
        micro_f1: accuracy,
    };
    Ok(EvalReport {
        model_kind: model_kind.to_string(),
        dataset_id: dataset_id.to_string(),
        per_class,
        overall,
        confusion,
    })
}

/// Evaluate an artifact on labeled examples.
pub fn evaluate(
    artifact: &ModelArtifact,
    examples: &[LabeledExample],
    dataset_id: &str,
) -> Result<EvalReport> {
    if examples.is_empty() {
        return Err(Error::Invalid("cannot evaluate an empty example list".into()));
    }
    let mut confusion = ConfusionMatrix::new(artifact.label_order.clone());
    for ex in examples {
        let pred = models::predict(artifact, &ex.clean_text)?;
        confusion.record(ex.label, pred.label);
    }
    report_from_confusion(confusion, artifact.kind.as_str(), dataset_id)
}

/// One row of the model-comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub model: String,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Rows sorted by descending accuracy; precision/recall/F1 are the weighted
/// aggregates, as stated in the header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub aggregation: String,
    pub rows: Vec<ComparisonRow>,
}

pub fn compare_models(reports: &[EvalReport]) -> Result<ComparisonTable> {
    if reports.is_empty() {
        return Err(Error::Invalid("comparison needs at least one report".into()));
    }
    let mut rows: Vec<ComparisonRow> = reports
        .iter()
        .map(|r| ComparisonRow {
            model: r.model_kind.clone(),
            accuracy: r.overall.accuracy,
            precision: r.overall.weighted_precision,
            recall: r.overall.weighted_recall,
            f1: r.overall.weighted_f1,
        })
        .collect();
    rows.sort_by(|a, b| {
        b.accuracy
            .partial_cmp(&a.accuracy)
            .unwrap()
            .then_with(|| a.model.cmp(&b.model))
    });
    Ok(ComparisonTable { aggregation: "weighted".to_string(), rows })
}

impl ComparisonTable {
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "model,accuracy,precision ({agg}),recall ({agg}),f1 ({agg})\n",
            agg = self.aggregation
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{:.4},{:.4},{:.4},{:.4}",
                r.model, r.accuracy, r.precision, r.recall, r.f1
            );
        }
        out
    }

    pub fn to_text(&self) -> String {
        let width = self
            .rows
            .iter()
            .map(|r| r.model.len())
            .chain(std::iter::once("model".len()))
            .max()
            .unwrap_or(5);
        let mut out = format!(
            "{:<width$}  accuracy  precision  recall  f1  (aggregation: {})\n",
            "model", self.aggregation
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<width$}  {:>8.4}  {:>9.4}  {:>6.4}  {:>6.4}",
                r.model, r.accuracy, r.precision, r.recall, r.f1
            );
        }
        out
    }
}
