//! Token attribution for trained models: occlusion (leave-one-token-out) and
//! Monte-Carlo sampled Shapley values, plus HTML/plain-text highlight
//! rendering. Token "removal" is deletion from the sequence, which works
//! uniformly across all model families.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{predict_tokens, ModelArtifact, Prediction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributionMethod {
    Occlusion,
    Shapley,
}

impl AttributionMethod {
    pub fn parse(name: &str) -> Result<AttributionMethod> {
        match name {
            "occlusion" => Ok(AttributionMethod::Occlusion),
            "shapley" => Ok(AttributionMethod::Shapley),
            other => Err(Error::Invalid(format!("unknown attribution method '{other}'"))),
        }
    }
}

/// Per-token contribution scores toward the predicted class; positive means
/// the token supports the prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribution {
    pub tokens: Vec<String>,
    pub scores: Vec<f64>,
    pub predicted: Prediction,
    pub method: AttributionMethod,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    pub seed: u64,
}

/// Probability of the already-predicted class when only `keep` tokens remain.
fn class_prob(artifact: &ModelArtifact, tokens: &[String], class_idx: usize) -> Result<f64> {
    Ok(predict_tokens(artifact, tokens)?.probabilities[class_idx])
}

fn preprocessed_tokens(artifact: &ModelArtifact, text: &str) -> Result<Vec<String>> {
    let tokens = artifact.preprocess.tokens(text);
    if tokens.is_empty() {
        return Err(Error::Invalid("text is empty after preprocessing".into()));
    }
    Ok(tokens)
}

/// score(i) = P(predicted | full text) - P(predicted | text without token i).
pub fn explain_occlusion(artifact: &ModelArtifact, text: &str) -> Result<Attribution> {
    let tokens = preprocessed_tokens(artifact, text)?;
    let predicted = predict_tokens(artifact, &tokens)?;
    let class_idx = artifact
        .label_order
        .iter()
        .position(|&c| c == predicted.label)
        .expect("predicted label is in label order");
    let full = predicted.probabilities[class_idx];
    let mut scores = Vec::with_capacity(tokens.len());
    for i in 0..tokens.len() {
        let mut reduced = tokens.clone();
        reduced.remove(i);
        scores.push(full - class_prob(artifact, &reduced, class_idx)?);
    }
    Ok(Attribution {
        tokens,
        scores,
        predicted,
        method: AttributionMethod::Occlusion,
        samples: None,
        seed: 0,
    })
}

/// Permutation Monte-Carlo Shapley estimate with deletion as the absence
/// baseline. After sampling, scores are shifted uniformly so that the
/// efficiency identity sum(scores) = P(full) - P(empty) holds exactly.
pub fn explain_shapley(
    artifact: &ModelArtifact,
    text: &str,
    samples: usize,
    seed: u64,
) -> Result<Attribution> {
    if samples == 0 {
        return Err(Error::Invalid("shapley needs at least one sample".into()));
    }
    let tokens = preprocessed_tokens(artifact, text)?;
    let predicted = predict_tokens(artifact, &tokens)?;
    let class_idx = artifact
        .label_order
        .iter()
        .position(|&c| c == predicted.label)
        .expect("predicted label is in label order");
    let n = tokens.len();
    let full = predicted.probabilities[class_idx];
    let empty = class_prob(artifact, &[], class_idx)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scores = vec![0.0; n];
    let mut perm: Vec<usize> = (0..n).collect();
    let mut included = vec![false; n];
    for _ in 0..samples {
        perm.shuffle(&mut rng);
        included.fill(false);
        let mut prev = empty;
        for &i in &perm {
            included[i] = true;
            let subset: Vec<String> = tokens
                .iter()
                .enumerate()
                .filter(|(j, _)| included[*j])
                .map(|(_, t)| t.clone())
                .collect();
            let with = class_prob(artifact, &subset, class_idx)?;
            scores[i] += with - prev;
            prev = with;
        }
    }
    for s in &mut scores {
        *s /= samples as f64;
    }
    // Enforce efficiency exactly.
    let target = full - empty;
    let gap = (target - scores.iter().sum::<f64>()) / n as f64;
    for s in &mut scores {
        *s += gap;
    }
    Ok(Attribution {
        tokens,
        scores,
        predicted,
        method: AttributionMethod::Shapley,
        samples: Some(samples),
        seed,
    })
}

/// Exact Shapley values by enumerating every token coalition. Exponential in
/// token count; intended as a test oracle for short inputs.
pub fn exact_shapley(artifact: &ModelArtifact, text: &str) -> Result<Vec<f64>> {
    let tokens = preprocessed_tokens(artifact, text)?;
    let n = tokens.len();
    if n > 20 {
        return Err(Error::Invalid(format!("exact shapley on {n} tokens is infeasible")));
    }
    let predicted = predict_tokens(artifact, &tokens)?;
    let class_idx = artifact
        .label_order
        .iter()
        .position(|&c| c == predicted.label)
        .unwrap();
    // Value of every coalition, indexed by bitmask.
    let mut value = vec![0.0; 1 << n];
    for mask in 0..(1usize << n) {
        let subset: Vec<String> = (0..n)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| tokens[i].clone())
            .collect();
        value[mask] = class_prob(artifact, &subset, class_idx)?;
    }
    let mut factorial = vec![1.0f64; n + 1];
    for k in 1..=n {
        factorial[k] = factorial[k - 1] * k as f64;
    }
    let mut scores = vec![0.0; n];
    for (i, score) in scores.iter_mut().enumerate() {
        for mask in 0..(1usize << n) {
            if mask & (1 << i) != 0 {
                continue;
            }
            let s = (mask as u32).count_ones() as usize;
            let weight = factorial[s] * factorial[n - s - 1] / factorial[n];
            *score += weight * (value[mask | (1 << i)] - value[mask]);
        }
    }
    Ok(scores)
}

/// Tokens scoring above this fraction of the maximum positive score are
/// highlighted.
pub const HIGHLIGHT_FRACTION: f64 = 0.2;

fn threshold(scores: &[f64]) -> f64 {
    let max_positive = scores.iter().cloned().fold(0.0f64, f64::max);
    HIGHLIGHT_FRACTION * max_positive
}

/// Self-contained HTML report: supporting tokens green, opposing tokens red.
pub fn render_highlights_html(attr: &Attribution) -> String {
    let thr = threshold(&attr.scores);
    let mut body = String::new();
    for (token, &score) in attr.tokens.iter().zip(&attr.scores) {
        let escaped = html_escape(token);
        if thr > 0.0 && score > thr {
            body.push_str(&format!(
                "<span class=\"pos\" title=\"{score:+.4}\">{escaped}</span> "
            ));
        } else if thr > 0.0 && score < -thr {
            body.push_str(&format!(
                "<span class=\"neg\" title=\"{score:+.4}\">{escaped}</span> "
            ));
        } else {
            body.push_str(&escaped);
            body.push(' ');
        }
    }
    let prob = attr
        .predicted
        .probabilities
        .iter()
        .cloned()
        .fold(0.0f64, f64::max);
    format!(
        "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\">\n<style>\n\
         .pos {{ background: #9be89b; }}\n.neg {{ background: #f2a3a3; }}\n\
         body {{ font-family: sans-serif; margin: 2em; }}\n</style></head>\n<body>\n\
         <p>predicted class: <b>{}</b> (p = {:.4}, method: {})</p>\n<p>{}</p>\n</body></html>\n",
        attr.predicted.label,
        prob,
        match attr.method {
            AttributionMethod::Occlusion => "occlusion",
            AttributionMethod::Shapley => "shapley",
        },
        body.trim_end()
    )
}

/// Plain-text fallback: supporting tokens as `[+token]`, opposing as
/// `[-token]`.
pub fn render_highlights_text(attr: &Attribution) -> String {
    let thr = threshold(&attr.scores);
    let mut words = Vec::with_capacity(attr.tokens.len());
    for (token, &score) in attr.tokens.iter().zip(&attr.scores) {
        if thr > 0.0 && score > thr {
            words.push(format!("[+{token}]"));
        } else if thr > 0.0 && score < -thr {
            words.push(format!("[-{token}]"));
        } else {
            words.push(token.clone());
        }
    }
    let prob = attr
        .predicted
        .probabilities
        .iter()
        .cloned()
        .fold(0.0f64, f64::max);
    format!(
        "predicted: {} (p = {:.4})\n{}\n",
        attr.predicted.label,
        prob,
        words.join(" ")
    )
}

/// Write the HTML report and the `.txt` fallback next to it.
pub fn render_highlights(attr: &Attribution, html_path: &Path) -> Result<()> {
    std::fs::write(html_path, render_highlights_html(attr))
        .map_err(|e| Error::io(html_path, e))?;
    let txt_path = html_path.with_extension("txt");
    std::fs::write(&txt_path, render_highlights_text(attr)).map_err(|e| Error::io(txt_path, e))
}

fn html_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
