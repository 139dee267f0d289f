//! Per-class phrase sets, multi-phrase matching, and the first-person
//! weak-labeling rule.

use std::collections::{BTreeMap, HashSet};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::DepressionClass;
use crate::error::{Error, Result};
use crate::textprep::{self, NormalizationConfig};

/// Tokens taken as evidence that the author speaks about themselves.
pub const FIRST_PERSON_MARKERS: [&str; 7] = ["i", "i'm", "im", "i've", "ive", "my", "me"];

/// Tokens indicating the sentence is about someone else. A first-person
/// marker in the same sentence as one of these is not treated as
/// self-report unless the matched phrase itself is first-person framed.
pub const THIRD_PERSON_MARKERS: [&str; 24] = [
    "friend", "friends", "he", "she", "his", "her", "him", "they", "them",
    "their", "brother", "sister", "mom", "mother", "dad", "father", "wife",
    "husband", "son", "daughter", "someone", "somebody", "people", "neighbor",
];

/// Symptom-only atypical cues (as opposed to diagnosis phrases). These are
/// weak evidence alone: labeling additionally requires a first-person marker
/// and at least one other atypical cue in the text.
const ATYPICAL_SYMPTOM_CUES: [&str; 5] = [
    "hypersomnia",
    "feeling sad or hopeless",
    "increased appetite",
    "weight gain",
    "feeling worthless",
];

pub fn is_atypical_symptom_cue(phrase: &str) -> bool {
    ATYPICAL_SYMPTOM_CUES.contains(&phrase)
}

/// Per-class phrase lists. All phrases are lowercase, non-empty, and
/// whitespace-normalized; no phrase appears under two classes.
#[derive(Debug, Clone)]
pub struct LexiconSet {
    entries: BTreeMap<DepressionClass, Vec<String>>,
    pub version: String,
    /// Phrases sorted by token length descending, for longest-match search.
    by_length: Vec<(Vec<String>, DepressionClass, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexiconMatch {
    pub class: DepressionClass,
    pub phrase: String,
    /// Half-open char-offset span into the normalized text.
    pub char_span: (usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeakLabelDecision {
    Labeled,
    NeedsReview,
    NoMatch,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeakLabelOutcome {
    pub decision: WeakLabelDecision,
    pub label: Option<DepressionClass>,
    pub matches: Vec<LexiconMatch>,
    pub first_person: bool,
}

impl LexiconSet {
    fn build(entries: BTreeMap<DepressionClass, Vec<String>>, version: String) -> Result<LexiconSet> {
        let mut seen: BTreeMap<&str, DepressionClass> = BTreeMap::new();
        for (class, phrases) in &entries {
            if *class != DepressionClass::NoDepression && phrases.is_empty() {
                return Err(Error::Lexicon(format!("class {class} has no phrases")));
            }
            for phrase in phrases {
                if phrase.is_empty() {
                    return Err(Error::Lexicon(format!("empty phrase under {class}")));
                }
                if phrase != &phrase.to_lowercase()
                    || phrase != &phrase.split_whitespace().collect::<Vec<_>>().join(" ")
                {
                    return Err(Error::Lexicon(format!(
                        "phrase '{phrase}' under {class} is not normalized"
                    )));
                }
                if let Some(other) = seen.insert(phrase.as_str(), *class) {
                    if other != *class {
                        return Err(Error::Lexicon(format!(
                            "phrase '{phrase}' appears under both {other} and {class}"
                        )));
                    }
                }
            }
        }
        let mut by_length: Vec<(Vec<String>, DepressionClass, String)> = Vec::new();
        for (class, phrases) in &entries {
            for phrase in phrases {
                let tokens: Vec<String> = phrase.split_whitespace().map(String::from).collect();
                by_length.push((tokens, *class, phrase.clone()));
            }
        }
        // Longest first; then phrase text so the order never depends on the
        // input file's phrase order.
        by_length.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.2.cmp(&b.2)));
        Ok(LexiconSet {
            entries,
            version,
            by_length,
        })
    }

    pub fn entries(&self) -> &BTreeMap<DepressionClass, Vec<String>> {
        &self.entries
    }

    /// The default set shipped in-repo.
    pub fn default_set() -> LexiconSet {
        parse_lexicon_json(include_str!("../data/default_lexicons.json"))
            .expect("bundled default lexicons are valid")
    }
}

fn parse_lexicon_json(content: &str) -> Result<LexiconSet> {
    #[derive(Deserialize)]
    struct Raw {
        #[serde(default)]
        version: Option<String>,
        #[serde(flatten)]
        classes: BTreeMap<String, Vec<String>>,
    }
    let raw: Raw = serde_json::from_str(content)?;
    let cfg = NormalizationConfig::default();
    let mut entries: BTreeMap<DepressionClass, Vec<String>> = BTreeMap::new();
    for class in DepressionClass::ALL {
        entries.insert(class, Vec::new());
    }
    for (name, phrases) in raw.classes {
        let class = DepressionClass::parse(&name)
            .map_err(|_| Error::Lexicon(format!("unknown class '{name}' in lexicon file")))?;
        let normalized: Vec<String> = phrases
            .iter()
            .map(|p| textprep::normalize(p, &cfg))
            .collect();
        entries.insert(class, normalized);
    }
    LexiconSet::build(entries, raw.version.unwrap_or_else(|| "unversioned".into()))
}

/// Load a lexicon file: a JSON object mapping class name to phrase list.
pub fn load_lexicons(path: &Path) -> Result<LexiconSet> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_lexicon_json(&content)
}

/// Report all non-overlapping longest matches, word-boundary aware, sorted
/// by span start. `text` must already be normalized.
pub fn match_lexicons(text: &str, lex: &LexiconSet) -> Vec<LexiconMatch> {
    // Token list with char offsets: (token, char_start, char_end).
    let mut token_strs: Vec<(String, usize, usize)> = Vec::new();
    let mut char_pos = 0usize;
    let mut current_start = None;
    let mut current = String::new();
    for ch in text.chars().chain(std::iter::once(' ')) {
        if ch.is_whitespace() {
            if let Some(start) = current_start.take() {
                let len = current.chars().count();
                token_strs.push((std::mem::take(&mut current), start, start + len));
            }
        } else {
            if current_start.is_none() {
                current_start = Some(char_pos);
            }
            current.push(ch);
        }
        char_pos += 1;
    }

    // Collect every candidate (phrase, start) pair, then keep a maximal
    // non-overlapping set preferring longer phrases over earlier starts, so
    // a long specific phrase wins even when a shorter one begins sooner.
    // Candidate order is (token length desc, phrase text, start), which is
    // independent of lexicon file order.
    let mut selected: Vec<(usize, usize, LexiconMatch)> = Vec::new(); // (start, end) token idx
    for (phrase_tokens, class, phrase) in &lex.by_length {
        let n = phrase_tokens.len();
        for i in 0..token_strs.len().saturating_sub(n - 1) {
            let window_matches = (0..n).all(|k| token_strs[i + k].0 == phrase_tokens[k]);
            let overlaps = selected.iter().any(|&(s, e, _)| i < e && i + n > s);
            if window_matches && !overlaps {
                selected.push((
                    i,
                    i + n,
                    LexiconMatch {
                        class: *class,
                        phrase: phrase.clone(),
                        char_span: (token_strs[i].1, token_strs[i + n - 1].2),
                    },
                ));
            }
        }
    }
    selected.sort_by_key(|&(start, _, _)| start);
    selected.into_iter().map(|(_, _, m)| m).collect()
}

/// Apply the first-person weak-labeling rule to normalized text.
///
/// * no lexicon match: `NoMatch` (callers may map this to `NoDepression`);
/// * matches across more than one class: `NeedsReview`;
/// * matches with first-person evidence: `Labeled`;
/// * otherwise `NeedsReview`.
///
/// First-person evidence is a first-person token inside the matched phrase
/// itself, or a first-person token in the text with no third-person subject
/// present. Symptom-only atypical matches additionally need a second
/// distinct atypical cue.
pub fn weak_label(text: &str, lex: &LexiconSet) -> WeakLabelOutcome {
    let matches = match_lexicons(text, lex);
    if matches.is_empty() {
        return WeakLabelOutcome {
            decision: WeakLabelDecision::NoMatch,
            label: None,
            matches,
            first_person: false,
        };
    }
    let classes: HashSet<DepressionClass> = matches.iter().map(|m| m.class).collect();

    let tokens: Vec<&str> = text.split_whitespace().collect();
    let has_fp_token = tokens.iter().any(|t| FIRST_PERSON_MARKERS.contains(t));
    let has_tp_token = tokens.iter().any(|t| THIRD_PERSON_MARKERS.contains(t));
    let fp_in_phrase = matches.iter().any(|m| {
        m.phrase
            .split_whitespace()
            .any(|t| FIRST_PERSON_MARKERS.contains(&t))
    });
    let first_person = fp_in_phrase || (has_fp_token && !has_tp_token);

    if classes.len() > 1 {
        return WeakLabelOutcome {
            decision: WeakLabelDecision::NeedsReview,
            label: None,
            matches,
            first_person,
        };
    }
    let class = *classes.iter().next().unwrap();

    let mut labeled = first_person;
    if labeled && class == DepressionClass::Atypical {
        let symptom_only = matches.iter().all(|m| is_atypical_symptom_cue(&m.phrase));
        if symptom_only {
            let distinct: HashSet<&str> = matches.iter().map(|m| m.phrase.as_str()).collect();
            labeled = distinct.len() >= 2;
        }
    }

    if labeled {
        WeakLabelOutcome {
            decision: WeakLabelDecision::Labeled,
            label: Some(class),
            matches,
            first_person,
        }
    } else {
        WeakLabelOutcome {
            decision: WeakLabelDecision::NeedsReview,
            label: None,
            matches,
            first_person,
        }
    }
}

/// One review-queue line for a `NeedsReview` outcome.
#[derive(Debug, Serialize)]
pub struct ReviewItem<'a> {
    pub tweet_id: &'a str,
    pub text: &'a str,
    pub matches: &'a [LexiconMatch],
    pub reason: &'a str,
}

pub fn write_review_queue(path: &Path, items: &[ReviewItem<'_>]) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    for item in items {
        let line = serde_json::to_string(item)?;
        writeln!(f, "{line}").map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_set_contains_core_phrases() {
        let lex = LexiconSet::default_set();
        assert!(lex.entries()[&DepressionClass::Bipolar]
            .contains(&"suffering from bipolar depression".to_string()));
        assert!(lex.entries()[&DepressionClass::Postpartum]
            .contains(&"maternal depression".to_string()));
        for class in DepressionClass::DEPRESSION {
            assert!(!lex.entries()[&class].is_empty());
        }
        assert!(lex.entries()[&DepressionClass::NoDepression].is_empty());
    }

    #[test]
    fn duplicate_phrase_across_classes_fails() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(
            br#"{"bipolar":["bipolar"],"major":["bipolar"],"psychotic":["psychotic depression"],"atypical":["hypersomnia"],"postpartum":["maternal depression"]}"#,
        )
        .unwrap();
        f.flush().unwrap();
        assert!(load_lexicons(f.path()).is_err());
    }

    #[test]
    fn empty_class_list_fails() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(
            br#"{"bipolar":[],"major":["i have major depression"],"psychotic":["psychotic depression"],"atypical":["hypersomnia"],"postpartum":["maternal depression"]}"#,
        )
        .unwrap();
        f.flush().unwrap();
        assert!(load_lexicons(f.path()).is_err());
    }

    #[test]
    fn longest_match_wins() {
        let lex = LexiconSet::default_set();
        let matches = match_lexicons("i have psychotic depression today", &lex);
        assert_eq!(matches.len(), 1);
        assert_eq!(matches[0].class, DepressionClass::Psychotic);
        assert_eq!(matches[0].phrase, "i have psychotic depression");
        assert_eq!(matches[0].char_span, (0, 27));
    }

    #[test]
    fn empty_text_no_matches() {
        assert!(match_lexicons("", &LexiconSet::default_set()).is_empty());
    }

    #[test]
    fn word_boundary_blocks_substring() {
        let lex = LexiconSet::default_set();
        assert!(match_lexicons("bipolarization of politics", &lex).is_empty());
    }

    #[test]
    fn span_substring_equals_phrase() {
        let lex = LexiconSet::default_set();
        let text = "today i have bipolar disorder sadly";
        let matches = match_lexicons(text, &lex);
        assert_eq!(matches.len(), 1);
        let (a, b) = matches[0].char_span;
        let sub: String = text.chars().skip(a).take(b - a).collect();
        assert_eq!(sub, matches[0].phrase);
    }

    #[test]
    fn weak_label_first_person_bipolar() {
        let lex = LexiconSet::default_set();
        let out = weak_label("i have bipolar disorder and i am tired", &lex);
        assert_eq!(out.decision, WeakLabelDecision::Labeled);
        assert_eq!(out.label, Some(DepressionClass::Bipolar));
        assert!(out.first_person);
        assert!(!out.matches.is_empty());
    }

    #[test]
    fn weak_label_third_person_needs_review() {
        let lex = LexiconSet::default_set();
        let out = weak_label("my friend has postpartum depression", &lex);
        assert_eq!(out.decision, WeakLabelDecision::NeedsReview);
        assert_eq!(out.label, None);
    }

    #[test]
    fn weak_label_no_match() {
        let lex = LexiconSet::default_set();
        let out = weak_label("what a sunny day", &lex);
        assert_eq!(out.decision, WeakLabelDecision::NoMatch);
        assert!(out.matches.is_empty());
    }

    #[test]
    fn multi_class_conflict_needs_review() {
        let lex = LexiconSet::default_set();
        let out = weak_label("i have bipolar disorder and psychotic depression", &lex);
        assert_eq!(out.decision, WeakLabelDecision::NeedsReview);
    }

    #[test]
    fn atypical_single_cue_needs_review() {
        let lex = LexiconSet::default_set();
        let out = weak_label("i have hypersomnia these days", &lex);
        assert_eq!(out.decision, WeakLabelDecision::NeedsReview);
        let out = weak_label("i have hypersomnia and increased appetite lately", &lex);
        assert_eq!(out.decision, WeakLabelDecision::Labeled);
        assert_eq!(out.label, Some(DepressionClass::Atypical));
    }

    #[test]
    fn match_output_independent_of_phrase_order() {
        // Same phrases, two different file orders.
        let a = r#"{"bipolar":["bipolar","i have bipolar disorder"],"major":["i have major depression"],"psychotic":["psychotic depression"],"atypical":["hypersomnia"],"postpartum":["maternal depression"]}"#;
        let b = r#"{"bipolar":["i have bipolar disorder","bipolar"],"major":["i have major depression"],"psychotic":["psychotic depression"],"atypical":["hypersomnia"],"postpartum":["maternal depression"]}"#;
        let la = super::parse_lexicon_json(a).unwrap();
        let lb = super::parse_lexicon_json(b).unwrap();
        let text = "i have bipolar disorder and bipolar moods";
        assert_eq!(match_lexicons(text, &la), match_lexicons(text, &lb));
    }

    #[test]
    fn no_match_iff_empty_matches() {
        let lex = LexiconSet::default_set();
        for text in [
            "i have bipolar disorder",
            "sunny day in the park",
            "my sister has melancholic depression",
            "",
        ] {
            let out = weak_label(text, &lex);
            assert_eq!(
                out.decision == WeakLabelDecision::NoMatch,
                out.matches.is_empty()
            );
        }
    }
}
