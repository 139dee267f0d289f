//! Text normalization, stopword removal, and subword tokenization.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Normalization switches. All default to on.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormalizationConfig {
    pub lowercase: bool,
    pub strip_urls: bool,
    pub strip_handles: bool,
    pub strip_hashtag_marks: bool,
    pub strip_punct_and_digits: bool,
    pub collapse_whitespace: bool,
}

impl Default for NormalizationConfig {
    fn default() -> Self {
        NormalizationConfig {
            lowercase: true,
            strip_urls: true,
            strip_handles: true,
            strip_hashtag_marks: true,
            strip_punct_and_digits: true,
            collapse_whitespace: true,
        }
    }
}

fn url_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\b(?:https?://|www\.)\S+").unwrap())
}

fn handle_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"@\w+").unwrap())
}

/// Normalize text. Rule order is fixed: URLs, handles, hashtag marks,
/// lowercase, punctuation and digits, whitespace collapse. Idempotent.
/// Lowercasing runs before the punctuation strip because some uppercase
/// letters lowercase to a letter plus a combining mark, which the strip
/// must then remove for the result to be a fixed point.
///
/// Hashtag handling drops the `#` mark but keeps the word ("#sad" becomes
/// "sad"); spam detection on hashtag-only tweets runs before normalization.
pub fn normalize(text: &str, cfg: &NormalizationConfig) -> String {
    let mut s = text.to_string();
    if cfg.strip_urls {
        s = url_re().replace_all(&s, " ").into_owned();
    }
    if cfg.strip_handles {
        s = handle_re().replace_all(&s, " ").into_owned();
    }
    if cfg.strip_hashtag_marks {
        s = s.replace('#', "");
    }
    if cfg.lowercase {
        s = s.to_lowercase();
    }
    if cfg.strip_punct_and_digits {
        s = s
            .chars()
            .map(|c| if c.is_alphabetic() || c.is_whitespace() { c } else { ' ' })
            .collect();
    }
    if cfg.collapse_whitespace {
        s = s.split_whitespace().collect::<Vec<_>>().join(" ");
    }
    s
}

/// Whitespace word tokenization of normalized text.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().map(String::from).collect()
}

/// Order-preserving stopword filter. The shipped default list never
/// contains negations ("not", "no").
pub fn remove_stopwords(tokens: &[String], stoplist: &std::collections::HashSet<String>) -> Vec<String> {
    tokens
        .iter()
        .filter(|t| !stoplist.contains(t.as_str()))
        .cloned()
        .collect()
}

/// The fixed 120-word default stoplist committed in-repo.
pub fn default_stoplist() -> std::collections::HashSet<String> {
    include_str!("../data/default_stoplist.txt")
        .lines()
        .map(|l| l.trim().to_string())
        .filter(|l| !l.is_empty())
        .collect()
}

pub fn load_stoplist(path: &Path) -> Result<std::collections::HashSet<String>> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(content
        .lines()
        .map(|l| l.trim().to_string())
        .filter(|l| !l.is_empty())
        .collect())
}

/// Special token ids, fixed at the head of every vocabulary.
pub const CLS_ID: u32 = 0;
pub const SEP_ID: u32 = 1;
pub const PAD_ID: u32 = 2;
pub const UNK_ID: u32 = 3;
const SPECIALS: [&str; 4] = ["[CLS]", "[SEP]", "[PAD]", "[UNK]"];

/// A greedy pair-merge (BPE-style) subword vocabulary. Every character of
/// the training alphabet is present both as a word-initial piece and as a
/// continuation piece, so every training word decomposes without unknowns.
#[derive(Debug, Clone, PartialEq)]
pub struct SubwordVocab {
    piece_to_id: HashMap<String, u32>,
    id_to_piece: Vec<String>,
    pub continuation_prefix: String,
    pub max_len: usize,
}

/// A CLS/SEP framed, padded id sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedSequence {
    pub ids: Vec<u32>,
    pub attention_mask: Vec<u8>,
    /// Per source token: half-open range of piece positions in `ids`.
    pub original_token_spans: Vec<(usize, usize)>,
}

impl SubwordVocab {
    pub fn len(&self) -> usize {
        self.id_to_piece.len()
    }

    pub fn is_empty(&self) -> bool {
        self.id_to_piece.is_empty()
    }

    pub fn piece_id(&self, piece: &str) -> Option<u32> {
        self.piece_to_id.get(piece).copied()
    }

    pub fn piece(&self, id: u32) -> Option<&str> {
        self.id_to_piece.get(id as usize).map(|s| s.as_str())
    }

    /// Persist as text: a header line with the specials and continuation
    /// prefix, then one piece per line in id order.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        writeln!(
            f,
            "#subword-vocab v1 continuation={} max_len={} cls={CLS_ID} sep={SEP_ID} pad={PAD_ID} unk={UNK_ID}",
            self.continuation_prefix, self.max_len
        )
        .map_err(|e| Error::io(path, e))?;
        for piece in &self.id_to_piece {
            writeln!(f, "{piece}").map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<SubwordVocab> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = BufReader::new(f).lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Invalid("empty vocab file".into()))?
            .map_err(|e| Error::io(path, e))?;
        let mut continuation = "##".to_string();
        let mut max_len = 64usize;
        for field in header.split_whitespace() {
            if let Some(v) = field.strip_prefix("continuation=") {
                continuation = v.to_string();
            } else if let Some(v) = field.strip_prefix("max_len=") {
                max_len = v
                    .parse()
                    .map_err(|_| Error::Invalid(format!("bad max_len '{v}'")))?;
            }
        }
        let mut id_to_piece = Vec::new();
        for line in lines {
            let line = line.map_err(|e| Error::io(path, e))?;
            id_to_piece.push(line);
        }
        let piece_to_id = id_to_piece
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), i as u32))
            .collect();
        Ok(SubwordVocab {
            piece_to_id,
            id_to_piece,
            continuation_prefix: continuation,
            max_len,
        })
    }
}

/// Train a subword vocabulary by greedy pair merging.
///
/// Pairs are counted over plain symbols; each merged symbol contributes two
/// pieces (word-initial and continuation forms). Ties between equally
/// frequent pairs break toward the lexicographically smaller pair, so the
/// result is deterministic given the corpus.
pub fn train_subword_vocab(
    corpus: &[String],
    target_size: usize,
    max_len: usize,
) -> Result<SubwordVocab> {
    if corpus.is_empty() {
        return Err(Error::Invalid("subword training corpus is empty".into()));
    }
    // Word frequencies.
    let mut word_freq: HashMap<Vec<String>, usize> = HashMap::new();
    let mut alphabet: std::collections::BTreeSet<String> = std::collections::BTreeSet::new();
    for doc in corpus {
        for word in doc.split_whitespace() {
            let symbols: Vec<String> = word.chars().map(|c| c.to_string()).collect();
            for s in &symbols {
                alphabet.insert(s.clone());
            }
            *word_freq.entry(symbols).or_insert(0) += 1;
        }
    }
    if alphabet.is_empty() {
        return Err(Error::Invalid("subword training corpus has no words".into()));
    }
    let base_size = SPECIALS.len() + 2 * alphabet.len();
    if target_size < base_size {
        return Err(Error::Invalid(format!(
            "target_size {target_size} below alphabet floor {base_size}"
        )));
    }

    // Deterministic iteration order for pair counting.
    let mut words: Vec<(Vec<String>, usize)> = word_freq.into_iter().collect();
    words.sort();

    let mut merged: Vec<String> = Vec::new(); // multi-char symbols, in merge order
    let mut size = base_size;
    while size + 2 <= target_size {
        let mut pair_counts: HashMap<(String, String), usize> = HashMap::new();
        for (symbols, freq) in &words {
            for w in symbols.windows(2) {
                *pair_counts
                    .entry((w[0].clone(), w[1].clone()))
                    .or_insert(0) += freq;
            }
        }
        let best = pair_counts.into_iter().max_by(|a, b| {
            a.1.cmp(&b.1).then_with(|| b.0.cmp(&a.0)) // max count, then lexicographically smallest pair
        });
        let Some(((left, right), count)) = best else { break };
        if count == 0 {
            break;
        }
        let joined = format!("{left}{right}");
        for (symbols, _) in &mut words {
            let mut i = 0;
            while i + 1 < symbols.len() {
                if symbols[i] == left && symbols[i + 1] == right {
                    symbols[i] = joined.clone();
                    symbols.remove(i + 1);
                } else {
                    i += 1;
                }
            }
        }
        merged.push(joined);
        size += 2;
    }

    let mut id_to_piece: Vec<String> = SPECIALS.iter().map(|s| s.to_string()).collect();
    for sym in alphabet.iter().chain(merged.iter()) {
        id_to_piece.push(sym.clone());
        id_to_piece.push(format!("##{sym}"));
    }
    let piece_to_id = id_to_piece
        .iter()
        .enumerate()
        .map(|(i, p)| (p.clone(), i as u32))
        .collect();
    Ok(SubwordVocab {
        piece_to_id,
        id_to_piece,
        continuation_prefix: "##".into(),
        max_len,
    })
}

/// Greedy longest-match decomposition of one token into piece ids.
fn decompose(token: &str, vocab: &SubwordVocab) -> Vec<u32> {
    let chars: Vec<char> = token.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let mut matched = None;
        for j in (i + 1..=chars.len()).rev() {
            let sub: String = chars[i..j].iter().collect();
            let candidate = if i == 0 {
                sub
            } else {
                format!("{}{sub}", vocab.continuation_prefix)
            };
            if let Some(id) = vocab.piece_id(&candidate) {
                matched = Some((id, j));
                break;
            }
        }
        match matched {
            Some((id, j)) => {
                out.push(id);
                i = j;
            }
            None => {
                out.push(UNK_ID);
                i += 1;
            }
        }
    }
    out
}

/// Encode tokens into a fixed-length CLS/SEP framed sequence. Sequences
/// longer than `max_len - 2` pieces are truncated at a token boundary.
pub fn encode(tokens: &[String], vocab: &SubwordVocab) -> EncodedSequence {
    let max_len = vocab.max_len;
    let mut ids = vec![CLS_ID];
    let mut spans = Vec::new();
    for token in tokens {
        let pieces = decompose(token, vocab);
        if ids.len() + pieces.len() > max_len - 1 {
            break; // token boundary truncation
        }
        let start = ids.len();
        ids.extend_from_slice(&pieces);
        spans.push((start, ids.len()));
    }
    ids.push(SEP_ID);
    let content = ids.len();
    ids.resize(max_len, PAD_ID);
    let mut mask = vec![1u8; content];
    mask.resize(max_len, 0);
    EncodedSequence {
        ids,
        attention_mask: mask,
        original_token_spans: spans,
    }
}

/// Reassemble a token from its pieces (strips continuation prefixes).
/// Returns `None` if any piece is the unknown id.
pub fn reconstruct(seq: &EncodedSequence, token_index: usize, vocab: &SubwordVocab) -> Option<String> {
    let (start, end) = *seq.original_token_spans.get(token_index)?;
    let mut out = String::new();
    for &id in &seq.ids[start..end] {
        if id == UNK_ID {
            return None;
        }
        let piece = vocab.piece(id)?;
        out.push_str(piece.strip_prefix(vocab.continuation_prefix.as_str()).unwrap_or(piece));
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn norm(s: &str) -> String {
        normalize(s, &NormalizationConfig::default())
    }

    #[test]
    fn normalize_strips_noise() {
        assert_eq!(norm("Check https://t.co/x @someone #sad!!"), "check sad");
    }

    #[test]
    fn normalize_removes_digits_and_punct() {
        assert_eq!(norm("I AM 100% fine."), "i am fine");
    }

    #[test]
    fn normalize_already_clean_is_unchanged() {
        assert_eq!(norm("check sad"), "check sad");
    }

    #[test]
    fn stopwords_filtered_in_order() {
        let stop = default_stoplist();
        let toks: Vec<String> = ["the", "sky", "is", "blue"].iter().map(|s| s.to_string()).collect();
        assert_eq!(remove_stopwords(&toks, &stop), vec!["sky", "blue"]);
    }

    #[test]
    fn stoplist_keeps_negations_and_i() {
        let stop = default_stoplist();
        let toks: Vec<String> = ["i", "am", "not", "happy"].iter().map(|s| s.to_string()).collect();
        assert_eq!(remove_stopwords(&toks, &stop), vec!["i", "not", "happy"]);
        assert!(!stop.contains("no"));
        assert!(!stop.contains("not"));
        assert_eq!(stop.len(), 120);
    }

    #[test]
    fn stopwords_empty_input() {
        assert!(remove_stopwords(&[], &default_stoplist()).is_empty());
    }

    #[test]
    fn bpe_first_merge_is_aa() {
        // "aaab" + "aab": pair aa occurs 3 times, ab twice, so the first
        // merge must be ("a","a").
        let corpus = vec!["aaab".to_string(), "aab".to_string()];
        let base = 4 + 2 * 2; // specials + {a,b} in both forms
        let vocab = train_subword_vocab(&corpus, base + 2, 16).unwrap();
        assert!(vocab.piece_id("aa").is_some());
        assert!(vocab.piece_id("##aa").is_some());
        assert!(vocab.piece_id("ab").is_none());
    }

    #[test]
    fn bpe_every_char_is_a_piece() {
        let corpus = vec!["hello world".to_string()];
        let vocab = train_subword_vocab(&corpus, 64, 16).unwrap();
        for c in "helowrd".chars() {
            assert!(vocab.piece_id(&c.to_string()).is_some());
            assert!(vocab.piece_id(&format!("##{c}")).is_some());
        }
    }

    #[test]
    fn bpe_is_deterministic() {
        let corpus = vec!["the quick brown fox".to_string(), "the lazy dog".to_string()];
        let a = train_subword_vocab(&corpus, 80, 16).unwrap();
        let b = train_subword_vocab(&corpus, 80, 16).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bpe_rejects_tiny_target() {
        let corpus = vec!["abcdef".to_string()];
        assert!(train_subword_vocab(&corpus, 5, 16).is_err());
    }

    #[test]
    fn encode_empty_tokens() {
        let vocab = train_subword_vocab(&["ab".to_string()], 16, 8).unwrap();
        let seq = encode(&[], &vocab);
        assert_eq!(seq.ids[0], CLS_ID);
        assert_eq!(seq.ids[1], SEP_ID);
        assert_eq!(&seq.ids[2..], &[PAD_ID; 6]);
        assert_eq!(&seq.attention_mask[..3], &[1, 1, 0]);
        assert_eq!(seq.ids.len(), 8);
    }

    #[test]
    fn whole_word_piece_encodes_as_one_id() {
        let corpus = vec!["aaaa aaaa aaaa".to_string()];
        let vocab = train_subword_vocab(&corpus, 12, 8).unwrap();
        // merges: aa, then aaaa (aa+aa) would need size 14; with 12 we get
        // "aa" only. Use a corpus whose full word becomes a piece.
        let vocab2 = train_subword_vocab(&corpus, 14, 8).unwrap();
        let seq = encode(&["aaaa".to_string()], &vocab2);
        assert_eq!(seq.original_token_spans[0], (1, 2));
        drop(vocab);
    }

    #[test]
    fn oov_word_reconstructs() {
        // Vocabulary knows "bipolar" and "ish" fragments through chars; the
        // greedy decomposition must reassemble the original token.
        let corpus = vec!["bipolar bipolar ish ish".to_string()];
        let vocab = train_subword_vocab(&corpus, 60, 16).unwrap();
        let seq = encode(&["bipolarish".to_string()], &vocab);
        assert_eq!(reconstruct(&seq, 0, &vocab).as_deref(), Some("bipolarish"));
    }

    #[test]
    fn unknown_character_maps_to_unk() {
        let vocab = train_subword_vocab(&["ab".to_string()], 16, 8).unwrap();
        let seq = encode(&["aqb".to_string()], &vocab);
        assert!(seq.ids.contains(&UNK_ID));
        assert!(reconstruct(&seq, 0, &vocab).is_none());
    }

    #[test]
    fn truncation_at_token_boundary() {
        let vocab = train_subword_vocab(&["ab cd".to_string()], 16, 5).unwrap();
        // "abab" splits into two pieces, so with one slot left before [SEP]
        // the whole token is dropped rather than cut in half.
        let tokens: Vec<String> = vec!["ab".into(), "cd".into(), "abab".into()];
        let seq = encode(&tokens, &vocab);
        assert_eq!(seq.ids.len(), 5);
        assert_eq!(*seq.ids.last().unwrap(), PAD_ID);
        assert_eq!(seq.original_token_spans, vec![(1, 2), (2, 3)]);
    }

    #[test]
    fn vocab_save_load_round_trip() {
        let corpus = vec!["hello world".to_string()];
        let vocab = train_subword_vocab(&corpus, 64, 32).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        vocab.save(f.path()).unwrap();
        let back = SubwordVocab::load(f.path()).unwrap();
        assert_eq!(vocab, back);
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(s in "\\PC{0,80}") {
            let cfg = NormalizationConfig::default();
            let once = normalize(&s, &cfg);
            prop_assert_eq!(normalize(&once, &cfg), once);
        }

        #[test]
        fn framing_invariants(tokens in proptest::collection::vec("[a-z]{1,6}", 0..20)) {
            let corpus = vec!["abcdefghijklmnopqrstuvwxyz".to_string()];
            let vocab = train_subword_vocab(&corpus, 4 + 52, 16).unwrap();
            let toks: Vec<String> = tokens;
            let seq = encode(&toks, &vocab);
            prop_assert_eq!(seq.ids.len(), 16);
            prop_assert_eq!(seq.ids.iter().filter(|&&i| i == CLS_ID).count(), 1);
            prop_assert_eq!(seq.ids.iter().filter(|&&i| i == SEP_ID).count(), 1);
            // mask monotone non-increasing
            for w in seq.attention_mask.windows(2) {
                prop_assert!(w[0] >= w[1]);
            }
        }
    }
}
