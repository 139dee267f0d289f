//! Corpus handling: CSV ingestion, exclusion filtering, labeled datasets,
//! stratified splits, and a synthetic corpus generator.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexicon::{self, LexiconSet};
use crate::textprep::{self, NormalizationConfig};

/// The closed label set: five depression types plus the negative class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepressionClass {
    Bipolar,
    Major,
    Psychotic,
    Atypical,
    Postpartum,
    NoDepression,
}

impl DepressionClass {
    /// All six classes in canonical order. This is also the default
    /// `label_order` used by trained models.
    pub const ALL: [DepressionClass; 6] = [
        DepressionClass::Bipolar,
        DepressionClass::Major,
        DepressionClass::Psychotic,
        DepressionClass::Atypical,
        DepressionClass::Postpartum,
        DepressionClass::NoDepression,
    ];

    /// The five positive (depression) classes.
    pub const DEPRESSION: [DepressionClass; 5] = [
        DepressionClass::Bipolar,
        DepressionClass::Major,
        DepressionClass::Psychotic,
        DepressionClass::Atypical,
        DepressionClass::Postpartum,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            DepressionClass::Bipolar => "bipolar",
            DepressionClass::Major => "major",
            DepressionClass::Psychotic => "psychotic",
            DepressionClass::Atypical => "atypical",
            DepressionClass::Postpartum => "postpartum",
            DepressionClass::NoDepression => "no_depression",
        }
    }

    pub fn parse(name: &str) -> Result<DepressionClass> {
        DepressionClass::ALL
            .iter()
            .copied()
            .find(|c| c.as_str() == name)
            .ok_or_else(|| Error::Invalid(format!("unknown class name '{name}'")))
    }

    /// Classes sorted by serialized name; used wherever the contract says
    /// ties break by class name order.
    pub fn name_order() -> [DepressionClass; 6] {
        let mut all = DepressionClass::ALL;
        all.sort_by_key(|c| c.as_str());
        all
    }
}

impl fmt::Display for DepressionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Where a label came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    LexiconWeak,
    Manual,
    Synthetic,
}

/// One raw ingested row. `text` is preserved byte-for-byte from the source
/// until preprocessing is explicitly applied.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TweetRecord {
    pub id: String,
    pub text: String,
    pub lang_hint: Option<String>,
    pub is_retweet: bool,
    /// Source columns in file order.
    pub raw_row: Vec<(String, String)>,
    /// Set at ingest time for rows with empty text.
    pub needs_exclusion: bool,
}

/// A preprocessed, labeled example.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub tweet_id: String,
    pub clean_text: String,
    pub tokens: Vec<String>,
    pub label: DepressionClass,
    pub provenance: Provenance,
}

/// Column roles for CSV ingestion.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColumnMap {
    pub text: String,
    pub id: Option<String>,
    pub lang: Option<String>,
    pub retweet: Option<String>,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            text: "text".into(),
            id: Some("id".into()),
            lang: None,
            retweet: None,
        }
    }
}

/// Read one `TweetRecord` per data row. Rows with empty text are returned
/// flagged (`needs_exclusion`), never dropped silently.
pub fn ingest_csv(path: &Path, columns: &ColumnMap) -> Result<Vec<TweetRecord>> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .flexible(false)
        .from_path(path)
        .map_err(|e| Error::Invalid(format!("cannot open CSV {}: {e}", path.display())))?;

    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Invalid(format!("cannot read CSV header: {e}")))?
        .iter()
        .map(|s| s.to_string())
        .collect();

    let col_index = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn {
                column: name.to_string(),
                path: path.to_path_buf(),
            })
    };

    let text_idx = col_index(&columns.text)?;
    let id_idx = columns.id.as_deref().map(col_index).transpose()?;
    let lang_idx = columns.lang.as_deref().map(col_index).transpose()?;
    let rt_idx = columns.retweet.as_deref().map(col_index).transpose()?;

    let mut records = Vec::new();
    let mut seen_ids = HashSet::new();
    for (row_no, row) in reader.records().enumerate() {
        let row = row.map_err(|e| Error::MalformedRow {
            row: row_no + 2, // 1-based, after the header line
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let text = row.get(text_idx).unwrap_or("").to_string();
        let id = match id_idx {
            Some(i) => row.get(i).unwrap_or("").to_string(),
            None => format!("row{}", row_no + 1),
        };
        if id.is_empty() {
            return Err(Error::MalformedRow {
                row: row_no + 2,
                path: path.to_path_buf(),
                message: "empty id".into(),
            });
        }
        if !seen_ids.insert(id.clone()) {
            return Err(Error::MalformedRow {
                row: row_no + 2,
                path: path.to_path_buf(),
                message: format!("duplicate id '{id}'"),
            });
        }
        let lang_hint = lang_idx
            .and_then(|i| row.get(i))
            .map(|s| s.trim().to_lowercase())
            .filter(|s| !s.is_empty());
        let flag_rt = rt_idx
            .and_then(|i| row.get(i))
            .map(|v| matches!(v.trim().to_lowercase().as_str(), "true" | "1" | "yes" | "t" | "y"))
            .unwrap_or(false);
        let is_retweet = flag_rt || text.to_lowercase().starts_with("rt @");
        let needs_exclusion = text.trim().is_empty();
        let raw_row = headers
            .iter()
            .cloned()
            .zip(row.iter().map(|s| s.to_string()))
            .collect();
        records.push(TweetRecord {
            id,
            text,
            lang_hint,
            is_retweet,
            raw_row,
            needs_exclusion,
        });
    }
    Ok(records)
}

/// Write records back to CSV preserving the original columns. Together with
/// [`ingest_csv`] this round-trips: re-ingesting yields equal records.
pub fn write_records_csv(path: &Path, records: &[TweetRecord]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| {
        Error::Invalid(format!("cannot write CSV {}: {e}", path.display()))
    })?;
    if let Some(first) = records.first() {
        let headers: Vec<&str> = first.raw_row.iter().map(|(k, _)| k.as_str()).collect();
        writer
            .write_record(&headers)
            .map_err(|e| Error::Invalid(e.to_string()))?;
        for rec in records {
            let row: Vec<&str> = rec.raw_row.iter().map(|(_, v)| v.as_str()).collect();
            writer
                .write_record(&row)
                .map_err(|e| Error::Invalid(e.to_string()))?;
        }
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Why a record was excluded. Each excluded record carries exactly one
/// primary reason.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionReason {
    Empty,
    Retweet,
    SpamHashtagOnly,
    NonEnglish,
    Incomplete,
    Duplicate,
}

/// Toggles for the exclusion rules. Rules are applied in the order of the
/// `ExclusionReason` variants; the first rule that fires is the primary
/// reason.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExclusionConfig {
    pub exclude_retweets: bool,
    pub exclude_spam_hashtag_only: bool,
    pub exclude_non_english: bool,
    pub exclude_incomplete: bool,
    pub exclude_duplicates: bool,
    /// "Incomplete" means fewer than this many word tokens after
    /// normalization.
    pub min_tokens: usize,
    /// English-trigram score below this marks a record non-English.
    pub english_threshold: f64,
}

impl Default for ExclusionConfig {
    fn default() -> Self {
        ExclusionConfig {
            exclude_retweets: true,
            exclude_spam_hashtag_only: true,
            exclude_non_english: true,
            exclude_incomplete: true,
            exclude_duplicates: true,
            min_tokens: 3,
            english_threshold: 0.09,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExcludedRecord {
    pub record: TweetRecord,
    pub reason: ExclusionReason,
}

impl Serialize for TweetRecord {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut s = serializer.serialize_struct("TweetRecord", 4)?;
        s.serialize_field("id", &self.id)?;
        s.serialize_field("text", &self.text)?;
        s.serialize_field("lang_hint", &self.lang_hint)?;
        s.serialize_field("is_retweet", &self.is_retweet)?;
        s.end()
    }
}

// Frequent English character trigrams, used by the lightweight language
// filter. Scored over lowercase word-internal trigrams.
const ENGLISH_TRIGRAMS: &[&str] = &[
    "the", "and", "ing", "her", "hat", "his", "tha", "ere", "for", "ent",
    "ion", "ter", "was", "you", "ith", "ver", "all", "wit", "thi", "tio",
    "nde", "has", "nce", "tis", "oft", "men", "ave", "ess", "are", "ould",
    "igh", "ght", "out", "rea", "eve", "ome", "ght", "ust", "ear", "oul",
    "ake", "ame", "ime", "sta", "een", "our", "ted", "ers", "res", "ons",
    "ati", "sto", "ore", "wor", "day", "ive", "not", "hin", "but", "ess",
];

/// Score in [0,1]: fraction of character trigrams that are common English
/// trigrams. Texts with a high share of non-ASCII letters score 0.
pub fn english_score(text: &str) -> f64 {
    let lower = text.to_lowercase();
    let letters: Vec<char> = lower.chars().filter(|c| c.is_alphabetic()).collect();
    if letters.is_empty() {
        return 0.0;
    }
    let non_ascii = letters.iter().filter(|c| !c.is_ascii()).count();
    if non_ascii as f64 / letters.len() as f64 > 0.2 {
        return 0.0;
    }
    let set: HashSet<&str> = ENGLISH_TRIGRAMS.iter().copied().collect();
    let mut total = 0usize;
    let mut hits = 0usize;
    for word in lower.split(|c: char| !c.is_alphabetic()) {
        let chars: Vec<char> = word.chars().collect();
        if chars.len() < 3 {
            continue;
        }
        for w in chars.windows(3) {
            total += 1;
            let tri: String = w.iter().collect();
            if set.contains(tri.as_str()) {
                hits += 1;
            }
        }
    }
    if total == 0 {
        // Very short, ASCII-alphabetic text; treat as plausible English.
        return 1.0;
    }
    hits as f64 / total as f64
}

fn is_english(record: &TweetRecord, threshold: f64) -> bool {
    if let Some(hint) = &record.lang_hint {
        return hint == "en";
    }
    english_score(&record.text) >= threshold
}

fn is_hashtag_only(text: &str) -> bool {
    let mut any = false;
    for tok in text.split_whitespace() {
        if !tok.starts_with('#') {
            return false;
        }
        any = true;
    }
    any
}

/// Key used for duplicate detection: case-folded, whitespace-collapsed text.
fn dedup_key(text: &str) -> String {
    text.to_lowercase().split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Partition records into kept and excluded (with one primary reason each).
/// Filtering is total: kept plus excluded always equals the input.
pub fn apply_exclusions(
    records: Vec<TweetRecord>,
    rules: &ExclusionConfig,
) -> (Vec<TweetRecord>, Vec<ExcludedRecord>) {
    let norm_cfg = NormalizationConfig::default();
    let mut kept = Vec::new();
    let mut excluded = Vec::new();
    let mut seen = HashSet::new();
    for record in records {
        let reason = if record.text.trim().is_empty() {
            Some(ExclusionReason::Empty)
        } else if rules.exclude_retweets && record.is_retweet {
            Some(ExclusionReason::Retweet)
        } else if rules.exclude_spam_hashtag_only && is_hashtag_only(&record.text) {
            Some(ExclusionReason::SpamHashtagOnly)
        } else if rules.exclude_non_english && !is_english(&record, rules.english_threshold) {
            Some(ExclusionReason::NonEnglish)
        } else if rules.exclude_incomplete
            && textprep::normalize(&record.text, &norm_cfg)
                .split_whitespace()
                .count()
                < rules.min_tokens
        {
            Some(ExclusionReason::Incomplete)
        } else if rules.exclude_duplicates && !seen.insert(dedup_key(&record.text)) {
            Some(ExclusionReason::Duplicate)
        } else {
            None
        };
        match reason {
            Some(reason) => excluded.push(ExcludedRecord { record, reason }),
            None => kept.push(record),
        }
    }
    (kept, excluded)
}

/// A stratified train/validation/test partition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<LabeledExample>,
    pub validation: Vec<LabeledExample>,
    pub test: Vec<LabeledExample>,
    pub seed: u64,
    pub ratios: [f64; 3],
}

/// Stratified split via largest-remainder apportionment per class.
///
/// Remainder ties rotate across classes in class-name order so that tied
/// leftovers spread over partitions instead of piling onto one.
pub fn stratified_split(
    examples: &[LabeledExample],
    ratios: [f64; 3],
    seed: u64,
) -> Result<DatasetSplit> {
    let sum: f64 = ratios.iter().sum();
    if (sum - 1.0).abs() > 1e-9 || ratios.iter().any(|&r| r <= 0.0) {
        return Err(Error::Invalid(format!(
            "split ratios must be positive and sum to 1, got {ratios:?}"
        )));
    }
    let mut by_class: BTreeMap<DepressionClass, Vec<&LabeledExample>> = BTreeMap::new();
    for ex in examples {
        by_class.entry(ex.label).or_default().push(ex);
    }
    for (class, members) in &by_class {
        if members.len() < 3 {
            return Err(Error::Invalid(format!(
                "class {class} has {} examples, fewer than the 3 partitions",
                members.len()
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut parts: [Vec<LabeledExample>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for (class_pos, class) in DepressionClass::name_order().iter().enumerate() {
        let Some(members) = by_class.get(class) else { continue };
        let mut members: Vec<&LabeledExample> = members.clone();
        members.shuffle(&mut rng);
        let counts = apportion(members.len(), &ratios, class_pos);
        let mut offset = 0;
        for (p, &count) in counts.iter().enumerate() {
            for member in &members[offset..offset + count] {
                parts[p].push((*member).clone());
            }
            offset += count;
        }
    }
    let [train, validation, test] = parts;
    Ok(DatasetSplit {
        train,
        validation,
        test,
        seed,
        ratios,
    })
}

/// Largest-remainder apportionment of `n` items over partitions. Remainder
/// ties break by partition index rotated by `rotation`.
fn apportion(n: usize, ratios: &[f64; 3], rotation: usize) -> [usize; 3] {
    let mut counts = [0usize; 3];
    let mut fractions = [(0usize, 0.0f64); 3];
    let mut assigned = 0;
    for p in 0..3 {
        let quota = n as f64 * ratios[p];
        counts[p] = quota.floor() as usize;
        assigned += counts[p];
        fractions[p] = (p, quota - quota.floor());
    }
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        let fa = fractions[a].1;
        let fb = fractions[b].1;
        fb.partial_cmp(&fa).unwrap().then_with(|| {
            // Alternate which of the tied parts wins as we move through the
            // classes so remainders don't all land in the same part.
            if rotation % 2 == 0 {
                a.cmp(&b)
            } else {
                b.cmp(&a)
            }
        })
    });
    for &p in order.iter().take(n - assigned) {
        counts[p] += 1;
    }
    counts
}

/// First-person phrase frames used by the synthetic generator.
const FP_FRAMES: [&str; 2] = ["i have", "i am"];

/// Content words safe to use as synthetic noise: none of them appear in the
/// default lexicons or the person-marker sets.
pub fn default_noise_vocab() -> Vec<String> {
    [
        "coffee", "morning", "window", "garden", "music", "river", "walking",
        "dinner", "football", "weather", "reading", "kitchen", "weekend",
        "painting", "travel", "mountain", "bicycle", "library", "evening",
        "market", "cooking", "sunshine", "autumn", "winter", "summer",
        "concert", "movie", "puzzle", "guitar", "camera", "teacher",
        "office", "project", "holiday", "picnic", "ocean", "forest",
        "running", "baking", "playlist", "stadium", "museum", "airport",
        "train", "ticket", "letter", "notebook", "candle", "blanket",
        "umbrella", "raining", "lemonade", "sandwich", "chocolate", "tennis",
        "soccer", "jogging", "photography", "recipe", "birthday",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

/// Generate a deterministic synthetic labeled corpus. Every depression-class
/// example embeds a first-person framed lexicon phrase amid noise tokens;
/// `NoDepression` examples contain noise only.
pub fn generate_synthetic_corpus(
    spec: &BTreeMap<DepressionClass, usize>,
    templates: &LexiconSet,
    noise_vocab: &[String],
    seed: u64,
) -> Result<Vec<LabeledExample>> {
    // Drop noise words that collide with lexicon vocabulary or person markers.
    let mut lexicon_words: HashSet<String> = HashSet::new();
    for phrases in templates.entries().values() {
        for phrase in phrases {
            for word in phrase.split_whitespace() {
                lexicon_words.insert(word.to_string());
            }
        }
    }
    let noise: Vec<&String> = noise_vocab
        .iter()
        .filter(|w| {
            !lexicon_words.contains(*w)
                && !lexicon::FIRST_PERSON_MARKERS.contains(&w.as_str())
                && !lexicon::THIRD_PERSON_MARKERS.contains(&w.as_str())
        })
        .collect();
    if noise.is_empty() {
        return Err(Error::Invalid("noise vocabulary is empty after filtering".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for (class, &count) in spec {
        let phrases = templates.entries().get(class).cloned().unwrap_or_default();
        if *class != DepressionClass::NoDepression && phrases.is_empty() {
            return Err(Error::Invalid(format!(
                "no template phrases available for class {class}"
            )));
        }
        for i in 0..count {
            let text = if *class == DepressionClass::NoDepression {
                let n = rng.gen_range(4..=10);
                (0..n)
                    .map(|_| noise[rng.gen_range(0..noise.len())].clone())
                    .collect::<Vec<_>>()
                    .join(" ")
            } else {
                let phrase = &phrases[rng.gen_range(0..phrases.len())];
                let core = frame_first_person(*class, phrase, &phrases, &mut rng);
                let before = rng.gen_range(0..=3);
                let after = rng.gen_range(1..=4);
                let mut words: Vec<String> = (0..before)
                    .map(|_| noise[rng.gen_range(0..noise.len())].clone())
                    .collect();
                words.push(core);
                words.extend((0..after).map(|_| noise[rng.gen_range(0..noise.len())].clone()));
                words.join(" ")
            };
            let tokens: Vec<String> = text.split_whitespace().map(String::from).collect();
            out.push(LabeledExample {
                tweet_id: format!("synth-{}-{i:04}", class.as_str()),
                clean_text: text,
                tokens,
                label: *class,
                provenance: Provenance::Synthetic,
            });
        }
    }
    Ok(out)
}

fn frame_first_person(
    class: DepressionClass,
    phrase: &str,
    phrases: &[String],
    rng: &mut ChaCha8Rng,
) -> String {
    // Atypical symptom cues are weak alone; pair two of them.
    if class == DepressionClass::Atypical && lexicon::is_atypical_symptom_cue(phrase) {
        let others: Vec<&String> = phrases
            .iter()
            .filter(|p| p.as_str() != phrase && lexicon::is_atypical_symptom_cue(p))
            .collect();
        if !others.is_empty() {
            let second = others[rng.gen_range(0..others.len())];
            return format!("i have {phrase} and {second}");
        }
    }
    let first = phrase.split_whitespace().next().unwrap_or("");
    if lexicon::FIRST_PERSON_MARKERS.contains(&first) {
        phrase.to_string()
    } else if first == "suffering" {
        format!("{} {phrase}", FP_FRAMES[1])
    } else {
        format!("{} {phrase}", FP_FRAMES[0])
    }
}

/// Write examples as JSON Lines, one `LabeledExample` per line.
pub fn write_jsonl(path: &Path, examples: &[LabeledExample]) -> Result<()> {
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    for ex in examples {
        let line = serde_json::to_string(ex)?;
        writeln!(file, "{line}").map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

/// Read a JSON Lines labeled dataset.
pub fn read_jsonl(path: &Path) -> Result<Vec<LabeledExample>> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let ex: LabeledExample = serde_json::from_str(&line).map_err(|e| Error::ParseLine {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(ex);
    }
    Ok(out)
}

/// Per-class example counts, in canonical class order.
pub fn class_counts(examples: &[LabeledExample]) -> BTreeMap<DepressionClass, usize> {
    let mut counts = BTreeMap::new();
    for ex in examples {
        *counts.entry(ex.label).or_insert(0) += 1;
    }
    counts
}

pub fn counts_by<'a, I: IntoIterator<Item = &'a LabeledExample>>(
    examples: I,
) -> HashMap<DepressionClass, usize> {
    let mut counts = HashMap::new();
    for ex in examples {
        *counts.entry(ex.label).or_insert(0) += 1;
    }
    counts
}
