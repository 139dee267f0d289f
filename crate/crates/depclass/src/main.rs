//! Command-line pipeline: ingest raw CSV into weakly labeled data, generate
//! synthetic corpora, train the classifier families, evaluate them, and
//! explain individual predictions. Exit codes: 0 success, 1 validation/data
//! error, 2 missing resource.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use depclass::config::LoadedConfig;
use depclass::corpus::{
    self, ColumnMap, DepressionClass, LabeledExample, Provenance,
};
use depclass::error::{Error, Result};
use depclass::eval;
use depclass::explain::{self, AttributionMethod};
use depclass::features::load_embeddings;
use depclass::lexicon::{self, LexiconSet, ReviewItem, WeakLabelDecision};
use depclass::models::{predict, ModelArtifact, ModelKind};
use depclass::plot;
use depclass::textprep::{self, NormalizationConfig};

#[derive(Parser)]
#[command(name = "depclass", about = "Depression-type text classification pipeline")]
struct Cli {
    /// Pipeline config file (TOML); defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Seed for splits, training, and sampling.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ingest a CSV, apply exclusions, and weak-label with the lexicons.
    Ingest(IngestArgs),
    /// Generate a separable synthetic corpus.
    Synth(SynthArgs),
    /// Train one model kind (or `all` families) on labeled data.
    Train(TrainArgs),
    /// Evaluate trained artifacts on the validation and test partitions.
    Evaluate(EvaluateArgs),
    /// Explain predictions with token attributions.
    Explain(ExplainArgs),
}

#[derive(Args)]
struct IngestArgs {
    /// Input CSV file.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "text")]
    text_col: String,
    #[arg(long, default_value = "id")]
    id_col: String,
    #[arg(long)]
    lang_col: Option<String>,
    #[arg(long)]
    retweet_col: Option<String>,
}

#[derive(Args)]
struct SynthArgs {
    /// Examples generated per class.
    #[arg(long, default_value_t = 300)]
    per_class: usize,
}

#[derive(Args)]
struct TrainArgs {
    /// Labeled JSONL dataset (one example per line).
    #[arg(long)]
    data: PathBuf,
    /// Model kind (nb, svm, rf, cnn, cnn_glove, lstm, lstm_glove,
    /// encoder_ft) or `all` for one of each family.
    #[arg(long)]
    model: String,
    /// Pretrained embedding file for the *_glove kinds.
    #[arg(long)]
    embeddings: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Directory of trained artifacts (defaults to OUT/artifacts).
    #[arg(long)]
    artifacts: Option<PathBuf>,
    /// Directory with split JSONL files (defaults to OUT/split).
    #[arg(long)]
    data_dir: Option<PathBuf>,
}

#[derive(Args)]
struct ExplainArgs {
    /// Trained artifact directory.
    #[arg(long)]
    artifact: PathBuf,
    /// Single input text.
    #[arg(long)]
    text: Option<String>,
    /// File with one input text per line.
    #[arg(long)]
    file: Option<PathBuf>,
    #[arg(long, default_value = "occlusion")]
    method: String,
    /// Permutation samples for the shapley method.
    #[arg(long, default_value_t = 2000)]
    samples: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let loaded = match &cli.config {
        Some(path) => LoadedConfig::load(path)?,
        None => LoadedConfig::defaults(),
    };
    fs::create_dir_all(&cli.out).map_err(|e| Error::io(&cli.out, e))?;
    loaded.snapshot(&cli.out)?;
    match &cli.command {
        Command::Ingest(args) => cmd_ingest(&cli, &loaded, args),
        Command::Synth(args) => cmd_synth(&cli, &loaded, args),
        Command::Train(args) => cmd_train(&cli, &loaded, args),
        Command::Evaluate(args) => cmd_evaluate(&cli, &loaded, args),
        Command::Explain(args) => cmd_explain(&cli, args),
    }
}

fn load_lexicons(loaded: &LoadedConfig) -> Result<LexiconSet> {
    match &loaded.config.paths.lexicons {
        Some(path) => lexicon::load_lexicons(path),
        None => Ok(LexiconSet::default_set()),
    }
}

fn cmd_ingest(cli: &Cli, loaded: &LoadedConfig, args: &IngestArgs) -> Result<()> {
    let lexicons = load_lexicons(loaded)?;
    let columns = ColumnMap {
        text: args.text_col.clone(),
        id: Some(args.id_col.clone()),
        lang: args.lang_col.clone(),
        retweet: args.retweet_col.clone(),
    };
    let records = corpus::ingest_csv(&args.input, &columns)?;
    let total = records.len();
    let (kept, excluded) = corpus::apply_exclusions(records, &loaded.config.exclusions);

    let norm_cfg = NormalizationConfig::default();
    let mut labeled = Vec::new();
    let mut review = Vec::new();
    let mut no_match = 0usize;
    let mut outcomes = Vec::new();
    for record in &kept {
        let clean = textprep::normalize(&record.text, &norm_cfg);
        let outcome = lexicon::weak_label(&clean, &lexicons);
        match outcome.decision {
            WeakLabelDecision::Labeled => labeled.push(LabeledExample {
                tweet_id: record.id.clone(),
                tokens: textprep::tokenize(&clean),
                clean_text: clean,
                label: outcome.label.expect("labeled outcome carries a label"),
                provenance: Provenance::LexiconWeak,
            }),
            WeakLabelDecision::NeedsReview => {
                review.push((record, clean));
                outcomes.push(outcome);
            }
            WeakLabelDecision::NoMatch => no_match += 1,
        }
    }

    corpus::write_jsonl(&cli.out.join("labeled.jsonl"), &labeled)?;
    let review_items: Vec<ReviewItem<'_>> = review
        .iter()
        .zip(&outcomes)
        .map(|((record, clean), outcome)| ReviewItem {
            tweet_id: &record.id,
            text: clean,
            matches: &outcome.matches,
            reason: {
                let classes: std::collections::BTreeSet<_> =
                    outcome.matches.iter().map(|m| m.class).collect();
                if classes.len() > 1 {
                    "matches more than one class"
                } else {
                    "insufficient first-person evidence"
                }
            },
        })
        .collect();
    lexicon::write_review_queue(&cli.out.join("review_queue.jsonl"), &review_items)?;

    let mut reason_counts: BTreeMap<String, usize> = BTreeMap::new();
    for e in &excluded {
        *reason_counts
            .entry(format!("{:?}", e.reason).to_lowercase())
            .or_default() += 1;
    }
    let summary = serde_json::json!({
        "rows": total,
        "labeled": labeled.len(),
        "needs_review": review.len(),
        "no_match": no_match,
        "excluded": reason_counts,
    });
    write_json(&cli.out.join("ingest_summary.json"), &summary)?;
    println!(
        "ingested {total} rows: {} labeled, {} for review, {} without matches, {} excluded",
        labeled.len(),
        review.len(),
        no_match,
        excluded.len()
    );
    Ok(())
}

fn cmd_synth(cli: &Cli, loaded: &LoadedConfig, args: &SynthArgs) -> Result<()> {
    let lexicons = load_lexicons(loaded)?;
    let mut spec = BTreeMap::new();
    for class in DepressionClass::ALL {
        spec.insert(class, args.per_class);
    }
    let noise = corpus::default_noise_vocab();
    let examples = corpus::generate_synthetic_corpus(&spec, &lexicons, &noise, cli.seed)?;
    corpus::write_jsonl(&cli.out.join("labeled.jsonl"), &examples)?;
    println!("generated {} synthetic examples", examples.len());
    Ok(())
}

fn cmd_train(cli: &Cli, loaded: &LoadedConfig, args: &TrainArgs) -> Result<()> {
    let examples = corpus::read_jsonl(&args.data)?;
    let split = corpus::stratified_split(&examples, loaded.config.split.ratios, cli.seed)?;
    let split_dir = cli.out.join("split");
    fs::create_dir_all(&split_dir).map_err(|e| Error::io(&split_dir, e))?;
    corpus::write_jsonl(&split_dir.join("train.jsonl"), &split.train)?;
    corpus::write_jsonl(&split_dir.join("validation.jsonl"), &split.validation)?;
    corpus::write_jsonl(&split_dir.join("test.jsonl"), &split.test)?;

    let kinds: Vec<ModelKind> = if args.model == "all" {
        ModelKind::FAMILIES.to_vec()
    } else {
        vec![ModelKind::parse(&args.model)?]
    };
    let embeddings_path = args
        .embeddings
        .clone()
        .or_else(|| loaded.config.paths.embeddings.clone());

    for kind in kinds {
        let cfg = loaded.config.train_config(kind, cli.seed);
        let table = match &embeddings_path {
            Some(path) if matches!(kind, ModelKind::CnnGlove | ModelKind::LstmGlove) => {
                Some(load_embeddings(path, cfg.extra_usize("embed_dim", 64))?)
            }
            _ => None,
        };
        let artifact =
            depclass::models::train_model(&cfg, &split.train, &split.validation, table.as_ref())?;
        let dir = cli.out.join("artifacts").join(kind.as_str());
        artifact.save(&dir)?;
        println!("trained {kind} -> {}", dir.display());
    }
    Ok(())
}

fn cmd_evaluate(cli: &Cli, _loaded: &LoadedConfig, args: &EvaluateArgs) -> Result<()> {
    let artifacts_dir = args.artifacts.clone().unwrap_or_else(|| cli.out.join("artifacts"));
    let data_dir = args.data_dir.clone().unwrap_or_else(|| cli.out.join("split"));
    if !artifacts_dir.exists() {
        return Err(Error::MissingFile(artifacts_dir));
    }
    let validation = corpus::read_jsonl(&data_dir.join("validation.jsonl"))?;
    let test = corpus::read_jsonl(&data_dir.join("test.jsonl"))?;

    let mut entries: Vec<PathBuf> = fs::read_dir(&artifacts_dir)
        .map_err(|e| Error::io(&artifacts_dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("artifact.json").exists())
        .collect();
    entries.sort();
    if entries.is_empty() {
        return Err(Error::Invalid(format!(
            "no artifacts found under {}",
            artifacts_dir.display()
        )));
    }

    let report_dir = cli.out.join("reports");
    fs::create_dir_all(&report_dir).map_err(|e| Error::io(&report_dir, e))?;
    let mut test_reports = Vec::new();
    for dir in entries {
        let artifact = ModelArtifact::load(&dir)?;
        let kind = artifact.kind.as_str();
        let val_report = eval::evaluate(&artifact, &validation, "validation")?;
        write_json(
            &report_dir.join(format!("{kind}_validation.json")),
            &serde_json::to_value(&val_report)?,
        )?;
        let test_report = eval::evaluate(&artifact, &test, "test")?;
        write_json(
            &report_dir.join(format!("{kind}_test.json")),
            &serde_json::to_value(&test_report)?,
        )?;
        if let Some(history) = &artifact.history {
            plot::plot_curves(history, &report_dir.join(format!("{kind}_curves.png")))?;
        }
        println!(
            "{kind}: validation accuracy {:.4}, test accuracy {:.4}",
            val_report.overall.accuracy, test_report.overall.accuracy
        );
        test_reports.push(test_report);
    }
    let table = eval::compare_models(&test_reports)?;
    let csv_path = report_dir.join("comparison.csv");
    fs::write(&csv_path, table.to_csv()).map_err(|e| Error::io(csv_path, e))?;
    let txt_path = report_dir.join("comparison.txt");
    fs::write(&txt_path, table.to_text()).map_err(|e| Error::io(txt_path, e))?;
    print!("{}", table.to_text());
    Ok(())
}

fn cmd_explain(cli: &Cli, args: &ExplainArgs) -> Result<()> {
    let method = AttributionMethod::parse(&args.method)?;
    let texts: Vec<String> = match (&args.text, &args.file) {
        (Some(t), None) => vec![t.clone()],
        (None, Some(path)) => {
            if !path.exists() {
                return Err(Error::MissingFile(path.clone()));
            }
            let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            raw.lines().map(str::to_string).filter(|l| !l.trim().is_empty()).collect()
        }
        _ => {
            return Err(Error::Invalid(
                "provide exactly one of --text or --file".into(),
            ))
        }
    };
    if texts.is_empty() {
        return Err(Error::Invalid("no input texts to explain".into()));
    }
    let artifact = ModelArtifact::load(&args.artifact)?;
    for (i, text) in texts.iter().enumerate() {
        let attribution = match method {
            AttributionMethod::Occlusion => explain::explain_occlusion(&artifact, text)?,
            AttributionMethod::Shapley => {
                explain::explain_shapley(&artifact, text, args.samples, cli.seed)?
            }
        };
        let base = cli.out.join(format!("explain_{i}"));
        write_json(
            &base.with_extension("json"),
            &serde_json::to_value(&attribution)?,
        )?;
        explain::render_highlights(&attribution, &base.with_extension("html"))?;
        let pred = predict(&artifact, text)?;
        println!("input {i}: predicted {}", pred.label);
    }
    Ok(())
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
