//! One function per subcommand. Every command is a pure function of
//! (config, input files, seed); the only timestamped output is the
//! `run_meta.json` sidecar.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::Serialize;

use cfair_core::classifier::{save_train_log, Model};
use cfair_core::corpus::{self, Corpus, Document};
use cfair_core::counterfactuals::{
    generate_for_corpus, load_cfsets_jsonl, save_cfsets_jsonl, CounterfactualSet, GenOptions,
    Strategy,
};
use cfair_core::embeddings::EmbeddingTable;
use cfair_core::fairness::{
    equality_of_odds_report, report_csv_row, save_report_json, REPORT_CSV_HEADER,
};
use cfair_core::lexicon::{tokenize, SgtLexicon};
use cfair_core::lm::{
    CachingScorer, ExternalScorer, ExternalScorerConfig, LikelihoodScorer, NgramModel,
};
use cfair_core::sweep::{save_sweep_csv, SweepOutcome};

use crate::config::{RunConfig, ScorerConfig};
use crate::CliError;

const SUBDIRS: [&str; 5] = ["mentions", "scores", "cfsets", "models", "reports"];

/// Creates the fixed output layout and the metadata sidecar.
pub fn prepare_out_dir(
    config: &RunConfig,
    command: &str,
    jobs: Option<usize>,
) -> Result<(), CliError> {
    for sub in SUBDIRS {
        std::fs::create_dir_all(config.out_dir.join(sub))
            .map_err(|e| CliError::Usage(format!("cannot create output directory: {e}")))?;
    }
    #[derive(Serialize)]
    struct RunMeta<'a> {
        command: &'a str,
        seed: u64,
        jobs: Option<usize>,
        timestamp_unix_ms: u128,
    }
    let meta = RunMeta {
        command,
        seed: config.seed,
        jobs,
        timestamp_unix_ms: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis())
            .unwrap_or(0),
    };
    write_text(
        &config.out_dir.join("run_meta.json"),
        &serde_json::to_string_pretty(&meta).expect("meta serializes"),
    )
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)
        .map_err(|e| CliError::Data(cfair_core::Error::io(path.display().to_string(), e)))
}

fn load_lexicon(config: &RunConfig) -> Result<SgtLexicon, CliError> {
    match (&config.lexicon, &config.categories) {
        (Some(lex), Some(cat)) => Ok(SgtLexicon::load(lex, cat)?),
        (None, None) => Ok(SgtLexicon::load_default()),
        _ => Err(CliError::Usage(
            "config fields `lexicon` and `categories` must be set together".to_string(),
        )),
    }
}

fn load_corpus(path: &Path) -> Result<Corpus, CliError> {
    let corpus = if path.extension().is_some_and(|e| e == "csv") {
        corpus::load_csv(path)?
    } else {
        corpus::load_jsonl(path)?
    };
    Ok(corpus)
}

/// The configured likelihood scorer. The n-gram path memoizes, since
/// substitutions repeat heavily across documents.
enum Scorer {
    Ngram(CachingScorer<NgramModel>),
    External(ExternalScorer),
}

impl LikelihoodScorer for Scorer {
    fn sentence_log_likelihood(&self, text: &str) -> cfair_core::Result<f64> {
        match self {
            Scorer::Ngram(s) => s.sentence_log_likelihood(text),
            Scorer::External(s) => s.sentence_log_likelihood(text),
        }
    }
}

impl Scorer {
    fn log_cache_stats(&self) {
        if let Scorer::Ngram(s) = self {
            println!(
                "scorer cache: {} hits, {} misses, hit-rate {:.4}",
                s.hits(),
                s.misses(),
                s.hit_rate()
            );
        }
    }
}

fn build_scorer(config: &RunConfig) -> Result<Scorer, CliError> {
    match &config.scorer {
        ScorerConfig::Ngram { order, discount } => {
            let model = if let Some(path) = &config.lm_model {
                NgramModel::load(path)?
            } else {
                let path = lm_corpus_path(config)?;
                NgramModel::train(&load_corpus(path)?, *order, *discount)?
            };
            Ok(Scorer::Ngram(CachingScorer::new(model)))
        }
        ScorerConfig::External { command, .. } => {
            let mut cfg = ExternalScorerConfig::new(command.clone());
            cfg.timeout = config.scorer.timeout();
            Ok(Scorer::External(ExternalScorer::spawn(&cfg)?))
        }
    }
}

fn lm_corpus_path(config: &RunConfig) -> Result<&Path, CliError> {
    config
        .lm_corpus
        .as_deref()
        .or(config.corpus.as_deref())
        .ok_or_else(|| {
            CliError::Usage("config field `lm_corpus` (or `corpus`) is required".to_string())
        })
}

fn gen_options(
    config: &RunConfig,
    strategy: Strategy,
    corpus: &Corpus,
) -> Result<GenOptions, CliError> {
    let rand_vocab = if strategy == Strategy::Rand {
        // Fall back to the scoring corpus's own vocabulary.
        Some(config.rand_vocab.clone().unwrap_or_else(|| {
            let mut words: Vec<String> =
                corpus.docs.iter().flat_map(|d| tokenize(&d.text)).collect();
            words.sort();
            words.dedup();
            words
        }))
    } else {
        config.rand_vocab.clone()
    };
    let embeddings = match (&config.embeddings, strategy) {
        (Some(path), _) => Some(EmbeddingTable::load(path)?),
        (None, Strategy::Gv) => {
            return Err(CliError::Usage(
                "config field `embeddings` is required for the GV strategy".to_string(),
            ))
        }
        _ => None,
    };
    Ok(GenOptions {
        rand_vocab,
        seed: config.seed,
        k: config.k,
        embeddings,
    })
}

pub fn detect(config: &RunConfig) -> Result<(), CliError> {
    let lexicon = load_lexicon(config)?;
    let corpus = load_corpus(config.required("corpus", &config.corpus)?)?;

    #[derive(Serialize)]
    struct MentionRecord<'a> {
        doc_id: &'a str,
        surface: String,
        category: &'a str,
        start: usize,
        end: usize,
    }
    let mut out = String::new();
    for doc in &corpus.docs {
        for m in lexicon.detect(&doc.text) {
            let entry = lexicon.entry(m.entry);
            let record = MentionRecord {
                doc_id: &doc.id,
                surface: entry.surface_str(),
                category: &entry.category,
                start: m.start,
                end: m.end,
            };
            out.push_str(&serde_json::to_string(&record).expect("mentions serialize"));
            out.push('\n');
        }
    }
    write_text(&config.out_dir.join("mentions/mentions.jsonl"), &out)
}

pub fn train_lm(config: &RunConfig) -> Result<(), CliError> {
    let (order, discount) = match config.scorer {
        ScorerConfig::Ngram { order, discount } => (order, discount),
        ScorerConfig::External { .. } => {
            return Err(CliError::Usage(
                "train-lm requires `scorer.kind` = \"ngram\"".to_string(),
            ))
        }
    };
    let corpus = load_corpus(lm_corpus_path(config)?)?;
    let model = NgramModel::train(&corpus, order, discount)?;
    model.dump(&config.out_dir.join("models/ngram.json"))?;
    Ok(())
}

pub fn score(config: &RunConfig) -> Result<(), CliError> {
    let corpus = load_corpus(config.required("corpus", &config.corpus)?)?;
    let scorer = build_scorer(config)?;
    let scores: cfair_core::Result<Vec<f64>> = corpus
        .docs
        .par_iter()
        .map(|d| scorer.sentence_log_likelihood(&d.text))
        .collect();
    let scores = scores?;
    let mut out = String::from("doc_id,loglik\n");
    for (doc, loglik) in corpus.docs.iter().zip(&scores) {
        out.push_str(&format!("{},{}\n", doc.id, loglik));
    }
    scorer.log_cache_stats();
    write_text(&config.out_dir.join("scores/scores.csv"), &out)
}

pub fn gen_cf(config: &RunConfig) -> Result<(), CliError> {
    let lexicon = load_lexicon(config)?;
    let corpus = load_corpus(config.required("corpus", &config.corpus)?)?;
    let scorer = build_scorer(config)?;
    let options = gen_options(config, config.strategy, &corpus)?;
    let sets = generate_for_corpus(&corpus, &lexicon, &scorer, config.strategy, &options)?;
    scorer.log_cache_stats();
    save_cfsets_jsonl(&sets, &config.out_dir.join("cfsets/cfsets.jsonl"))?;
    Ok(())
}

pub fn rank_report(config: &RunConfig) -> Result<(), CliError> {
    let lexicon = load_lexicon(config)?;
    let corpus = load_corpus(config.required("corpus", &config.corpus)?)?;
    let scorer = build_scorer(config)?;
    let options = gen_options(config, Strategy::All, &corpus)?;
    let report = cfair_core::counterfactuals::rank_report(&corpus, &lexicon, &scorer, &options)?;
    scorer.log_cache_stats();
    write_text(
        &config.out_dir.join("reports/rank_report.json"),
        &serde_json::to_string_pretty(&report).expect("report serializes"),
    )
}

pub fn train(config: &RunConfig) -> Result<(), CliError> {
    let lexicon = load_lexicon(config)?;
    let corpus = load_corpus(config.required("corpus", &config.corpus)?)?;
    let scorer = build_scorer(config)?;
    let options = gen_options(config, config.strategy, &corpus)?;
    let train_cfg = config.train_config(config.strategy);
    let (model, log) =
        cfair_core::classifier::train(&corpus, &lexicon, &scorer, &train_cfg, &options)?;
    scorer.log_cache_stats();
    model.save(&config.out_dir.join("models/model.json"))?;
    save_train_log(&log, &config.out_dir.join("models/train_log.csv"))?;
    Ok(())
}

/// Perturbed instances for the equality-of-odds rates: every counterfactual
/// text, inheriting its original document's label.
fn perturbed_corpus(cfsets: &[CounterfactualSet]) -> Corpus {
    let mut docs = Vec::new();
    for set in cfsets {
        let Some(label) = set.label else { continue };
        for (i, entry) in set.entries.iter().enumerate() {
            docs.push(Document::new(
                format!("{}:{}:{}", set.doc_id, set.mention_surface, i),
                entry.text.clone(),
                Some(label),
            ));
        }
    }
    Corpus {
        docs,
        provenance: None,
    }
}

fn eval_cfsets(
    config: &RunConfig,
    lexicon: &SgtLexicon,
    test: &Corpus,
) -> Result<Vec<CounterfactualSet>, CliError> {
    if let Some(path) = &config.cfsets {
        return Ok(load_cfsets_jsonl(path)?);
    }
    let scorer = build_scorer(config)?;
    let options = gen_options(config, Strategy::All, test)?;
    let sets = generate_for_corpus(test, lexicon, &scorer, Strategy::All, &options)?;
    scorer.log_cache_stats();
    Ok(sets)
}

pub fn eval(config: &RunConfig) -> Result<(), CliError> {
    let lexicon = load_lexicon(config)?;
    let model_path = config.required("model", &config.model)?;
    let model = Model::load(model_path)?;
    let test = load_corpus(config.required("test_corpus", &config.test_corpus)?)?;
    let cfsets = eval_cfsets(config, &lexicon, &test)?;
    let perturbed = perturbed_corpus(&cfsets);
    let fpr = match &config.fpr_corpus {
        Some(path) => load_corpus(path)?,
        None => test.clone(),
    };
    let report = equality_of_odds_report(&model, &test, &perturbed, &fpr, &lexicon, &cfsets)?;
    save_report_json(&report, &config.out_dir.join("reports/report.json"))?;

    let label = model_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("model");
    let csv = format!("{REPORT_CSV_HEADER}{}", report_csv_row(label, &report));
    write_text(&config.out_dir.join("reports/report.csv"), &csv)
}

pub fn lambda_sweep(config: &RunConfig) -> Result<(), CliError> {
    let lambdas = config
        .lambdas
        .as_deref()
        .ok_or_else(|| CliError::Usage("config field `lambdas` is required".to_string()))?;
    let lexicon = load_lexicon(config)?;
    let train_corpus = load_corpus(config.required("corpus", &config.corpus)?)?;
    let test_corpus = load_corpus(config.required("test_corpus", &config.test_corpus)?)?;
    let scorer = build_scorer(config)?;
    let options = gen_options(config, config.strategy, &train_corpus)?;
    let eval_options = gen_options(config, Strategy::All, &test_corpus)?;
    let eval_sets =
        generate_for_corpus(&test_corpus, &lexicon, &scorer, Strategy::All, &eval_options)?;
    let base_config = config.train_config(config.strategy);

    let SweepOutcome { rows, models } = cfair_core::sweep::lambda_sweep(
        &train_corpus,
        &test_corpus,
        &eval_sets,
        &lexicon,
        &scorer,
        &base_config,
        &options,
        lambdas,
    )?;
    scorer.log_cache_stats();
    save_sweep_csv(&rows, &config.out_dir.join("reports/sweep.csv"))?;
    for (lambda, model) in lambdas.iter().zip(&models) {
        let name: PathBuf = config
            .out_dir
            .join(format!("models/model_lambda_{lambda}.json"));
        model.save(&name)?;
    }
    Ok(())
}
