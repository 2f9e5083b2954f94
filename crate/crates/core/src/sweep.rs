//! Lambda sweep: one model per regularization coefficient, shared
//! counterfactual generation and seed, evaluated on a fixed test set and
//! counterfactual evaluation sets.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classifier::{build_examples, train_from_examples, Model, TrainConfig};
use crate::corpus::Corpus;
use crate::counterfactuals::{generate_for_corpus, CounterfactualSet, GenOptions};
use crate::error::{Error, Result};
use crate::fairness::{
    classification_report, ctf_absdiff, ctf_cosine, per_sgt_rates, population_std, CtfMode,
};
use crate::lexicon::SgtLexicon;
use crate::lm::LikelihoodScorer;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub accuracy: f64,
    pub f1: f64,
    pub ctf_absdiff: f64,
    pub ctf_cosine: f64,
    pub std_tp: Option<f64>,
    pub std_tn: Option<f64>,
    pub std_fpr: Option<f64>,
}

pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub models: Vec<Model>,
}

/// Trains one model per lambda (counterfactual generation happens once and
/// is shared) and evaluates each against `test` and `eval_cfsets`.
pub fn lambda_sweep(
    train_corpus: &Corpus,
    test_corpus: &Corpus,
    eval_cfsets: &[CounterfactualSet],
    lexicon: &SgtLexicon,
    scorer: &(dyn LikelihoodScorer + Sync),
    base_config: &TrainConfig,
    options: &GenOptions,
    lambdas: &[f64],
) -> Result<SweepOutcome> {
    if lambdas.is_empty() {
        return Err(Error::Invalid("empty lambda list".to_string()));
    }
    let cfsets =
        generate_for_corpus(train_corpus, lexicon, scorer, base_config.strategy, options)?;
    let examples = build_examples(train_corpus, &cfsets, lexicon, base_config)?;

    let mut rows = Vec::with_capacity(lambdas.len());
    let mut models = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let config = TrainConfig {
            lambda,
            ..base_config.clone()
        };
        let (model, _log) = train_from_examples(&examples, &config)?;
        let (accuracy, f1) = classification_report(&model, test_corpus, lexicon)?;
        let rates = per_sgt_rates(&model, test_corpus, lexicon)?;
        let tp: Vec<f64> = rates.values().filter_map(|r| r.tp_rate).collect();
        let tn: Vec<f64> = rates.values().filter_map(|r| r.tn_rate).collect();
        let fpr: Vec<f64> = rates.values().filter_map(|r| r.fpr).collect();
        rows.push(SweepRow {
            lambda,
            accuracy,
            f1,
            ctf_absdiff: ctf_absdiff(&model, lexicon, eval_cfsets, CtfMode::Mean)?,
            ctf_cosine: ctf_cosine(&model, lexicon, eval_cfsets)?,
            std_tp: population_std(&tp),
            std_tn: population_std(&tn),
            std_fpr: population_std(&fpr),
        });
        models.push(model);
    }
    Ok(SweepOutcome { rows, models })
}

pub const SWEEP_CSV_HEADER: &str =
    "lambda,accuracy,f1,ctf_absdiff,ctf_cosine,std_tp,std_tn,std_fpr\n";

pub fn save_sweep_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut out = String::from(SWEEP_CSV_HEADER);
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.lambda,
            r.accuracy,
            r.f1,
            r.ctf_absdiff,
            r.ctf_cosine,
            opt(r.std_tp),
            opt(r.std_tn),
            opt(r.std_fpr),
        ));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}
