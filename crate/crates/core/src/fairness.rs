//! Counterfactual token fairness and group-fairness (equality-of-odds style)
//! metrics for a trained classifier.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classifier::{logits, Model};
use crate::corpus::{Corpus, Document};
use crate::counterfactuals::CounterfactualSet;
use crate::embeddings::cosine;
use crate::error::{Error, Result};
use crate::lexicon::SgtLexicon;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CtfMode {
    /// Mean over all (sentence, counterfactual) pairs.
    Mean,
    /// The literal unweighted double sum.
    RawSum,
}

/// Per-SGT confusion-table rates; a rate is absent when its denominator is
/// zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgtRates {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tp_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tn_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fpr: Option<f64>,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
    pub ctf_absdiff: f64,
    pub ctf_cosine: f64,
    pub per_sgt: BTreeMap<String, SgtRates>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_tp: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_tn: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_fpr: Option<f64>,
    pub accuracy: f64,
    pub f1: f64,
    /// Rates are unweighted across SGTs; zero-support groups are excluded
    /// from the standard deviations.
    pub notes: String,
}

fn logit_pairs<'a>(
    model: &Model,
    lexicon: &SgtLexicon,
    set: &'a CounterfactualSet,
) -> Result<([f64; 2], Vec<[f64; 2]>)> {
    let orig = logits(&model.params, &model.featurize(&set.original_text, lexicon))?;
    let cf = set
        .entries
        .iter()
        .map(|e| logits(&model.params, &model.featurize(&e.text, lexicon)))
        .collect::<Result<Vec<_>>>()?;
    Ok((orig, cf))
}

/// L1 logit divergence between sentences and their counterfactuals; lower
/// is fairer. Sets with no entries are skipped.
pub fn ctf_absdiff(
    model: &Model,
    lexicon: &SgtLexicon,
    cfsets: &[CounterfactualSet],
    mode: CtfMode,
) -> Result<f64> {
    let mut total = 0.0;
    let mut pairs = 0usize;
    for set in cfsets {
        if set.entries.is_empty() {
            continue;
        }
        let (orig, cfs) = logit_pairs(model, lexicon, set)?;
        for zc in cfs {
            total += (orig[0] - zc[0]).abs() + (orig[1] - zc[1]).abs();
            pairs += 1;
        }
    }
    if pairs == 0 {
        return Err(Error::NoCounterfactuals);
    }
    Ok(match mode {
        CtfMode::Mean => total / pairs as f64,
        CtfMode::RawSum => total,
    })
}

/// Two-level average cosine similarity of 2D logits: per sentence the mean
/// over its counterfactuals, then the mean over sentences. Higher is fairer.
pub fn ctf_cosine(
    model: &Model,
    lexicon: &SgtLexicon,
    cfsets: &[CounterfactualSet],
) -> Result<f64> {
    let mut total = 0.0;
    let mut sentences = 0usize;
    for set in cfsets {
        if set.entries.is_empty() {
            continue;
        }
        let (orig, cfs) = logit_pairs(model, lexicon, set)?;
        let mean: f64 =
            cfs.iter().map(|zc| cosine(&orig, zc)).sum::<f64>() / cfs.len() as f64;
        total += mean;
        sentences += 1;
    }
    if sentences == 0 {
        return Err(Error::NoCounterfactuals);
    }
    Ok(total / sentences as f64)
}

#[derive(Debug, Clone, Copy, Default)]
struct Confusion {
    tp: usize,
    fn_: usize,
    tn: usize,
    fp: usize,
}

fn confusions_by_sgt(
    model: &Model,
    corpus: &Corpus,
    lexicon: &SgtLexicon,
) -> Result<BTreeMap<String, Confusion>> {
    corpus.require_labels()?;
    let mut by_sgt: BTreeMap<String, Confusion> = BTreeMap::new();
    for doc in &corpus.docs {
        let (predicted, _) = model.predict_text(&doc.text, lexicon)?;
        let label = doc.label.unwrap();
        for surface in lexicon.mentioned_surfaces(&doc.text) {
            let c = by_sgt.entry(surface).or_default();
            match (label, predicted) {
                (1, 1) => c.tp += 1,
                (1, 0) => c.fn_ += 1,
                (0, 0) => c.tn += 1,
                (0, 1) => c.fp += 1,
                _ => unreachable!("labels validated to {{0,1}}"),
            }
        }
    }
    Ok(by_sgt)
}

fn rate(num: usize, den: usize) -> Option<f64> {
    if den == 0 {
        None
    } else {
        Some(num as f64 / den as f64)
    }
}

/// Per-SGT TP rate, TN rate, and FPR over a labeled corpus. Multi-mention
/// documents count once for every distinct SGT they mention.
pub fn per_sgt_rates(
    model: &Model,
    corpus: &Corpus,
    lexicon: &SgtLexicon,
) -> Result<BTreeMap<String, SgtRates>> {
    Ok(confusions_by_sgt(model, corpus, lexicon)?
        .into_iter()
        .map(|(surface, c)| {
            (
                surface,
                SgtRates {
                    tp_rate: rate(c.tp, c.tp + c.fn_),
                    tn_rate: rate(c.tn, c.tn + c.fp),
                    fpr: rate(c.fp, c.fp + c.tn),
                    support: c.tp + c.fn_ + c.tn + c.fp,
                },
            )
        })
        .collect())
}

/// Population standard deviation; None for fewer than two values.
pub fn population_std(values: &[f64]) -> Option<f64> {
    if values.len() < 2 {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Some(var.sqrt())
}

/// Accuracy and positive-class F1 (0 when precision + recall is 0).
pub fn classification_report(
    model: &Model,
    test: &Corpus,
    lexicon: &SgtLexicon,
) -> Result<(f64, f64)> {
    test.require_labels()?;
    if test.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut c = Confusion::default();
    for doc in &test.docs {
        let (predicted, _) = model.predict_text(&doc.text, lexicon)?;
        match (doc.label.unwrap(), predicted) {
            (1, 1) => c.tp += 1,
            (1, 0) => c.fn_ += 1,
            (0, 0) => c.tn += 1,
            (0, 1) => c.fp += 1,
            _ => unreachable!(),
        }
    }
    let accuracy = (c.tp + c.tn) as f64 / test.len() as f64;
    let precision = rate(c.tp, c.tp + c.fp).unwrap_or(0.0);
    let recall = rate(c.tp, c.tp + c.fn_).unwrap_or(0.0);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok((accuracy, f1))
}

/// The full fairness report: CTF metrics over the counterfactual sets,
/// TP/TN spreads over test ∪ perturbed, FPR spread over a corpus assumed
/// all non-hate (its labels are ignored), accuracy and F1 on test.
pub fn equality_of_odds_report(
    model: &Model,
    test: &Corpus,
    perturbed: &Corpus,
    fpr_corpus: &Corpus,
    lexicon: &SgtLexicon,
    cfsets: &[CounterfactualSet],
) -> Result<FairnessReport> {
    let mut combined_docs = test.docs.clone();
    for d in &perturbed.docs {
        combined_docs.push(Document::new(
            format!("perturbed:{}", d.id),
            d.text.clone(),
            d.label,
        ));
    }
    let combined = Corpus {
        docs: combined_docs,
        provenance: None,
    };
    let per_sgt = per_sgt_rates(model, &combined, lexicon)?;

    let tp: Vec<f64> = per_sgt.values().filter_map(|r| r.tp_rate).collect();
    let tn: Vec<f64> = per_sgt.values().filter_map(|r| r.tn_rate).collect();

    // FPR corpus is heuristically all non-hate
    let assumed: Vec<Document> = fpr_corpus
        .docs
        .iter()
        .map(|d| Document::new(d.id.clone(), d.text.clone(), Some(0)))
        .collect();
    let fpr_rates = per_sgt_rates(
        model,
        &Corpus {
            docs: assumed,
            provenance: None,
        },
        lexicon,
    )?;
    let fpr: Vec<f64> = fpr_rates.values().filter_map(|r| r.fpr).collect();

    let (accuracy, f1) = classification_report(model, test, lexicon)?;

    Ok(FairnessReport {
        ctf_absdiff: ctf_absdiff(model, lexicon, cfsets, CtfMode::Mean)?,
        ctf_cosine: ctf_cosine(model, lexicon, cfsets)?,
        per_sgt,
        std_tp: population_std(&tp),
        std_tn: population_std(&tn),
        std_fpr: population_std(&fpr),
        accuracy,
        f1,
        notes: "unweighted per-SGT rates; zero-support groups excluded from stds"
            .to_string(),
    })
}

/// Flat one-row CSV mirror of the report for side-by-side model comparisons.
pub fn report_csv_row(label: &str, report: &FairnessReport) -> String {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    format!(
        "{label},{},{},{},{},{},{},{}\n",
        report.accuracy,
        report.f1,
        report.ctf_absdiff,
        report.ctf_cosine,
        opt(report.std_tp),
        opt(report.std_tn),
        opt(report.std_fpr),
    )
}

pub const REPORT_CSV_HEADER: &str =
    "model,accuracy,f1,ctf_absdiff,ctf_cosine,std_tp,std_tn,std_fpr\n";

pub fn save_report_json(report: &FairnessReport, path: &Path) -> Result<()> {
    let json = serde_json::to_string_pretty(report).expect("report serializes");
    std::fs::write(path, json).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Expands `You are a ADJ SGT`-style templates: the literal tokens `ADJ`
/// and `SGT` are replaced by every adjective and every lexicon surface.
/// Labels default to non-hate.
pub fn expand_sc_templates(
    templates: &[String],
    adjectives: &[String],
    lexicon: &SgtLexicon,
) -> Vec<Document> {
    let mut docs = Vec::new();
    for (ti, template) in templates.iter().enumerate() {
        for (ai, adj) in adjectives.iter().enumerate() {
            for surface in lexicon.surfaces() {
                let text = template
                    .split_whitespace()
                    .map(|w| match w {
                        "ADJ" => adj.as_str(),
                        "SGT" => surface.as_str(),
                        other => other,
                    })
                    .collect::<Vec<_>>()
                    .join(" ");
                let id = format!("sc-t{ti}-a{ai}-{}", surface.replace(' ', "_"));
                docs.push(Document::new(id, text, Some(0)));
            }
        }
    }
    docs
}
