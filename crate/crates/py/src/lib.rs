//! Python bindings: lexicon, n-gram scorer, counterfactual generation,
//! classifier training/prediction, and the fairness metrics.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use cfair_core::classifier::{Model, TrainConfig};
use cfair_core::corpus::{Corpus, Document};
use cfair_core::counterfactuals::{self, CounterfactualSet, GenOptions, Strategy};
use cfair_core::fairness::{self, CtfMode};
use cfair_core::lexicon::SgtLexicon;
use cfair_core::lm::{LikelihoodScorer, NgramModel};

fn err(e: cfair_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_strategy(name: &str) -> PyResult<Strategy> {
    name.parse::<Strategy>().map_err(err)
}

fn corpus_from_docs(docs: Vec<(String, String, Option<u8>)>) -> PyResult<Corpus> {
    Corpus::from_docs(
        docs.into_iter()
            .map(|(id, text, label)| Document::new(id, text, label))
            .collect(),
    )
    .map_err(err)
}

/// Lowercasing word tokenizer shared by every component.
#[pyfunction]
fn tokenize(text: &str) -> Vec<String> {
    cfair_core::lexicon::tokenize(text)
}

/// Social group token lexicon.
#[pyclass(name = "Lexicon")]
struct PyLexicon {
    inner: SgtLexicon,
}

#[pymethods]
impl PyLexicon {
    /// The shipped 77-surface default.
    #[staticmethod]
    fn default() -> Self {
        PyLexicon {
            inner: SgtLexicon::load_default(),
        }
    }

    #[staticmethod]
    fn load(lexicon_path: PathBuf, categories_path: PathBuf) -> PyResult<Self> {
        Ok(PyLexicon {
            inner: SgtLexicon::load(&lexicon_path, &categories_path).map_err(err)?,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn surfaces(&self) -> Vec<String> {
        self.inner.surfaces()
    }

    /// Mentions as (surface, category, start, end) token spans.
    fn detect(&self, text: &str) -> Vec<(String, String, usize, usize)> {
        self.inner
            .detect(text)
            .into_iter()
            .map(|m| {
                let entry = self.inner.entry(m.entry);
                (entry.surface_str(), entry.category.clone(), m.start, m.end)
            })
            .collect()
    }

    fn category_of(&self, surface: &str) -> PyResult<String> {
        Ok(self.inner.category_of(surface).map_err(err)?.id.clone())
    }
}

/// Interpolated absolute-discounting n-gram language model.
#[pyclass(name = "NgramModel")]
struct PyNgramModel {
    inner: NgramModel,
}

#[pymethods]
impl PyNgramModel {
    #[staticmethod]
    #[pyo3(signature = (sentences, order=3, discount=0.75))]
    fn train(sentences: Vec<String>, order: usize, discount: f64) -> PyResult<Self> {
        let docs = sentences
            .into_iter()
            .enumerate()
            .map(|(i, text)| Document::new(format!("s{i}"), text, None))
            .collect();
        let corpus = Corpus::from_docs(docs).map_err(err)?;
        Ok(PyNgramModel {
            inner: NgramModel::train(&corpus, order, discount).map_err(err)?,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyNgramModel {
            inner: NgramModel::load(&path).map_err(err)?,
        })
    }

    fn dump(&self, path: PathBuf) -> PyResult<()> {
        self.inner.dump(&path).map_err(err)
    }

    /// Natural-log sentence likelihood.
    fn loglik(&self, text: &str) -> PyResult<f64> {
        self.inner.sentence_log_likelihood(text).map_err(err)
    }

    fn cond_prob(&self, token: &str, history: Vec<String>) -> f64 {
        let h: Vec<&str> = history.iter().map(String::as_str).collect();
        self.inner.cond_prob(token, &h)
    }
}

/// One document's counterfactual set under a strategy.
#[pyclass(name = "CounterfactualSet", skip_from_py_object)]
#[derive(Clone)]
struct PyCounterfactualSet {
    inner: CounterfactualSet,
}

#[pymethods]
impl PyCounterfactualSet {
    #[getter]
    fn doc_id(&self) -> &str {
        &self.inner.doc_id
    }

    #[getter]
    fn mention_surface(&self) -> &str {
        &self.inner.mention_surface
    }

    #[getter]
    fn strategy(&self) -> String {
        self.inner.strategy.to_string()
    }

    #[getter]
    fn original_text(&self) -> &str {
        &self.inner.original_text
    }

    #[getter]
    fn original_loglik(&self) -> f64 {
        self.inner.original_loglik
    }

    #[getter]
    fn label(&self) -> Option<u8> {
        self.inner.label
    }

    /// Entries as (replacement, text, loglik).
    #[getter]
    fn entries(&self) -> Vec<(String, String, f64)> {
        self.inner
            .entries
            .iter()
            .map(|e| (e.replacement.clone(), e.text.clone(), e.loglik))
            .collect()
    }

    /// Competition rank of the original (ALL-strategy sets only).
    fn rank_original(&self) -> PyResult<usize> {
        counterfactuals::rank_original(&self.inner).map_err(err)
    }
}

/// Generates counterfactual sets for (id, text, label) documents.
#[pyfunction]
#[pyo3(signature = (docs, lexicon, scorer, strategy="ACL", seed=0))]
fn generate_counterfactuals(
    docs: Vec<(String, String, Option<u8>)>,
    lexicon: &PyLexicon,
    scorer: &PyNgramModel,
    strategy: &str,
    seed: u64,
) -> PyResult<Vec<PyCounterfactualSet>> {
    let corpus = corpus_from_docs(docs)?;
    let sets = counterfactuals::generate_for_corpus(
        &corpus,
        &lexicon.inner,
        &scorer.inner,
        parse_strategy(strategy)?,
        &GenOptions::with_seed(seed),
    )
    .map_err(err)?;
    Ok(sets
        .into_iter()
        .map(|inner| PyCounterfactualSet { inner })
        .collect())
}

/// Linear classifier over hashed n-gram features.
#[pyclass(name = "Classifier")]
struct PyClassifier {
    inner: Model,
}

#[pymethods]
impl PyClassifier {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyClassifier {
            inner: Model::load(&path).map_err(err)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(err)
    }

    #[getter]
    fn sgt_masking(&self) -> bool {
        self.inner.sgt_masking
    }

    /// (label, probability) with 1 = hate; exact ties go to non-hate.
    fn predict(&self, text: &str, lexicon: &PyLexicon) -> PyResult<(u8, f64)> {
        self.inner.predict_text(text, &lexicon.inner).map_err(err)
    }
}

/// Trains with counterfactual logit pairing; returns the model and the
/// per-epoch (epoch, loss, ce_loss, pair_loss, pair_loss_hate) log.
#[pyfunction]
#[pyo3(signature = (
    docs, lexicon, scorer, lambda_=0.2, strategy="ACL", epochs=50,
    learning_rate=0.1, batch_size=32, seed=0, sgt_masking=false
))]
#[allow(clippy::too_many_arguments)]
fn train_classifier(
    docs: Vec<(String, String, Option<u8>)>,
    lexicon: &PyLexicon,
    scorer: &PyNgramModel,
    lambda_: f64,
    strategy: &str,
    epochs: usize,
    learning_rate: f64,
    batch_size: usize,
    seed: u64,
    sgt_masking: bool,
) -> PyResult<(PyClassifier, Vec<(usize, f64, f64, f64, f64)>)> {
    let corpus = corpus_from_docs(docs)?;
    let config = TrainConfig {
        lambda: lambda_,
        learning_rate,
        epochs,
        batch_size,
        seed,
        strategy: parse_strategy(strategy)?,
        sgt_masking,
        ..TrainConfig::default()
    };
    let (model, log) = cfair_core::classifier::train(
        &corpus,
        &lexicon.inner,
        &scorer.inner,
        &config,
        &GenOptions::with_seed(seed),
    )
    .map_err(err)?;
    let log = log
        .into_iter()
        .map(|e| (e.epoch, e.loss, e.ce_loss, e.pair_loss, e.pair_loss_hate))
        .collect();
    Ok((PyClassifier { inner: model }, log))
}

fn collect_sets(sets: Vec<PyRef<PyCounterfactualSet>>) -> Vec<CounterfactualSet> {
    sets.into_iter().map(|s| s.inner.clone()).collect()
}

/// Mean L1 logit divergence over counterfactual pairs (lower is fairer);
/// mode is "mean" or "raw_sum".
#[pyfunction]
#[pyo3(signature = (classifier, lexicon, cfsets, mode="mean"))]
fn ctf_absdiff(
    classifier: &PyClassifier,
    lexicon: &PyLexicon,
    cfsets: Vec<PyRef<PyCounterfactualSet>>,
    mode: &str,
) -> PyResult<f64> {
    let mode = match mode {
        "mean" => CtfMode::Mean,
        "raw_sum" => CtfMode::RawSum,
        other => return Err(PyValueError::new_err(format!("unknown mode {other:?}"))),
    };
    fairness::ctf_absdiff(
        &classifier.inner,
        &lexicon.inner,
        &collect_sets(cfsets),
        mode,
    )
    .map_err(err)
}

/// Two-level average cosine similarity of logits (higher is fairer).
#[pyfunction]
fn ctf_cosine(
    classifier: &PyClassifier,
    lexicon: &PyLexicon,
    cfsets: Vec<PyRef<PyCounterfactualSet>>,
) -> PyResult<f64> {
    fairness::ctf_cosine(&classifier.inner, &lexicon.inner, &collect_sets(cfsets))
        .map_err(err)
}

/// Competition-rank report over single-mention documents:
/// (n_docs, {rank: count}, pct_rank1, pct_rank2_same_category_top).
#[pyfunction]
#[pyo3(signature = (docs, lexicon, scorer, seed=0))]
fn rank_report(
    docs: Vec<(String, String, Option<u8>)>,
    lexicon: &PyLexicon,
    scorer: &PyNgramModel,
    seed: u64,
) -> PyResult<(usize, BTreeMap<usize, usize>, f64, Option<f64>)> {
    let corpus = corpus_from_docs(docs)?;
    let report = counterfactuals::rank_report(
        &corpus,
        &lexicon.inner,
        &scorer.inner,
        &GenOptions::with_seed(seed),
    )
    .map_err(err)?;
    Ok((
        report.n_docs,
        report.rank_histogram,
        report.pct_rank1,
        report.pct_rank2_same_category_top,
    ))
}

#[pymodule]
fn cfair_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyLexicon>()?;
    m.add_class::<PyNgramModel>()?;
    m.add_class::<PyCounterfactualSet>()?;
    m.add_class::<PyClassifier>()?;
    m.add_function(wrap_pyfunction!(tokenize, m)?)?;
    m.add_function(wrap_pyfunction!(generate_counterfactuals, m)?)?;
    m.add_function(wrap_pyfunction!(train_classifier, m)?)?;
    m.add_function(wrap_pyfunction!(ctf_absdiff, m)?)?;
    m.add_function(wrap_pyfunction!(ctf_cosine, m)?)?;
    m.add_function(wrap_pyfunction!(rank_report, m)?)?;
    Ok(())
}
