//! Run configuration: a single JSON file with per-command sections, plus
//! flag overrides (flags beat file values).

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Deserialize;

use cfair_core::classifier::TrainConfig;
use cfair_core::counterfactuals::Strategy;

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Mandatory: every run is reproducible from (config, seed).
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,

    /// SGT lexicon + category map; the shipped defaults when absent.
    pub lexicon: Option<PathBuf>,
    pub categories: Option<PathBuf>,

    /// Primary (training / scoring) corpus, JSONL or CSV by extension.
    pub corpus: Option<PathBuf>,
    /// Held-out labeled corpus for `eval` and `lambda-sweep`.
    pub test_corpus: Option<PathBuf>,
    /// Corpus assumed all non-hate for the FPR spread; `test_corpus` when absent.
    pub fpr_corpus: Option<PathBuf>,
    /// Corpus the language model is trained on; `corpus` when absent.
    pub lm_corpus: Option<PathBuf>,
    /// Pre-trained n-gram dump; when set, `train-lm` output can be reused.
    pub lm_model: Option<PathBuf>,
    /// Pre-generated counterfactual sets (JSONL) for `rank-report` / `eval`.
    pub cfsets: Option<PathBuf>,
    /// Classifier model file for `eval`.
    pub model: Option<PathBuf>,
    /// Word embedding table (GV strategy).
    pub embeddings: Option<PathBuf>,

    #[serde(default)]
    pub scorer: ScorerConfig,
    #[serde(default = "default_strategy")]
    pub strategy: Strategy,
    /// RAND / GV substitution count.
    #[serde(default = "default_k")]
    pub k: usize,
    /// RAND candidate vocabulary; the scoring corpus vocabulary when absent.
    pub rand_vocab: Option<Vec<String>>,

    #[serde(default)]
    pub train: TrainSection,
    /// Regularization coefficients for `lambda-sweep`.
    pub lambdas: Option<Vec<f64>>,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_strategy() -> Strategy {
    Strategy::Acl
}

fn default_k() -> usize {
    10
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ScorerConfig {
    Ngram {
        #[serde(default = "default_order")]
        order: usize,
        #[serde(default = "default_discount")]
        discount: f64,
    },
    External {
        command: Vec<String>,
        #[serde(default = "default_timeout_secs")]
        timeout_secs: u64,
    },
}

impl Default for ScorerConfig {
    fn default() -> Self {
        ScorerConfig::Ngram {
            order: default_order(),
            discount: default_discount(),
        }
    }
}

impl ScorerConfig {
    pub fn timeout(&self) -> Duration {
        match self {
            ScorerConfig::External { timeout_secs, .. } => Duration::from_secs(*timeout_secs),
            ScorerConfig::Ngram { .. } => Duration::from_secs(default_timeout_secs()),
        }
    }
}

fn default_order() -> usize {
    3
}

fn default_discount() -> f64 {
    0.75
}

fn default_timeout_secs() -> u64 {
    30
}

/// Mirrors `TrainConfig` minus seed/strategy, which live at the top level.
#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub lambda: Option<f64>,
    pub learning_rate: Option<f64>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub sgt_masking: Option<bool>,
    pub l2: Option<f64>,
    pub dimension: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Usage(format!("cannot read config {}: {e}", path.display()))
        })?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }

    /// Every referenced path must exist before any work starts.
    pub fn validate_paths(&self) -> Result<(), CliError> {
        let fields: [(&str, &Option<PathBuf>); 10] = [
            ("lexicon", &self.lexicon),
            ("categories", &self.categories),
            ("corpus", &self.corpus),
            ("test_corpus", &self.test_corpus),
            ("fpr_corpus", &self.fpr_corpus),
            ("lm_corpus", &self.lm_corpus),
            ("lm_model", &self.lm_model),
            ("cfsets", &self.cfsets),
            ("model", &self.model),
            ("embeddings", &self.embeddings),
        ];
        for (name, path) in fields {
            if let Some(p) = path {
                if !p.exists() {
                    return Err(CliError::Usage(format!(
                        "config field `{name}` points to a missing file: {}",
                        p.display()
                    )));
                }
            }
        }
        if let ScorerConfig::External { command, .. } = &self.scorer {
            if command.is_empty() {
                return Err(CliError::Usage(
                    "config field `scorer.command` is empty".to_string(),
                ));
            }
        }
        Ok(())
    }

    /// A required path field, by name, with a usage error naming the field.
    pub fn required<'a>(
        &self,
        name: &str,
        value: &'a Option<PathBuf>,
    ) -> Result<&'a Path, CliError> {
        value
            .as_deref()
            .ok_or_else(|| CliError::Usage(format!("config field `{name}` is required")))
    }

    /// Effective training configuration: file values over defaults, then
    /// top-level seed/strategy.
    pub fn train_config(&self, strategy: Strategy) -> TrainConfig {
        let d = TrainConfig::default();
        TrainConfig {
            lambda: self.train.lambda.unwrap_or(d.lambda),
            learning_rate: self.train.learning_rate.unwrap_or(d.learning_rate),
            epochs: self.train.epochs.unwrap_or(d.epochs),
            batch_size: self.train.batch_size.unwrap_or(d.batch_size),
            seed: self.seed,
            strategy,
            sgt_masking: self.train.sgt_masking.unwrap_or(d.sgt_masking),
            l2: self.train.l2.unwrap_or(d.l2),
            dimension: self.train.dimension.unwrap_or(d.dimension),
        }
    }
}
