use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Malformed {
        path: String,
        line: usize,
        message: String,
    },

    #[error("lexicon must be non-empty")]
    EmptyLexicon,

    #[error("duplicate SGT surface {surface:?} ({path}:{line})")]
    DuplicateSurface {
        surface: String,
        path: String,
        line: usize,
    },

    #[error("unknown category id {id:?} ({path}:{line})")]
    UnknownCategory {
        id: String,
        path: String,
        line: usize,
    },

    #[error("unknown SGT {surface:?}")]
    UnknownSgt { surface: String },

    #[error("duplicate document id {id:?}")]
    DuplicateDocId { id: String },

    #[error("document {id:?} has empty text")]
    EmptyText { id: String },

    #[error("document {id:?} has label {label} outside {{0,1}}")]
    BadLabel { id: String, label: i64 },

    #[error("document {id:?} is unlabeled")]
    Unlabeled { id: String },

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("train_fraction {0} is outside (0,1)")]
    BadFraction(f64),

    #[error("need at least 2 folds, got {0}")]
    TooFewFolds(usize),

    #[error("label class {label} has only {count} members, fewer than {folds} folds")]
    ClassTooSmall {
        label: u8,
        count: usize,
        folds: usize,
    },

    #[error("discount {0} is outside (0,1)")]
    BadDiscount(f64),

    #[error("n-gram order must be >= 1, got {0}")]
    BadOrder(usize),

    #[error("text is empty after tokenization")]
    EmptyAfterTokenization,

    #[error("external scorer: {0}")]
    Scorer(String),

    #[error("external scorer returned non-finite log-likelihood for id {id:?}")]
    NonFiniteScore { id: String },

    #[error("mention span {start}..{end} is invalid for document {id:?}")]
    BadSpan { id: String, start: usize, end: usize },

    #[error("document {id:?} has {found} SGT mentions, expected {expected}")]
    MentionCount {
        id: String,
        found: usize,
        expected: usize,
    },

    #[error("strategy {strategy} requires {what}")]
    StrategyRequirement {
        strategy: &'static str,
        what: String,
    },

    #[error("SGT {surface:?} is missing from the embedding table (word {word:?})")]
    MissingEmbedding { surface: String, word: String },

    #[error("vocabulary has {available} candidates after excluding SGTs, need {needed}")]
    VocabularyTooSmall { available: usize, needed: usize },

    #[error("rank_original requires an unfiltered (ALL) counterfactual set, got {0}")]
    NotAllStrategy(String),

    #[error("no counterfactual sets with entries")]
    NoCounterfactuals,

    #[error("feature dimension mismatch: params have {params}, input has {input}")]
    DimensionMismatch { params: usize, input: usize },

    #[error("non-finite loss at epoch {epoch}, batch {batch} (loss={loss})")]
    NonFiniteLoss { epoch: usize, batch: usize, loss: f64 },

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
