//! Sentence log-likelihood scoring: a built-in n-gram model with
//! interpolated absolute discounting, an external line-protocol scorer, and
//! a memoizing wrapper.

mod external;
mod ngram;

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

pub use external::{ExternalScorer, ExternalScorerConfig};
pub use ngram::NgramModel;

use crate::error::Result;

/// Anything that can assign a natural-log likelihood to a sentence.
/// Scorers are deterministic: the same text always yields the same value.
pub trait LikelihoodScorer: Send + Sync {
    fn sentence_log_likelihood(&self, text: &str) -> Result<f64>;
}

impl<S: LikelihoodScorer + ?Sized> LikelihoodScorer for &S {
    fn sentence_log_likelihood(&self, text: &str) -> Result<f64> {
        (**self).sentence_log_likelihood(text)
    }
}

impl LikelihoodScorer for Box<dyn LikelihoodScorer> {
    fn sentence_log_likelihood(&self, text: &str) -> Result<f64> {
        (**self).sentence_log_likelihood(text)
    }
}

/// Divides the wrapped scorer's value by the token count, for comparing
/// substitutions that change sentence length.
pub struct PerTokenAverage<S>(pub S);

impl<S: LikelihoodScorer> LikelihoodScorer for PerTokenAverage<S> {
    fn sentence_log_likelihood(&self, text: &str) -> Result<f64> {
        let n = crate::lexicon::tokenize(text).len();
        if n == 0 {
            return Err(crate::error::Error::EmptyAfterTokenization);
        }
        Ok(self.0.sentence_log_likelihood(text)? / n as f64)
    }
}

/// Memoizes (text -> loglik); substitutions repeat heavily across documents.
pub struct CachingScorer<S> {
    inner: S,
    cache: Mutex<HashMap<String, f64>>,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl<S: LikelihoodScorer> CachingScorer<S> {
    pub fn new(inner: S) -> Self {
        CachingScorer {
            inner,
            cache: Mutex::new(HashMap::new()),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
        }
    }

    pub fn hit_rate(&self) -> f64 {
        let hits = self.hits.load(Ordering::Relaxed) as f64;
        let misses = self.misses.load(Ordering::Relaxed) as f64;
        if hits + misses == 0.0 {
            0.0
        } else {
            hits / (hits + misses)
        }
    }

    pub fn hits(&self) -> u64 {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> u64 {
        self.misses.load(Ordering::Relaxed)
    }
}

impl<S: LikelihoodScorer> LikelihoodScorer for CachingScorer<S> {
    fn sentence_log_likelihood(&self, text: &str) -> Result<f64> {
        if let Some(&v) = self.cache.lock().unwrap().get(text) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(v);
        }
        let v = self.inner.sentence_log_likelihood(text)?;
        self.misses.fetch_add(1, Ordering::Relaxed);
        self.cache.lock().unwrap().insert(text.to_string(), v);
        Ok(v)
    }
}
