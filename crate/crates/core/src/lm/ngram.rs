//! N-gram language model with interpolated absolute discounting.
//!
//! The conditional probability backs off through shorter histories:
//!
//!   P1(w)      = (c(w) + 1) / (C + |V|)            add-one unigram base,
//!                                                  |V| = observed types + unk
//!   Pk(w | h)  = (max(c(h·w) - d, 0) + d·T(h)·P{k-1}(w | h'))/ c(h)   if c(h) > 0
//!              = P{k-1}(w | h')                                       otherwise
//!
//! where h' drops the oldest token of h and T(h) is the number of distinct
//! continuations of h. For every history with c(h) > 0 the conditional
//! distribution over vocabulary ∪ {unk} sums to exactly 1:
//! Σ max(c - d, 0) + d·T(h) = c(h).

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::lexicon::tokenize;
use crate::lm::LikelihoodScorer;

pub const BOS: &str = "<s>";
pub const UNK: &str = "<unk>";
const KEY_SEP: char = '\x1f';
const DUMP_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct ContextStats {
    total: u64,
    continuations: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NgramModel {
    version: u32,
    order: usize,
    discount: f64,
    unigram_total: u64,
    unigrams: BTreeMap<String, u64>,
    /// contexts[k] holds statistics for histories of length k+1
    contexts: Vec<BTreeMap<String, ContextStats>>,
}

impl NgramModel {
    /// Counts every k-gram (k = 1..order) over documents padded with
    /// (order-1) begin-of-sentence markers. No end-of-sentence token is
    /// counted.
    pub fn train(corpus: &Corpus, order: usize, discount: f64) -> Result<Self> {
        if order < 1 {
            return Err(Error::BadOrder(order));
        }
        if !(discount > 0.0 && discount < 1.0) {
            return Err(Error::BadDiscount(discount));
        }
        if corpus.is_empty() {
            return Err(Error::EmptyCorpus);
        }

        let mut unigrams: BTreeMap<String, u64> = BTreeMap::new();
        let mut unigram_total = 0u64;
        let mut contexts: Vec<BTreeMap<String, ContextStats>> =
            vec![BTreeMap::new(); order.saturating_sub(1)];
        let mut any_tokens = false;

        for doc in &corpus.docs {
            let tokens = tokenize(&doc.text);
            if tokens.is_empty() {
                continue;
            }
            any_tokens = true;
            let mut padded: Vec<&str> = vec![BOS; order - 1];
            padded.extend(tokens.iter().map(String::as_str));
            for i in (order - 1)..padded.len() {
                let token = padded[i];
                *unigrams.entry(token.to_string()).or_insert(0) += 1;
                unigram_total += 1;
                for hist_len in 1..order {
                    let history = &padded[i - hist_len..i];
                    let key = history.join("\x1f");
                    let stats = contexts[hist_len - 1].entry(key).or_default();
                    stats.total += 1;
                    *stats.continuations.entry(token.to_string()).or_insert(0) += 1;
                }
            }
        }
        if !any_tokens {
            return Err(Error::EmptyAfterTokenization);
        }

        Ok(NgramModel {
            version: DUMP_VERSION,
            order,
            discount,
            unigram_total,
            unigrams,
            contexts,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    /// Observed token types; the unknown marker is counted separately.
    pub fn vocabulary(&self) -> impl Iterator<Item = &str> {
        self.unigrams.keys().map(String::as_str)
    }

    pub fn vocab_size_with_unk(&self) -> usize {
        self.unigrams.len() + 1
    }

    fn normalize_token<'a>(&self, token: &'a str) -> &'a str {
        if token == BOS || self.unigrams.contains_key(token) {
            token
        } else {
            UNK
        }
    }

    fn unigram_prob(&self, token: &str) -> f64 {
        let count = self.unigrams.get(token).copied().unwrap_or(0);
        (count as f64 + 1.0) / (self.unigram_total as f64 + self.vocab_size_with_unk() as f64)
    }

    fn prob_with_history(&self, token: &str, history: &[&str]) -> f64 {
        if history.is_empty() {
            return self.unigram_prob(token);
        }
        let key: String = {
            let mut s = String::new();
            for (i, h) in history.iter().enumerate() {
                if i > 0 {
                    s.push(KEY_SEP);
                }
                s.push_str(h);
            }
            s
        };
        match self.contexts[history.len() - 1].get(&key) {
            Some(stats) if stats.total > 0 => {
                let count = stats.continuations.get(token).copied().unwrap_or(0) as f64;
                let discounted = (count - self.discount).max(0.0);
                let types = stats.continuations.len() as f64;
                let backoff = self.prob_with_history(token, &history[1..]);
                (discounted + self.discount * types * backoff) / stats.total as f64
            }
            _ => self.prob_with_history(token, &history[1..]),
        }
    }

    /// Conditional probability of `token` given `history` (the history is
    /// truncated to the last order-1 tokens; out-of-vocabulary tokens map to
    /// the unknown marker).
    pub fn cond_prob(&self, token: &str, history: &[&str]) -> f64 {
        let token = self.normalize_token(token);
        let start = history.len().saturating_sub(self.order - 1);
        let truncated: Vec<&str> = history[start..]
            .iter()
            .map(|t| self.normalize_token(t))
            .collect();
        self.prob_with_history(token, &truncated)
    }

    /// Natural log of `cond_prob`; always finite.
    pub fn log_prob(&self, token: &str, history: &[&str]) -> f64 {
        self.cond_prob(token, history).ln()
    }

    pub fn dump(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string(self).expect("model serializes");
        std::fs::write(path, json).map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        let model: NgramModel = serde_json::from_str(&text).map_err(|e| Error::Malformed {
            path: path.display().to_string(),
            line: 0,
            message: e.to_string(),
        })?;
        if model.version != DUMP_VERSION {
            return Err(Error::Invalid(format!(
                "unsupported model version {}",
                model.version
            )));
        }
        Ok(model)
    }

    /// Every history observed in the training data, paired with its context
    /// count. Used by normalization checks.
    pub fn observed_histories(&self) -> Vec<(Vec<String>, u64)> {
        let mut out = vec![(Vec::new(), self.unigram_total)];
        for level in &self.contexts {
            for (key, stats) in level {
                let history: Vec<String> =
                    key.split(KEY_SEP).map(str::to_string).collect();
                out.push((history, stats.total));
            }
        }
        out
    }
}

impl LikelihoodScorer for NgramModel {
    /// Sum over each actual token of ln P(token | padded left context).
    /// No length normalization.
    fn sentence_log_likelihood(&self, text: &str) -> Result<f64> {
        let tokens = tokenize(text);
        if tokens.is_empty() {
            return Err(Error::EmptyAfterTokenization);
        }
        let mut padded: Vec<&str> = vec![BOS; self.order - 1];
        padded.extend(tokens.iter().map(String::as_str));
        let mut total = 0.0;
        for i in (self.order - 1)..padded.len() {
            total += self.log_prob(padded[i], &padded[..i]);
        }
        Ok(total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;

    fn corpus(texts: &[&str]) -> Corpus {
        Corpus::from_docs(
            texts
                .iter()
                .enumerate()
                .map(|(i, t)| Document::new(format!("d{i}"), *t, None))
                .collect(),
        )
        .unwrap()
    }

    fn abab() -> NgramModel {
        NgramModel::train(&corpus(&["a b a b"]), 2, 0.75).unwrap()
    }

    #[test]
    fn bigram_counts_match_hand_count() {
        let m = abab();
        assert_eq!(m.unigrams.get("a"), Some(&2));
        assert_eq!(m.unigrams.get("b"), Some(&2));
        assert_eq!(m.unigram_total, 4);
        let bos = m.contexts[0].get(BOS).unwrap();
        assert_eq!(bos.total, 1);
        assert_eq!(bos.continuations.get("a"), Some(&1));
        let a = m.contexts[0].get("a").unwrap();
        assert_eq!(a.total, 2);
        assert_eq!(a.continuations.get("b"), Some(&2));
        let b = m.contexts[0].get("b").unwrap();
        assert_eq!(b.total, 1);
        assert_eq!(b.continuations.get("a"), Some(&1));
    }

    #[test]
    fn worked_bigram_probabilities() {
        let m = abab();
        // P1(a) = (2+1)/(4+3) = 3/7
        assert!((m.unigram_prob("a") - 3.0 / 7.0).abs() < 1e-12);
        // P(a|<s>) = 0.25 + 0.75·(3/7)
        let p_a = m.cond_prob("a", &[BOS]);
        assert!((p_a - (0.25 + 0.75 * 3.0 / 7.0)).abs() < 1e-12);
        assert!((m.log_prob("a", &[BOS]) - (-0.5596)).abs() < 1e-4);
        // P(b|a) = (max(2-0.75,0) + 0.75·1·(3/7)) / 2
        let p_b = m.cond_prob("b", &["a"]);
        assert!((p_b - (1.25 + 0.75 * 3.0 / 7.0) / 2.0).abs() < 1e-12);
        assert!((m.log_prob("b", &["a"]) - (-0.2412)).abs() < 1e-4);
    }

    #[test]
    fn unseen_history_falls_back_to_unigram() {
        let m = abab();
        assert!((m.cond_prob("b", &["z"]) - 3.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn sentence_loglik_worked_example() {
        let m = abab();
        let ll = m.sentence_log_likelihood("a b").unwrap();
        assert!((ll - (-0.8008)).abs() < 1e-4);
        let single = m.sentence_log_likelihood("a").unwrap();
        assert!((single - (-0.5596)).abs() < 1e-4);
        assert!(ll <= 0.0);
        assert!(m.sentence_log_likelihood("  ! ").is_err());
    }

    #[test]
    fn unigram_model_has_empty_history() {
        let m = NgramModel::train(&corpus(&["a b a b"]), 1, 0.5).unwrap();
        assert_eq!(m.order(), 1);
        assert!(m.contexts.is_empty());
        // order-1 loglik is permutation-invariant
        let x = m.sentence_log_likelihood("a a b").unwrap();
        let y = m.sentence_log_likelihood("b a a").unwrap();
        assert!((x - y).abs() < 1e-12);
    }

    #[test]
    fn invalid_params_rejected() {
        let c = corpus(&["a b"]);
        assert!(matches!(
            NgramModel::train(&c, 2, 1.0),
            Err(Error::BadDiscount(_))
        ));
        assert!(matches!(
            NgramModel::train(&c, 0, 0.75),
            Err(Error::BadOrder(0))
        ));
        assert!(matches!(
            NgramModel::train(&Corpus::default(), 2, 0.75),
            Err(Error::EmptyCorpus)
        ));
        assert!(matches!(
            NgramModel::train(&corpus(&["!!!"]), 2, 0.75),
            Err(Error::EmptyAfterTokenization)
        ));
    }

    #[test]
    fn every_observed_history_normalizes() {
        let c = corpus(&[
            "the cat sat on the mat",
            "the dog sat on the rug",
            "a cat and a dog ran",
        ]);
        for order in 1..=3 {
            let m = NgramModel::train(&c, order, 0.75).unwrap();
            let mut vocab: Vec<String> = m.vocabulary().map(str::to_string).collect();
            vocab.push(UNK.to_string());
            for (history, total) in m.observed_histories() {
                if total == 0 {
                    continue;
                }
                let hist: Vec<&str> = history.iter().map(String::as_str).collect();
                let sum: f64 = vocab.iter().map(|w| m.cond_prob(w, &hist)).sum();
                assert!(
                    (sum - 1.0).abs() < 1e-9,
                    "order {order} history {history:?}: sum {sum}"
                );
            }
        }
    }

    #[test]
    fn dump_load_round_trip_is_deterministic() {
        let m = NgramModel::train(&corpus(&["a b a b", "b c d"]), 3, 0.75).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("m1.json");
        let p2 = dir.path().join("m2.json");
        m.dump(&p1).unwrap();
        let loaded = NgramModel::load(&p1).unwrap();
        loaded.dump(&p2).unwrap();
        assert_eq!(
            std::fs::read(&p1).unwrap(),
            std::fs::read(&p2).unwrap()
        );
        assert_eq!(
            m.sentence_log_likelihood("a b c").unwrap(),
            loaded.sentence_log_likelihood("a b c").unwrap()
        );
    }
}
