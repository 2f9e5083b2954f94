//! Likelihood-filtered counterfactuals of social-group mentions in text,
//! a hate-speech classifier regularized by counterfactual logit pairing,
//! and counterfactual-token / group-fairness evaluation.

pub mod classifier;
pub mod corpus;
pub mod counterfactuals;
pub mod embeddings;
pub mod error;
pub mod fairness;
pub mod lexicon;
pub mod lm;
pub mod sweep;
pub mod synth;

pub use error::{Error, Result};
