//! Deterministic synthetic fixtures. The stereotype corpus ties the label to
//! the SGT identity (with a weaker context-word signal), so logit pairing
//! trades classification accuracy against counterfactual token fairness.

use rand::seq::IndexedRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Corpus, Document};

const HATE_SGTS: &[&str] = &["muslim", "jew", "arab", "mexican", "immigrant"];
const BENIGN_SGTS: &[&str] = &["christian", "american", "canadian", "european", "english"];
const OPENERS: &[&str] = &["the", "that", "this", "every"];
const VERBS: &[&str] = &["is", "was", "seems", "acts"];
const HARSH: &[&str] = &["vile", "awful", "nasty", "horrid"];
const MILD: &[&str] = &["calm", "kind", "gentle", "decent"];
const NOUNS: &[&str] = &["person", "neighbor", "writer", "voter"];

/// Label-carrying SGT signal plus a 70%-reliable context-word signal.
pub fn stereotype_corpus(n_docs: usize, seed: u64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut docs = Vec::with_capacity(n_docs);
    for i in 0..n_docs {
        let hateful = i % 2 == 0;
        let sgt = if hateful {
            HATE_SGTS.choose(&mut rng).unwrap()
        } else {
            BENIGN_SGTS.choose(&mut rng).unwrap()
        };
        let aligned = rng.random_bool(0.7);
        let adjective = if hateful == aligned {
            HARSH.choose(&mut rng).unwrap()
        } else {
            MILD.choose(&mut rng).unwrap()
        };
        let text = format!(
            "{} {} {} {} {}",
            OPENERS.choose(&mut rng).unwrap(),
            sgt,
            VERBS.choose(&mut rng).unwrap(),
            adjective,
            NOUNS.choose(&mut rng).unwrap(),
        );
        docs.push(Document::new(
            format!("syn{i}"),
            text,
            Some(if hateful { 1 } else { 0 }),
        ));
    }
    Corpus::from_docs(docs).expect("generated ids are unique")
}
