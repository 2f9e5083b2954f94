//! SGT-substituted counterfactuals: generation, likelihood scoring,
//! strategy filters, and rank analytics.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Document};
use crate::embeddings::{cosine, EmbeddingTable};
use crate::error::{Error, Result};
use crate::lexicon::{tokenize, SgtLexicon, SgtMention};
use crate::lm::LikelihoodScorer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Strategy {
    All,
    Acl,
    Neg,
    Sg,
    Rand,
    Gv,
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Strategy::All => "ALL",
            Strategy::Acl => "ACL",
            Strategy::Neg => "NEG",
            Strategy::Sg => "SG",
            Strategy::Rand => "RAND",
            Strategy::Gv => "GV",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "ALL" => Ok(Strategy::All),
            "ACL" => Ok(Strategy::Acl),
            "NEG" => Ok(Strategy::Neg),
            "SG" => Ok(Strategy::Sg),
            "RAND" => Ok(Strategy::Rand),
            "GV" => Ok(Strategy::Gv),
            other => Err(Error::Invalid(format!("unknown strategy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterfactualEntry {
    /// Replacement surface; an SGT for every strategy except RAND, where it
    /// is an arbitrary vocabulary word.
    #[serde(rename = "sgt")]
    pub replacement: String,
    pub text: String,
    pub loglik: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterfactualSet {
    pub doc_id: String,
    pub mention_surface: String,
    pub strategy: Strategy,
    pub original_loglik: f64,
    pub entries: Vec<CounterfactualEntry>,
    /// Normalized (tokenized and re-joined) original text; counterfactual
    /// texts differ from it exactly at the substituted span.
    pub original_text: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<u8>,
}

#[derive(Debug, Clone, Default)]
pub struct GenOptions {
    /// RAND: candidate vocabulary (SGT surfaces are excluded internally).
    pub rand_vocab: Option<Vec<String>>,
    pub seed: u64,
    /// RAND / GV substitution count.
    pub k: usize,
    pub embeddings: Option<EmbeddingTable>,
}

impl GenOptions {
    pub fn with_seed(seed: u64) -> Self {
        GenOptions {
            seed,
            k: 10,
            ..Default::default()
        }
    }
}

/// All single-substitution rewrites of `mention` in `doc`: one per lexicon
/// entry other than the original. The mention's token span is replaced by
/// the replacement surface and tokens are re-joined with single spaces.
pub fn substitute_mention(
    doc: &Document,
    mention: &SgtMention,
    lexicon: &SgtLexicon,
) -> Result<Vec<(usize, String)>> {
    let tokens = tokenize(&doc.text);
    validate_span(doc, mention, &tokens, lexicon)?;
    let original_surface = lexicon.entry(mention.entry).surface_str();
    let mut out = Vec::with_capacity(lexicon.len().saturating_sub(1));
    for (i, entry) in lexicon.entries().iter().enumerate() {
        if entry.surface_str() == original_surface {
            continue;
        }
        out.push((i, splice(&tokens, mention, &entry.surface_str())));
    }
    Ok(out)
}

fn validate_span(
    doc: &Document,
    mention: &SgtMention,
    tokens: &[String],
    lexicon: &SgtLexicon,
) -> Result<()> {
    let surface = &lexicon.entry(mention.entry).surface;
    let ok = mention.end > mention.start
        && mention.end <= tokens.len()
        && mention.end - mention.start == surface.len()
        && surface.iter().eq(tokens[mention.start..mention.end].iter());
    if ok {
        Ok(())
    } else {
        Err(Error::BadSpan {
            id: doc.id.clone(),
            start: mention.start,
            end: mention.end,
        })
    }
}

fn splice(tokens: &[String], mention: &SgtMention, replacement: &str) -> String {
    let mut parts: Vec<&str> = Vec::with_capacity(tokens.len() + 1);
    parts.extend(tokens[..mention.start].iter().map(String::as_str));
    parts.push(replacement);
    parts.extend(tokens[mention.end..].iter().map(String::as_str));
    parts.join(" ")
}

/// Generates the counterfactual set for one mention under the given
/// strategy. Every produced entry is scored; filters are applied per the
/// strategy definition (ACL keeps loglik >= original, inclusive).
pub fn generate(
    doc: &Document,
    mention: &SgtMention,
    lexicon: &SgtLexicon,
    scorer: &dyn LikelihoodScorer,
    strategy: Strategy,
    options: &GenOptions,
) -> Result<CounterfactualSet> {
    let tokens = tokenize(&doc.text);
    validate_span(doc, mention, &tokens, lexicon)?;
    let original_surface = lexicon.entry(mention.entry).surface_str();
    let original_category = &lexicon.entry(mention.entry).category;
    let original_text = tokens.join(" ");
    let original_loglik = scorer.sentence_log_likelihood(&original_text)?;

    let mut set = CounterfactualSet {
        doc_id: doc.id.clone(),
        mention_surface: original_surface.clone(),
        strategy,
        original_loglik,
        entries: Vec::new(),
        original_text,
        label: doc.label,
    };

    let score_surfaces = |surfaces: Vec<String>| -> Result<Vec<CounterfactualEntry>> {
        surfaces
            .into_iter()
            .map(|surface| {
                let text = splice(&tokens, mention, &surface);
                let loglik = scorer.sentence_log_likelihood(&text)?;
                Ok(CounterfactualEntry {
                    replacement: surface,
                    text,
                    loglik,
                })
            })
            .collect()
    };

    let all_surfaces = || -> Vec<String> {
        lexicon
            .surfaces()
            .into_iter()
            .filter(|s| *s != original_surface)
            .collect()
    };

    match strategy {
        Strategy::All => {
            set.entries = score_surfaces(all_surfaces())?;
        }
        Strategy::Acl => {
            set.entries = score_surfaces(all_surfaces())?
                .into_iter()
                .filter(|e| e.loglik >= original_loglik)
                .collect();
        }
        Strategy::Neg => {
            let label = doc.label.ok_or(Error::Unlabeled {
                id: doc.id.clone(),
            })?;
            if label == 0 {
                set.entries = score_surfaces(all_surfaces())?;
            }
        }
        Strategy::Sg => {
            let surfaces: Vec<String> = lexicon
                .entries()
                .iter()
                .filter(|e| e.category == *original_category)
                .map(|e| e.surface_str())
                .filter(|s| *s != original_surface)
                .collect();
            set.entries = score_surfaces(surfaces)?;
        }
        Strategy::Rand => {
            let vocab = options
                .rand_vocab
                .as_ref()
                .ok_or_else(|| Error::StrategyRequirement {
                    strategy: "RAND",
                    what: "a candidate vocabulary".to_string(),
                })?;
            let excluded: std::collections::HashSet<String> =
                lexicon.surfaces().into_iter().collect();
            let mut candidates: Vec<String> = vocab
                .iter()
                .filter(|w| !excluded.contains(*w))
                .cloned()
                .collect();
            candidates.sort();
            candidates.dedup();
            let k = if options.k == 0 { 10 } else { options.k };
            if candidates.len() < k {
                return Err(Error::VocabularyTooSmall {
                    available: candidates.len(),
                    needed: k,
                });
            }
            let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
            candidates.shuffle(&mut rng);
            candidates.truncate(k);
            set.entries = score_surfaces(candidates)?;
        }
        Strategy::Gv => {
            let table = options
                .embeddings
                .as_ref()
                .ok_or_else(|| Error::StrategyRequirement {
                    strategy: "GV",
                    what: "an embedding table".to_string(),
                })?;
            let origin = table.sgt_vector(lexicon.entry(mention.entry))?;
            let mut scored: Vec<(f64, String)> = Vec::new();
            for entry in lexicon.entries() {
                let surface = entry.surface_str();
                if surface == original_surface {
                    continue;
                }
                let v = table.sgt_vector(entry)?;
                scored.push((cosine(&origin, &v), surface));
            }
            scored.sort_by(|a, b| {
                b.0.partial_cmp(&a.0)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then_with(|| a.1.cmp(&b.1))
            });
            let k = if options.k == 0 { 10 } else { options.k };
            scored.truncate(k);
            set.entries = score_surfaces(scored.into_iter().map(|(_, s)| s).collect())?;
        }
    }
    Ok(set)
}

/// Counterfactual sets for a whole corpus, one per detected mention, in
/// document order. Fan-out is per document; results are reduced in input
/// order, so output is independent of the worker count.
pub fn generate_for_corpus(
    corpus: &Corpus,
    lexicon: &SgtLexicon,
    scorer: &(dyn LikelihoodScorer + Sync),
    strategy: Strategy,
    options: &GenOptions,
) -> Result<Vec<CounterfactualSet>> {
    let per_doc: Vec<Result<Vec<CounterfactualSet>>> = corpus
        .docs
        .par_iter()
        .map(|doc| {
            lexicon
                .detect(&doc.text)
                .iter()
                .map(|m| generate(doc, m, lexicon, scorer, strategy, options))
                .collect()
        })
        .collect();
    let mut out = Vec::new();
    for sets in per_doc {
        out.extend(sets?);
    }
    Ok(out)
}

/// Competition rank of the original among its (unfiltered) counterfactuals:
/// 1 + the number of entries with strictly greater log-likelihood.
pub fn rank_original(cfset: &CounterfactualSet) -> Result<usize> {
    if cfset.strategy != Strategy::All {
        return Err(Error::NotAllStrategy(cfset.strategy.to_string()));
    }
    Ok(1 + cfset
        .entries
        .iter()
        .filter(|e| e.loglik > cfset.original_loglik)
        .count())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub n_docs: usize,
    pub rank_histogram: BTreeMap<usize, usize>,
    pub pct_rank1: f64,
    /// Among documents where the original ranks exactly second, the share
    /// whose top-ranked substitution shares the original's social category.
    /// Absent when no document ranks second.
    pub pct_rank2_same_category_top: Option<f64>,
}

/// Aggregates `rank_original` over a corpus of single-mention documents.
pub fn rank_report(
    corpus: &Corpus,
    lexicon: &SgtLexicon,
    scorer: &(dyn LikelihoodScorer + Sync),
    options: &GenOptions,
) -> Result<RankReport> {
    for doc in &corpus.docs {
        let found = lexicon.detect(&doc.text).len();
        if found != 1 {
            return Err(Error::MentionCount {
                id: doc.id.clone(),
                found,
                expected: 1,
            });
        }
    }
    let sets = generate_for_corpus(corpus, lexicon, scorer, Strategy::All, options)?;
    let mut histogram: BTreeMap<usize, usize> = BTreeMap::new();
    let mut rank1 = 0usize;
    let mut rank2 = 0usize;
    let mut rank2_same_category = 0usize;
    for set in &sets {
        let rank = rank_original(set)?;
        *histogram.entry(rank).or_insert(0) += 1;
        if rank == 1 {
            rank1 += 1;
        }
        if rank == 2 {
            rank2 += 1;
            // ties at the top are resolved by lexicographically smallest
            // surface before the category lookup
            let top_loglik = set
                .entries
                .iter()
                .map(|e| e.loglik)
                .fold(f64::NEG_INFINITY, f64::max);
            let top = set
                .entries
                .iter()
                .filter(|e| e.loglik == top_loglik)
                .map(|e| e.replacement.as_str())
                .min()
                .expect("rank 2 implies at least one entry");
            let top_cat = lexicon.category_of(top)?;
            let orig_cat = lexicon.category_of(&set.mention_surface)?;
            if top_cat.id == orig_cat.id {
                rank2_same_category += 1;
            }
        }
    }
    let n_docs = sets.len();
    Ok(RankReport {
        n_docs,
        rank_histogram: histogram,
        pct_rank1: if n_docs == 0 {
            0.0
        } else {
            100.0 * rank1 as f64 / n_docs as f64
        },
        pct_rank2_same_category_top: if rank2 == 0 {
            None
        } else {
            Some(100.0 * rank2_same_category as f64 / rank2 as f64)
        },
    })
}

pub fn save_cfsets_jsonl(sets: &[CounterfactualSet], path: &Path) -> Result<()> {
    let mut file = std::fs::File::create(path)
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    for set in sets {
        let line = serde_json::to_string(set).expect("cfsets serialize");
        writeln!(file, "{line}").map_err(|e| Error::io(path.display().to_string(), e))?;
    }
    Ok(())
}

pub fn load_cfsets_jsonl(path: &Path) -> Result<Vec<CounterfactualSet>> {
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(&display, e))?;
    let mut sets = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let set: CounterfactualSet =
            serde_json::from_str(line).map_err(|e| Error::Malformed {
                path: display.clone(),
                line: lineno + 1,
                message: e.to_string(),
            })?;
        sets.push(set);
    }
    Ok(sets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Result as CResult;
    use std::collections::HashMap;

    /// Unigram test scorer: loglik = sum of per-token log-probabilities,
    /// with a shared default for tokens outside the table. Differences
    /// between counterfactuals then come only from the substituted token.
    pub struct TableScorer {
        pub probs: HashMap<String, f64>,
        pub default: f64,
    }

    impl TableScorer {
        pub fn new(pairs: &[(&str, f64)]) -> Self {
            TableScorer {
                probs: pairs
                    .iter()
                    .map(|(k, v)| (k.to_string(), *v))
                    .collect(),
                default: 0.05,
            }
        }
    }

    impl LikelihoodScorer for TableScorer {
        fn sentence_log_likelihood(&self, text: &str) -> CResult<f64> {
            let tokens = tokenize(text);
            if tokens.is_empty() {
                return Err(Error::EmptyAfterTokenization);
            }
            Ok(tokens
                .iter()
                .map(|t| self.probs.get(t).copied().unwrap_or(self.default).ln())
                .sum())
        }
    }

    fn tiny_lexicon() -> SgtLexicon {
        let dir = tempfile::tempdir().unwrap();
        let lex = dir.path().join("lex.tsv");
        let cats = dir.path().join("cats.tsv");
        std::fs::write(
            &lex,
            "muslim\treligion\njewish\treligion\nwhite\trace\nwomen\tgender\n",
        )
        .unwrap();
        std::fs::write(&cats, "religion\tReligion\nrace\tRace\ngender\tGender\n").unwrap();
        SgtLexicon::load(&lex, &cats).unwrap()
    }

    fn scorer() -> TableScorer {
        TableScorer::new(&[
            ("muslim", 0.4),
            ("jewish", 0.3),
            ("white", 0.2),
            ("women", 0.1),
        ])
    }

    fn doc(text: &str, label: Option<u8>) -> Document {
        Document::new("d1", text, label)
    }

    fn only_mention(lexicon: &SgtLexicon, doc: &Document) -> SgtMention {
        let mentions = lexicon.detect(&doc.text);
        assert_eq!(mentions.len(), 1);
        mentions[0].clone()
    }

    #[test]
    fn substitution_replaces_exactly_the_span() {
        let lex = tiny_lexicon();
        let d = doc("the muslim man", None);
        let m = only_mention(&lex, &d);
        let subs = substitute_mention(&d, &m, &lex).unwrap();
        let texts: Vec<&str> = subs.iter().map(|(_, t)| t.as_str()).collect();
        assert_eq!(
            texts,
            vec!["the jewish man", "the white man", "the women man"]
        );
    }

    #[test]
    fn multiword_replacement_grows_token_count() {
        let lex = SgtLexicon::load_default();
        let d = doc("the jew ran", None);
        let m = only_mention(&lex, &d);
        let subs = substitute_mention(&d, &m, &lex).unwrap();
        let me = subs
            .iter()
            .find(|(i, _)| lex.entry(*i).surface_str() == "middle eastern")
            .unwrap();
        assert_eq!(me.1, "the middle eastern ran");
        assert_eq!(tokenize(&me.1).len(), tokenize(&d.text).len() + 1);
    }

    #[test]
    fn bad_span_rejected() {
        let lex = tiny_lexicon();
        let d = doc("the muslim man", None);
        let bogus = SgtMention {
            entry: 0,
            start: 2,
            end: 3,
        };
        assert!(matches!(
            substitute_mention(&d, &bogus, &lex),
            Err(Error::BadSpan { .. })
        ));
    }

    #[test]
    fn acl_keeps_equal_or_higher_likelihood() {
        let lex = tiny_lexicon();
        let s = scorer();
        let d = doc("the white man", None);
        let m = only_mention(&lex, &d);
        let set = generate(&d, &m, &lex, &s, Strategy::Acl, &GenOptions::default()).unwrap();
        let kept: Vec<&str> = set.entries.iter().map(|e| e.replacement.as_str()).collect();
        assert_eq!(kept, vec!["muslim", "jewish"]);
        // inclusivity: an exact tie is kept
        let tie = TableScorer::new(&[
            ("muslim", 0.2),
            ("jewish", 0.1),
            ("white", 0.2),
            ("women", 0.1),
        ]);
        let set = generate(&d, &m, &lex, &tie, Strategy::Acl, &GenOptions::default()).unwrap();
        assert!(set
            .entries
            .iter()
            .any(|e| e.replacement == "muslim" && e.loglik == set.original_loglik));
    }

    #[test]
    fn neg_depends_on_label() {
        let lex = tiny_lexicon();
        let s = scorer();
        let nonhate = doc("the white man", Some(0));
        let m = only_mention(&lex, &nonhate);
        let set =
            generate(&nonhate, &m, &lex, &s, Strategy::Neg, &GenOptions::default()).unwrap();
        assert_eq!(set.entries.len(), 3);

        let hate = doc("the white man", Some(1));
        let set = generate(&hate, &m, &lex, &s, Strategy::Neg, &GenOptions::default()).unwrap();
        assert!(set.entries.is_empty());

        let unlabeled = doc("the white man", None);
        assert!(matches!(
            generate(&unlabeled, &m, &lex, &s, Strategy::Neg, &GenOptions::default()),
            Err(Error::Unlabeled { .. })
        ));
    }

    #[test]
    fn sg_filters_by_category() {
        let lex = tiny_lexicon();
        let s = scorer();
        let d = doc("the muslim man", None);
        let m = only_mention(&lex, &d);
        let set = generate(&d, &m, &lex, &s, Strategy::Sg, &GenOptions::default()).unwrap();
        let kept: Vec<&str> = set.entries.iter().map(|e| e.replacement.as_str()).collect();
        assert_eq!(kept, vec!["jewish"]);
        assert!(set.entries.iter().all(|e| e.loglik.is_finite()));
    }

    #[test]
    fn rand_draws_seeded_non_sgt_words() {
        let lex = tiny_lexicon();
        let s = scorer();
        let d = doc("the white man", None);
        let m = only_mention(&lex, &d);
        let vocab: Vec<String> = ["alpha", "beta", "gamma", "delta", "muslim", "white"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let mut opts = GenOptions::with_seed(9);
        opts.rand_vocab = Some(vocab.clone());
        opts.k = 3;
        let set = generate(&d, &m, &lex, &s, Strategy::Rand, &opts).unwrap();
        assert_eq!(set.entries.len(), 3);
        for e in &set.entries {
            assert!(lex.find(&e.replacement).is_none(), "{}", e.replacement);
        }
        let again = generate(&d, &m, &lex, &s, Strategy::Rand, &opts).unwrap();
        assert_eq!(set, again);

        opts.k = 5;
        assert!(matches!(
            generate(&d, &m, &lex, &s, Strategy::Rand, &opts),
            Err(Error::VocabularyTooSmall { available: 4, needed: 5 })
        ));
        opts.rand_vocab = None;
        assert!(matches!(
            generate(&d, &m, &lex, &s, Strategy::Rand, &opts),
            Err(Error::StrategyRequirement { .. })
        ));
    }

    #[test]
    fn gv_takes_most_similar_by_cosine() {
        let lex = tiny_lexicon();
        let s = scorer();
        let d = doc("the muslim man", None);
        let m = only_mention(&lex, &d);
        let table = EmbeddingTable::parse(
            "muslim 1 0\njewish 0.9 0.1\nwhite 0 1\nwomen -1 0\n",
            "t",
        )
        .unwrap();
        let mut opts = GenOptions::with_seed(0);
        opts.embeddings = Some(table);
        opts.k = 2;
        let set = generate(&d, &m, &lex, &s, Strategy::Gv, &opts).unwrap();
        let kept: Vec<&str> = set.entries.iter().map(|e| e.replacement.as_str()).collect();
        assert_eq!(kept, vec!["jewish", "white"]);

        let missing = EmbeddingTable::parse("muslim 1 0\n", "t").unwrap();
        opts.embeddings = Some(missing);
        assert!(matches!(
            generate(&d, &m, &lex, &s, Strategy::Gv, &opts),
            Err(Error::MissingEmbedding { .. })
        ));
    }

    #[test]
    fn gv_entry_count_is_min_k_lexicon_minus_one() {
        let lex = tiny_lexicon();
        let s = scorer();
        let d = doc("the muslim man", None);
        let m = only_mention(&lex, &d);
        let table = EmbeddingTable::parse(
            "muslim 1 0\njewish 0.9 0.1\nwhite 0 1\nwomen -1 0\n",
            "t",
        )
        .unwrap();
        let mut opts = GenOptions::with_seed(0);
        opts.embeddings = Some(table);
        opts.k = 10;
        let set = generate(&d, &m, &lex, &s, Strategy::Gv, &opts).unwrap();
        assert_eq!(set.entries.len(), 3); // min(10, 4 - 1)
    }

    #[test]
    fn rank_is_competition_style() {
        let lex = tiny_lexicon();
        let s = scorer();
        let d = doc("the white man", None);
        let m = only_mention(&lex, &d);
        let set = generate(&d, &m, &lex, &s, Strategy::All, &GenOptions::default()).unwrap();
        assert_eq!(rank_original(&set).unwrap(), 3);

        let top = TableScorer::new(&[
            ("muslim", 0.1),
            ("jewish", 0.1),
            ("white", 0.4),
            ("women", 0.1),
        ]);
        let set = generate(&d, &m, &lex, &top, Strategy::All, &GenOptions::default()).unwrap();
        assert_eq!(rank_original(&set).unwrap(), 1);

        let flat = TableScorer::new(&[
            ("muslim", 0.2),
            ("jewish", 0.2),
            ("white", 0.2),
            ("women", 0.2),
        ]);
        let set = generate(&d, &m, &lex, &flat, Strategy::All, &GenOptions::default()).unwrap();
        assert_eq!(rank_original(&set).unwrap(), 1);

        let acl = generate(&d, &m, &lex, &s, Strategy::Acl, &GenOptions::default()).unwrap();
        assert!(matches!(
            rank_original(&acl),
            Err(Error::NotAllStrategy(_))
        ));
    }

    #[test]
    fn rank_invariant_under_positive_affine_loglik_transform() {
        let lex = tiny_lexicon();
        let s = scorer();
        let d = doc("the white man", None);
        let m = only_mention(&lex, &d);
        let mut set =
            generate(&d, &m, &lex, &s, Strategy::All, &GenOptions::default()).unwrap();
        let before = rank_original(&set).unwrap();
        set.original_loglik = 3.0 * set.original_loglik + 7.0;
        for e in &mut set.entries {
            e.loglik = 3.0 * e.loglik + 7.0;
        }
        assert_eq!(rank_original(&set).unwrap(), before);
    }

    #[test]
    fn rank_report_requires_single_mention() {
        let lex = tiny_lexicon();
        let s = scorer();
        let corpus = Corpus::from_docs(vec![Document::new("a", "hello there", None)]).unwrap();
        assert!(matches!(
            rank_report(&corpus, &lex, &s, &GenOptions::default()),
            Err(Error::MentionCount { found: 0, .. })
        ));
    }

    #[test]
    fn cfsets_jsonl_round_trip() {
        let lex = tiny_lexicon();
        let s = scorer();
        let corpus = Corpus::from_docs(vec![
            Document::new("a", "the muslim man", Some(0)),
            Document::new("b", "the women spoke", Some(1)),
        ])
        .unwrap();
        let sets =
            generate_for_corpus(&corpus, &lex, &s, Strategy::All, &GenOptions::default())
                .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfsets.jsonl");
        save_cfsets_jsonl(&sets, &path).unwrap();
        let loaded = load_cfsets_jsonl(&path).unwrap();
        assert_eq!(sets, loaded);
    }
}
