//! Labeled/unlabeled document corpora: ingestion, SGT-aware splits, and
//! stratified folds.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexicon::{SgtLexicon, SgtMention};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<u8>,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>, label: Option<u8>) -> Self {
        Document {
            id: id.into(),
            text: text.into(),
            label,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub docs: Vec<Document>,
    pub provenance: Option<String>,
}

impl Corpus {
    pub fn from_docs(docs: Vec<Document>) -> Result<Self> {
        let mut seen = HashSet::new();
        for d in &docs {
            if d.text.is_empty() {
                return Err(Error::EmptyText { id: d.id.clone() });
            }
            if !seen.insert(d.id.clone()) {
                return Err(Error::DuplicateDocId { id: d.id.clone() });
            }
        }
        Ok(Corpus {
            docs,
            provenance: None,
        })
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    /// All docs must carry a label; returns the first offender otherwise.
    pub fn require_labels(&self) -> Result<()> {
        for d in &self.docs {
            if d.label.is_none() {
                return Err(Error::Unlabeled { id: d.id.clone() });
            }
        }
        Ok(())
    }
}

#[derive(Deserialize)]
struct JsonlRecord {
    id: String,
    text: String,
    #[serde(default)]
    label: Option<i64>,
}

fn validate_label(id: &str, label: Option<i64>) -> Result<Option<u8>> {
    match label {
        None => Ok(None),
        Some(0) => Ok(Some(0)),
        Some(1) => Ok(Some(1)),
        Some(other) => Err(Error::BadLabel {
            id: id.to_string(),
            label: other,
        }),
    }
}

/// JSONL loader: one `{"id": ..., "text": ..., "label": 0|1}` object per
/// line; `label` optional.
pub fn load_jsonl(path: &Path) -> Result<Corpus> {
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(&display, e))?;
    let mut docs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: JsonlRecord = serde_json::from_str(line).map_err(|e| Error::Malformed {
            path: display.clone(),
            line: lineno + 1,
            message: e.to_string(),
        })?;
        let label = validate_label(&rec.id, rec.label)?;
        docs.push(Document::new(rec.id, rec.text, label));
    }
    let mut corpus = Corpus::from_docs(docs)?;
    corpus.provenance = Some(display);
    Ok(corpus)
}

/// CSV loader with header `id,text,label` (RFC 4180 quoting); empty label
/// cells mean unlabeled.
pub fn load_csv(path: &Path) -> Result<Corpus> {
    let display = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::Malformed {
            path: display.clone(),
            line: 0,
            message: e.to_string(),
        })?;
    let mut docs = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| Error::Malformed {
            path: display.clone(),
            line: i + 2,
            message: e.to_string(),
        })?;
        let id = row.get(0).unwrap_or("").to_string();
        let text = row.get(1).unwrap_or("").to_string();
        let label_raw = row.get(2).unwrap_or("").trim();
        let label = if label_raw.is_empty() {
            None
        } else {
            let v: i64 = label_raw.parse().map_err(|_| Error::Malformed {
                path: display.clone(),
                line: i + 2,
                message: format!("bad label {label_raw:?}"),
            })?;
            validate_label(&id, Some(v))?
        };
        docs.push(Document::new(id, text, label));
    }
    let mut corpus = Corpus::from_docs(docs)?;
    corpus.provenance = Some(display);
    Ok(corpus)
}

pub fn save_jsonl(corpus: &Corpus, path: &Path) -> Result<()> {
    let mut out = String::new();
    for d in &corpus.docs {
        out.push_str(&serde_json::to_string(d).expect("documents serialize"));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Keep documents with exactly `k` SGT mentions.
pub fn filter_by_sgt_count(corpus: &Corpus, lexicon: &SgtLexicon, k: usize) -> Corpus {
    let docs = corpus
        .docs
        .iter()
        .filter(|d| lexicon.detect(&d.text).len() == k)
        .cloned()
        .collect();
    Corpus {
        docs,
        provenance: corpus.provenance.clone(),
    }
}

pub fn mentions_of(doc: &Document, lexicon: &SgtLexicon) -> Vec<SgtMention> {
    lexicon.detect(&doc.text)
}

/// Train/test split that keeps each SGT group's train share at
/// `train_fraction`. Documents are grouped by the sorted set of SGT surfaces
/// they mention (no-SGT docs form one group); each group is shuffled with the
/// seed and cut at floor(n·fraction), with the remaining deficit against
/// floor(N·fraction) assigned one doc per group by descending group size,
/// ties broken by group key.
pub fn split_by_sgt_ratio(
    corpus: &Corpus,
    lexicon: &SgtLexicon,
    train_fraction: f64,
    seed: u64,
) -> Result<(Corpus, Corpus)> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::BadFraction(train_fraction));
    }

    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, d) in corpus.docs.iter().enumerate() {
        let key = lexicon.mentioned_surfaces(&d.text).join("|");
        groups.entry(key).or_default().push(i);
    }

    let total_train = (corpus.len() as f64 * train_fraction).floor() as usize;
    let mut base: BTreeMap<&str, usize> = BTreeMap::new();
    let mut fractional: Vec<(&str, usize)> = Vec::new(); // (key, group size)
    let mut allocated = 0usize;
    for (key, members) in &groups {
        let exact = members.len() as f64 * train_fraction;
        let take = exact.floor() as usize;
        base.insert(key, take);
        allocated += take;
        if exact - take as f64 > 1e-12 {
            fractional.push((key, members.len()));
        }
    }
    let mut deficit = total_train.saturating_sub(allocated);
    fractional.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    for (key, _) in fractional {
        if deficit == 0 {
            break;
        }
        *base.get_mut(key).unwrap() += 1;
        deficit -= 1;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for (key, members) in &groups {
        let mut shuffled = members.clone();
        shuffled.shuffle(&mut rng);
        let take = base[key.as_str()];
        train_idx.extend_from_slice(&shuffled[..take]);
        test_idx.extend_from_slice(&shuffled[take..]);
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();

    let pick = |idx: &[usize]| Corpus {
        docs: idx.iter().map(|&i| corpus.docs[i].clone()).collect(),
        provenance: corpus.provenance.clone(),
    };
    Ok((pick(&train_idx), pick(&test_idx)))
}

/// Label-stratified cross-validation folds: positives and negatives are
/// shuffled separately and dealt so every fold's positive ratio stays within
/// one document of the corpus ratio. Returns (train, validation) pairs.
pub fn stratified_folds(
    corpus: &Corpus,
    n_folds: usize,
    seed: u64,
) -> Result<Vec<(Corpus, Corpus)>> {
    corpus.require_labels()?;
    if n_folds < 2 {
        return Err(Error::TooFewFolds(n_folds));
    }
    let mut pos: Vec<usize> = Vec::new();
    let mut neg: Vec<usize> = Vec::new();
    for (i, d) in corpus.docs.iter().enumerate() {
        match d.label.unwrap() {
            1 => pos.push(i),
            _ => neg.push(i),
        }
    }
    for (label, class) in [(1u8, &pos), (0u8, &neg)] {
        if class.is_empty() {
            return Err(Error::ClassTooSmall {
                label,
                count: 0,
                folds: n_folds,
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);

    let mut folds: Vec<Vec<usize>> = vec![Vec::new(); n_folds];
    for (i, &doc) in pos.iter().enumerate() {
        folds[i % n_folds].push(doc);
    }
    // negatives fill the currently smallest folds to keep sizes balanced
    for &doc in &neg {
        let target = (0..n_folds)
            .min_by_key(|&f| (folds[f].len(), f))
            .unwrap();
        folds[target].push(doc);
    }
    for f in &mut folds {
        f.sort_unstable();
    }

    let mut pairs = Vec::with_capacity(n_folds);
    for v in 0..n_folds {
        let val_docs: Vec<Document> = folds[v].iter().map(|&i| corpus.docs[i].clone()).collect();
        let mut train_docs = Vec::new();
        for (f, members) in folds.iter().enumerate() {
            if f != v {
                train_docs.extend(members.iter().map(|&i| corpus.docs[i].clone()));
            }
        }
        pairs.push((
            Corpus {
                docs: train_docs,
                provenance: corpus.provenance.clone(),
            },
            Corpus {
                docs: val_docs,
                provenance: corpus.provenance.clone(),
            },
        ));
    }
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn doc(id: &str, text: &str) -> Document {
        Document::new(id, text, None)
    }

    fn labeled(id: &str, text: &str, label: u8) -> Document {
        Document::new(id, text, Some(label))
    }

    #[test]
    fn jsonl_happy_path() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, r#"{{"id":"a","text":"hello there"}}"#).unwrap();
        writeln!(f, r#"{{"id":"b","text":"the jew ran","label":1}}"#).unwrap();
        writeln!(f, r#"{{"id":"c","text":"fine day","label":0}}"#).unwrap();
        let corpus = load_jsonl(f.path()).unwrap();
        assert_eq!(corpus.len(), 3);
        assert_eq!(corpus.docs[1].label, Some(1));
        assert_eq!(corpus.docs[0].label, None);
    }

    #[test]
    fn jsonl_rejects_empty_text_and_dup_ids_and_bad_labels() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, r#"{{"id":"a","text":""}}"#).unwrap();
        assert!(matches!(
            load_jsonl(f.path()),
            Err(Error::EmptyText { .. })
        ));

        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, r#"{{"id":"a","text":"x"}}"#).unwrap();
        writeln!(f, r#"{{"id":"a","text":"y"}}"#).unwrap();
        assert!(matches!(
            load_jsonl(f.path()),
            Err(Error::DuplicateDocId { .. })
        ));

        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, r#"{{"id":"a","text":"x","label":2}}"#).unwrap();
        assert!(matches!(load_jsonl(f.path()), Err(Error::BadLabel { .. })));
    }

    #[test]
    fn jsonl_reports_line_of_malformed_json() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, r#"{{"id":"a","text":"x"}}"#).unwrap();
        writeln!(f, "not json").unwrap();
        match load_jsonl(f.path()) {
            Err(Error::Malformed { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected Malformed, got {other:?}"),
        }
    }

    #[test]
    fn csv_round_trip() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "id,text,label").unwrap();
        writeln!(f, "a,\"hello, world\",1").unwrap();
        writeln!(f, "b,plain text,").unwrap();
        let corpus = load_csv(f.path()).unwrap();
        assert_eq!(corpus.len(), 2);
        assert_eq!(corpus.docs[0].text, "hello, world");
        assert_eq!(corpus.docs[0].label, Some(1));
        assert_eq!(corpus.docs[1].label, None);
    }

    #[test]
    fn filter_by_count() {
        let lex = SgtLexicon::load_default();
        let corpus = Corpus::from_docs(vec![
            doc("a", "the muslim man"),
            doc("b", "women and men"),
            doc("c", "hello"),
        ])
        .unwrap();
        // "the muslim man": muslim + man = 2 mentions; use a doc with one
        let one = filter_by_sgt_count(&corpus, &lex, 1);
        assert!(one.docs.iter().all(|d| lex.detect(&d.text).len() == 1));
        let zero = filter_by_sgt_count(&corpus, &lex, 0);
        assert_eq!(zero.len(), 1);
        assert_eq!(zero.docs[0].id, "c");
        let empty = filter_by_sgt_count(&Corpus::default(), &lex, 1);
        assert!(empty.is_empty());
    }

    #[test]
    fn split_keeps_group_ratios() {
        let lex = SgtLexicon::load_default();
        let mut docs = Vec::new();
        for i in 0..5 {
            docs.push(doc(&format!("j{i}"), &format!("the jew spoke {i}")));
        }
        for i in 0..5 {
            docs.push(doc(&format!("m{i}"), &format!("the muslim spoke {i}")));
        }
        let corpus = Corpus::from_docs(docs).unwrap();
        let (train, test) = split_by_sgt_ratio(&corpus, &lex, 0.8, 7).unwrap();
        assert_eq!(train.len(), 8);
        assert_eq!(test.len(), 2);
        let count = |c: &Corpus, s: &str| {
            c.docs
                .iter()
                .filter(|d| lex.mentioned_surfaces(&d.text) == vec![s.to_string()])
                .count()
        };
        assert_eq!(count(&train, "jew"), 4);
        assert_eq!(count(&train, "muslim"), 4);
        assert_eq!(count(&test, "jew"), 1);
        assert_eq!(count(&test, "muslim"), 1);
    }

    #[test]
    fn split_single_group_and_determinism() {
        let lex = SgtLexicon::load_default();
        let docs: Vec<Document> = (0..10)
            .map(|i| doc(&format!("d{i}"), &format!("the jew spoke {i}")))
            .collect();
        let corpus = Corpus::from_docs(docs).unwrap();
        let (train, test) = split_by_sgt_ratio(&corpus, &lex, 0.8, 3).unwrap();
        assert_eq!((train.len(), test.len()), (8, 2));
        let (train2, test2) = split_by_sgt_ratio(&corpus, &lex, 0.8, 3).unwrap();
        assert_eq!(
            train.docs.iter().map(|d| &d.id).collect::<Vec<_>>(),
            train2.docs.iter().map(|d| &d.id).collect::<Vec<_>>()
        );
        assert_eq!(
            test.docs.iter().map(|d| &d.id).collect::<Vec<_>>(),
            test2.docs.iter().map(|d| &d.id).collect::<Vec<_>>()
        );
    }

    #[test]
    fn split_rejects_bad_fraction_and_empty() {
        let lex = SgtLexicon::load_default();
        let corpus = Corpus::from_docs(vec![doc("a", "x")]).unwrap();
        assert!(matches!(
            split_by_sgt_ratio(&corpus, &lex, 1.0, 0),
            Err(Error::BadFraction(_))
        ));
        assert!(matches!(
            split_by_sgt_ratio(&Corpus::default(), &lex, 0.5, 0),
            Err(Error::EmptyCorpus)
        ));
    }

    #[test]
    fn folds_stratify_labels() {
        let mut docs = Vec::new();
        for i in 0..2 {
            docs.push(labeled(&format!("p{i}"), "bad stuff", 1));
        }
        for i in 0..8 {
            docs.push(labeled(&format!("n{i}"), "fine stuff", 0));
        }
        let corpus = Corpus::from_docs(docs).unwrap();
        let folds = stratified_folds(&corpus, 5, 11).unwrap();
        assert_eq!(folds.len(), 5);
        let mut pos_folds = 0;
        let mut seen_ids = Vec::new();
        for (train, val) in &folds {
            assert_eq!(val.len(), 2);
            assert_eq!(train.len(), 8);
            let pos = val.docs.iter().filter(|d| d.label == Some(1)).count();
            assert!(pos <= 1);
            if pos == 1 {
                pos_folds += 1;
            }
            seen_ids.extend(val.docs.iter().map(|d| d.id.clone()));
        }
        assert_eq!(pos_folds, 2);
        seen_ids.sort();
        seen_ids.dedup();
        assert_eq!(seen_ids.len(), 10);
    }

    #[test]
    fn folds_error_paths() {
        let corpus =
            Corpus::from_docs(vec![labeled("a", "x", 1), labeled("b", "y", 1)]).unwrap();
        assert!(matches!(
            stratified_folds(&corpus, 1, 0),
            Err(Error::TooFewFolds(1))
        ));
        assert!(matches!(
            stratified_folds(&corpus, 2, 0),
            Err(Error::ClassTooSmall { label: 0, .. })
        ));
        let unlabeled =
            Corpus::from_docs(vec![labeled("a", "x", 1), doc("b", "y")]).unwrap();
        assert!(matches!(
            stratified_folds(&unlabeled, 2, 0),
            Err(Error::Unlabeled { .. })
        ));
    }
}
