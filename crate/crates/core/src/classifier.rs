//! Two-logit linear hate-speech classifier over hashed bag-of-n-gram
//! features, trained with counterfactual logit pairing and hand-derived
//! gradients.
//!
//! Logit row 0 is the hate class, row 1 the non-hate class; dataset labels
//! are 1 = hate, 0 = non-hate.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::counterfactuals::{generate_for_corpus, CounterfactualSet, GenOptions, Strategy};
use crate::error::{Error, Result};
use crate::lexicon::{tokenize, SgtLexicon};
use crate::lm::LikelihoodScorer;

pub const DEFAULT_DIMENSION: usize = 1 << 18;
pub const DEFAULT_LAMBDA: f64 = 0.2;
pub const MASK_TOKEN: &str = "<sgt>";
const MODEL_VERSION: u32 = 1;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
const BIGRAM_SEP: u8 = 0x1f;

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = FNV_OFFSET;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

/// Sparse hashed feature vector: index -> count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub dimension: usize,
    pub counts: BTreeMap<usize, u32>,
}

impl FeatureVector {
    pub fn zero(dimension: usize) -> Self {
        FeatureVector {
            dimension,
            counts: BTreeMap::new(),
        }
    }

    fn bump(&mut self, index: usize) {
        *self.counts.entry(index).or_insert(0) += 1;
    }
}

/// Unigram and bigram features hashed with FNV-1a 64 over UTF-8 bytes,
/// reduced modulo the dimension. With `sgt_masking`, every SGT mention is
/// first replaced by the reserved `<sgt>` token.
pub fn featurize(
    text: &str,
    dimension: usize,
    sgt_masking: bool,
    lexicon: &SgtLexicon,
) -> FeatureVector {
    let tokens = tokenize(text);
    let tokens: Vec<String> = if sgt_masking {
        let mentions = lexicon.detect_in_tokens(&tokens);
        let mut masked = Vec::with_capacity(tokens.len());
        let mut i = 0;
        let mut m = 0;
        while i < tokens.len() {
            if m < mentions.len() && mentions[m].start == i {
                masked.push(MASK_TOKEN.to_string());
                i = mentions[m].end;
                m += 1;
            } else {
                masked.push(tokens[i].clone());
                i += 1;
            }
        }
        masked
    } else {
        tokens
    };

    let mut fv = FeatureVector::zero(dimension);
    for t in &tokens {
        fv.bump((fnv1a64(t.as_bytes()) % dimension as u64) as usize);
    }
    for pair in tokens.windows(2) {
        let mut bytes = Vec::with_capacity(pair[0].len() + pair[1].len() + 1);
        bytes.extend_from_slice(pair[0].as_bytes());
        bytes.push(BIGRAM_SEP);
        bytes.extend_from_slice(pair[1].as_bytes());
        fv.bump((fnv1a64(&bytes) % dimension as u64) as usize);
    }
    fv
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierParams {
    pub dimension: usize,
    /// weights[0] is the hate row, weights[1] the non-hate row
    pub weights: [Vec<f64>; 2],
    pub bias: [f64; 2],
}

impl ClassifierParams {
    pub fn zeros(dimension: usize) -> Self {
        ClassifierParams {
            dimension,
            weights: [vec![0.0; dimension], vec![0.0; dimension]],
            bias: [0.0; 2],
        }
    }
}

/// g(x) = W·x + b
pub fn logits(params: &ClassifierParams, x: &FeatureVector) -> Result<[f64; 2]> {
    if x.dimension != params.dimension {
        return Err(Error::DimensionMismatch {
            params: params.dimension,
            input: x.dimension,
        });
    }
    let mut z = params.bias;
    for (&idx, &count) in &x.counts {
        let c = count as f64;
        z[0] += params.weights[0][idx] * c;
        z[1] += params.weights[1][idx] * c;
    }
    Ok(z)
}

pub fn softmax2(z: [f64; 2]) -> [f64; 2] {
    let m = z[0].max(z[1]);
    let e0 = (z[0] - m).exp();
    let e1 = (z[1] - m).exp();
    [e0 / (e0 + e1), e1 / (e0 + e1)]
}

/// Predicted label (1 = hate) and its probability; an exact tie goes to
/// non-hate.
pub fn predict(params: &ClassifierParams, x: &FeatureVector) -> Result<(u8, f64)> {
    let p = softmax2(logits(params, x)?);
    if p[0] > p[1] {
        Ok((1, p[0]))
    } else {
        Ok((0, p[1]))
    }
}

/// One training instance: hashed features, label, and the (consistently
/// featurized) counterfactual feature vectors it pairs with.
#[derive(Debug, Clone)]
pub struct TrainExample {
    pub id: String,
    pub features: FeatureVector,
    pub label: u8,
    pub counterfactuals: Vec<FeatureVector>,
}

fn one_hot(label: u8) -> [f64; 2] {
    if label == 1 {
        [1.0, 0.0]
    } else {
        [0.0, 1.0]
    }
}

fn cross_entropy(z: [f64; 2], label: u8) -> f64 {
    let m = z[0].max(z[1]);
    let lse = m + ((z[0] - m).exp() + (z[1] - m).exp()).ln();
    let correct = if label == 1 { z[0] } else { z[1] };
    lse - correct
}

/// Per-example contributions: (cross-entropy, unweighted mean pairing L1).
fn example_terms(params: &ClassifierParams, ex: &TrainExample) -> Result<(f64, f64)> {
    let z = logits(params, &ex.features)?;
    let ce = cross_entropy(z, ex.label);
    let mut pair = 0.0;
    if !ex.counterfactuals.is_empty() {
        for cf in &ex.counterfactuals {
            let zc = logits(params, cf)?;
            pair += (z[0] - zc[0]).abs() + (z[1] - zc[1]).abs();
        }
        pair /= ex.counterfactuals.len() as f64;
    }
    Ok((ce, pair))
}

fn l2_penalty(params: &ClassifierParams, l2: f64) -> f64 {
    if l2 == 0.0 {
        return 0.0;
    }
    let sq: f64 = params
        .weights
        .iter()
        .flat_map(|row| row.iter())
        .map(|w| w * w)
        .sum();
    0.5 * l2 * sq
}

/// Batch objective: mean over the batch of
/// [cross-entropy + lambda * mean-over-counterfactuals L1 logit gap],
/// plus 0.5 * l2 * ||W||^2. Examples without counterfactuals contribute a
/// zero pairing term.
pub fn clp_loss(
    params: &ClassifierParams,
    batch: &[TrainExample],
    lambda: f64,
    l2: f64,
) -> Result<f64> {
    let mut total = 0.0;
    for ex in batch {
        let (ce, pair) = example_terms(params, ex)?;
        total += ce + lambda * pair;
    }
    Ok(total / batch.len() as f64 + l2_penalty(params, l2))
}

/// Literal unweighted-sum variant of the objective (no batch or
/// per-counterfactual averaging).
pub fn clp_loss_raw_sum(
    params: &ClassifierParams,
    batch: &[TrainExample],
    lambda: f64,
) -> Result<f64> {
    let mut total = 0.0;
    for ex in batch {
        let z = logits(params, &ex.features)?;
        total += cross_entropy(z, ex.label);
        for cf in &ex.counterfactuals {
            let zc = logits(params, cf)?;
            total += lambda * ((z[0] - zc[0]).abs() + (z[1] - zc[1]).abs());
        }
    }
    Ok(total)
}

#[derive(Debug, Clone)]
pub struct Gradient {
    pub weights: [Vec<f64>; 2],
    pub bias: [f64; 2],
}

impl Gradient {
    fn zeros(dimension: usize) -> Self {
        Gradient {
            weights: [vec![0.0; dimension], vec![0.0; dimension]],
            bias: [0.0; 2],
        }
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0 // subgradient choice at the kink
    }
}

/// Analytic gradient of `clp_loss`. Cross-entropy contributes
/// (softmax - one-hot) ⊗ x per row; each counterfactual pair contributes
/// lambda * sign(g_i(x) - g_i(x')) ⊗ (x - x') to row i (bias terms cancel
/// in the pair difference).
pub fn clp_gradient(
    params: &ClassifierParams,
    batch: &[TrainExample],
    lambda: f64,
    l2: f64,
) -> Result<Gradient> {
    let mut grad = Gradient::zeros(params.dimension);
    let scale = 1.0 / batch.len() as f64;
    for ex in batch {
        let z = logits(params, &ex.features)?;
        let p = softmax2(z);
        let y = one_hot(ex.label);
        for row in 0..2 {
            let coeff = (p[row] - y[row]) * scale;
            grad.bias[row] += coeff;
            for (&idx, &count) in &ex.features.counts {
                grad.weights[row][idx] += coeff * count as f64;
            }
        }
        if lambda != 0.0 && !ex.counterfactuals.is_empty() {
            let pair_scale = lambda * scale / ex.counterfactuals.len() as f64;
            for cf in &ex.counterfactuals {
                let zc = logits(params, cf)?;
                for row in 0..2 {
                    let s = sign(z[row] - zc[row]) * pair_scale;
                    if s == 0.0 {
                        continue;
                    }
                    for (&idx, &count) in &ex.features.counts {
                        grad.weights[row][idx] += s * count as f64;
                    }
                    for (&idx, &count) in &cf.counts {
                        grad.weights[row][idx] -= s * count as f64;
                    }
                }
            }
        }
    }
    if l2 != 0.0 {
        for row in 0..2 {
            for (g, w) in grad.weights[row].iter_mut().zip(&params.weights[row]) {
                *g += l2 * w;
            }
        }
    }
    Ok(grad)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lambda: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub strategy: Strategy,
    pub sgt_masking: bool,
    pub l2: f64,
    pub dimension: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lambda: DEFAULT_LAMBDA,
            learning_rate: 0.1,
            epochs: 50,
            batch_size: 32,
            seed: 0,
            strategy: Strategy::Acl,
            sgt_masking: false,
            l2: 1e-6,
            dimension: DEFAULT_DIMENSION,
        }
    }
}

/// Per-epoch training log. `pair_loss_hate` is the share of the pairing
/// term attributed to hate-labeled documents.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub loss: f64,
    pub ce_loss: f64,
    pub pair_loss: f64,
    pub pair_loss_hate: f64,
}

/// Trained classifier plus the featurization contract its inputs follow.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Model {
    pub version: u32,
    pub sgt_masking: bool,
    pub params: ClassifierParams,
}

impl Model {
    pub fn new(params: ClassifierParams, sgt_masking: bool) -> Self {
        Model {
            version: MODEL_VERSION,
            sgt_masking,
            params,
        }
    }

    pub fn featurize(&self, text: &str, lexicon: &SgtLexicon) -> FeatureVector {
        featurize(text, self.params.dimension, self.sgt_masking, lexicon)
    }

    pub fn predict_text(&self, text: &str, lexicon: &SgtLexicon) -> Result<(u8, f64)> {
        predict(&self.params, &self.featurize(text, lexicon))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string(self).expect("model serializes");
        std::fs::write(path, json).map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        let model: Model = serde_json::from_str(&text).map_err(|e| Error::Malformed {
            path: path.display().to_string(),
            line: 0,
            message: e.to_string(),
        })?;
        if model.version != MODEL_VERSION {
            return Err(Error::Invalid(format!(
                "unsupported model version {}",
                model.version
            )));
        }
        Ok(model)
    }
}

/// Builds training examples: documents are featurized with the configured
/// masking flag; counterfactual texts are always featurized unmasked (MASK
/// is a baseline, not a strategy modifier).
pub fn build_examples(
    corpus: &Corpus,
    cfsets: &[CounterfactualSet],
    lexicon: &SgtLexicon,
    config: &TrainConfig,
) -> Result<Vec<TrainExample>> {
    corpus.require_labels()?;
    let mut cf_by_doc: BTreeMap<&str, Vec<&CounterfactualSet>> = BTreeMap::new();
    for set in cfsets {
        cf_by_doc.entry(set.doc_id.as_str()).or_default().push(set);
    }
    corpus
        .docs
        .iter()
        .map(|doc| {
            let features = featurize(&doc.text, config.dimension, config.sgt_masking, lexicon);
            let counterfactuals = cf_by_doc
                .get(doc.id.as_str())
                .map(|sets| {
                    sets.iter()
                        .flat_map(|s| s.entries.iter())
                        .map(|e| featurize(&e.text, config.dimension, false, lexicon))
                        .collect()
                })
                .unwrap_or_default();
            Ok(TrainExample {
                id: doc.id.clone(),
                features,
                label: doc.label.unwrap(),
                counterfactuals,
            })
        })
        .collect()
}

/// Mini-batch SGD on the CLP objective. Counterfactual sets are generated
/// once up front; shuffling is seeded per epoch, so training is a pure
/// function of (corpus, config, generation options).
pub fn train(
    corpus: &Corpus,
    lexicon: &SgtLexicon,
    scorer: &(dyn LikelihoodScorer + Sync),
    config: &TrainConfig,
    options: &GenOptions,
) -> Result<(Model, Vec<EpochLog>)> {
    corpus.require_labels()?;
    let cfsets = generate_for_corpus(corpus, lexicon, scorer, config.strategy, options)?;
    let examples = build_examples(corpus, &cfsets, lexicon, config)?;
    train_from_examples(&examples, config)
}

/// Training core over pre-built examples (used directly by the lambda
/// sweep, which shares one generation pass across lambda values).
pub fn train_from_examples(
    examples: &[TrainExample],
    config: &TrainConfig,
) -> Result<(Model, Vec<EpochLog>)> {
    if examples.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let batch_size = config.batch_size.max(1);
    let mut params = ClassifierParams::zeros(config.dimension);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut log = Vec::with_capacity(config.epochs);

    let mut order: Vec<usize> = (0..examples.len()).collect();
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_ce = 0.0;
        let mut epoch_pair = 0.0;
        let mut epoch_pair_hate = 0.0;
        for (batch_no, chunk) in order.chunks(batch_size).enumerate() {
            let batch: Vec<TrainExample> =
                chunk.iter().map(|&i| examples[i].clone()).collect();
            let grad = clp_gradient(&params, &batch, config.lambda, config.l2)?;
            for row in 0..2 {
                for (w, g) in params.weights[row].iter_mut().zip(&grad.weights[row]) {
                    *w -= config.learning_rate * g;
                }
                params.bias[row] -= config.learning_rate * grad.bias[row];
            }
            for ex in &batch {
                let (ce, pair) = example_terms(&params, ex)?;
                let weighted = config.lambda * pair;
                epoch_ce += ce;
                epoch_pair += weighted;
                if ex.label == 1 {
                    epoch_pair_hate += weighted;
                }
                let loss = ce + weighted;
                if !loss.is_finite() {
                    return Err(Error::NonFiniteLoss {
                        epoch,
                        batch: batch_no,
                        loss,
                    });
                }
            }
        }
        let n = examples.len() as f64;
        let ce = epoch_ce / n;
        let pair = epoch_pair / n;
        log.push(EpochLog {
            epoch,
            loss: ce + pair + l2_penalty(&params, config.l2),
            ce_loss: ce,
            pair_loss: pair,
            pair_loss_hate: epoch_pair_hate / n,
        });
    }
    Ok((Model::new(params, config.sgt_masking), log))
}

/// Training log CSV with header `epoch,loss,ce_loss,pair_loss`.
pub fn save_train_log(log: &[EpochLog], path: &Path) -> Result<()> {
    let mut out = String::from("epoch,loss,ce_loss,pair_loss\n");
    for e in log {
        out.push_str(&format!(
            "{},{},{},{}\n",
            e.epoch, e.loss, e.ce_loss, e.pair_loss
        ));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;

    fn lex() -> SgtLexicon {
        SgtLexicon::load_default()
    }

    fn fv(dimension: usize, entries: &[(usize, u32)]) -> FeatureVector {
        FeatureVector {
            dimension,
            counts: entries.iter().copied().collect(),
        }
    }

    #[test]
    fn featurize_matches_fnv_oracle() {
        // indices frozen from an independent FNV-1a implementation
        let fvec = featurize("a b", 1 << 18, false, &lex());
        assert_eq!(fvec.counts.len(), 3);
        assert_eq!(fvec.counts.get(&126092), Some(&1)); // "a"
        assert_eq!(fvec.counts.get(&127397), Some(&1)); // "b"
        assert_eq!(fvec.counts.get(&199057), Some(&1)); // "a\x1fb"
    }

    #[test]
    fn featurize_empty_and_masking() {
        let lexicon = lex();
        assert!(featurize("", 16, false, &lexicon).counts.is_empty());
        let a = featurize("the jew ran", 1 << 18, true, &lexicon);
        let b = featurize("the muslim ran", 1 << 18, true, &lexicon);
        assert_eq!(a, b);
        // multiword SGT collapses to a single mask token
        let c = featurize("the middle eastern ran", 1 << 18, true, &lexicon);
        assert_eq!(a, c);
    }

    #[test]
    fn logits_and_predict_worked_examples() {
        let zero = ClassifierParams::zeros(4);
        let x = fv(4, &[(0, 1), (2, 3)]);
        assert_eq!(logits(&zero, &x).unwrap(), [0.0, 0.0]);
        let (label, p) = predict(&zero, &x).unwrap();
        assert_eq!(label, 0); // tie goes to non-hate
        assert!((p - 0.5).abs() < 1e-12);

        let mut params = ClassifierParams::zeros(1);
        params.weights[0][0] = 1.0;
        params.weights[1][0] = -1.0;
        let x = fv(1, &[(0, 1)]);
        assert_eq!(logits(&params, &x).unwrap(), [1.0, -1.0]);
        let (label, p) = predict(&params, &x).unwrap();
        assert_eq!(label, 1);
        let expected = 1f64.exp() / (1f64.exp() + (-1f64).exp());
        assert!((p - expected).abs() < 1e-12);
        assert!((p - 0.8808).abs() < 1e-4);

        let zero_x = fv(1, &[]);
        assert_eq!(logits(&params, &zero_x).unwrap(), [0.0, 0.0]);

        let mut far = ClassifierParams::zeros(1);
        far.bias = [-10.0, 10.0];
        let (label, p) = predict(&far, &zero_x).unwrap();
        assert_eq!(label, 0);
        assert!((1.0 - p) < 2.1e-9);

        let wrong_dim = fv(2, &[]);
        assert!(matches!(
            logits(&params, &wrong_dim),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    fn d1_example() -> (ClassifierParams, TrainExample) {
        let mut params = ClassifierParams::zeros(1);
        params.weights[0][0] = 1.0;
        params.weights[1][0] = -1.0;
        let ex = TrainExample {
            id: "x".to_string(),
            features: fv(1, &[(0, 1)]),
            label: 0,
            counterfactuals: vec![fv(1, &[])],
        };
        (params, ex)
    }

    #[test]
    fn clp_loss_worked_examples() {
        let lexicon = lex();
        let zero = ClassifierParams::zeros(8);
        let batch = vec![TrainExample {
            id: "a".to_string(),
            features: featurize("some text", 8, false, &lexicon),
            label: 1,
            counterfactuals: vec![featurize("other text", 8, false, &lexicon)],
        }];
        let loss = clp_loss(&zero, &batch, 5.0, 0.0).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);

        let (params, ex) = d1_example();
        let loss = clp_loss(&params, &[ex.clone()], 0.2, 0.0).unwrap();
        let p_hate = 1f64.exp() / (1f64.exp() + (-1f64).exp());
        let ce = -(1.0 - p_hate).ln();
        assert!((ce - 2.1269).abs() < 1e-4);
        assert!((loss - (ce + 0.4)).abs() < 1e-10);
        assert!((loss - 2.5269).abs() < 1e-4);

        let plain = clp_loss(&params, &[ex.clone()], 0.0, 0.0).unwrap();
        assert!((plain - ce).abs() < 1e-12);
    }

    #[test]
    fn raw_sum_mode_drops_averaging() {
        let (params, ex) = d1_example();
        let two = vec![ex.clone(), ex.clone()];
        let mean = clp_loss(&params, &two, 0.2, 0.0).unwrap();
        let raw = clp_loss_raw_sum(&params, &two, 0.2).unwrap();
        assert!((raw - 2.0 * mean).abs() < 1e-10);
    }

    #[test]
    fn loss_monotone_in_lambda() {
        let (params, ex) = d1_example();
        let batch = vec![ex];
        let mut last = f64::NEG_INFINITY;
        for lambda in [0.0, 0.1, 0.2, 1.0, 5.0] {
            let loss = clp_loss(&params, &batch, lambda, 0.0).unwrap();
            assert!(loss >= last);
            last = loss;
        }
    }

    #[test]
    fn zero_params_symmetric_batch_has_zero_bias_gradient() {
        let params = ClassifierParams::zeros(4);
        let x = fv(4, &[(1, 2)]);
        let batch = vec![
            TrainExample {
                id: "p".to_string(),
                features: x.clone(),
                label: 1,
                counterfactuals: vec![],
            },
            TrainExample {
                id: "n".to_string(),
                features: x,
                label: 0,
                counterfactuals: vec![],
            },
        ];
        let grad = clp_gradient(&params, &batch, 0.2, 0.0).unwrap();
        assert_eq!(grad.bias, [0.0, 0.0]);
        assert!(grad.weights.iter().all(|r| r.iter().all(|g| *g == 0.0)));
    }

    #[test]
    fn lambda_zero_gradient_is_plain_cross_entropy_gradient() {
        let (params, ex) = d1_example();
        let with = clp_gradient(&params, &[ex.clone()], 0.0, 0.0).unwrap();
        let no_cf = TrainExample {
            counterfactuals: vec![],
            ..ex
        };
        let without = clp_gradient(&params, &[no_cf], 0.0, 0.0).unwrap();
        assert_eq!(with.weights[0], without.weights[0]);
        assert_eq!(with.bias, without.bias);
    }

    /// Central finite differences on clp_loss, one coordinate at a time.
    pub fn finite_difference_gradient(
        params: &ClassifierParams,
        batch: &[TrainExample],
        lambda: f64,
        l2: f64,
        step: f64,
    ) -> Gradient {
        let mut grad = Gradient::zeros(params.dimension);
        let mut probe = params.clone();
        for row in 0..2 {
            for i in 0..params.dimension {
                probe.weights[row][i] = params.weights[row][i] + step;
                let plus = clp_loss(&probe, batch, lambda, l2).unwrap();
                probe.weights[row][i] = params.weights[row][i] - step;
                let minus = clp_loss(&probe, batch, lambda, l2).unwrap();
                probe.weights[row][i] = params.weights[row][i];
                grad.weights[row][i] = (plus - minus) / (2.0 * step);
            }
            probe.bias[row] = params.bias[row] + step;
            let plus = clp_loss(&probe, batch, lambda, l2).unwrap();
            probe.bias[row] = params.bias[row] - step;
            let minus = clp_loss(&probe, batch, lambda, l2).unwrap();
            probe.bias[row] = params.bias[row];
            grad.bias[row] = (plus - minus) / (2.0 * step);
        }
        grad
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let dim = 6;
        for _ in 0..20 {
            let mut params = ClassifierParams::zeros(dim);
            for row in 0..2 {
                for w in &mut params.weights[row] {
                    *w = rng.random_range(-1.0..1.0);
                }
                params.bias[row] = rng.random_range(-1.0..1.0);
            }
            let batch: Vec<TrainExample> = (0..3)
                .map(|i| TrainExample {
                    id: format!("e{i}"),
                    features: fv(
                        dim,
                        &[(rng.random_range(0..dim), 1), (rng.random_range(0..dim), 2)],
                    ),
                    label: rng.random_range(0..2) as u8,
                    counterfactuals: vec![fv(dim, &[(rng.random_range(0..dim), 1)])],
                })
                .collect();
            // keep clear of the L1 kink
            let kinked = batch.iter().any(|ex| {
                let z = logits(&params, &ex.features).unwrap();
                ex.counterfactuals.iter().any(|cf| {
                    let zc = logits(&params, cf).unwrap();
                    (z[0] - zc[0]).abs() <= 1e-3 || (z[1] - zc[1]).abs() <= 1e-3
                })
            });
            if kinked {
                continue;
            }
            for lambda in [0.0, 0.2, 1.0] {
                let analytic = clp_gradient(&params, &batch, lambda, 1e-3).unwrap();
                let numeric =
                    finite_difference_gradient(&params, &batch, lambda, 1e-3, 1e-5);
                for row in 0..2 {
                    for i in 0..dim {
                        let a = analytic.weights[row][i];
                        let n = numeric.weights[row][i];
                        let denom = n.abs().max(1e-8);
                        assert!(
                            ((a - n).abs() / denom) < 1e-4,
                            "row {row} idx {i}: {a} vs {n}"
                        );
                    }
                    let denom = numeric.bias[row].abs().max(1e-8);
                    assert!((analytic.bias[row] - numeric.bias[row]).abs() / denom < 1e-4);
                }
            }
        }
    }

    #[test]
    fn full_batch_descent_does_not_increase_loss() {
        let (params, ex) = d1_example();
        let batch = vec![ex];
        let mut p = params;
        let mut last = clp_loss(&p, &batch, 0.2, 0.0).unwrap();
        for _ in 0..10 {
            let g = clp_gradient(&p, &batch, 0.2, 0.0).unwrap();
            for row in 0..2 {
                for (w, gv) in p.weights[row].iter_mut().zip(&g.weights[row]) {
                    *w -= 0.01 * gv;
                }
                p.bias[row] -= 0.01 * g.bias[row];
            }
            let loss = clp_loss(&p, &batch, 0.2, 0.0).unwrap();
            assert!(loss <= last + 1e-12);
            last = loss;
        }
    }

    fn separable_corpus() -> Corpus {
        let mut docs = Vec::new();
        for i in 0..10 {
            docs.push(Document::new(
                format!("h{i}"),
                format!("awful horrid rant number{i}"),
                Some(1),
            ));
            docs.push(Document::new(
                format!("n{i}"),
                format!("pleasant kind note number{i}"),
                Some(0),
            ));
        }
        Corpus::from_docs(docs).unwrap()
    }

    #[test]
    fn plain_training_separates_a_separable_fixture() {
        let lexicon = lex();
        let corpus = separable_corpus();
        let scorer = crate::lm::NgramModel::train(&corpus, 2, 0.75).unwrap();
        let config = TrainConfig {
            lambda: 0.0,
            epochs: 200,
            batch_size: 4,
            dimension: 1 << 12,
            strategy: Strategy::All,
            seed: 3,
            ..Default::default()
        };
        let (model, log) = train(&corpus, &lexicon, &scorer, &config, &GenOptions::default())
            .unwrap();
        assert_eq!(log.len(), 200);
        let correct = corpus
            .docs
            .iter()
            .filter(|d| {
                model.predict_text(&d.text, &lexicon).unwrap().0 == d.label.unwrap()
            })
            .count();
        assert_eq!(correct, corpus.len());
    }

    #[test]
    fn training_is_deterministic() {
        let lexicon = lex();
        let corpus = separable_corpus();
        let scorer = crate::lm::NgramModel::train(&corpus, 2, 0.75).unwrap();
        let config = TrainConfig {
            epochs: 5,
            dimension: 1 << 12,
            strategy: Strategy::All,
            seed: 11,
            ..Default::default()
        };
        let (m1, l1) = train(&corpus, &lexicon, &scorer, &config, &GenOptions::default())
            .unwrap();
        let (m2, l2) = train(&corpus, &lexicon, &scorer, &config, &GenOptions::default())
            .unwrap();
        assert_eq!(m1.params.weights[0], m2.params.weights[0]);
        assert_eq!(m1.params.weights[1], m2.params.weights[1]);
        assert_eq!(m1.params.bias, m2.params.bias);
        assert_eq!(
            serde_json::to_string(&l1).unwrap(),
            serde_json::to_string(&l2).unwrap()
        );
    }

    #[test]
    fn neg_on_unlabeled_corpus_errors() {
        let lexicon = lex();
        let corpus = Corpus::from_docs(vec![Document::new("a", "the jew ran", None)]).unwrap();
        let scorer = crate::lm::NgramModel::train(&separable_corpus(), 1, 0.75).unwrap();
        let config = TrainConfig {
            strategy: Strategy::Neg,
            ..Default::default()
        };
        assert!(matches!(
            train(&corpus, &lexicon, &scorer, &config, &GenOptions::default()),
            Err(Error::Unlabeled { .. })
        ));
    }

    #[test]
    fn model_save_load_round_trip() {
        let mut params = ClassifierParams::zeros(4);
        params.weights[0][2] = 0.5;
        params.bias = [0.1, -0.1];
        let model = Model::new(params, true);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        model.save(&path).unwrap();
        let loaded = Model::load(&path).unwrap();
        assert_eq!(loaded.sgt_masking, true);
        assert_eq!(loaded.params, model.params);
    }
}
