//! Word embedding tables (`word v1 v2 ... vd` lines) and cosine similarity,
//! used by the GV substitution strategy.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::lexicon::Sgt;

#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn load(path: &Path) -> Result<Self> {
        let display = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(&display, e))?;
        Self::parse(&text, &display)
    }

    pub fn parse(text: &str, path: &str) -> Result<Self> {
        let mut vectors = HashMap::new();
        let mut dim = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let word = parts.next().unwrap().to_string();
            let vec: std::result::Result<Vec<f64>, _> =
                parts.map(str::parse::<f64>).collect();
            let vec = vec.map_err(|e| Error::Malformed {
                path: path.to_string(),
                line: lineno + 1,
                message: format!("bad float: {e}"),
            })?;
            if vec.is_empty() {
                return Err(Error::Malformed {
                    path: path.to_string(),
                    line: lineno + 1,
                    message: "no vector components".to_string(),
                });
            }
            match dim {
                None => dim = Some(vec.len()),
                Some(d) if d != vec.len() => {
                    return Err(Error::Malformed {
                        path: path.to_string(),
                        line: lineno + 1,
                        message: format!("dimension {} differs from {}", vec.len(), d),
                    });
                }
                _ => {}
            }
            vectors.insert(word, vec);
        }
        let dim = dim.ok_or_else(|| Error::Malformed {
            path: path.to_string(),
            line: 0,
            message: "empty embedding table".to_string(),
        })?;
        Ok(EmbeddingTable { dim, vectors })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vectors.get(word).map(Vec::as_slice)
    }

    /// Multiword SGTs use the mean of their word vectors; any missing word
    /// is an error rather than a silent fallback.
    pub fn sgt_vector(&self, sgt: &Sgt) -> Result<Vec<f64>> {
        let mut sum = vec![0.0; self.dim];
        for word in &sgt.surface {
            let v = self.get(word).ok_or_else(|| Error::MissingEmbedding {
                surface: sgt.surface_str(),
                word: word.clone(),
            })?;
            for (s, x) in sum.iter_mut().zip(v) {
                *s += x;
            }
        }
        let n = sgt.surface.len() as f64;
        for s in &mut sum {
            *s /= n;
        }
        Ok(sum)
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    if a == b {
        // exact (covers the zero/zero convention and avoids rounding away
        // from 1.0 on identical vectors)
        return 1.0;
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 && nb == 0.0 {
        1.0
    } else if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}
