//! Social group token (SGT) lexicon: loading, validation, and mention
//! detection in tokenized text.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const DEFAULT_LEXICON: &str = include_str!("../data/sgt_lexicon.tsv");
const DEFAULT_CATEGORIES: &str = include_str!("../data/categories.tsv");

/// One social group token: a one- or two-word lowercase surface plus its
/// social category.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sgt {
    pub surface: Vec<String>,
    pub category: String,
}

impl Sgt {
    pub fn surface_str(&self) -> String {
        self.surface.join(" ")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SocialCategory {
    pub id: String,
    pub name: String,
}

#[derive(Debug, Clone)]
pub struct SgtLexicon {
    entries: Vec<Sgt>,
    categories: Vec<SocialCategory>,
    // token -> indices of entries whose surface starts with that token
    first_token: HashMap<String, Vec<usize>>,
}

/// A detected SGT occurrence: entry index plus a half-open token span.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SgtMention {
    pub entry: usize,
    pub start: usize,
    pub end: usize,
}

/// Deterministic word tokenizer shared by every component: lowercase, split
/// on Unicode whitespace, strip leading/trailing non-alphanumeric characters
/// from each token, drop empties. Internal punctuation is preserved.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .filter_map(|raw| {
            let trimmed = raw.trim_matches(|c: char| !c.is_alphanumeric());
            if trimmed.is_empty() {
                None
            } else {
                Some(trimmed.to_lowercase())
            }
        })
        .collect()
}

impl SgtLexicon {
    /// Strict loader for user-supplied files: duplicate surfaces are errors.
    pub fn load(lexicon_path: &Path, categories_path: &Path) -> Result<Self> {
        let lex_text = std::fs::read_to_string(lexicon_path)
            .map_err(|e| Error::io(lexicon_path.display().to_string(), e))?;
        let cat_text = std::fs::read_to_string(categories_path)
            .map_err(|e| Error::io(categories_path.display().to_string(), e))?;
        Self::parse(
            &lex_text,
            &lexicon_path.display().to_string(),
            &cat_text,
            &categories_path.display().to_string(),
            false,
        )
    }

    /// The shipped default lexicon. Identical repeated (surface, category)
    /// lines in the shipped file are collapsed silently.
    pub fn load_default() -> Self {
        Self::parse(
            DEFAULT_LEXICON,
            "<default lexicon>",
            DEFAULT_CATEGORIES,
            "<default categories>",
            true,
        )
        .expect("shipped default lexicon is valid")
    }

    fn parse(
        lex_text: &str,
        lex_path: &str,
        cat_text: &str,
        cat_path: &str,
        dedupe_identical: bool,
    ) -> Result<Self> {
        let mut categories: Vec<SocialCategory> = Vec::new();
        for (lineno, line) in cat_text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (id, name) = line.split_once('\t').ok_or_else(|| Error::Malformed {
                path: cat_path.to_string(),
                line: lineno + 1,
                message: "expected category_id<TAB>name".to_string(),
            })?;
            let id = id.trim();
            let name = name.trim();
            if id.is_empty() || name.is_empty() {
                return Err(Error::Malformed {
                    path: cat_path.to_string(),
                    line: lineno + 1,
                    message: "empty category id or name".to_string(),
                });
            }
            if categories.iter().any(|c| c.id == id) {
                return Err(Error::Malformed {
                    path: cat_path.to_string(),
                    line: lineno + 1,
                    message: format!("duplicate category id {id:?}"),
                });
            }
            categories.push(SocialCategory {
                id: id.to_string(),
                name: name.to_string(),
            });
        }

        let mut entries: Vec<Sgt> = Vec::new();
        let mut seen: HashMap<String, String> = HashMap::new();
        for (lineno, line) in lex_text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (surface, category) = line.split_once('\t').ok_or_else(|| Error::Malformed {
                path: lex_path.to_string(),
                line: lineno + 1,
                message: "expected surface<TAB>category_id".to_string(),
            })?;
            let surface = surface.trim();
            let category = category.trim().to_string();
            let tokens: Vec<String> = surface.split(' ').map(str::to_string).collect();
            if tokens.is_empty() || tokens.len() > 2 || tokens.iter().any(|t| t.is_empty()) {
                return Err(Error::Malformed {
                    path: lex_path.to_string(),
                    line: lineno + 1,
                    message: format!("surface {surface:?} must be 1 or 2 words"),
                });
            }
            for t in &tokens {
                let ok = t
                    .chars()
                    .all(|c| c.is_alphanumeric() && !c.is_uppercase());
                if !ok {
                    return Err(Error::Malformed {
                        path: lex_path.to_string(),
                        line: lineno + 1,
                        message: format!(
                            "surface {surface:?} must be lowercase alphanumeric words"
                        ),
                    });
                }
            }
            if !categories.iter().any(|c| c.id == category) {
                return Err(Error::UnknownCategory {
                    id: category,
                    path: lex_path.to_string(),
                    line: lineno + 1,
                });
            }
            let key = tokens.join(" ");
            if let Some(prev_cat) = seen.get(&key) {
                if dedupe_identical && *prev_cat == category {
                    continue;
                }
                return Err(Error::DuplicateSurface {
                    surface: key,
                    path: lex_path.to_string(),
                    line: lineno + 1,
                });
            }
            seen.insert(key, category.clone());
            entries.push(Sgt {
                surface: tokens,
                category,
            });
        }
        if entries.is_empty() {
            return Err(Error::EmptyLexicon);
        }

        let mut first_token: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, e) in entries.iter().enumerate() {
            first_token.entry(e.surface[0].clone()).or_default().push(i);
        }
        Ok(SgtLexicon {
            entries,
            categories,
            first_token,
        })
    }

    pub fn entries(&self) -> &[Sgt] {
        &self.entries
    }

    pub fn categories(&self) -> &[SocialCategory] {
        &self.categories
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, idx: usize) -> &Sgt {
        &self.entries[idx]
    }

    pub fn find(&self, surface: &str) -> Option<usize> {
        let tokens: Vec<&str> = surface.split(' ').collect();
        self.entries
            .iter()
            .position(|e| e.surface.len() == tokens.len() && e.surface.iter().eq(tokens.iter()))
    }

    pub fn category_of(&self, surface: &str) -> Result<&SocialCategory> {
        let idx = self.find(surface).ok_or_else(|| Error::UnknownSgt {
            surface: surface.to_string(),
        })?;
        let cat_id = &self.entries[idx].category;
        Ok(self
            .categories
            .iter()
            .find(|c| &c.id == cat_id)
            .expect("entry categories are validated at load"))
    }

    /// All SGT surfaces, as joined strings.
    pub fn surfaces(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.surface_str()).collect()
    }

    /// Left-to-right scan over the tokens; at each position the longest
    /// matching surface wins (2-token before 1-token) and matches never
    /// overlap.
    pub fn detect_in_tokens(&self, tokens: &[String]) -> Vec<SgtMention> {
        let mut mentions = Vec::new();
        let mut i = 0;
        while i < tokens.len() {
            let mut matched: Option<(usize, usize)> = None; // (entry, len)
            if let Some(cands) = self.first_token.get(&tokens[i]) {
                for &ci in cands {
                    let surf = &self.entries[ci].surface;
                    if i + surf.len() <= tokens.len()
                        && surf.iter().zip(&tokens[i..]).all(|(a, b)| a == b)
                    {
                        match matched {
                            Some((_, len)) if len >= surf.len() => {}
                            _ => matched = Some((ci, surf.len())),
                        }
                    }
                }
            }
            if let Some((entry, len)) = matched {
                mentions.push(SgtMention {
                    entry,
                    start: i,
                    end: i + len,
                });
                i += len;
            } else {
                i += 1;
            }
        }
        mentions
    }

    pub fn detect(&self, text: &str) -> Vec<SgtMention> {
        self.detect_in_tokens(&tokenize(text))
    }

    /// Count of documents-per-surface style grouping helper: the sorted set
    /// of distinct surfaces mentioned in `text`.
    pub fn mentioned_surfaces(&self, text: &str) -> Vec<String> {
        let mut surfaces: Vec<String> = self
            .detect(text)
            .iter()
            .map(|m| self.entries[m.entry].surface_str())
            .collect();
        surfaces.sort();
        surfaces.dedup();
        surfaces
    }
}

/// Per-category index, used by the SG strategy and rank reporting.
pub fn entries_by_category(lexicon: &SgtLexicon) -> BTreeMap<&str, Vec<usize>> {
    let mut map: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, e) in lexicon.entries().iter().enumerate() {
        map.entry(e.category.as_str()).or_default().push(i);
    }
    map
}
