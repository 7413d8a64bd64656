//! One-off export of lexicon resources from a WordNet `dict/` directory.
//!
//! Reads the `index.{noun,verb,adj,adv}` files for the valid-word list and the
//! multiword entries, and reproduces the WordNet noun lemmatizer (exception
//! list, then suffix detachment, keeping candidates found in the noun index,
//! shortest wins) to build a plural → singular table for a given vocabulary.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use super::{build_compound_map, CompoundDiagnostics, Lexicon, LexiconError};

const POS_FILES: [&str; 4] = ["noun", "verb", "adj", "adv"];

const NOUN_SUFFIXES: [(&str, &str); 9] = [
    ("s", ""),
    ("ses", "s"),
    ("ves", "f"),
    ("xes", "x"),
    ("zes", "z"),
    ("ches", "ch"),
    ("shes", "sh"),
    ("men", "man"),
    ("ies", "y"),
];

#[derive(Debug, Default, Clone)]
pub struct WordNet {
    /// All lemmas across parts of speech, underscores replaced by spaces.
    pub lemmas: HashSet<String>,
    /// Noun lemmas in WordNet's own underscore form.
    noun_index: HashSet<String>,
    noun_exceptions: HashMap<String, Vec<String>>,
}

fn io_err(path: &Path, source: std::io::Error) -> LexiconError {
    LexiconError::Io {
        path: path.to_path_buf(),
        source,
    }
}

impl WordNet {
    /// Loads `index.*` files (required) and `noun.exc` (optional) from `dict_dir`.
    pub fn load(dict_dir: impl AsRef<Path>) -> Result<Self, LexiconError> {
        let dir = dict_dir.as_ref();
        let mut wn = WordNet::default();
        for pos in POS_FILES {
            let path = dir.join(format!("index.{pos}"));
            let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
            for line in text.lines() {
                // license preamble lines start with whitespace
                if line.starts_with(' ') || line.is_empty() {
                    continue;
                }
                let Some(lemma) = line.split(' ').next() else { continue };
                let lemma = lemma.to_lowercase();
                if pos == "noun" {
                    wn.noun_index.insert(lemma.clone());
                }
                wn.lemmas.insert(lemma.replace('_', " "));
            }
        }
        let exc = dir.join("noun.exc");
        if exc.exists() {
            let text = fs::read_to_string(&exc).map_err(|e| io_err(&exc, e))?;
            for line in text.lines() {
                let mut parts = line.split_whitespace();
                if let Some(inflected) = parts.next() {
                    wn.noun_exceptions
                        .insert(inflected.to_lowercase(), parts.map(str::to_lowercase).collect());
                }
            }
        }
        Ok(wn)
    }

    #[cfg(test)]
    fn from_parts(nouns: &[&str], others: &[&str], exceptions: &[(&str, &[&str])]) -> Self {
        let mut wn = WordNet::default();
        for n in nouns {
            wn.noun_index.insert(n.to_string());
            wn.lemmas.insert(n.replace('_', " "));
        }
        for o in others {
            wn.lemmas.insert(o.replace('_', " "));
        }
        for (k, vs) in exceptions {
            wn.noun_exceptions
                .insert(k.to_string(), vs.iter().map(|s| s.to_string()).collect());
        }
        wn
    }

    /// Candidate noun base forms of `word`, in discovery order.
    pub fn morphy_noun(&self, word: &str) -> Vec<String> {
        let form = word.replace(' ', "_");
        let mut candidates = vec![form.clone()];
        if let Some(exc) = self.noun_exceptions.get(&form) {
            candidates.extend(exc.iter().cloned());
        }
        for (old, new) in NOUN_SUFFIXES {
            if let Some(stem) = form.strip_suffix(old) {
                candidates.push(format!("{stem}{new}"));
            }
        }
        let mut seen = HashSet::new();
        candidates
            .into_iter()
            .filter(|c| self.noun_index.contains(c) && seen.insert(c.clone()))
            .collect()
    }

    /// Noun lemma of `word`: the shortest candidate, or the word itself.
    pub fn lemmatize_noun(&self, word: &str) -> String {
        let mut best: Option<String> = None;
        for c in self.morphy_noun(word) {
            if best.as_ref().is_none_or(|b| c.len() < b.len()) {
                best = Some(c);
            }
        }
        best.map(|b| b.replace('_', " "))
            .unwrap_or_else(|| word.to_string())
    }

    /// Builds lexicon resources. `vocabulary` supplies the words that need a
    /// lemma entry; `spelling_map` is passed through unchanged.
    pub fn export<'a>(
        &self,
        vocabulary: impl IntoIterator<Item = &'a str>,
        spelling_map: HashMap<String, String>,
        provenance: String,
    ) -> (Lexicon, CompoundDiagnostics) {
        let multiword: Vec<&String> = self
            .lemmas
            .iter()
            .filter(|l| l.contains([' ', '-']))
            .collect();
        let (compound_map, diag) = build_compound_map(&multiword);
        let mut lemma_map = HashMap::new();
        for word in vocabulary {
            if word.is_empty() || lemma_map.contains_key(word) {
                continue;
            }
            let lemma = self.lemmatize_noun(word);
            if lemma != word && !lemma.is_empty() {
                lemma_map.insert(word.to_string(), lemma);
            }
        }
        let lex = Lexicon {
            valid_words: self.lemmas.clone(),
            lemma_map,
            spelling_map,
            compound_map,
            provenance: Some(provenance),
        };
        (lex, diag)
    }
}
