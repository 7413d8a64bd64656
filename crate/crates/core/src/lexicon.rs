//! Dictionary resources that parameterize preprocessing and network filtering.
//!
//! A lexicon directory holds four plain-text files:
//!
//! | file            | format                         |
//! |-----------------|--------------------------------|
//! | `words.txt`     | one valid word per line        |
//! | `lemmas.tsv`    | `word<TAB>lemma` (noun plurals)|
//! | `spelling.tsv`  | `variant<TAB>corrected`        |
//! | `compounds.tsv` | `concatenated<TAB>separated`   |
//!
//! An optional `PROVENANCE` file records where the resources came from and is
//! carried into run metadata verbatim.

pub mod wordnet;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub const WORDS_FILE: &str = "words.txt";
pub const LEMMAS_FILE: &str = "lemmas.tsv";
pub const SPELLING_FILE: &str = "spelling.tsv";
pub const COMPOUNDS_FILE: &str = "compounds.tsv";
pub const PROVENANCE_FILE: &str = "PROVENANCE";

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("cannot read {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: expected 2 tab-separated columns, found {found}")]
    Columns {
        path: PathBuf,
        line: usize,
        found: usize,
    },
    #[error("{path}:{line}: duplicate key {key:?}")]
    DuplicateKey {
        path: PathBuf,
        line: usize,
        key: String,
    },
    #[error("{path}:{line}: empty key or value")]
    Empty { path: PathBuf, line: usize },
    #[error("{path}:{line}: compound {key:?} -> {value:?} is not a separator-stripped pair")]
    CompoundMismatch {
        path: PathBuf,
        line: usize,
        key: String,
        value: String,
    },
    #[error("{path}:{line}: compound value {value:?} already mapped from another key")]
    CompoundNotInjective {
        path: PathBuf,
        line: usize,
        value: String,
    },
}

/// Immutable word resources. Every key and value is lowercase and trimmed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    pub valid_words: HashSet<String>,
    pub lemma_map: HashMap<String, String>,
    pub spelling_map: HashMap<String, String>,
    pub compound_map: HashMap<String, String>,
    pub provenance: Option<String>,
}

impl Lexicon {
    /// Loads the four standard files (and `PROVENANCE`, if present) from `dir`.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self, LexiconError> {
        let dir = dir.as_ref();
        let mut lex = load_lexicon(
            dir.join(WORDS_FILE),
            dir.join(LEMMAS_FILE),
            dir.join(SPELLING_FILE),
            dir.join(COMPOUNDS_FILE),
        )?;
        let prov = dir.join(PROVENANCE_FILE);
        if prov.exists() {
            let text = fs::read_to_string(&prov).map_err(|source| LexiconError::Io {
                path: prov.clone(),
                source,
            })?;
            lex.provenance = Some(text.trim().to_string());
        }
        Ok(lex)
    }

    pub fn is_valid(&self, word: &str) -> bool {
        self.valid_words.contains(word)
    }

    pub fn lemma<'a>(&'a self, word: &'a str) -> &'a str {
        self.lemma_map.get(word).map(String::as_str).unwrap_or(word)
    }

    pub fn spelling<'a>(&'a self, word: &'a str) -> &'a str {
        self.spelling_map.get(word).map(String::as_str).unwrap_or(word)
    }

    pub fn compound<'a>(&'a self, word: &'a str) -> &'a str {
        self.compound_map.get(word).map(String::as_str).unwrap_or(word)
    }

    /// Writes the lexicon back out in the directory layout read by [`Lexicon::load_dir`].
    /// Entries are sorted so the files are diffable.
    pub fn write_dir(&self, dir: impl AsRef<Path>) -> std::io::Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let mut words: Vec<&String> = self.valid_words.iter().collect();
        words.sort();
        let mut out = String::new();
        for w in words {
            out.push_str(w);
            out.push('\n');
        }
        fs::write(dir.join(WORDS_FILE), out)?;
        write_tsv(&dir.join(LEMMAS_FILE), &self.lemma_map)?;
        write_tsv(&dir.join(SPELLING_FILE), &self.spelling_map)?;
        write_tsv(&dir.join(COMPOUNDS_FILE), &self.compound_map)?;
        if let Some(p) = &self.provenance {
            fs::write(dir.join(PROVENANCE_FILE), format!("{p}\n"))?;
        }
        Ok(())
    }
}

fn write_tsv(path: &Path, map: &HashMap<String, String>) -> std::io::Result<()> {
    let sorted: BTreeMap<&String, &String> = map.iter().collect();
    let mut out = String::new();
    for (k, v) in sorted {
        out.push_str(k);
        out.push('\t');
        out.push_str(v);
        out.push('\n');
    }
    fs::write(path, out)
}

fn normalize(s: &str) -> String {
    s.trim().to_lowercase()
}

fn read(path: &Path) -> Result<String, LexiconError> {
    fs::read_to_string(path).map_err(|source| LexiconError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read_word_list(path: &Path) -> Result<HashSet<String>, LexiconError> {
    Ok(read(path)?
        .lines()
        .map(normalize)
        .filter(|w| !w.is_empty())
        .collect())
}

/// Reads a two-column TSV, returning `(line_number, key, value)` triples after
/// rejecting malformed and duplicate rows.
fn read_pairs(path: &Path) -> Result<Vec<(usize, String, String)>, LexiconError> {
    let text = read(path)?;
    let mut seen = HashSet::new();
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = raw.split('\t').collect();
        if cols.len() != 2 {
            return Err(LexiconError::Columns {
                path: path.to_path_buf(),
                line,
                found: cols.len(),
            });
        }
        let (key, value) = (normalize(cols[0]), normalize(cols[1]));
        if key.is_empty() || value.is_empty() {
            return Err(LexiconError::Empty {
                path: path.to_path_buf(),
                line,
            });
        }
        if !seen.insert(key.clone()) {
            return Err(LexiconError::DuplicateKey {
                path: path.to_path_buf(),
                line,
                key,
            });
        }
        pairs.push((line, key, value));
    }
    Ok(pairs)
}

/// Loads and validates lexicon resources from explicit paths.
pub fn load_lexicon(
    word_list_path: impl AsRef<Path>,
    lemma_path: impl AsRef<Path>,
    spelling_path: impl AsRef<Path>,
    compound_path: impl AsRef<Path>,
) -> Result<Lexicon, LexiconError> {
    let valid_words = read_word_list(word_list_path.as_ref())?;
    let to_map = |pairs: Vec<(usize, String, String)>| {
        pairs
            .into_iter()
            .map(|(_, k, v)| (k, v))
            .collect::<HashMap<_, _>>()
    };
    let lemma_map = to_map(read_pairs(lemma_path.as_ref())?);
    let spelling_map = to_map(read_pairs(spelling_path.as_ref())?);

    let compound_path = compound_path.as_ref();
    let mut compound_map = HashMap::new();
    let mut values = HashSet::new();
    for (line, key, value) in read_pairs(compound_path)? {
        if remove_separators(&value) != key {
            return Err(LexiconError::CompoundMismatch {
                path: compound_path.to_path_buf(),
                line,
                key,
                value,
            });
        }
        if !values.insert(value.clone()) {
            return Err(LexiconError::CompoundNotInjective {
                path: compound_path.to_path_buf(),
                line,
                value,
            });
        }
        compound_map.insert(key, value);
    }

    Ok(Lexicon {
        valid_words,
        lemma_map,
        spelling_map,
        compound_map,
        provenance: None,
    })
}

pub fn remove_separators(s: &str) -> String {
    s.chars().filter(|c| *c != ' ' && *c != '-').collect()
}

/// Number of entries discarded while building a compound map.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CompoundDiagnostics {
    /// Distinct stripped forms produced by two or more entries.
    pub colliding_keys: usize,
    /// Entries discarded because their stripped form collided.
    pub dropped_entries: usize,
    /// Entries skipped because they contained no separator.
    pub skipped_plain: usize,
}

/// Builds the concatenated-form → separated-form map from multiword entries.
/// Entries whose stripped forms collide are all discarded.
pub fn build_compound_map<S: AsRef<str>>(
    multiword_entries: &[S],
) -> (HashMap<String, String>, CompoundDiagnostics) {
    let mut diag = CompoundDiagnostics::default();
    let mut groups: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for entry in multiword_entries {
        let entry = normalize(entry.as_ref());
        if !entry.contains([' ', '-']) {
            diag.skipped_plain += 1;
            continue;
        }
        let key = remove_separators(&entry);
        if key.is_empty() {
            diag.skipped_plain += 1;
            continue;
        }
        let group = groups.entry(key).or_default();
        if !group.contains(&entry) {
            group.push(entry);
        }
    }
    let mut map = HashMap::new();
    for (key, mut group) in groups {
        if group.len() == 1 {
            map.insert(key, group.pop().unwrap());
        } else {
            diag.colliding_keys += 1;
            diag.dropped_entries += group.len();
        }
    }
    (map, diag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        let mut f = fs::File::create(&p).unwrap();
        f.write_all(body.as_bytes()).unwrap();
        p
    }

    fn fixture(dir: &Path, lemmas: &str) -> Result<Lexicon, LexiconError> {
        write(dir, WORDS_FILE, "Throw Out\ncheck-in\ncolor\nman\n");
        write(dir, LEMMAS_FILE, lemmas);
        write(dir, SPELLING_FILE, "colour\tcolor\nrecieve\treceive\n");
        write(dir, COMPOUNDS_FILE, "throwout\tthrow out\ncheckin\tcheck-in\n");
        Lexicon::load_dir(dir)
    }

    #[test]
    fn loads_multiword_entries_and_maps() {
        let tmp = tempfile::tempdir().unwrap();
        let lex = fixture(tmp.path(), "men\tman\n").unwrap();
        assert!(lex.is_valid("throw out"));
        assert!(lex.is_valid("check-in"));
        assert_eq!(lex.spelling("colour"), "color");
        assert_eq!(lex.lemma("men"), "man");
        assert_eq!(lex.lemma("cooking"), "cooking");
        assert_eq!(lex.compound("throwout"), "throw out");
    }

    #[test]
    fn empty_lemma_file_is_fine() {
        let tmp = tempfile::tempdir().unwrap();
        let lex = fixture(tmp.path(), "").unwrap();
        assert!(lex.lemma_map.is_empty());
    }

    #[test]
    fn duplicate_key_names_file_and_line() {
        let tmp = tempfile::tempdir().unwrap();
        let err = fixture(tmp.path(), "men\tman\nwomen\twoman\nMen\tman\n").unwrap_err();
        match err {
            LexiconError::DuplicateKey { path, line, key } => {
                assert!(path.ends_with(LEMMAS_FILE));
                assert_eq!(line, 3);
                assert_eq!(key, "men");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn wrong_column_count_rejected() {
        let tmp = tempfile::tempdir().unwrap();
        let err = fixture(tmp.path(), "men\tman\textra\n").unwrap_err();
        assert!(matches!(err, LexiconError::Columns { line: 1, found: 3, .. }));
    }

    #[test]
    fn empty_lemma_value_rejected() {
        let tmp = tempfile::tempdir().unwrap();
        let err = fixture(tmp.path(), "men\t \n").unwrap_err();
        assert!(matches!(err, LexiconError::Empty { line: 1, .. }));
    }

    #[test]
    fn missing_file_is_io_error() {
        let tmp = tempfile::tempdir().unwrap();
        let err = Lexicon::load_dir(tmp.path()).unwrap_err();
        assert!(matches!(err, LexiconError::Io { .. }));
    }

    #[test]
    fn non_injective_compound_file_rejected() {
        let tmp = tempfile::tempdir().unwrap();
        let d = tmp.path();
        write(d, WORDS_FILE, "");
        write(d, LEMMAS_FILE, "");
        write(d, SPELLING_FILE, "");
        write(d, COMPOUNDS_FILE, "ab\ta b\nab c\tab c\n");
        assert!(matches!(
            Lexicon::load_dir(d).unwrap_err(),
            LexiconError::CompoundMismatch { line: 2, .. }
        ));
    }

    #[test]
    fn loading_twice_is_idempotent() {
        let tmp = tempfile::tempdir().unwrap();
        let a = fixture(tmp.path(), "men\tman\n").unwrap();
        let b = Lexicon::load_dir(tmp.path()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn write_then_load_round_trips() {
        let tmp = tempfile::tempdir().unwrap();
        let a = fixture(tmp.path(), "men\tman\n").unwrap();
        let out = tmp.path().join("copy");
        a.write_dir(&out).unwrap();
        assert_eq!(Lexicon::load_dir(&out).unwrap(), a);
    }

    #[test]
    fn compound_map_examples() {
        let (m, d) = build_compound_map(&["throw out"]);
        assert_eq!(m.get("throwout").map(String::as_str), Some("throw out"));
        assert_eq!(d, CompoundDiagnostics::default());

        let (m, _) = build_compound_map(&["check-in"]);
        assert_eq!(m.get("checkin").map(String::as_str), Some("check-in"));

        let (m, _) = build_compound_map(&["a b", "ab c"]);
        assert_eq!(m.len(), 2);
        assert_eq!(m["ab"], "a b");
        assert_eq!(m["abc"], "ab c");
    }

    #[test]
    fn compound_collisions_all_dropped() {
        let (m, d) = build_compound_map(&["check-in", "check in", "throw out"]);
        assert_eq!(m.len(), 1);
        assert!(m.contains_key("throwout"));
        assert_eq!(d.colliding_keys, 1);
        assert_eq!(d.dropped_entries, 2);
    }

    proptest::proptest! {
        #[test]
        fn compound_map_inverts_separator_removal(
            entries in proptest::collection::vec("[a-c]{1,3}[ -][a-c]{1,3}", 0..40)
        ) {
            let (m, _) = build_compound_map(&entries);
            let mut values = HashSet::new();
            for (k, v) in &m {
                proptest::prop_assert_eq!(&remove_separators(v), k);
                proptest::prop_assert!(values.insert(v.clone()));
            }
        }
    }
}
