//! Free-association norms tables: CSV I/O, preprocessing, and dataset statistics.

use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexicon::Lexicon;

/// Rows per cue in a balanced table.
pub const ROWS_PER_CUE: usize = 100;
/// Response slots per row.
pub const RESPONSES_PER_ROW: usize = 3;

pub const CSV_HEADER: [&str; 4] = ["cue", "R1", "R2", "R3"];

const LEADING_TOKENS: [&str; 4] = ["a ", "an ", "the ", "to "];

#[derive(Debug, Error)]
pub enum NormsError {
    #[error("cannot read {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("missing or wrong header: expected \"cue,R1,R2,R3\", found {0:?}")]
    Header(String),
    #[error("line {line}: expected 4 fields, found {found}")]
    FieldCount { line: u64, found: usize },
    #[error("cue {cue:?} has {rows} rows, expected {ROWS_PER_CUE}")]
    Unbalanced { cue: String, rows: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormRow {
    pub cue: String,
    /// `None` is a blank (missing) response.
    pub responses: [Option<String>; RESPONSES_PER_ROW],
}

impl NormRow {
    pub fn new(cue: impl Into<String>, responses: [Option<&str>; RESPONSES_PER_ROW]) -> Self {
        NormRow {
            cue: cue.into(),
            responses: responses.map(|r| r.map(str::to_string)),
        }
    }

    pub fn blank(cue: impl Into<String>) -> Self {
        NormRow {
            cue: cue.into(),
            responses: [None, None, None],
        }
    }

    pub fn present(&self) -> impl Iterator<Item = &str> {
        self.responses.iter().flatten().map(String::as_str)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NormsTable {
    pub rows: Vec<NormRow>,
}

impl NormsTable {
    pub fn new(rows: Vec<NormRow>) -> Self {
        NormsTable { rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Row indices per cue, cues in lexicographic order.
    pub fn cue_index(&self) -> BTreeMap<&str, Vec<usize>> {
        let mut idx: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, row) in self.rows.iter().enumerate() {
            idx.entry(row.cue.as_str()).or_default().push(i);
        }
        idx
    }

    pub fn cues(&self) -> Vec<&str> {
        self.cue_index().into_keys().collect()
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self, NormsError> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|source| NormsError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_reader(file)
    }

    /// Parses `cue,R1,R2,R3` CSV. No transformations are applied; empty fields
    /// become blanks.
    pub fn from_reader(reader: impl Read) -> Result<Self, NormsError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(reader);
        let mut records = rdr.records();
        let header = match records.next() {
            Some(h) => h?,
            None => return Err(NormsError::Header(String::new())),
        };
        let fields: Vec<&str> = header.iter().map(|f| f.trim_start_matches('\u{feff}')).collect();
        if fields != CSV_HEADER {
            return Err(NormsError::Header(fields.join(",")));
        }
        let mut rows = Vec::new();
        for rec in records {
            let rec = rec?;
            if rec.len() != 4 {
                return Err(NormsError::FieldCount {
                    line: rec.position().map(|p| p.line()).unwrap_or(0),
                    found: rec.len(),
                });
            }
            let resp = |i: usize| Some(rec[i].to_string()).filter(|s| !s.is_empty());
            rows.push(NormRow {
                cue: rec[0].to_string(),
                responses: [resp(1), resp(2), resp(3)],
            });
        }
        Ok(NormsTable { rows })
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<(), NormsError> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|source| NormsError::Io {
            path: path.display().to_string(),
            source,
        })?;
        self.to_writer(std::io::BufWriter::new(file))
    }

    pub fn to_writer(&self, writer: impl Write) -> Result<(), NormsError> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        w.write_record(CSV_HEADER)?;
        for row in &self.rows {
            let r = |i: usize| row.responses[i].as_deref().unwrap_or("");
            w.write_record([row.cue.as_str(), r(0), r(1), r(2)])?;
        }
        w.flush().map_err(|source| NormsError::Io {
            path: "<output>".into(),
            source,
        })?;
        Ok(())
    }
}

/// Per-step transformation counts emitted by [`preprocess`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessReport {
    pub seed: u64,
    pub steps: Vec<String>,
    pub input_rows: usize,
    pub output_rows: usize,
    pub lowercased: usize,
    pub leading_tokens_stripped: usize,
    pub underscores_replaced: usize,
    pub compounds_repaired: usize,
    pub spelling_cues: usize,
    pub spelling_responses: usize,
    pub lemmatized_cues: usize,
    pub lemmatized_responses: usize,
    pub rows_dropped_empty_cue: usize,
    pub cues_padded: usize,
    pub rows_padded: usize,
    pub cues_downsampled: usize,
    pub rows_removed_by_sampling: usize,
    pub cue_echoes_removed: usize,
    pub duplicates_removed: usize,
    pub notes: Vec<String>,
}

pub const PIPELINE_STEPS: [&str; 9] = [
    "lowercase",
    "strip leading a/an/the/to unless the response is an original cue",
    "underscores to spaces",
    "compound repair",
    "spelling correction",
    "noun lemmatization",
    "balance to 100 rows per cue",
    "remove cue echoes",
    "remove within-row duplicates",
];

/// Applies the full cleaning pipeline and balances every cue to
/// [`ROWS_PER_CUE`] rows. Output rows are sorted by cue, then by original order.
pub fn preprocess(raw: &NormsTable, lex: &Lexicon, seed: u64) -> (NormsTable, PreprocessReport) {
    let mut rep = PreprocessReport {
        seed,
        steps: PIPELINE_STEPS.iter().map(|s| s.to_string()).collect(),
        input_rows: raw.len(),
        notes: vec!["spelling correction is applied after compound repair".into()],
        ..Default::default()
    };

    // 1. lowercase
    let mut rows: Vec<NormRow> = raw
        .rows
        .iter()
        .map(|row| {
            let mut lower = |s: &str| {
                let t = s.trim().to_lowercase();
                if t != s {
                    rep.lowercased += 1;
                }
                t
            };
            NormRow {
                cue: lower(&row.cue),
                responses: row
                    .responses
                    .clone()
                    .map(|r| r.map(|s| lower(&s)).filter(|s| !s.is_empty())),
            }
        })
        .collect();

    let original_cues: HashSet<String> = rows.iter().map(|r| r.cue.clone()).collect();

    for row in &mut rows {
        for slot in row.responses.iter_mut() {
            let Some(resp) = slot.as_mut() else { continue };
            // 2. leading article / "to"
            if !original_cues.contains(resp.as_str()) {
                if let Some(tok) = LEADING_TOKENS.iter().find(|t| resp.starts_with(*t)) {
                    *resp = resp[tok.len()..].trim_start().to_string();
                    rep.leading_tokens_stripped += 1;
                }
            }
            // 3. underscores
            if resp.contains('_') {
                *resp = resp.replace('_', " ").trim().to_string();
                rep.underscores_replaced += 1;
            }
            // 4. compounds
            if let Some(fixed) = lex.compound_map.get(resp.as_str()) {
                *resp = fixed.clone();
                rep.compounds_repaired += 1;
            }
            // 5. spelling
            if let Some(fixed) = lex.spelling_map.get(resp.as_str()) {
                *resp = fixed.clone();
                rep.spelling_responses += 1;
            }
            // 6. lemma
            if let Some(lemma) = lex.lemma_map.get(resp.as_str()) {
                if lemma != resp {
                    *resp = lemma.clone();
                    rep.lemmatized_responses += 1;
                }
            }
            if resp.is_empty() {
                *slot = None;
            }
        }
        if let Some(fixed) = lex.spelling_map.get(row.cue.as_str()) {
            row.cue = fixed.clone();
            rep.spelling_cues += 1;
        }
        if let Some(lemma) = lex.lemma_map.get(row.cue.as_str()) {
            if *lemma != row.cue {
                row.cue = lemma.clone();
                rep.lemmatized_cues += 1;
            }
        }
    }

    let before = rows.len();
    rows.retain(|r| !r.cue.is_empty());
    rep.rows_dropped_empty_cue = before - rows.len();

    // 7. balance, cue by cue in sorted order so the RNG stream is fixed
    let mut groups: BTreeMap<String, Vec<NormRow>> = BTreeMap::new();
    for row in rows {
        groups.entry(row.cue.clone()).or_default().push(row);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(groups.len() * ROWS_PER_CUE);
    for (cue, mut group) in groups {
        if group.len() > ROWS_PER_CUE {
            rep.cues_downsampled += 1;
            rep.rows_removed_by_sampling += group.len() - ROWS_PER_CUE;
            let mut keep = rand::seq::index::sample(&mut rng, group.len(), ROWS_PER_CUE).into_vec();
            keep.sort_unstable();
            let mut taken: Vec<Option<NormRow>> = group.into_iter().map(Some).collect();
            group = keep.into_iter().map(|i| taken[i].take().unwrap()).collect();
        } else if group.len() < ROWS_PER_CUE {
            rep.cues_padded += 1;
            rep.rows_padded += ROWS_PER_CUE - group.len();
            group.resize_with(ROWS_PER_CUE, || NormRow::blank(cue.clone()));
        }
        out.extend(group);
    }

    // 8 + 9. cue echoes, then within-row duplicates (first occurrence kept)
    for row in &mut out {
        for slot in row.responses.iter_mut() {
            if slot.as_deref() == Some(row.cue.as_str()) {
                *slot = None;
                rep.cue_echoes_removed += 1;
            }
        }
        for i in 1..RESPONSES_PER_ROW {
            if let Some(r) = row.responses[i].as_deref() {
                if row.responses[..i].iter().any(|p| p.as_deref() == Some(r)) {
                    row.responses[i] = None;
                    rep.duplicates_removed += 1;
                }
            }
        }
    }

    rep.output_rows = out.len();
    (NormsTable { rows: out }, rep)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub unique_cues: usize,
    pub total_responses: usize,
    pub unique_responses: usize,
    pub blank_cells: usize,
    /// Blank cells as a percentage of `unique_cues × 300`.
    pub missing_pct: f64,
}

impl DatasetStats {
    pub fn from_counts(unique_cues: usize, total_responses: usize, unique_responses: usize) -> Self {
        let cells = unique_cues * ROWS_PER_CUE * RESPONSES_PER_ROW;
        let blank_cells = cells.saturating_sub(total_responses);
        let missing_pct = if cells == 0 {
            0.0
        } else {
            100.0 * blank_cells as f64 / cells as f64
        };
        DatasetStats {
            unique_cues,
            total_responses,
            unique_responses,
            blank_cells,
            missing_pct,
        }
    }
}

/// Cue, response and blank-cell counts of a balanced table.
pub fn dataset_stats(t: &NormsTable) -> Result<DatasetStats, NormsError> {
    let index = t.cue_index();
    if let Some((cue, rows)) = index.iter().find(|(_, rows)| rows.len() != ROWS_PER_CUE) {
        return Err(NormsError::Unbalanced {
            cue: cue.to_string(),
            rows: rows.len(),
        });
    }
    let mut total = 0;
    let mut distinct = HashSet::new();
    for row in &t.rows {
        for r in row.present() {
            total += 1;
            distinct.insert(r);
        }
    }
    Ok(DatasetStats::from_counts(index.len(), total, distinct.len()))
}
