//! Append-only JSON-lines generation log: one header record, then one entry
//! per finished request.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::GenError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogHeader {
    pub model: String,
    pub template: String,
    pub repetitions: usize,
    pub cues: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SlotStatus {
    Ok,
    Failed,
}

/// Outcome of one (cue, repetition) request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawGeneration {
    pub cue: String,
    pub repetition: usize,
    pub raw_text: Option<String>,
    pub responses: Vec<String>,
    pub attempts: u32,
    /// Milliseconds since the Unix epoch.
    pub timestamp: u64,
    pub status: SlotStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum Record {
    Header(LogHeader),
    Entry(RawGeneration),
}

pub struct LogWriter {
    out: BufWriter<File>,
    path: PathBuf,
}

impl LogWriter {
    /// Starts a fresh log, replacing any existing file.
    pub fn create(path: &Path, header: &LogHeader) -> Result<Self, GenError> {
        let file = File::create(path).map_err(|e| io_err(path, e))?;
        let mut w = LogWriter {
            out: BufWriter::new(file),
            path: path.to_path_buf(),
        };
        w.write(&Record::Header(header.clone()))?;
        Ok(w)
    }

    pub fn append(path: &Path) -> Result<Self, GenError> {
        let file = OpenOptions::new().append(true).open(path).map_err(|e| io_err(path, e))?;
        Ok(LogWriter {
            out: BufWriter::new(file),
            path: path.to_path_buf(),
        })
    }

    pub fn record(&mut self, entry: &RawGeneration) -> Result<(), GenError> {
        self.write(&Record::Entry(entry.clone()))
    }

    fn write(&mut self, rec: &Record) -> Result<(), GenError> {
        let line = serde_json::to_string(rec).expect("log records serialize");
        writeln!(self.out, "{line}")
            .and_then(|_| self.out.flush())
            .map_err(|e| io_err(&self.path, e))
    }
}

fn io_err(path: &Path, e: std::io::Error) -> GenError {
    GenError::Io(path.display().to_string(), e)
}

/// Reads and checks a log: the first record must be the header and every
/// entry must name a cue and repetition from it.
pub fn read_log(path: &Path) -> Result<(LogHeader, Vec<RawGeneration>), GenError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let corrupt = |line: usize, msg: String| GenError::CorruptLog { line, msg };
    let mut header: Option<LogHeader> = None;
    let mut entries = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: Record = serde_json::from_str(&line).map_err(|e| corrupt(i + 1, e.to_string()))?;
        match (rec, &header) {
            (Record::Header(h), None) => header = Some(h),
            (Record::Header(_), Some(_)) => return Err(corrupt(i + 1, "second header".into())),
            (Record::Entry(_), None) => return Err(corrupt(i + 1, "entry before header".into())),
            (Record::Entry(e), Some(h)) => {
                if e.repetition >= h.repetitions || !h.cues.contains(&e.cue) {
                    return Err(corrupt(i + 1, format!("slot ({:?}, {}) not in header", e.cue, e.repetition)));
                }
                if e.responses.len() > assocnet::norms::RESPONSES_PER_ROW {
                    return Err(corrupt(i + 1, "more than three responses".into()));
                }
                entries.push(e);
            }
        }
    }
    let header = header.ok_or_else(|| corrupt(0, "missing header".into()))?;
    Ok((header, entries))
}
