//! Regenerates free-association norms with a chat model: every cue is sent
//! to the model `repetitions` times and each answer becomes one norms row.
//!
//! Requests run with bounded concurrency, an optional rate limit and retry
//! with exponential backoff. Every finished request is appended to a JSON-lines
//! log, so an interrupted run can be resumed without repeating work.

pub mod client;
pub mod config;
pub mod log;
pub mod parse;
pub mod ratelimit;

use std::collections::{BTreeMap, HashSet};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use assocnet::norms::{NormRow, NormsTable};
use futures::stream::{self, StreamExt};
use thiserror::Error;
use tracing::{info, warn};

pub use client::{ChatClient, OpenAiClient, RequestError, API_KEY_ENV};
pub use config::{GenConfig, DEFAULT_TEMPLATE};
pub use log::{read_log, LogHeader, LogWriter, RawGeneration, SlotStatus};
pub use parse::parse_responses;
pub use ratelimit::RateLimiter;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{API_KEY_ENV} is not set")]
    MissingApiKey,
    #[error("io error on {0}")]
    Io(String, #[source] std::io::Error),
    #[error("authentication failed, stopping: {0}")]
    Auth(String),
    #[error("corrupt log at line {line}: {msg}")]
    CorruptLog { line: usize, msg: String },
    #[error("log was written for {field} {log:?}, config has {config:?}")]
    LogMismatch { field: &'static str, log: String, config: String },
    #[error("invalid cue list: {0}")]
    Cues(String),
}

/// Result of a generation or resume call.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRun {
    /// `repetitions` rows per cue, sorted by cue then repetition.
    pub table: NormsTable,
    /// Slots requested by this call.
    pub requested: usize,
    /// Slots whose latest attempt failed; they are blank in `table`.
    pub failed: usize,
}

/// Trims cues, drops blank lines and rejects duplicates.
pub fn clean_cues<S: AsRef<str>>(cues: &[S]) -> Result<Vec<String>, GenError> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for c in cues {
        let c = c.as_ref().trim();
        if c.is_empty() {
            continue;
        }
        if !seen.insert(c.to_string()) {
            return Err(GenError::Cues(format!("duplicate cue {c:?}")));
        }
        out.push(c.to_string());
    }
    if out.is_empty() {
        return Err(GenError::Cues("no cues".into()));
    }
    Ok(out)
}

/// Starts a new run, overwriting `log_path`.
pub async fn generate<C: ChatClient, S: AsRef<str>>(
    client: &C,
    cues: &[S],
    cfg: &GenConfig,
    log_path: &Path,
) -> Result<GenerationRun, GenError> {
    cfg.validate()?;
    let header = LogHeader {
        model: cfg.model.clone(),
        template: cfg.template.clone(),
        repetitions: cfg.repetitions,
        cues: clean_cues(cues)?,
    };
    let mut log = LogWriter::create(log_path, &header)?;
    let slots: Vec<(String, usize)> = header
        .cues
        .iter()
        .flat_map(|c| (0..cfg.repetitions).map(move |r| (c.clone(), r)))
        .collect();
    let mut entries = Vec::with_capacity(slots.len());
    let requested = run_slots(client, cfg, slots, &mut log, &mut entries).await?;
    Ok(assemble(&header, &entries, requested))
}

/// Continues the run recorded in `log_path`, requesting only slots without a
/// successful entry.
pub async fn resume<C: ChatClient>(
    client: &C,
    cfg: &GenConfig,
    log_path: &Path,
) -> Result<GenerationRun, GenError> {
    cfg.validate()?;
    let (header, mut entries) = read_log(log_path)?;
    let mismatch = |field, log: &dyn ToString, config: &dyn ToString| GenError::LogMismatch {
        field,
        log: log.to_string(),
        config: config.to_string(),
    };
    if header.model != cfg.model {
        return Err(mismatch("model", &header.model, &cfg.model));
    }
    if header.template != cfg.template {
        return Err(mismatch("template", &header.template, &cfg.template));
    }
    if header.repetitions != cfg.repetitions {
        return Err(mismatch("repetitions", &header.repetitions, &cfg.repetitions));
    }
    let done: HashSet<(&str, usize)> = entries
        .iter()
        .filter(|e| e.status == SlotStatus::Ok)
        .map(|e| (e.cue.as_str(), e.repetition))
        .collect();
    let missing: Vec<(String, usize)> = header
        .cues
        .iter()
        .flat_map(|c| (0..header.repetitions).map(move |r| (c, r)))
        .filter(|(c, r)| !done.contains(&(c.as_str(), *r)))
        .map(|(c, r)| (c.clone(), r))
        .collect();
    info!(missing = missing.len(), "resuming generation");
    let requested = if missing.is_empty() {
        0
    } else {
        let mut log = LogWriter::append(log_path)?;
        run_slots(client, cfg, missing, &mut log, &mut entries).await?
    };
    Ok(assemble(&header, &entries, requested))
}

async fn run_slots<C: ChatClient>(
    client: &C,
    cfg: &GenConfig,
    slots: Vec<(String, usize)>,
    log: &mut LogWriter,
    entries: &mut Vec<RawGeneration>,
) -> Result<usize, GenError> {
    let limiter = cfg.rate_limit.map(RateLimiter::new);
    let n = slots.len();
    let mut results = stream::iter(slots)
        .map(|(cue, rep)| request_slot(client, cfg, limiter.as_ref(), cue, rep))
        .buffer_unordered(cfg.max_in_flight);
    while let Some(res) = results.next().await {
        let entry = res?;
        if entry.status == SlotStatus::Failed {
            warn!(cue = %entry.cue, repetition = entry.repetition, error = ?entry.error, "request failed");
        }
        log.record(&entry)?;
        entries.push(entry);
    }
    Ok(n)
}

async fn request_slot<C: ChatClient>(
    client: &C,
    cfg: &GenConfig,
    limiter: Option<&RateLimiter>,
    cue: String,
    repetition: usize,
) -> Result<RawGeneration, GenError> {
    let prompt = cfg.prompt(&cue);
    let mut attempt = 0;
    let outcome = loop {
        attempt += 1;
        if let Some(l) = limiter {
            l.acquire().await;
        }
        match client.complete(&prompt).await {
            Err(RequestError::Auth(m)) => return Err(GenError::Auth(m)),
            Err(RequestError::Transient(_)) if attempt < cfg.max_attempts => {
                tokio::time::sleep(cfg.backoff(attempt)).await;
            }
            other => break other,
        }
    };
    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64);
    Ok(match outcome {
        Ok(text) => RawGeneration {
            cue,
            repetition,
            responses: parse_responses(&text),
            raw_text: Some(text),
            attempts: attempt,
            timestamp,
            status: SlotStatus::Ok,
            error: None,
        },
        Err(e) => RawGeneration {
            cue,
            repetition,
            raw_text: None,
            responses: Vec::new(),
            attempts: attempt,
            timestamp,
            status: SlotStatus::Failed,
            error: Some(e.to_string()),
        },
    })
}

/// Builds the rectangular table from log entries; the last entry for a slot wins.
fn assemble(header: &LogHeader, entries: &[RawGeneration], requested: usize) -> GenerationRun {
    let mut latest: BTreeMap<(&str, usize), &RawGeneration> = BTreeMap::new();
    for e in entries {
        latest.insert((e.cue.as_str(), e.repetition), e);
    }
    let mut cues: Vec<&String> = header.cues.iter().collect();
    cues.sort();
    let mut rows = Vec::with_capacity(cues.len() * header.repetitions);
    let mut failed = 0;
    for cue in cues {
        for rep in 0..header.repetitions {
            match latest.get(&(cue.as_str(), rep)) {
                Some(e) if e.status == SlotStatus::Ok => {
                    let mut r = e.responses.iter().map(|s| Some(s.as_str()));
                    rows.push(NormRow::new(cue.as_str(), [r.next().flatten(), r.next().flatten(), r.next().flatten()]));
                }
                _ => {
                    failed += 1;
                    rows.push(NormRow::blank(cue.as_str()));
                }
            }
        }
    }
    GenerationRun {
        table: NormsTable::new(rows),
        requested,
        failed,
    }
}
