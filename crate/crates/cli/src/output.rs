use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use serde_json::Value;

/// Provenance block attached to every output. Carries no timestamps, so
/// repeated runs produce identical files.
#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    /// `None` only for model generation, which has no seeded step.
    pub seed: Option<u64>,
    pub parameters: Value,
    pub inputs: Vec<String>,
}

impl Metadata {
    pub fn new(command: &str, seed: Option<u64>, parameters: Value, inputs: &[&Path]) -> Self {
        Metadata {
            tool: "assocnet",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            seed,
            parameters,
            inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
        }
    }
}

pub fn ensure_dir(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn pretty(v: &impl Serialize) -> anyhow::Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

/// Writes `{"metadata": .., <body fields>}` as pretty JSON.
pub fn write_json(path: &Path, meta: &Metadata, body: &impl Serialize) -> anyhow::Result<()> {
    let mut obj = serde_json::Map::new();
    obj.insert("metadata".into(), serde_json::to_value(meta)?);
    match serde_json::to_value(body)? {
        Value::Object(m) => {
            for (k, v) in m {
                if obj.insert(k.clone(), v).is_some() {
                    anyhow::bail!("output field {k:?} clashes with the metadata block");
                }
            }
        }
        other => {
            obj.insert("result".into(), other);
        }
    }
    fs::write(path, pretty(&Value::Object(obj))?).with_context(|| format!("writing {}", path.display()))
}

/// Writes the `<file>.meta.json` companion of a CSV or TSV output.
pub fn write_sidecar(path: &Path, meta: &Metadata, body: &impl Serialize) -> anyhow::Result<()> {
    write_json(&sidecar_path(path), meta, body)
}

pub fn print_json(v: &impl Serialize) -> anyhow::Result<()> {
    print!("{}", pretty(v)?);
    Ok(())
}
