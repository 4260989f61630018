//! Session files.
//!
//! A session file holds the mapping table of one transformation and nothing
//! else; the obfuscated document is never written. The file is still the
//! sensitive artifact, since it lists every hidden original in clear text.
//!
//! Layout (`<session_id>.map.json`):
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "session_id": "…",
//!   "created_at": 1700000000,
//!   "spec": { "stages": ["UPT", "NER"], "prompt_engineering": false },
//!   "entries": [ { "stage_index": 0, "stage_kind": "UPT", "original": "…", "token": "…", "first_offset": 4 } ],
//!   "checksum": "<sha256 hex of the other fields>"
//! }
//! ```

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use veil_core::{MappingEntry, MappingTable, PipelineSpec};

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;
pub const FILE_SUFFIX: &str = ".map.json";

/// Fresh table with a random id.
pub fn create_session(spec: PipelineSpec) -> MappingTable {
    create_session_with_id(uuid::Uuid::new_v4().to_string(), spec)
}

pub fn create_session_with_id(id: impl Into<String>, spec: PipelineSpec) -> MappingTable {
    let now = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    MappingTable::new(id, now, spec)
}

pub fn file_name(session_id: &str) -> String {
    format!("{session_id}{FILE_SUFFIX}")
}

#[derive(Serialize, Deserialize)]
struct Payload {
    schema_version: u32,
    session_id: String,
    created_at: u64,
    spec: PipelineSpec,
    entries: Vec<MappingEntry>,
}

#[derive(Serialize, Deserialize)]
struct SessionFile {
    #[serde(flatten)]
    payload: Payload,
    checksum: String,
}

fn checksum(payload: &Payload) -> String {
    let bytes = serde_json::to_vec(payload).expect("session payload serializes");
    hex::encode(Sha256::digest(&bytes))
}

/// Writes `table` into `dir` and returns the file path.
pub fn persist(table: &MappingTable, dir: &Path) -> Result<PathBuf> {
    let path = dir.join(file_name(table.session_id()));
    persist_to(table, &path)?;
    Ok(path)
}

pub fn persist_to(table: &MappingTable, path: &Path) -> Result<()> {
    let payload = Payload {
        schema_version: SCHEMA_VERSION,
        session_id: table.session_id().to_string(),
        created_at: table.created_at(),
        spec: table.spec().clone(),
        entries: table.entries().to_vec(),
    };
    let file = SessionFile {
        checksum: checksum(&payload),
        payload,
    };
    let mut text = serde_json::to_string_pretty(&file).expect("session file serializes");
    text.push('\n');
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<MappingTable> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let corrupt = |reason: String| Error::CorruptSession {
        path: path.to_path_buf(),
        reason,
    };
    let file: SessionFile = serde_json::from_str(&text).map_err(|e| corrupt(e.to_string()))?;
    let p = file.payload;
    if p.schema_version != SCHEMA_VERSION {
        return Err(corrupt(format!("unsupported schema_version {}", p.schema_version)));
    }
    if checksum(&p) != file.checksum {
        return Err(corrupt("checksum mismatch".into()));
    }
    for e in &p.entries {
        if p.spec.stages().get(e.stage_index) != Some(&e.stage_kind) {
            return Err(corrupt(format!(
                "entry {:?} names stage {} as {}",
                e.token, e.stage_index, e.stage_kind
            )));
        }
    }
    Ok(MappingTable::from_raw_parts(p.session_id, p.created_at, p.spec, p.entries))
}

/// Session files directly inside `dir`, sorted by name.
pub fn list(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let is_session = path
            .file_name()
            .and_then(|n| n.to_str())
            .is_some_and(|n| n.ends_with(FILE_SUFFIX));
        if is_session && path.is_file() {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}
