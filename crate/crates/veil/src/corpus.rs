//! Question corpus: one JSON object per line.
//!
//! ```json
//! {"id": "q01", "kind": "pointed", "context": "…", "question": "…", "upt": [{"phrase": "Krypton", "token": "D202"}]}
//! ```
//!
//! `upt` is optional and replaces the config file's pairs for that question.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::UptPair;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionKind {
    /// Short factual questions with one- or two-line answers.
    Pointed,
    /// Questions needing several facts combined.
    Key,
    /// Requests to summarize the context.
    Summarizing,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuestionRecord {
    pub id: String,
    pub kind: QuestionKind,
    pub context: String,
    pub question: String,
    #[serde(default)]
    pub upt: Option<Vec<UptPair>>,
}

pub fn parse(text: &str, path: &Path) -> Result<Vec<QuestionRecord>> {
    let mut out: Vec<QuestionRecord> = Vec::new();
    let mut ids = BTreeSet::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: QuestionRecord = serde_json::from_str(line)
            .map_err(|e| Error::bad_file(path, format!("line {}: {e}", n + 1)))?;
        if record.context.trim().is_empty() || record.question.trim().is_empty() {
            return Err(Error::bad_file(path, format!("line {}: empty context or question", n + 1)));
        }
        if !ids.insert(record.id.clone()) {
            return Err(Error::bad_file(path, format!("line {}: duplicate id {}", n + 1, record.id)));
        }
        out.push(record);
    }
    Ok(out)
}

pub fn load(path: &Path) -> Result<Vec<QuestionRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse(&text, path)
}
