//! Human judgments for the experiment runner: one JSON object per line.
//!
//! ```json
//! {"question_id": "q01", "technique": "UPT+NER", "variant": "plain", "lost_count": 1, "total_count": 6, "stt": false}
//! ```
//!
//! `variant` is optional and applies the record to both variants when absent.
//! `stt` may be omitted for mock endpoints, whose replies report it. `ils`
//! optionally records a similarity loss measured elsewhere; when absent the
//! runner computes it.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use veil_core::metrics::{compute_ilm, IlmAnnotation};
use veil_core::PipelineSpec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Plain,
    PromptEngineered,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Plain => "plain",
            Variant::PromptEngineered => "prompt_engineered",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Annotation {
    pub question_id: String,
    pub technique: String,
    #[serde(default)]
    pub variant: Option<Variant>,
    pub lost_count: u32,
    pub total_count: u32,
    #[serde(default)]
    pub stt: Option<bool>,
    #[serde(default)]
    pub ils: Option<f64>,
}

impl Annotation {
    pub fn ilm(&self) -> Result<f64> {
        Ok(compute_ilm(&IlmAnnotation {
            question_id: self.question_id.clone(),
            lost_count: self.lost_count,
            total_count: self.total_count,
        })?)
    }
}

type Key = (String, String, Option<Variant>);

#[derive(Debug, Clone, Default)]
pub struct Annotations {
    records: BTreeMap<Key, Annotation>,
}

impl Annotations {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut records = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let at = |msg: String| Error::bad_file(path, format!("line {}: {msg}", n + 1));
            let a: Annotation = serde_json::from_str(line).map_err(|e| at(e.to_string()))?;
            let technique = PipelineSpec::parse(&a.technique).map_err(|e| at(e.to_string()))?.label();
            a.ilm().map_err(|e| at(e.to_string()))?;
            if let Some(ils) = a.ils {
                if !(0.0..=1.0).contains(&ils) {
                    return Err(at(format!("ils {ils} is outside [0, 1]")));
                }
            }
            let key = (a.question_id.clone(), technique, a.variant);
            if records.insert(key, a).is_some() {
                return Err(at("duplicate annotation".into()));
            }
        }
        Ok(Self { records })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    /// The variant-specific record, else the variant-free one.
    pub fn get(&self, question_id: &str, spec: &PipelineSpec, variant: Variant) -> Option<&Annotation> {
        let label = spec.label();
        self.records
            .get(&(question_id.to_string(), label.clone(), Some(variant)))
            .or_else(|| self.records.get(&(question_id.to_string(), label, None)))
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}
