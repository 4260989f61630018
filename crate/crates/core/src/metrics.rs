//! Information-loss and sensitivity measures.
//!
//! * ILS: `1 - cosine(embed(baseline), embed(cycle))`, clamped to `[0, 1]`.
//! * ILM: lost important items over total important items, from a human
//!   annotation.
//! * IL:  `0.5 * ILM + 0.5 * ILS`.
//! * STT: whether a response came from the model's own knowledge rather than
//!   the supplied context; aggregated as the fraction of sensitive answers.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::MetricsError;
use crate::text::is_word_char;

pub const DEFAULT_DIMENSION: usize = 1024;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// FNV-1a, 64-bit.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    components: Vec<f64>,
}

impl EmbeddingVector {
    /// Rejects non-finite components.
    pub fn new(components: Vec<f64>) -> Result<Self, MetricsError> {
        if let Some(bad) = components.iter().find(|c| !c.is_finite()) {
            return Err(MetricsError::OutOfRange(*bad));
        }
        Ok(Self { components })
    }

    pub fn zeros(dimension: usize) -> Self {
        Self {
            components: vec![0.0; dimension],
        }
    }

    pub fn dimension(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|&c| c == 0.0)
    }
}

/// Text -> fixed-dimension vector. The sentence-similarity side of ILS is
/// pluggable through this trait.
pub trait Embedder {
    fn dimension(&self) -> usize;
    fn embed(&self, text: &str) -> EmbeddingVector;
}

/// Hashed term-frequency embedder.
///
/// Lowercases, splits on non-alphanumeric characters and adds one to
/// component `fnv1a64(term) mod dimension` per term. Bit-identical on every
/// platform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HashedTfEmbedder {
    dimension: usize,
}

impl Default for HashedTfEmbedder {
    fn default() -> Self {
        Self {
            dimension: DEFAULT_DIMENSION,
        }
    }
}

impl HashedTfEmbedder {
    /// `dimension` is clamped to at least 1.
    pub fn new(dimension: usize) -> Self {
        Self {
            dimension: dimension.max(1),
        }
    }

    pub fn bucket(&self, term: &str) -> usize {
        (fnv1a64(term.as_bytes()) % self.dimension as u64) as usize
    }
}

impl Embedder for HashedTfEmbedder {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, text: &str) -> EmbeddingVector {
        let lower = text.to_lowercase();
        let mut v = EmbeddingVector::zeros(self.dimension);
        for term in lower.split(|c: char| !is_word_char(c)).filter(|t| !t.is_empty()) {
            v.components[self.bucket(term)] += 1.0;
        }
        v
    }
}

/// Embeds with the default [`HashedTfEmbedder`].
pub fn embed(text: &str) -> EmbeddingVector {
    HashedTfEmbedder::default().embed(text)
}

/// Cosine similarity clamped to `[0, 1]`. One zero vector gives 0, two give 1.
pub fn cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, MetricsError> {
    if a.dimension() != b.dimension() {
        return Err(MetricsError::DimensionMismatch(a.dimension(), b.dimension()));
    }
    match (a.is_zero(), b.is_zero()) {
        (true, true) => return Ok(1.0),
        (true, false) | (false, true) => return Ok(0.0),
        _ => {}
    }
    if a == b {
        return Ok(1.0);
    }
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (x, y) in a.components.iter().zip(&b.components) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    let sim = dot / (libm::sqrt(na) * libm::sqrt(nb));
    Ok(sim.clamp(0.0, 1.0))
}

pub fn compute_ils(baseline_response: &str, cycle_response: &str) -> f64 {
    compute_ils_with(&HashedTfEmbedder::default(), baseline_response, cycle_response)
}

pub fn compute_ils_with(embedder: &dyn Embedder, baseline: &str, cycle: &str) -> f64 {
    let a = embedder.embed(baseline);
    let b = embedder.embed(cycle);
    let sim = cosine(&a, &b).expect("one embedder yields one dimension");
    (1.0 - sim).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IlmAnnotation {
    pub question_id: String,
    pub lost_count: u32,
    pub total_count: u32,
}

pub fn compute_ilm(ann: &IlmAnnotation) -> Result<f64, MetricsError> {
    if ann.total_count == 0 {
        return Err(MetricsError::InvalidAnnotation(alloc::format!(
            "{}: total_count must be positive",
            ann.question_id
        )));
    }
    if ann.lost_count > ann.total_count {
        return Err(MetricsError::InvalidAnnotation(alloc::format!(
            "{}: lost_count {} exceeds total_count {}",
            ann.question_id, ann.lost_count, ann.total_count
        )));
    }
    Ok(f64::from(ann.lost_count) / f64::from(ann.total_count))
}

fn check_ratio(x: f64) -> Result<f64, MetricsError> {
    if (0.0..=1.0).contains(&x) {
        Ok(x)
    } else {
        Err(MetricsError::OutOfRange(x))
    }
}

pub fn compute_il(ilm: f64, ils: f64) -> Result<f64, MetricsError> {
    Ok(0.5 * check_ratio(ilm)? + 0.5 * check_ratio(ils)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SttSource {
    Manual,
    MockHarness,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SttAnnotation {
    pub question_id: String,
    pub sensitive: bool,
    pub source: SttSource,
}

/// Per-question inputs to [`aggregate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuestionMetrics {
    pub ils: f64,
    pub ilm: f64,
    pub stt: bool,
}

/// One row of a technique report. Ratios are in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub technique: String,
    pub stt: f64,
    pub ilm: f64,
    pub ils: f64,
    pub il: f64,
    pub n_questions: usize,
}

impl MetricRow {
    /// STT, ILM, ILS and IL as percentages with two decimals.
    pub fn percent_cells(&self) -> [String; 4] {
        [self.stt, self.ilm, self.ils, self.il].map(|x| alloc::format!("{:.2}%", x * 100.0))
    }
}

/// Means of STT (as 0/1), ILM and ILS; IL from the averaged ILM and ILS.
pub fn aggregate(technique: &str, per_question: &[QuestionMetrics]) -> Result<MetricRow, MetricsError> {
    if per_question.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let n = per_question.len() as f64;
    let mut stt = 0.0;
    let mut ilm = 0.0;
    let mut ils = 0.0;
    for q in per_question {
        stt += if q.stt { 1.0 } else { 0.0 };
        ilm += check_ratio(q.ilm)?;
        ils += check_ratio(q.ils)?;
    }
    let (ilm, ils) = ((ilm / n).min(1.0), (ils / n).min(1.0));
    Ok(MetricRow {
        technique: technique.into(),
        stt: stt / n,
        ilm,
        ils,
        il: compute_il(ilm, ils)?,
        n_questions: per_question.len(),
    })
}
