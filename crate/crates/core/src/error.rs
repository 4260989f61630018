use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::text::Span;
use crate::transform::StageKind;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TextError {
    #[error("replacement spans {0} and {1} overlap")]
    OverlappingSpans(Span, Span),
    #[error("span {span} is outside a text of {len} characters")]
    SpanOutOfBounds { span: Span, len: usize },
    #[error("span {span} holds {found:?}, not {expected:?}")]
    OriginalMismatch {
        span: Span,
        expected: String,
        found: String,
    },
    #[error("token {0:?} is empty or contains a line break")]
    InvalidToken(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MappingError {
    #[error("token {0:?} is already mapped in this session")]
    DuplicateToken(String),
    #[error("{original:?} is already mapped at stage {stage_index}")]
    DuplicateOriginal { stage_index: usize, original: String },
    #[error("invalid mapping entry: {0}")]
    InvalidEntry(&'static str),
    #[error("stage {stage_index} is not a {kind} stage of this session")]
    StageMismatch { stage_index: usize, kind: StageKind },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("pipeline must have between 1 and 3 stages, got {0}")]
    StageCount(usize),
    #[error("stage {0} appears more than once")]
    RepeatedStage(StageKind),
    #[error("unknown stage {0:?}")]
    UnknownStage(String),
    #[error("empty phrase or token in configuration")]
    EmptyEntry,
    #[error("phrase {0:?} is configured twice")]
    DuplicatePhrase(String),
    #[error("token {0:?} is configured twice")]
    DuplicateToken(String),
    #[error("token {token:?} equals or contains the configured phrase {phrase:?}")]
    TokenRevealsPhrase { token: String, phrase: String },
    #[error("synonym {0:?} is both a variant and a canonical phrase")]
    SynonymChain(String),
    #[error("invalid prompt template: {0}")]
    Template(&'static str),
    #[error("invalid mock behavior: {0}")]
    Mock(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransformError {
    #[error(transparent)]
    Text(#[from] TextError),
    #[error(transparent)]
    Mapping(#[from] MappingError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("token {token:?} already occurs in the {stage} stage input")]
    TokenCollision { stage: StageKind, token: String },
    #[error("the {0} stage output cannot be inverted unambiguously")]
    NotInvertible(StageKind),
    #[error("session already holds a completed transform")]
    SessionNotEmpty,
    #[error("a replacement straddles the question/context boundary")]
    SegmentBoundary,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("embedding dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("invalid annotation: {0}")]
    InvalidAnnotation(String),
    #[error("ratio {0} is outside [0, 1]")]
    OutOfRange(f64),
    #[error("no per-question values to aggregate")]
    EmptyInput,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CycleError {
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("context and question must be non-empty")]
    EmptyInput,
    #[error("prompt would disclose mapped originals: {0:?}")]
    PrivacyViolation(Vec<String>),
}
