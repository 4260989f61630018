//! Reversible obfuscation of sensitive phrases in text sent to a language model.
//!
//! Text is rewritten by up to three stages (user-defined phrase substitution,
//! named-entity masking, noun-phrase masking). Every substitution is recorded
//! in a [`MappingTable`] so the model's reply can be mapped back.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod cycle;
pub mod error;
pub mod mapping;
pub mod metrics;
pub mod mock;
pub mod prompt;
pub mod tagger;
pub mod text;
pub mod transform;

pub use cycle::{finish_cycle, prepare_cycle, privacy_violations, CycleResult, PreparedCycle};
pub use error::{ConfigError, CycleError, MappingError, MetricsError, TextError, TransformError};
pub use mapping::{MappingEntry, MappingTable, Violation};
pub use metrics::{
    aggregate, compute_il, compute_ilm, compute_ils, cosine, embed, EmbeddingVector, Embedder,
    HashedTfEmbedder, IlmAnnotation, MetricRow, QuestionMetrics,
};
pub use mock::{MockBehavior, MockLlm, MockMode, MockReply, ReplySource};
pub use prompt::{build_prompt, Prompt, PromptTemplate};
pub use tagger::{Gazetteer, NounLexicon, SpanTagger, TagKind, TaggedSpan};
pub use text::{
    apply_replacements, find_occurrences, find_phrases, MatchOptions, Replacement, SourceText, Span,
};
pub use transform::{
    retransform, Obfuscator, PipelineSpec, Residual, Retransformed, StageKind, SynonymDictionary,
    Transformed, UptConfig,
};
