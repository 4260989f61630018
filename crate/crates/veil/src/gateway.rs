//! Full transformation cycle against an endpoint.

use std::path::{Path, PathBuf};

use veil_core::{finish_cycle, prepare_cycle, CycleResult, MappingTable, Obfuscator, PipelineSpec, PromptTemplate};

use crate::endpoint::{LlmEndpoint, Reply};
use crate::error::Result;
use crate::session;

#[derive(Debug, Clone, Default)]
pub struct SessionOptions {
    /// Where to persist the session file; `None` keeps it in memory.
    pub dir: Option<PathBuf>,
    /// Fixed id instead of a random one.
    pub id: Option<String>,
}

#[derive(Debug)]
pub struct CycleOutcome {
    pub result: CycleResult,
    pub table: MappingTable,
    pub reply: Reply,
    pub session_path: Option<PathBuf>,
}

/// Transforms context and question in one session, queries `endpoint`,
/// clarifies the reply and persists the session. The template is used only
/// when the spec asks for prompt engineering.
pub fn run_cycle(
    obfuscator: &Obfuscator,
    context: &str,
    question: &str,
    spec: &PipelineSpec,
    endpoint: &LlmEndpoint,
    template: &PromptTemplate,
    opts: &SessionOptions,
) -> Result<CycleOutcome> {
    let mut table = match &opts.id {
        Some(id) => session::create_session_with_id(id.clone(), spec.clone()),
        None => session::create_session(spec.clone()),
    };
    let template = spec.prompt_engineering().then_some(template);
    let prepared = prepare_cycle(obfuscator, context, question, &mut table, template)?;
    let session_path = opts
        .dir
        .as_deref()
        .map(|dir: &Path| session::persist(&table, dir))
        .transpose()?;
    let reply = endpoint.query(&prepared.prompt)?;
    let result = finish_cycle(&prepared, &reply.text, &table, reply.stt());
    Ok(CycleOutcome {
        result,
        table,
        reply,
        session_path,
    })
}
