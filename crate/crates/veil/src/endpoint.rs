//! The LLM hop of a cycle: a deterministic mock or a live HTTP endpoint.

use veil_core::mock::ReplySource;
use veil_core::{MockLlm, Prompt};

use crate::config::EndpointConfig;
use crate::error::Result;
use crate::http::HttpClient;

#[derive(Debug)]
pub enum LlmEndpoint {
    Mock(MockLlm),
    Http(HttpClient),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reply {
    pub text: String,
    /// Known only for the mock, which can tell when it answered from its
    /// knowledge base instead of the context.
    pub source: Option<ReplySource>,
}

impl Reply {
    pub fn stt(&self) -> Option<bool> {
        self.source.map(|s| s == ReplySource::KnowledgeBase)
    }
}

impl From<&EndpointConfig> for LlmEndpoint {
    fn from(config: &EndpointConfig) -> Self {
        match config {
            EndpointConfig::Mock(b) => LlmEndpoint::Mock(MockLlm::new(b.clone())),
            EndpointConfig::Http(h) => LlmEndpoint::Http(HttpClient::new(h.clone())),
        }
    }
}

impl LlmEndpoint {
    pub fn is_mock(&self) -> bool {
        matches!(self, LlmEndpoint::Mock(_))
    }

    pub fn query(&self, prompt: &Prompt) -> Result<Reply> {
        match self {
            LlmEndpoint::Mock(m) => {
                let r = m.respond(prompt);
                Ok(Reply {
                    text: r.text,
                    source: Some(r.source),
                })
            }
            LlmEndpoint::Http(h) => Ok(Reply {
                text: h.complete(prompt.text())?,
                source: None,
            }),
        }
    }
}
