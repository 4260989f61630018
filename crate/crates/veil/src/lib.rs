//! Command-line gateway around `veil-core`: session files, configuration,
//! LLM endpoints, and the experiment runner behind the `veil` binary.

pub mod annotations;
pub mod config;
pub mod corpus;
pub mod endpoint;
pub mod error;
pub mod experiment;
pub mod gateway;
pub mod http;
pub mod session;

pub use error::{Error, Result};
