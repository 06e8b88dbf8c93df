//! Solve-Complete prompting, LLM transports and the test case validator.

pub mod grammar;
mod mock;
mod prompt;
mod response;
mod transport;
mod validator;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::symcore::{Format, PathConstraint};

pub use mock::{MockLlm, MockMode};
pub use prompt::{build_solve_complete_prompt, escape_bytes, unescape_bytes, MaskedSeed, SYSTEM_PROMPT};
pub use response::{fenced_blocks, parse_response};
pub use transport::{HttpConfig, HttpTransport};
pub use validator::{expected_loc, validate_and_refine, ValidateError, Validated};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LlmError {
    #[error("transport error{}: {message}", status.map(|s| format!(" (HTTP {s})")).unwrap_or_default())]
    Transport { status: Option<u16>, message: String },
    #[error("request timed out")]
    Timeout,
    #[error("no test input found in response")]
    Unparseable,
    #[error("llm configuration: {0}")]
    Config(String),
}

/// Structured copy of what a prompt encodes, for backends that do not read
/// prose. Never sent over the wire.
#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum RequestHint {
    Solve {
        pc: PathConstraint,
        seed: Vec<u8>,
        masked: MaskedSeed,
        format: Format,
    },
    InitialSeeds {
        format: Format,
        count: usize,
    },
    FreshSeeds {
        format: Format,
        uncovered: Vec<String>,
        recent: Vec<Vec<u8>>,
        count: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LlmRequest {
    pub model: String,
    pub temperature: f32,
    pub system: String,
    pub user: String,
    #[serde(skip)]
    pub hint: Option<RequestHint>,
}

impl LlmRequest {
    pub fn new(model: &str, user: String, hint: RequestHint) -> Self {
        LlmRequest {
            model: model.to_string(),
            temperature: 0.0,
            system: SYSTEM_PROMPT.to_string(),
            user,
            hint: Some(hint),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LlmResponse {
    pub raw: String,
}

/// A chat-completion backend.
pub trait LlmBackend: Send + Sync {
    fn complete(&self, req: &LlmRequest) -> Result<LlmResponse, LlmError>;

    fn name(&self) -> String;
}
