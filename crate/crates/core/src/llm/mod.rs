//! Prompt construction and the completion backends.

mod http;
mod prompt;
mod replay;
mod stub;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use http::{HttpBackend, HttpConfig};
pub use prompt::{
    build_feedback_prompt, build_initial_prompt, split_feedback, system_text, ChatPrompt, FeedbackSections,
    PromptError, IDENTITY_LINE, REGENERATE_DIRECTIVE, SECTION_ERRORS, SECTION_FRAMES, SECTION_INSTRUCTION,
    SECTION_PREVIOUS, SECTION_TASK,
};
pub use replay::{load_transcript, ReplayBackend};
pub use stub::{StubBackend, StubRule, StubRules};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecodingParams {
    pub max_new_tokens: u32,
    pub temperature: f64,
    pub top_p: f64,
    pub repetition_penalty: f64,
}

impl Default for DecodingParams {
    fn default() -> Self {
        DecodingParams {
            max_new_tokens: 256,
            temperature: 0.2,
            top_p: 0.9,
            repetition_penalty: 1.1,
        }
    }
}

impl DecodingParams {
    // negated comparisons so NaN is rejected too
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), String> {
        if self.max_new_tokens == 0 {
            return Err("max_new_tokens must be positive".into());
        }
        if !(self.temperature >= 0.0) {
            return Err("temperature must be nonnegative".into());
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err("top_p must be in (0, 1]".into());
        }
        if !(self.repetition_penalty >= 1.0) {
            return Err("repetition_penalty must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BackendError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("request timed out")]
    Timeout,
    #[error("server returned status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("replay transcript exhausted after {0} response(s)")]
    TranscriptExhausted(usize),
}

/// A source of chat completions.
pub trait Backend: Send + Sync {
    fn complete(&self, prompt: &ChatPrompt, params: &DecodingParams) -> Result<String, BackendError>;

    /// Whether independent calls may run concurrently.
    fn supports_concurrency(&self) -> bool;
}

impl<B: Backend + ?Sized> Backend for &B {
    fn complete(&self, prompt: &ChatPrompt, params: &DecodingParams) -> Result<String, BackendError> {
        (**self).complete(prompt, params)
    }

    fn supports_concurrency(&self) -> bool {
        (**self).supports_concurrency()
    }
}

impl<B: Backend + ?Sized> Backend for Box<B> {
    fn complete(&self, prompt: &ChatPrompt, params: &DecodingParams) -> Result<String, BackendError> {
        (**self).complete(prompt, params)
    }

    fn supports_concurrency(&self) -> bool {
        (**self).supports_concurrency()
    }
}
