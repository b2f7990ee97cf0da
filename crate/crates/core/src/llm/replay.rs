use std::path::Path;
use std::sync::Mutex;

use serde::Deserialize;

use super::{Backend, BackendError, ChatPrompt, DecodingParams};

/// Plays back a fixed list of responses, one per call, and records prompts.
#[derive(Debug, Default)]
pub struct ReplayBackend {
    responses: Vec<String>,
    state: Mutex<ReplayState>,
}

#[derive(Debug, Default)]
struct ReplayState {
    next: usize,
    prompts: Vec<ChatPrompt>,
}

impl ReplayBackend {
    pub fn new<I, S>(responses: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        ReplayBackend {
            responses: responses.into_iter().map(Into::into).collect(),
            state: Mutex::default(),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        load_transcript(&text).map(Self::new).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn recorded_prompts(&self) -> Vec<ChatPrompt> {
        self.state.lock().expect("replay state poisoned").prompts.clone()
    }

    pub fn calls(&self) -> usize {
        self.state.lock().expect("replay state poisoned").prompts.len()
    }
}

/// Transcript files hold either a JSON array of response strings or an
/// object with a `responses` array.
pub fn load_transcript(text: &str) -> Result<Vec<String>, String> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum File {
        List(Vec<String>),
        Object { responses: Vec<String> },
    }
    match serde_json::from_str::<File>(text) {
        Ok(File::List(v)) | Ok(File::Object { responses: v }) => Ok(v),
        Err(e) => Err(format!("invalid transcript: {e}")),
    }
}

impl Backend for ReplayBackend {
    fn complete(&self, prompt: &ChatPrompt, _params: &DecodingParams) -> Result<String, BackendError> {
        let mut state = self.state.lock().expect("replay state poisoned");
        state.prompts.push(prompt.clone());
        let idx = state.next;
        match self.responses.get(idx) {
            Some(r) => {
                state.next += 1;
                Ok(r.clone())
            }
            None => Err(BackendError::TranscriptExhausted(self.responses.len())),
        }
    }

    fn supports_concurrency(&self) -> bool {
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prompt(u: &str) -> ChatPrompt {
        ChatPrompt {
            system: "s".into(),
            user: u.into(),
        }
    }

    #[test]
    fn plays_in_order_then_exhausts() {
        let b = ReplayBackend::new(["A", "B"]);
        let params = DecodingParams::default();
        assert_eq!(b.complete(&prompt("1"), &params).unwrap(), "A");
        assert_eq!(b.complete(&prompt("2"), &params).unwrap(), "B");
        assert_eq!(
            b.complete(&prompt("3"), &params),
            Err(BackendError::TranscriptExhausted(2))
        );
        assert_eq!(b.recorded_prompts(), vec![prompt("1"), prompt("2"), prompt("3")]);
        assert!(!b.supports_concurrency());
    }

    #[test]
    fn transcript_formats() {
        assert_eq!(load_transcript(r#"["a","b"]"#).unwrap(), ["a", "b"]);
        assert_eq!(load_transcript(r#"{"responses":["c"]}"#).unwrap(), ["c"]);
        assert!(load_transcript("{").is_err());
    }
}
