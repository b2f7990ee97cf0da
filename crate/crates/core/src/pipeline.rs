//! The correction loop and the two baseline modes.
//!
//! Hybrid: prompt, complete, decode, canonicalize, light-validate. A salvaged
//! set that strict-validates nonempty is accepted; anything else is rendered
//! into a feedback prompt and retried until `max_attempts` completions have
//! been spent, after which the empty command is returned.

use std::borrow::Cow;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canonicalizer::{canonicalize, tree_to_frames};
use crate::frames::{self, FrameSet};
use crate::llm::{
    build_feedback_prompt, build_initial_prompt, Backend, BackendError, ChatPrompt, DecodingParams, HttpConfig,
};
use crate::parser::{parse, tokenize, Grammar, ParseTree};
use crate::schema::FrameSchema;
use crate::validator::{
    render_error_report, validate_light, validate_strict, Stage, Status, ValidationError, ValidationReport,
};

/// Stands in for a blank completion inside a feedback prompt.
pub const EMPTY_RESPONSE_PLACEHOLDER: &str = "(empty response)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Mode {
    #[default]
    #[serde(rename = "hybrid")]
    Hybrid,
    #[serde(rename = "llm", alias = "llm_only")]
    LlmOnly,
    #[serde(rename = "nlu", alias = "nlu_only")]
    NluOnly,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Hybrid => "hybrid",
            Mode::LlmOnly => "llm",
            Mode::NluOnly => "nlu",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Stub,
    Http,
    Replay,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub http: HttpConfig,
    /// Replay transcript file.
    pub transcript: Option<PathBuf>,
    /// Stub rule table; the bundled one when absent.
    pub stub_rules: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub mode: Mode,
    pub backend: BackendConfig,
    pub decoding: DecodingParams,
    /// Total completions per sentence, initial call included.
    pub max_attempts: usize,
    /// Overrides the schema's own filter setting when present.
    pub filter_enabled: Option<bool>,
    pub grammar: Option<PathBuf>,
    pub schema: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            mode: Mode::Hybrid,
            backend: BackendConfig::default(),
            decoding: DecodingParams::default(),
            max_attempts: 3,
            filter_enabled: None,
            grammar: None,
            schema: None,
        }
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self, String> {
        let cfg: PipelineConfig = serde_json::from_str(text).map_err(|e| e.to_string())?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.max_attempts == 0 {
            return Err("max_attempts must be at least 1".into());
        }
        self.decoding.validate()
    }

    fn schema<'a>(&self, schema: &'a FrameSchema) -> Cow<'a, FrameSchema> {
        match self.filter_enabled {
            Some(on) if on != schema.filter_enabled() => Cow::Owned(schema.clone().with_filter(on)),
            _ => Cow::Borrowed(schema),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    ValidCommand,
    EmptyFallback,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attempt {
    /// Absent in NLU-only mode, which never prompts.
    pub prompt: Option<ChatPrompt>,
    /// Backend output; in NLU-only mode the frames read off the parse tree.
    pub raw_response: String,
    pub report: ValidationReport,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineResult {
    #[serde(rename = "final")]
    pub final_frames: FrameSet,
    pub outcome: Outcome,
    pub attempts_used: usize,
    pub transcript: Vec<Attempt>,
    /// NLU-only mode: the tree the frames came from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parse_tree: Option<ParseTree>,
}

impl PipelineResult {
    fn fallback(transcript: Vec<Attempt>) -> Self {
        PipelineResult {
            final_frames: FrameSet::empty(),
            outcome: Outcome::EmptyFallback,
            attempts_used: transcript.len(),
            transcript,
            parse_tree: None,
        }
    }

    fn valid(frames: FrameSet, transcript: Vec<Attempt>) -> Self {
        PipelineResult {
            final_frames: frames,
            outcome: Outcome::ValidCommand,
            attempts_used: transcript.len(),
            transcript,
            parse_tree: None,
        }
    }

    pub fn is_valid_command(&self) -> bool {
        self.outcome == Outcome::ValidCommand
    }
}

/// Infrastructure failure, as opposed to the model failing to comply.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PipelineError {
    #[error("backend failed on attempt {attempt}: {source}")]
    Backend {
        attempt: usize,
        #[source]
        source: BackendError,
    },
    #[error("no backend configured for {0} mode")]
    MissingBackend(&'static str),
}

fn complete(
    backend: &dyn Backend,
    prompt: &ChatPrompt,
    params: &DecodingParams,
    attempt: usize,
) -> Result<String, PipelineError> {
    backend
        .complete(prompt, params)
        .map_err(|source| PipelineError::Backend { attempt, source })
}

fn feedback_text(report: &ValidationReport, schema: &FrameSchema) -> String {
    render_error_report(report, schema).unwrap_or_else(|_| {
        "- warning: empty command; express the instruction using the valid frames\n".to_string()
    })
}

/// Hybrid mode: the bounded correction loop.
pub fn run_hybrid(
    sentence: &str,
    backend: &dyn Backend,
    schema: &FrameSchema,
    config: &PipelineConfig,
) -> Result<PipelineResult, PipelineError> {
    let schema = config.schema(schema);
    let schema = schema.as_ref();
    let Ok(mut prompt) = build_initial_prompt(sentence, schema) else {
        return Ok(PipelineResult::fallback(Vec::new()));
    };
    let max_attempts = config.max_attempts.max(1);
    let mut transcript = Vec::with_capacity(max_attempts);
    for attempt in 1..=max_attempts {
        let raw = complete(backend, &prompt, &config.decoding, attempt)?;
        let (candidate, report) = match frames::decode(&raw) {
            Err(e) => (None, ValidationReport::undecodable(&e)),
            Ok(decoded) => {
                let canon = canonicalize(&decoded.frames, schema);
                let (salvaged, mut report) = validate_light(&canon.frames, schema);
                report.warnings.splice(0..0, decoded.warnings.into_iter().chain(canon.warnings));
                (Some(salvaged), report)
            }
        };
        let accepted = match candidate {
            Some(fs) if report.status != Status::Invalid && !fs.is_empty() && validate_strict(&fs, schema).is_valid() => {
                Some(fs)
            }
            _ => None,
        };
        let error_text = accepted.is_none().then(|| feedback_text(&report, schema));
        transcript.push(Attempt {
            prompt: Some(prompt.clone()),
            raw_response: raw,
            report,
        });
        if let Some(fs) = accepted {
            return Ok(PipelineResult::valid(fs, transcript));
        }
        if attempt < max_attempts {
            let previous = &transcript.last().expect("just pushed").raw_response;
            let previous = if previous.trim().is_empty() {
                EMPTY_RESPONSE_PLACEHOLDER
            } else {
                previous
            };
            prompt = build_feedback_prompt(sentence, previous, &error_text.expect("set on failure"), schema)
                .expect("feedback arguments are nonempty");
        }
    }
    Ok(PipelineResult::fallback(transcript))
}

/// LLM-only baseline: one completion, lenient decoding, no correction.
/// Strict validity is not enforced here; the report is recorded for the
/// evaluator to inspect.
pub fn run_llm_only(
    sentence: &str,
    backend: &dyn Backend,
    schema: &FrameSchema,
    config: &PipelineConfig,
) -> Result<PipelineResult, PipelineError> {
    let Ok(prompt) = build_initial_prompt(sentence, schema) else {
        return Ok(PipelineResult::fallback(Vec::new()));
    };
    let raw = complete(backend, &prompt, &config.decoding, 1)?;
    let (frames, report) = match frames::decode(&raw) {
        Ok(d) => {
            let report = validate_strict(&d.frames, schema);
            (Some(d.frames), report)
        }
        Err(e) => (None, ValidationReport::undecodable(&e)),
    };
    let transcript = vec![Attempt {
        prompt: Some(prompt),
        raw_response: raw,
        report,
    }];
    Ok(match frames {
        Some(fs) if !fs.is_empty() => PipelineResult::valid(fs, transcript),
        _ => PipelineResult::fallback(transcript),
    })
}

/// Grammar-only baseline. A parse failure is recorded as a malformed
/// structure carrying the parser's diagnostic.
pub fn run_nlu_only(sentence: &str, grammar: &Grammar, schema: &FrameSchema, config: &PipelineConfig) -> PipelineResult {
    let schema = config.schema(schema);
    let schema = schema.as_ref();
    let tokens = tokenize(sentence);
    let tree = match parse(grammar, &tokens) {
        Ok(t) => t,
        Err(e) => {
            let report = ValidationReport {
                status: Status::Invalid,
                stage: Stage::Strict,
                errors: vec![ValidationError::malformed(e.to_string())],
                warnings: Vec::new(),
            };
            return PipelineResult::fallback(vec![Attempt {
                prompt: None,
                raw_response: String::new(),
                report,
            }]);
        }
    };
    let raw = tree_to_frames(&tree, grammar);
    let canon = canonicalize(&raw, schema);
    let mut report = validate_strict(&canon.frames, schema);
    report.warnings.splice(0..0, canon.warnings);
    let ok = report.is_valid() && !canon.frames.is_empty();
    let transcript = vec![Attempt {
        prompt: None,
        raw_response: raw.to_json(),
        report,
    }];
    let mut result = if ok {
        PipelineResult::valid(canon.frames, transcript)
    } else {
        PipelineResult::fallback(transcript)
    };
    result.parse_tree = Some(tree);
    result
}

/// Dispatches on `config.mode`. Backend modes need `backend`.
pub fn run(
    sentence: &str,
    backend: Option<&dyn Backend>,
    grammar: &Grammar,
    schema: &FrameSchema,
    config: &PipelineConfig,
) -> Result<PipelineResult, PipelineError> {
    match config.mode {
        Mode::NluOnly => Ok(run_nlu_only(sentence, grammar, schema, config)),
        Mode::Hybrid => run_hybrid(
            sentence,
            backend.ok_or(PipelineError::MissingBackend("hybrid"))?,
            schema,
            config,
        ),
        Mode::LlmOnly => run_llm_only(
            sentence,
            backend.ok_or(PipelineError::MissingBackend("llm"))?,
            schema,
            config,
        ),
    }
}
