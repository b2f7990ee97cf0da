use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::schema::FrameSchema;

pub const IDENTITY_LINE: &str = "You are a helpful robotics assistant.";

pub const SECTION_INSTRUCTION: &str = "### Original instruction";
pub const SECTION_PREVIOUS: &str = "### Previous response";
pub const SECTION_ERRORS: &str = "### Validation errors";
pub const SECTION_FRAMES: &str = "### Valid action frames";
pub const SECTION_TASK: &str = "### Task";

pub const REGENERATE_DIRECTIVE: &str =
    "Produce a corrected single JSON object; keep all valid parts of the previous response.";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatPrompt {
    pub system: String,
    pub user: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("instruction is empty")]
    EmptySentence,
    #[error("prompt argument `{0}` is empty")]
    EmptyArgument(&'static str),
}

/// Fixed system text: identity line, output contract, frame inventory.
pub fn system_text(schema: &FrameSchema) -> String {
    format!(
        "{IDENTITY_LINE}\n\
         Translate the user's instruction into a robot command.\n\
         Respond with exactly one JSON object of the form \
         {{\"frames\":[{{\"frame\":\"<FrameName>\",\"elements\":{{\"<Role>\":\"<words from the instruction>\"}}}}]}} \
         and nothing else: no prose, no code fences.\n\
         Use one frame per action, in the order the actions should be performed.\n\
         Use only these action frames and roles:\n\
         {}\
         If the instruction matches none of these frames, respond with {{\"frames\":[]}}.",
        schema.inventory_lines()
    )
}

pub fn build_initial_prompt(sentence: &str, schema: &FrameSchema) -> Result<ChatPrompt, PromptError> {
    if sentence.trim().is_empty() {
        return Err(PromptError::EmptySentence);
    }
    Ok(ChatPrompt {
        system: system_text(schema),
        user: sentence.to_string(),
    })
}

/// Correction prompt: instruction, previous response, error report and frame
/// inventory as labeled sections, followed by the regeneration directive.
pub fn build_feedback_prompt(
    sentence: &str,
    previous_response: &str,
    error_text: &str,
    schema: &FrameSchema,
) -> Result<ChatPrompt, PromptError> {
    for (name, value) in [
        ("sentence", sentence),
        ("previous_response", previous_response),
        ("error_text", error_text),
    ] {
        if value.trim().is_empty() {
            return Err(PromptError::EmptyArgument(name));
        }
    }
    let user = format!(
        "{SECTION_INSTRUCTION}\n{sentence}\n\n\
         {SECTION_PREVIOUS}\n{previous_response}\n\n\
         {SECTION_ERRORS}\n{}\n\n\
         {SECTION_FRAMES}\n{}\n\
         {SECTION_TASK}\n{REGENERATE_DIRECTIVE}",
        error_text.trim_end(),
        schema.inventory_lines()
    );
    Ok(ChatPrompt {
        system: system_text(schema),
        user,
    })
}

/// Sections of a feedback prompt, recovered from its user text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeedbackSections<'a> {
    pub instruction: &'a str,
    pub previous_response: &'a str,
    pub errors: &'a str,
}

pub fn split_feedback(user: &str) -> Option<FeedbackSections<'_>> {
    let rest = user.strip_prefix(SECTION_INSTRUCTION)?.strip_prefix('\n')?;
    let (instruction, rest) = rest.split_once(&format!("\n\n{SECTION_PREVIOUS}\n"))?;
    let (previous_response, rest) = rest.split_once(&format!("\n\n{SECTION_ERRORS}\n"))?;
    let (errors, _) = rest.split_once(&format!("\n\n{SECTION_FRAMES}\n"))?;
    Some(FeedbackSections {
        instruction,
        previous_response,
        errors,
    })
}
