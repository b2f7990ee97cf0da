//! Two-stage validation against a [`FrameSchema`].
//!
//! The light stage salvages: unknown frames, disallowed roles and empty
//! values are dropped and reported. The strict stage is a read-only
//! predicate reporting the same three problems.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frames::{DecodeError, FrameSet};
use crate::schema::FrameSchema;

pub const EMPTY_COMMAND: &str = "empty command";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ErrorKind {
    UnknownFrame,
    UnknownElement,
    EmptyValue,
    MalformedStructure,
    ExtractionFailure,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationError {
    pub kind: ErrorKind,
    /// Position in the frame set; absent for structure-level errors.
    pub frame_index: Option<usize>,
    /// Name of the implicated frame, when there is one.
    pub frame: Option<String>,
    /// Offending frame or role name, or a text excerpt.
    pub subject: String,
    pub message: String,
}

impl ValidationError {
    pub fn unknown_frame(index: usize, frame: &str) -> Self {
        ValidationError {
            kind: ErrorKind::UnknownFrame,
            frame_index: Some(index),
            frame: Some(frame.to_string()),
            subject: frame.to_string(),
            message: format!("frame {index}: unknown frame \"{frame}\""),
        }
    }

    pub fn unknown_element(index: usize, frame: &str, role: &str) -> Self {
        ValidationError {
            kind: ErrorKind::UnknownElement,
            frame_index: Some(index),
            frame: Some(frame.to_string()),
            subject: role.to_string(),
            message: format!("frame {index} \"{frame}\": element \"{role}\" is not allowed"),
        }
    }

    pub fn empty_value(index: usize, frame: &str, role: &str) -> Self {
        ValidationError {
            kind: ErrorKind::EmptyValue,
            frame_index: Some(index),
            frame: Some(frame.to_string()),
            subject: role.to_string(),
            message: format!("frame {index} \"{frame}\": element \"{role}\" has an empty value"),
        }
    }

    pub fn malformed(subject: impl Into<String>) -> Self {
        let subject = subject.into();
        ValidationError {
            kind: ErrorKind::MalformedStructure,
            frame_index: None,
            frame: None,
            message: format!("malformed structure: {subject}"),
            subject,
        }
    }

    pub fn extraction_failure(subject: impl Into<String>) -> Self {
        let subject = subject.into();
        ValidationError {
            kind: ErrorKind::ExtractionFailure,
            frame_index: None,
            frame: None,
            message: "no JSON object could be extracted from the output".to_string(),
            subject,
        }
    }
}

impl From<&DecodeError> for ValidationError {
    fn from(e: &DecodeError) -> Self {
        match e {
            DecodeError::Extraction { excerpt } => ValidationError::extraction_failure(excerpt.clone()),
            DecodeError::Shape { reason, .. } => ValidationError::malformed(reason.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Valid,
    Salvaged,
    Invalid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stage {
    Light,
    Strict,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub status: Status,
    pub stage: Stage,
    pub errors: Vec<ValidationError>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.status == Status::Valid
    }

    /// Report for output that never became a frame set.
    pub fn undecodable(error: &DecodeError) -> Self {
        ValidationReport {
            status: Status::Invalid,
            stage: Stage::Light,
            errors: vec![ValidationError::from(error)],
            warnings: Vec::new(),
        }
    }
}

/// Salvage pass. Returns the surviving frames and what was dropped.
pub fn validate_light(fs: &FrameSet, schema: &FrameSchema) -> (FrameSet, ValidationReport) {
    let mut errors = Vec::new();
    let mut kept = Vec::new();
    for (idx, frame) in fs.frames.iter().enumerate() {
        if !schema.is_known_frame(frame.name()) {
            errors.push(ValidationError::unknown_frame(idx, frame.name()));
            continue;
        }
        let elements = frame
            .elements()
            .iter()
            .filter(|(role, value)| {
                if !schema.allows(frame.name(), role) {
                    errors.push(ValidationError::unknown_element(idx, frame.name(), role));
                    false
                } else if value.trim().is_empty() {
                    errors.push(ValidationError::empty_value(idx, frame.name(), role));
                    false
                } else {
                    true
                }
            })
            .cloned()
            .collect();
        kept.push(frame.with_elements(elements));
    }
    let mut warnings = Vec::new();
    let status = if errors.is_empty() {
        if kept.is_empty() {
            warnings.push(EMPTY_COMMAND.to_string());
        }
        Status::Valid
    } else if kept.is_empty() {
        Status::Invalid
    } else {
        Status::Salvaged
    };
    (
        FrameSet::new(kept),
        ValidationReport {
            status,
            stage: Stage::Light,
            errors,
            warnings,
        },
    )
}

/// Read-only compliance check.
pub fn validate_strict(fs: &FrameSet, schema: &FrameSchema) -> ValidationReport {
    let mut errors = Vec::new();
    for (idx, frame) in fs.frames.iter().enumerate() {
        let known = schema.is_known_frame(frame.name());
        if !known {
            errors.push(ValidationError::unknown_frame(idx, frame.name()));
        }
        for (role, value) in frame.elements() {
            if known && !schema.allows(frame.name(), role) {
                errors.push(ValidationError::unknown_element(idx, frame.name(), role));
            } else if value.trim().is_empty() {
                errors.push(ValidationError::empty_value(idx, frame.name(), role));
            }
        }
    }
    let warnings = if fs.is_empty() {
        vec![EMPTY_COMMAND.to_string()]
    } else {
        Vec::new()
    };
    ValidationReport {
        status: if errors.is_empty() {
            Status::Valid
        } else {
            Status::Invalid
        },
        stage: Stage::Strict,
        errors,
        warnings,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("report is valid and has no warnings; nothing to render")]
pub struct NothingToReport;

/// Plain-text error report for the feedback prompt.
pub fn render_error_report(
    report: &ValidationReport,
    schema: &FrameSchema,
) -> Result<String, NothingToReport> {
    if report.is_valid() && report.warnings.is_empty() {
        return Err(NothingToReport);
    }
    let frame_list = schema.frame_names().collect::<Vec<_>>().join(", ");
    let stage = match report.stage {
        Stage::Light => "light",
        Stage::Strict => "strict",
    };
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} problem(s) found at the {stage} validation stage:",
        report.errors.len()
    );
    let mut implicated: BTreeSet<&str> = BTreeSet::new();
    for e in &report.errors {
        match e.kind {
            ErrorKind::UnknownFrame => {
                let _ = writeln!(
                    out,
                    "- unknown frame \"{}\" at frame {}; valid frames are: {frame_list}",
                    e.subject,
                    e.frame_index.unwrap_or_default()
                );
            }
            ErrorKind::UnknownElement => {
                let frame = e.frame.as_deref().unwrap_or("?");
                let roles = schema.allowed_roles(frame).map(|r| r.join(", ")).unwrap_or_default();
                let _ = writeln!(
                    out,
                    "- unknown element \"{}\" in frame {} \"{frame}\"; allowed roles: {roles}",
                    e.subject,
                    e.frame_index.unwrap_or_default()
                );
                implicated.insert(frame);
            }
            ErrorKind::EmptyValue => {
                let frame = e.frame.as_deref().unwrap_or("?");
                let _ = writeln!(
                    out,
                    "- empty value for element \"{}\" in frame {} \"{frame}\"",
                    e.subject,
                    e.frame_index.unwrap_or_default()
                );
                if schema.is_known_frame(frame) {
                    implicated.insert(frame);
                }
            }
            ErrorKind::ExtractionFailure => {
                let _ = writeln!(
                    out,
                    "- no JSON object found; reply with a single JSON object and no prose"
                );
            }
            ErrorKind::MalformedStructure => {
                let _ = writeln!(
                    out,
                    "- malformed structure ({}); reply with a single JSON object and no prose",
                    e.subject
                );
            }
        }
    }
    for w in &report.warnings {
        if w == EMPTY_COMMAND {
            let _ = writeln!(
                out,
                "- warning: empty command; express the instruction using the valid frames"
            );
        } else {
            let _ = writeln!(out, "- warning: {w}");
        }
    }
    let _ = writeln!(out, "Valid action frames: {frame_list}");
    if !implicated.is_empty() {
        out.push_str("Allowed roles:\n");
        for frame in implicated {
            let roles = schema.allowed_roles(frame).unwrap_or_default();
            let _ = writeln!(out, "- {frame}: {}", roles.join(", "));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::FrameInstance;

    fn schema() -> FrameSchema {
        FrameSchema::from_json(
            r#"{
            "element_rules": {
                "Bringing": ["Theme", "Beneficiary", "Goal", "Agent", "Source", "Area", "Manner"],
                "Taking": ["Theme", "Source"]
            }
        }"#,
        )
        .unwrap()
    }

    #[test]
    fn light_salvages_unknown_frame() {
        let fs = FrameSet::new(vec![
            FrameInstance::new("Taking").with("Theme", "box"),
            FrameInstance::new("Flying").with("Goal", "sky"),
        ]);
        let (out, report) = validate_light(&fs, &schema());
        assert_eq!(out, FrameSet::new(vec![FrameInstance::new("Taking").with("Theme", "box")]));
        assert_eq!(report.status, Status::Salvaged);
        assert_eq!(report.errors.len(), 1);
        assert_eq!(report.errors[0].kind, ErrorKind::UnknownFrame);
        assert_eq!(report.errors[0].subject, "Flying");
        assert_eq!(report.errors[0].frame_index, Some(1));
    }

    #[test]
    fn light_identity_on_valid_input() {
        let fs = FrameSet::new(vec![FrameInstance::new("Taking").with("Theme", "box")]);
        let (out, report) = validate_light(&fs, &schema());
        assert_eq!(out, fs);
        assert_eq!(report.status, Status::Valid);
        assert!(report.errors.is_empty());
    }

    #[test]
    fn light_no_survivors_is_invalid() {
        let fs = FrameSet::new(vec![FrameInstance::new("Flying").with("Goal", "sky")]);
        let (out, report) = validate_light(&fs, &schema());
        assert!(out.is_empty());
        assert_eq!(report.status, Status::Invalid);
    }

    #[test]
    fn light_drops_elements_and_empty_values() {
        let fs = FrameSet::new(vec![FrameInstance::new("Bringing")
            .with("Theme", "book")
            .with("Color", "red")
            .with("Goal", " ")]);
        let (out, report) = validate_light(&fs, &schema());
        assert_eq!(out.frames[0].elements(), &[("Theme".into(), "book".into())]);
        let kinds: Vec<_> = report.errors.iter().map(|e| e.kind).collect();
        assert_eq!(kinds, [ErrorKind::UnknownElement, ErrorKind::EmptyValue]);
        assert_eq!(report.status, Status::Salvaged);
    }

    #[test]
    fn strict_examples() {
        let ok = FrameSet::new(vec![FrameInstance::new("Bringing")
            .with("Theme", "book")
            .with("Goal", "couch")]);
        assert_eq!(validate_strict(&ok, &schema()).status, Status::Valid);

        let bad = FrameSet::new(vec![FrameInstance::new("Bringing")
            .with("Theme", "book")
            .with("Color", "red")]);
        let r = validate_strict(&bad, &schema());
        assert_eq!(r.status, Status::Invalid);
        assert_eq!(r.errors[0].kind, ErrorKind::UnknownElement);
        assert_eq!(r.errors[0].subject, "Color");

        let empty = validate_strict(&FrameSet::empty(), &schema());
        assert_eq!(empty.status, Status::Valid);
        assert_eq!(empty.warnings, vec![EMPTY_COMMAND.to_string()]);
        assert_eq!(empty.stage, Stage::Strict);
    }

    #[test]
    fn strict_is_pure() {
        let fs = FrameSet::new(vec![FrameInstance::new("Nope").with("A", "")]);
        assert_eq!(validate_strict(&fs, &schema()), validate_strict(&fs, &schema()));
        assert_eq!(validate_strict(&fs, &schema()).errors.len(), 2);
    }

    #[test]
    fn report_lists_allowed_roles() {
        let bad = FrameSet::new(vec![FrameInstance::new("Bringing")
            .with("Theme", "book")
            .with("Color", "red")]);
        let text = render_error_report(&validate_strict(&bad, &schema()), &schema()).unwrap();
        assert!(text.contains("Theme, Beneficiary, Goal, Agent, Source, Area, Manner"));
        assert!(text.contains("- unknown element \"Color\" in frame 0 \"Bringing\""));
        assert!(text.contains("Valid action frames: Bringing, Taking"));
    }

    #[test]
    fn report_on_valid_is_rejected() {
        let ok = FrameSet::new(vec![FrameInstance::new("Taking").with("Theme", "x")]);
        assert_eq!(
            render_error_report(&validate_strict(&ok, &schema()), &schema()),
            Err(NothingToReport)
        );
    }

    #[test]
    fn report_on_extraction_failure() {
        let err = crate::frames::deserialize("no json here").unwrap_err();
        let text = render_error_report(&ValidationReport::undecodable(&err), &schema()).unwrap();
        assert!(text.contains("reply with a single JSON object and no prose"));
        assert!(text.contains("Valid action frames: Bringing, Taking"));
    }

    #[test]
    fn report_on_empty_command_warning() {
        let text = render_error_report(&validate_strict(&FrameSet::empty(), &schema()), &schema()).unwrap();
        assert!(text.starts_with("0 problem(s) found at the strict validation stage:\n"));
        assert!(text.contains("warning: empty command"));
    }
}
