//! Frame schema: allowed roles per frame plus the alias tables used during
//! canonicalization.
//!
//! ```json
//! {
//!   "element_rules": {"Bringing": ["Theme", "Beneficiary", "Goal"]},
//!   "element_key_remap": {"Containing_portal": "Containing_object"},
//!   "frame_synonyms": {"Grabbing": "Taking"},
//!   "filter_enabled": true
//! }
//! ```

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SchemaError {
    #[error("invalid schema JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("element_rules must list at least one frame")]
    NoFrames,
    #[error("element_key_remap maps `{alias}` to `{target}`, which no frame allows")]
    UnknownRoleTarget { alias: String, target: String },
    #[error("frame_synonyms maps `{alias}` to `{target}`, which is not in element_rules")]
    UnknownFrameTarget { alias: String, target: String },
    #[error("{table} maps `{alias}` to `{target}`, which is itself an alias")]
    Chain {
        table: &'static str,
        alias: String,
        target: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SchemaFile {
    element_rules: IndexMap<String, Vec<String>>,
    #[serde(default)]
    element_key_remap: IndexMap<String, String>,
    #[serde(default)]
    frame_synonyms: IndexMap<String, String>,
    #[serde(default = "default_filter")]
    filter_enabled: bool,
}

fn default_filter() -> bool {
    true
}

/// Validated schema. Frame order follows the source document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameSchema {
    element_rules: IndexMap<String, Vec<String>>,
    key_remap: IndexMap<String, String>,
    frame_synonyms: IndexMap<String, String>,
    filter_enabled: bool,
}

impl FrameSchema {
    pub fn from_json(text: &str) -> Result<Self, SchemaError> {
        let file: SchemaFile = serde_json::from_str(text)?;
        Self::new(
            file.element_rules,
            file.element_key_remap,
            file.frame_synonyms,
            file.filter_enabled,
        )
    }

    pub fn new(
        element_rules: IndexMap<String, Vec<String>>,
        key_remap: IndexMap<String, String>,
        frame_synonyms: IndexMap<String, String>,
        filter_enabled: bool,
    ) -> Result<Self, SchemaError> {
        if element_rules.is_empty() {
            return Err(SchemaError::NoFrames);
        }
        for (alias, target) in &key_remap {
            if key_remap.contains_key(target) {
                return Err(SchemaError::Chain {
                    table: "element_key_remap",
                    alias: alias.clone(),
                    target: target.clone(),
                });
            }
            if !element_rules.values().any(|roles| roles.contains(target)) {
                return Err(SchemaError::UnknownRoleTarget {
                    alias: alias.clone(),
                    target: target.clone(),
                });
            }
        }
        for (alias, target) in &frame_synonyms {
            if frame_synonyms.contains_key(target) {
                return Err(SchemaError::Chain {
                    table: "frame_synonyms",
                    alias: alias.clone(),
                    target: target.clone(),
                });
            }
            if !element_rules.contains_key(target) {
                return Err(SchemaError::UnknownFrameTarget {
                    alias: alias.clone(),
                    target: target.clone(),
                });
            }
        }
        Ok(FrameSchema {
            element_rules,
            key_remap,
            frame_synonyms,
            filter_enabled,
        })
    }

    pub fn to_json(&self) -> String {
        let file = SchemaFile {
            element_rules: self.element_rules.clone(),
            element_key_remap: self.key_remap.clone(),
            frame_synonyms: self.frame_synonyms.clone(),
            filter_enabled: self.filter_enabled,
        };
        serde_json::to_string_pretty(&file).expect("schema serializes")
    }

    pub fn element_rules(&self) -> &IndexMap<String, Vec<String>> {
        &self.element_rules
    }

    pub fn key_remap(&self) -> &IndexMap<String, String> {
        &self.key_remap
    }

    pub fn frame_synonyms(&self) -> &IndexMap<String, String> {
        &self.frame_synonyms
    }

    pub fn filter_enabled(&self) -> bool {
        self.filter_enabled
    }

    pub fn with_filter(mut self, enabled: bool) -> Self {
        self.filter_enabled = enabled;
        self
    }

    pub fn frame_names(&self) -> impl Iterator<Item = &str> {
        self.element_rules.keys().map(String::as_str)
    }

    pub fn allowed_roles(&self, frame: &str) -> Option<&[String]> {
        self.element_rules.get(frame).map(Vec::as_slice)
    }

    pub fn is_known_frame(&self, frame: &str) -> bool {
        self.element_rules.contains_key(frame)
    }

    pub fn allows(&self, frame: &str, role: &str) -> bool {
        self.allowed_roles(frame).is_some_and(|roles| roles.iter().any(|r| r == role))
    }

    /// `- Frame: RoleA, RoleB` per frame, in schema order.
    pub fn inventory_lines(&self) -> String {
        let mut out = String::new();
        for (frame, roles) in &self.element_rules {
            out.push_str("- ");
            out.push_str(frame);
            out.push_str(": ");
            out.push_str(&roles.join(", "));
            out.push('\n');
        }
        out
    }
}
