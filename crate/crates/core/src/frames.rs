//! Frame data model, its canonical JSON form, and lenient extraction of
//! frame JSON from free-form model output.
//!
//! Canonical form: `{"frames":[{"frame":"Taking","elements":{"Theme":"the laptop"}}]}`.

use std::collections::BTreeSet;
use std::fmt;

use serde::de::{self, MapAccess, Visitor};
use serde::ser::{SerializeMap, SerializeSeq};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

const EXCERPT_CHARS: usize = 120;

/// One action frame: a name plus ordered, role-unique elements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameInstance {
    frame: String,
    elements: Vec<(String, String)>,
}

impl FrameInstance {
    /// # Panics
    /// If `frame` is empty.
    pub fn new(frame: impl Into<String>) -> Self {
        let frame = frame.into();
        assert!(!frame.is_empty(), "frame name must be nonempty");
        FrameInstance {
            frame,
            elements: Vec::new(),
        }
    }

    /// Builder form of [`FrameInstance::push`]; a duplicate role is ignored.
    pub fn with(mut self, role: impl Into<String>, value: impl Into<String>) -> Self {
        self.push(role, value);
        self
    }

    /// Appends an element. Returns `false` and keeps the existing value when
    /// the role is already present.
    pub fn push(&mut self, role: impl Into<String>, value: impl Into<String>) -> bool {
        let role = role.into();
        if self.get(&role).is_some() {
            return false;
        }
        self.elements.push((role, value.into()));
        true
    }

    pub fn name(&self) -> &str {
        &self.frame
    }

    pub fn elements(&self) -> &[(String, String)] {
        &self.elements
    }

    pub fn get(&self, role: &str) -> Option<&str> {
        self.elements
            .iter()
            .find(|(r, _)| r == role)
            .map(|(_, v)| v.as_str())
    }

    pub(crate) fn renamed(&self, frame: &str) -> FrameInstance {
        FrameInstance {
            frame: frame.to_string(),
            elements: self.elements.clone(),
        }
    }

    pub(crate) fn with_elements(&self, elements: Vec<(String, String)>) -> FrameInstance {
        FrameInstance {
            frame: self.frame.clone(),
            elements,
        }
    }
}

/// An ordered action sequence. Empty is the fallback command.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FrameSet {
    pub frames: Vec<FrameInstance>,
}

impl FrameSet {
    pub fn empty() -> Self {
        FrameSet::default()
    }

    pub fn new(frames: Vec<FrameInstance>) -> Self {
        FrameSet { frames }
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    /// Compact canonical JSON.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("frame sets always serialize")
    }

    /// Flattened `("frame", name)` / `(role, value)` pairs pooled over all frames.
    pub fn kv_pairs(&self) -> BTreeSet<(String, String)> {
        let mut pairs = BTreeSet::new();
        for f in &self.frames {
            pairs.insert(("frame".to_string(), f.frame.clone()));
            for (role, value) in &f.elements {
                pairs.insert((role.clone(), value.clone()));
            }
        }
        pairs
    }
}

impl fmt::Display for FrameSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_json())
    }
}

impl Serialize for FrameInstance {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        struct Elements<'a>(&'a [(String, String)]);
        impl Serialize for Elements<'_> {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                let mut map = serializer.serialize_map(Some(self.0.len()))?;
                for (k, v) in self.0 {
                    map.serialize_entry(k, v)?;
                }
                map.end()
            }
        }
        let mut map = serializer.serialize_map(Some(2))?;
        map.serialize_entry("frame", &self.frame)?;
        map.serialize_entry("elements", &Elements(&self.elements))?;
        map.end()
    }
}

impl Serialize for FrameSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        struct Frames<'a>(&'a [FrameInstance]);
        impl Serialize for Frames<'_> {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                let mut seq = serializer.serialize_seq(Some(self.0.len()))?;
                for f in self.0 {
                    seq.serialize_element(f)?;
                }
                seq.end()
            }
        }
        let mut map = serializer.serialize_map(Some(1))?;
        map.serialize_entry("frames", &Frames(&self.frames))?;
        map.end()
    }
}

/// Why model output could not be turned into a [`FrameSet`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("no JSON object found in output: {excerpt:?}")]
    Extraction { excerpt: String },
    #[error("JSON is not frame-shaped ({reason}): {excerpt:?}")]
    Shape { reason: String, excerpt: String },
}

impl DecodeError {
    pub fn excerpt(&self) -> &str {
        match self {
            DecodeError::Extraction { excerpt } | DecodeError::Shape { excerpt, .. } => excerpt,
        }
    }
}

/// A decoded frame set plus notes about anything discarded while reading it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decoded {
    pub frames: FrameSet,
    pub warnings: Vec<String>,
}

pub fn excerpt(text: &str) -> String {
    let mut out: String = text.chars().take(EXCERPT_CHARS).collect();
    if text.chars().count() > EXCERPT_CHARS {
        out.push_str("...");
    }
    out
}

/// Parses text that must be exactly one frame-shaped JSON document.
pub fn from_json_str(text: &str) -> Result<Decoded, DecodeError> {
    match serde_json::from_str::<RawFrameSet>(text) {
        Ok(raw) => raw.into_decoded(text),
        Err(e) => {
            if serde_json::from_str::<de::IgnoredAny>(text).is_ok() {
                Err(DecodeError::Shape {
                    reason: e.to_string(),
                    excerpt: excerpt(text),
                })
            } else {
                Err(DecodeError::Extraction {
                    excerpt: excerpt(text),
                })
            }
        }
    }
}

/// Lenient decoding of raw model output.
///
/// Every balanced `{...}` region (string literals respected) is tried in
/// order of its opening brace; the first one that is frame-shaped JSON wins.
/// If some region is valid JSON but none is frame-shaped the result is a
/// shape error for the first such region.
pub fn decode(text: &str) -> Result<Decoded, DecodeError> {
    let mut first_shape_error: Option<DecodeError> = None;
    for (start, c) in text.char_indices() {
        if c != '{' {
            continue;
        }
        let Some(end) = balanced_end(text, start) else {
            continue;
        };
        let region = &text[start..end];
        match serde_json::from_str::<RawFrameSet>(region) {
            Ok(raw) => match raw.into_decoded(region) {
                Ok(d) => return Ok(d),
                Err(e) => {
                    first_shape_error.get_or_insert(e);
                }
            },
            Err(e) => {
                if first_shape_error.is_none() && serde_json::from_str::<de::IgnoredAny>(region).is_ok() {
                    first_shape_error = Some(DecodeError::Shape {
                        reason: e.to_string(),
                        excerpt: excerpt(region),
                    });
                }
            }
        }
    }
    Err(first_shape_error.unwrap_or_else(|| DecodeError::Extraction {
        excerpt: excerpt(text),
    }))
}

/// Convenience wrapper over [`decode`] dropping warnings.
pub fn deserialize(text: &str) -> Result<FrameSet, DecodeError> {
    decode(text).map(|d| d.frames)
}

/// Byte offset just past the brace closing the one at `start`.
fn balanced_end(text: &str, start: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (off, c) in text[start..].char_indices() {
        if in_string {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                in_string = false;
            }
            continue;
        }
        match c {
            '"' => in_string = true,
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(start + off + 1);
                }
            }
            _ => {}
        }
    }
    None
}

struct RawFrameSet {
    frames: Vec<RawFrame>,
}

struct RawFrame {
    frame: String,
    elements: Vec<(String, String)>,
}

impl RawFrameSet {
    fn into_decoded(self, source: &str) -> Result<Decoded, DecodeError> {
        let mut warnings = Vec::new();
        let mut frames = Vec::with_capacity(self.frames.len());
        for (idx, raw) in self.frames.into_iter().enumerate() {
            if raw.frame.is_empty() {
                return Err(DecodeError::Shape {
                    reason: format!("frame {idx} has an empty name"),
                    excerpt: excerpt(source),
                });
            }
            let mut inst = FrameInstance::new(raw.frame);
            for (role, value) in raw.elements {
                if !inst.push(role.clone(), value) {
                    warnings.push(format!(
                        "frame {idx} \"{}\": duplicate element \"{role}\" ignored",
                        inst.name()
                    ));
                }
            }
            frames.push(inst);
        }
        Ok(Decoded {
            frames: FrameSet { frames },
            warnings,
        })
    }
}

impl<'de> Deserialize<'de> for RawFrameSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = RawFrameSet;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an object with a \"frames\" array")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<RawFrameSet, A::Error> {
                let mut frames = None;
                while let Some(key) = map.next_key::<String>()? {
                    if key == "frames" && frames.is_none() {
                        frames = Some(map.next_value::<Vec<RawFrame>>()?);
                    } else {
                        map.next_value::<de::IgnoredAny>()?;
                    }
                }
                let frames = frames.ok_or_else(|| de::Error::missing_field("frames"))?;
                Ok(RawFrameSet { frames })
            }
        }
        deserializer.deserialize_map(V)
    }
}

impl<'de> Deserialize<'de> for RawFrame {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = RawFrame;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an object with string \"frame\" and object \"elements\"")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<RawFrame, A::Error> {
                let mut frame = None;
                let mut elements = None;
                while let Some(key) = map.next_key::<String>()? {
                    match key.as_str() {
                        "frame" if frame.is_none() => frame = Some(map.next_value::<String>()?),
                        "elements" if elements.is_none() => {
                            elements = Some(map.next_value::<RawElements>()?.0)
                        }
                        _ => {
                            map.next_value::<de::IgnoredAny>()?;
                        }
                    }
                }
                Ok(RawFrame {
                    frame: frame.ok_or_else(|| de::Error::missing_field("frame"))?,
                    elements: elements.ok_or_else(|| de::Error::missing_field("elements"))?,
                })
            }
        }
        deserializer.deserialize_map(V)
    }
}

/// Element object read in document order, duplicates preserved.
struct RawElements(Vec<(String, String)>);

impl<'de> Deserialize<'de> for RawElements {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = RawElements;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an object of string values")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<RawElements, A::Error> {
                let mut out = Vec::new();
                while let Some((k, v)) = map.next_entry::<String, String>()? {
                    out.push((k, v));
                }
                Ok(RawElements(out))
            }
        }
        deserializer.deserialize_map(V)
    }
}

// Strict counterpart of `decode` for frame sets embedded in other documents;
// duplicate-role warnings are dropped here.
impl<'de> Deserialize<'de> for FrameSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = RawFrameSet::deserialize(deserializer)?;
        raw.into_decoded("").map(|d| d.frames).map_err(de::Error::custom)
    }
}
