//! Deterministic keyword backend standing in for a language model.
//!
//! Initial prompts: the instruction is split into clauses, the first verb
//! keyword of each clause selects a rule, the words up to the first
//! preposition fill the rule's object role and each prepositional phrase
//! fills the role its preposition maps to. Feedback prompts: the previous
//! response is re-emitted without the frames and elements the error report
//! names.

use std::collections::BTreeSet;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::prompt::split_feedback;
use super::{Backend, BackendError, ChatPrompt, DecodingParams};
use crate::frames::{self, FrameInstance, FrameSet};
use crate::parser::tokenize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StubRule {
    pub verbs: Vec<String>,
    pub frame: String,
    #[serde(default)]
    pub object_role: Option<String>,
    /// Preposition -> role of the phrase it introduces.
    #[serde(default)]
    pub prepositions: IndexMap<String, String>,
    /// Word right after the verb -> fixed element, or `null` to just skip it.
    #[serde(default)]
    pub particles: IndexMap<String, Option<(String, String)>>,
    /// Preposition -> frame used instead of `frame` when it occurs.
    #[serde(default)]
    pub redirects: IndexMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StubRules {
    pub clause_separators: Vec<String>,
    pub rules: Vec<StubRule>,
}

impl StubRules {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    fn rule_for(&self, word: &str) -> Option<&StubRule> {
        self.rules.iter().find(|r| r.verbs.iter().any(|v| v == word))
    }

    /// Keyword analysis of a plain instruction.
    pub fn analyze(&self, sentence: &str) -> FrameSet {
        let words: Vec<String> = tokenize(sentence).into_iter().map(|t| t.text).collect();
        let mut frames = Vec::new();
        for clause in words.split(|w| self.clause_separators.contains(w)) {
            if let Some(f) = self.analyze_clause(clause) {
                frames.push(f);
            }
        }
        FrameSet::new(frames)
    }

    fn analyze_clause(&self, words: &[String]) -> Option<FrameInstance> {
        let (verb_at, rule) = words
            .iter()
            .enumerate()
            .find_map(|(i, w)| self.rule_for(w).map(|r| (i, r)))?;
        let mut rest = &words[verb_at + 1..];
        let mut particle = None;
        if let Some(p) = rest.first().and_then(|w| rule.particles.get(w)) {
            particle = p.clone();
            rest = &rest[1..];
        }

        let mut frame_name = rule.frame.as_str();
        let mut phrases: Vec<(Option<&str>, Vec<&str>)> = vec![(rule.object_role.as_deref(), Vec::new())];
        for w in rest {
            if let Some(role) = rule.prepositions.get(w) {
                if let Some(target) = rule.redirects.get(w) {
                    frame_name = target;
                }
                phrases.push((Some(role.as_str()), Vec::new()));
            } else {
                phrases.last_mut().expect("nonempty").1.push(w);
            }
        }

        let mut inst = FrameInstance::new(frame_name);
        let mut phrases = phrases.into_iter();
        if let Some((Some(role), words)) = phrases.next() {
            if !words.is_empty() {
                inst.push(role, words.join(" "));
            }
        }
        if let Some((role, value)) = particle {
            inst.push(role, value);
        }
        for (role, words) in phrases {
            if let Some(role) = role {
                if !words.is_empty() {
                    inst.push(role, words.join(" "));
                }
            }
        }
        Some(inst)
    }
}

/// Drop instructions recovered from an error report.
#[derive(Debug, Default, PartialEq, Eq)]
struct Drops {
    frames: BTreeSet<usize>,
    elements: BTreeSet<(usize, String)>,
}

fn quoted(s: &str) -> Option<(&str, &str)> {
    let s = s.strip_prefix('"')?;
    let end = s.find('"')?;
    Some((&s[..end], &s[end + 1..]))
}

fn leading_number(s: &str) -> Option<usize> {
    let digits: String = s.chars().take_while(char::is_ascii_digit).collect();
    digits.parse().ok()
}

fn parse_drops(report: &str) -> Drops {
    let mut drops = Drops::default();
    for line in report.lines() {
        if let Some(rest) = line.strip_prefix("- unknown frame ") {
            if let Some(idx) = quoted(rest).and_then(|(_, tail)| tail.strip_prefix(" at frame ")).and_then(leading_number) {
                drops.frames.insert(idx);
            }
            continue;
        }
        let rest = line
            .strip_prefix("- unknown element ")
            .or_else(|| line.strip_prefix("- empty value for element "));
        if let Some((role, tail)) = rest.and_then(quoted) {
            if let Some(idx) = tail.strip_prefix(" in frame ").and_then(leading_number) {
                drops.elements.insert((idx, role.to_string()));
            }
        }
    }
    drops
}

/// The keyword backend. Pure and deterministic; decoding parameters are ignored.
#[derive(Debug, Clone)]
pub struct StubBackend {
    rules: StubRules,
}

impl StubBackend {
    pub fn new(rules: StubRules) -> Self {
        StubBackend { rules }
    }

    pub fn rules(&self) -> &StubRules {
        &self.rules
    }

    pub fn respond(&self, prompt: &ChatPrompt) -> String {
        let Some(sections) = split_feedback(&prompt.user) else {
            return self.rules.analyze(&prompt.user).to_json();
        };
        let previous = match frames::deserialize(sections.previous_response) {
            Ok(fs) => fs,
            Err(_) => return self.rules.analyze(sections.instruction).to_json(),
        };
        let drops = parse_drops(sections.errors);
        let corrected = previous
            .frames
            .iter()
            .enumerate()
            .filter(|(idx, _)| !drops.frames.contains(idx))
            .map(|(idx, f)| {
                let kept = f
                    .elements()
                    .iter()
                    .filter(|(role, _)| !drops.elements.contains(&(idx, role.clone())))
                    .cloned()
                    .collect();
                f.with_elements(kept)
            })
            .collect();
        FrameSet::new(corrected).to_json()
    }
}

impl Backend for StubBackend {
    fn complete(&self, prompt: &ChatPrompt, _params: &DecodingParams) -> Result<String, BackendError> {
        Ok(self.respond(prompt))
    }

    fn supports_concurrency(&self) -> bool {
        true
    }
}
