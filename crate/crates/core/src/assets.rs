//! Bundled grammar, schema, stub rules and synthetic corpus.

use crate::evaluator::{parse_corpus, CorpusRecord};
use crate::llm::StubRules;
use crate::parser::Grammar;
use crate::schema::FrameSchema;

pub const GRAMMAR: &str = include_str!("../assets/robot.grammar");
pub const SCHEMA: &str = include_str!("../assets/schema.json");
pub const STUB_RULES: &str = include_str!("../assets/stub_rules.json");
/// 66 invented records in the JSONL corpus format. Not drawn from any
/// annotated dataset.
pub const SYNTHETIC_CORPUS: &str = include_str!("../assets/synthetic_corpus.jsonl");

pub fn grammar() -> Grammar {
    Grammar::from_text(GRAMMAR).expect("bundled grammar loads")
}

pub fn schema() -> FrameSchema {
    FrameSchema::from_json(SCHEMA).expect("bundled schema loads")
}

pub fn stub_rules() -> StubRules {
    StubRules::from_json(STUB_RULES).expect("bundled stub rules load")
}

pub fn corpus() -> Vec<CorpusRecord> {
    parse_corpus(SYNTHETIC_CORPUS).expect("bundled corpus loads")
}
