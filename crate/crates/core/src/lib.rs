pub mod assets;
pub mod canonicalizer;
pub mod cli;
pub mod evaluator;
pub mod frames;
pub mod llm;
pub mod parser;
pub mod pipeline;
pub mod schema;
pub mod validator;
