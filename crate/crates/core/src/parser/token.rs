use serde::{Deserialize, Serialize};

const STRIP: &[char] = &['.', ',', '!', '?', ';', ':', '"', '\'', '(', ')'];

/// A normalized word with its character span in the source sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    /// Half-open `(start, end)` range in characters, not bytes.
    pub span: (usize, usize),
}

/// Splits on whitespace, trims surrounding punctuation and lowercases.
/// Words that are only punctuation are dropped.
pub fn tokenize(sentence: &str) -> Vec<Token> {
    let chars: Vec<char> = sentence.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_whitespace() {
            i += 1;
            continue;
        }
        let word_start = i;
        while i < chars.len() && !chars[i].is_whitespace() {
            i += 1;
        }
        let mut start = word_start;
        let mut end = i;
        while start < end && STRIP.contains(&chars[start]) {
            start += 1;
        }
        while end > start && STRIP.contains(&chars[end - 1]) {
            end -= 1;
        }
        if start < end {
            let text: String = chars[start..end].iter().collect::<String>().to_lowercase();
            tokens.push(Token {
                text,
                span: (start, end),
            });
        }
    }
    tokens
}

/// Token texts joined by single spaces.
pub fn join_tokens(tokens: &[Token]) -> String {
    tokens.iter().map(|t| t.text.as_str()).collect::<Vec<_>>().join(" ")
}
