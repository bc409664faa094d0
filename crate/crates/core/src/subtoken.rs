//! Identifier and text subtokenization.
//!
//! Identifiers split at case boundaries (`readFile` → `read`, `file`),
//! acronym edges (`parseHTTPResponse` → `parse`, `http`, `response`), and
//! separator characters (`_`, `$`, punctuation, whitespace). Digits stay
//! attached to the run they follow, so canonical names like `var0` survive
//! as single subtokens. Everything is lowercased.

use alloc::string::String;
use alloc::vec::Vec;

use crate::token::{tokenize, TokenKind};

/// Splits arbitrary text into lowercase subtokens.
pub fn subtokens(text: &str) -> Vec<String> {
    let mut words = Vec::new();
    let mut cur = String::new();
    let chars: Vec<char> = text.chars().collect();
    for (i, &c) in chars.iter().enumerate() {
        if !c.is_alphanumeric() {
            flush(&mut cur, &mut words);
            continue;
        }
        if c.is_uppercase() {
            let prev = cur.chars().next_back();
            let lower_or_digit = prev.is_some_and(|p| p.is_lowercase() || p.is_numeric());
            let acronym_end = prev.is_some_and(|p| p.is_uppercase())
                && chars.get(i + 1).is_some_and(|n| n.is_lowercase());
            if lower_or_digit || acronym_end {
                flush(&mut cur, &mut words);
            }
        }
        // `cur` tracks the original casing so boundary checks see it; the
        // flush lowercases.
        cur.push(c);
    }
    flush(&mut cur, &mut words);
    words
}

fn flush(cur: &mut String, words: &mut Vec<String>) {
    if !cur.is_empty() {
        words.push(cur.to_lowercase());
        cur.clear();
    }
}

/// Subtokenizes a natural-language query.
pub fn query_tokens(text: &str) -> Vec<String> {
    subtokens(text)
}

/// Subtokenizes code. Parses with the lexer so identifiers, keywords, and
/// literal contents split into words while operators and punctuation come
/// through verbatim (code shape carries signal). Falls back to plain text
/// splitting when the code does not even lex.
pub fn code_tokens(source: &str) -> Vec<String> {
    let Ok(tokens) = tokenize(source) else {
        return subtokens(source);
    };
    let mut out = Vec::new();
    for t in &tokens {
        if t.is_trivia() {
            continue;
        }
        match t.kind {
            TokenKind::Identifier | TokenKind::Keyword | TokenKind::Literal => {
                out.extend(subtokens(&t.text));
            }
            _ => out.push(t.text.clone()),
        }
    }
    out
}
