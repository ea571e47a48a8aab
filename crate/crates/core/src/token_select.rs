//! Descriptive-token selection.
//!
//! The model is prompted to restate the target element before answering; the
//! tokens of that restatement carry the attention used for grounding. Given
//! the description string, we find it in the detokenized text and return the
//! shortest run of tokens whose character ranges cover it. Matching works on
//! characters, so it does not care how the tokenizer split words.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::tensor::TokenRecord;

const QUOTES: &[char] = &['"', '\'', '`', '\u{201c}', '\u{201d}', '\u{2018}', '\u{2019}', '\u{ab}', '\u{bb}'];

/// A contiguous run of tokens covering a matched description.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSpan {
    /// Positions in the token list, strictly increasing and contiguous.
    pub token_indices: Vec<usize>,
    /// The matched characters as they appear in the token text.
    pub matched_text: String,
    /// Half-open character range of the match.
    pub char_range: (u64, u64),
}

/// Concatenates token texts after checking that every record's offsets agree
/// with its position in the concatenation.
pub fn detokenize(tokens: &[TokenRecord]) -> Result<String> {
    let mut out = String::new();
    let mut pos = 0u64;
    for (i, t) in tokens.iter().enumerate() {
        let len = t.text.chars().count() as u64;
        if t.char_start != pos || t.char_end != pos + len {
            return Err(Error::OffsetInconsistency(i));
        }
        out.push_str(&t.text);
        pos += len;
    }
    Ok(out)
}

/// Trims, strips surrounding quotes and collapses whitespace runs.
fn normalize_description(description: &str) -> Vec<char> {
    let mut s = description.trim();
    loop {
        let stripped = s.trim_matches(QUOTES).trim();
        if stripped.len() == s.len() {
            break;
        }
        s = stripped;
    }
    collapse_whitespace(s).0
}

/// Collapses whitespace runs to one space. Also returns, for every output
/// character, the index of the input character it came from.
fn collapse_whitespace(s: &str) -> (Vec<char>, Vec<usize>) {
    let mut chars = Vec::new();
    let mut origin = Vec::new();
    let mut in_space = false;
    for (i, c) in s.chars().enumerate() {
        if c.is_whitespace() {
            if !in_space {
                chars.push(' ');
                origin.push(i);
            }
            in_space = true;
        } else {
            chars.push(c);
            origin.push(i);
            in_space = false;
        }
    }
    (chars, origin)
}

/// Finds the first occurrence of `description` in the token text and returns
/// the minimal token run covering it.
pub fn select_span(tokens: &[TokenRecord], description: &str) -> Result<TokenSpan> {
    if tokens.is_empty() {
        return Err(Error::EmptyInput("tokens"));
    }
    let needle = normalize_description(description);
    if needle.is_empty() {
        return Err(Error::EmptyInput("description"));
    }
    let text = detokenize(tokens)?;
    let (hay, origin) = collapse_whitespace(&text);

    let found = hay
        .windows(needle.len())
        .position(|w| w == needle.as_slice())
        .ok_or(Error::NotFound)?;
    let start = origin[found] as u64;
    let end = origin[found + needle.len() - 1] as u64 + 1;

    let first = tokens
        .iter()
        .position(|t| t.char_end > start)
        .ok_or(Error::NotFound)?;
    let last = tokens
        .iter()
        .rposition(|t| t.char_start < end)
        .ok_or(Error::NotFound)?;

    let matched_text = text.chars().skip(start as usize).take((end - start) as usize).collect();
    Ok(TokenSpan {
        token_indices: (first..=last).collect(),
        matched_text,
        char_range: (start, end),
    })
}
