use super::prompt::{unescape_bytes, MaskedSeed};
use super::LlmError;

fn is_info_string(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

/// Bodies of all ``` fenced blocks, in order. An info string on the
/// opening line and the newline before the closing fence are dropped.
pub fn fenced_blocks(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find("```") {
        let after = &rest[open + 3..];
        let Some(close) = after.find("```") else { break };
        let mut body = &after[..close];
        if let Some(nl) = body.find('\n') {
            let first = &body[..nl];
            if first.is_empty() || is_info_string(first.trim_end()) {
                body = &body[nl + 1..];
            }
        }
        out.push(body.strip_suffix('\n').unwrap_or(body));
        rest = &after[close + 3..];
    }
    out
}

fn last_inline_code(text: &str) -> Option<&str> {
    let parts: Vec<&str> = text.split('`').collect();
    // odd parts are inside a span when a closing backtick follows
    (1..parts.len().saturating_sub(1))
        .step_by(2)
        .rev()
        .map(|i| parts[i])
        .find(|s| !s.is_empty())
}

/// Extracts the candidate input: the last fenced block, else the last
/// inline code span. The result may be any length.
pub fn parse_response(text: &str, masked: &MaskedSeed) -> Result<Vec<u8>, LlmError> {
    let block = fenced_blocks(text)
        .pop()
        .or_else(|| last_inline_code(text))
        .ok_or(LlmError::Unparseable)?;
    if masked.has_masks(block) {
        return Err(LlmError::Unparseable);
    }
    Ok(unescape_bytes(block))
}
