use std::fmt::Write as _;

use serde::Serialize;

use crate::symcore::{Format, PathConstraint};

pub const SYSTEM_PROMPT: &str = "You generate test inputs for parsers under concolic testing. \
Follow the requested steps and always finish with the requested fenced code block.";

pub const FLEXIBLE_MASK: &str = "[xxx]";

/// A seed prefix with `[k!n]` at every constrained byte, followed by `[xxx]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MaskedSeed {
    pub text: String,
    /// `(token, input index)` in ascending index order.
    pub tokens: Vec<(String, usize)>,
    pub flexible_origin: usize,
    /// Seed bytes before `flexible_origin`, unmasked.
    pub prefix: Vec<u8>,
}

impl MaskedSeed {
    pub fn new(pc: &PathConstraint, seed: &[u8]) -> MaskedSeed {
        let flexible_origin = pc.positions.iter().next_back().map_or(0, |&p| p + 1);
        let mut prefix: Vec<u8> = seed.iter().copied().take(flexible_origin).collect();
        prefix.resize(flexible_origin, 0);
        let mut text = String::new();
        let mut tokens = Vec::new();
        let mut last = 0;
        for &p in &pc.positions {
            text.push_str(&escape_bytes(&prefix[last..p]));
            let token = format!("[k!{p}]");
            text.push_str(&token);
            tokens.push((token, p));
            last = p + 1;
        }
        text.push_str(FLEXIBLE_MASK);
        MaskedSeed {
            text,
            tokens,
            flexible_origin,
            prefix,
        }
    }

    /// The masked text with every mask removed and the original bytes put
    /// back; equals the seed prefix.
    pub fn restore(&self) -> Vec<u8> {
        let mut out = Vec::new();
        let mut rest = self.text.as_str();
        for (token, pos) in &self.tokens {
            let at = rest.find(token.as_str()).expect("token present");
            out.extend(unescape_bytes(&rest[..at]));
            out.push(self.prefix[*pos]);
            rest = &rest[at + token.len()..];
        }
        let tail = rest.strip_suffix(FLEXIBLE_MASK).expect("flexible mask last");
        out.extend(unescape_bytes(tail));
        out
    }

    pub fn has_masks(&self, text: &str) -> bool {
        text.contains(FLEXIBLE_MASK) || self.tokens.iter().any(|(t, _)| text.contains(t.as_str()))
    }
}

fn is_hex_escape(bytes: &[u8]) -> bool {
    bytes.len() >= 4 && bytes[0] == b'\\' && bytes[1] == b'x' && bytes[2..4].iter().all(u8::is_ascii_hexdigit)
}

/// Printable ASCII, `\n` and `\t` stay literal, everything else becomes
/// `\xHH`. A backslash is escaped when it is last or followed by `x`, so
/// concatenated escaped text never forms a spurious escape.
pub fn escape_bytes(bytes: &[u8]) -> String {
    let mut out = String::with_capacity(bytes.len());
    for (i, &b) in bytes.iter().enumerate() {
        let ambiguous = b == b'\\' && bytes.get(i + 1).is_none_or(|&n| n == b'x');
        if matches!(b, 0x20..=0x7e | b'\n' | b'\t') && !ambiguous {
            out.push(b as char);
        } else {
            let _ = write!(out, "\\x{b:02x}");
        }
    }
    out
}

pub fn unescape_bytes(text: &str) -> Vec<u8> {
    let bytes = text.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if is_hex_escape(&bytes[i..]) {
            let hex = std::str::from_utf8(&bytes[i + 2..i + 4]).expect("ascii");
            out.push(u8::from_str_radix(hex, 16).expect("hex digits"));
            i += 4;
        } else {
            out.push(bytes[i]);
            i += 1;
        }
    }
    out
}

/// Builds the two-step prompt for solving `pc` (the negated constraint)
/// against `seed`.
pub fn build_solve_complete_prompt(pc: &PathConstraint, seed: &[u8], format: &Format) -> (MaskedSeed, String) {
    let masked = MaskedSeed::new(pc, seed);
    let fmt = format.name();
    let mut p = String::new();
    let _ = writeln!(p, "The program under test parses {fmt} input.");
    p.push_str("Input byte n is the bit-vector variable k!n.\n\n");
    p.push_str("Path constraint the new input must satisfy:\n```smt\n");
    p.push_str(&pc.assertion().to_string());
    p.push_str("\n```\n\n");
    p.push_str("Masked input:\n```\n");
    p.push_str(&masked.text);
    p.push_str("\n```\n\n");
    p.push_str("Each [k!n] token stands for one constrained byte. [xxx] stands for text of any length.\n\n");
    let _ = writeln!(
        p,
        "Step 1: replace every [k!n] token with a byte that satisfies the path constraint and fits {fmt} syntax at that position."
    );
    let _ = writeln!(
        p,
        "Step 2: replace [xxx] with text of any length so that the whole input is valid {fmt}. Keep all other bytes unchanged."
    );
    p.push_str(
        "\nWrite bytes outside printable ASCII as \\xHH. Give the complete input, with no masks left, in the last fenced code block of your answer.\n",
    );
    (masked, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symcore::{parse_expr, BranchSite};
    use proptest::prelude::*;

    fn pc_on(expr: &str) -> PathConstraint {
        let expr = parse_expr(expr).unwrap();
        PathConstraint {
            site: BranchSite::new_if("t.c", "f", 1, 1),
            positions: expr.positions(),
            expr,
            taken: false,
            call_stack_size: 0,
            context: Vec::new(),
            order: 0,
        }
    }

    #[test]
    fn masks_suffix_after_last_constrained_byte() {
        let seed = b"var x = ret";
        let pc = pc_on("(bvsge #x00000039 (concat #x000000 k!9))");
        let m = MaskedSeed::new(&pc, seed);
        assert_eq!(m.text, "var x = r[k!9][xxx]");
        assert_eq!(m.flexible_origin, 10);
        assert_eq!(m.restore(), b"var x = re");
        let first = MaskedSeed::new(&pc_on("(= k!0 #x7b)"), b"{}");
        assert_eq!(first.text, "[k!0][xxx]");
        let two = MaskedSeed::new(&pc_on("(bvult (concat k!3 k!1) #x0102)"), b"abcdef");
        assert_eq!(two.text, "a[k!1]c[k!3][xxx]");
    }

    #[test]
    fn prompt_contents_are_deterministic() {
        let pc = pc_on("(bvsge #x00000039 (concat #x000000 k!2))");
        let (m, a) = build_solve_complete_prompt(&pc, b"ab\x01c", &Format::Json);
        let (_, b) = build_solve_complete_prompt(&pc, b"ab\x01c", &Format::Json);
        assert_eq!(a, b);
        assert!(a.contains("parses JSON"));
        assert!(a.contains("(not (bvsge #x00000039 (concat #x000000 k!2)))"));
        assert!(a.contains(&m.text));
        assert!(a.contains("Step 1") && a.contains("Step 2"));
    }

    #[test]
    fn escaping() {
        assert_eq!(escape_bytes(b"a\n\x00\xff"), "a\n\\x00\\xff");
        assert_eq!(escape_bytes(b"\\x41"), "\\x5cx41");
        assert_eq!(escape_bytes(b"\\n"), "\\n");
        assert_eq!(unescape_bytes("\\x5cx41"), b"\\x41");
    }

    proptest! {
        #[test]
        fn escape_round_trip(bytes in prop::collection::vec(any::<u8>(), 0..40)) {
            prop_assert_eq!(unescape_bytes(&escape_bytes(&bytes)), bytes);
        }

        #[test]
        fn restore_reproduces_prefix(
            seed in prop::collection::vec(any::<u8>(), 1..30), pos in 0usize..30
        ) {
            let pos = pos % seed.len();
            let m = MaskedSeed::new(&pc_on(&format!("(= k!{pos} #x41)")), &seed);
            prop_assert_eq!(m.restore(), seed[..=pos].to_vec());
        }
    }
}
