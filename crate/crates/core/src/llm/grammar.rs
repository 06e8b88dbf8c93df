//! Prefix automata for the bundled input formats.
//!
//! Each machine consumes a byte prefix and can say whether the prefix is
//! still viable and which byte to append next to reach a complete document
//! quickly. The syntax-aware mock uses them to finish inputs after a
//! constrained byte.

use crate::symcore::Format;

trait Machine {
    /// Consumes one byte; false if the prefix can no longer be completed.
    fn step(&mut self, b: u8) -> bool;
    /// Next byte towards a complete document, `None` once complete.
    fn fill(&self) -> Option<u8>;
}

const MAX_FILL: usize = 512;

fn run(mut m: impl Machine, prefix: &[u8]) -> Option<Vec<u8>> {
    if !prefix.iter().all(|&b| m.step(b)) {
        return None;
    }
    let mut suffix = Vec::new();
    while let Some(b) = m.fill() {
        if suffix.len() >= MAX_FILL || !m.step(b) {
            return None;
        }
        suffix.push(b);
    }
    Some(suffix)
}

/// A suffix completing `prefix` to a document of `format`, or `None` if no
/// completion exists (or the format is unknown).
pub fn complete(format: &Format, prefix: &[u8]) -> Option<Vec<u8>> {
    match format {
        Format::Json => run(JsonMachine::default(), prefix),
        Format::Expr => run(ExprMachine::default(), prefix),
        Format::Ini => run(IniMachine::default(), prefix),
        Format::Custom(_) => None,
    }
}

pub fn is_viable(format: &Format, prefix: &[u8]) -> bool {
    complete(format, prefix).is_some()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum JExpect {
    Value,
    ValueOrClose,
    Key,
    KeyOrClose,
    Colon,
    CommaOrClose,
    End,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum JTok {
    None,
    Str { key: bool, escape: bool },
    Minus,
    Zero,
    Digits,
    Lit { word: &'static [u8], at: usize },
}

#[derive(Debug, Clone)]
struct JsonMachine {
    /// `true` for an object frame.
    stack: Vec<bool>,
    expect: JExpect,
    tok: JTok,
}

impl Default for JsonMachine {
    fn default() -> Self {
        JsonMachine {
            stack: Vec::new(),
            expect: JExpect::Value,
            tok: JTok::None,
        }
    }
}

impl JsonMachine {
    fn value_done(&mut self) {
        self.tok = JTok::None;
        self.expect = if self.stack.is_empty() {
            JExpect::End
        } else {
            JExpect::CommaOrClose
        };
    }

    fn close(&self) -> u8 {
        if self.stack.last() == Some(&true) {
            b'}'
        } else {
            b']'
        }
    }
}

impl Machine for JsonMachine {
    fn step(&mut self, b: u8) -> bool {
        match self.tok {
            JTok::Str { key, escape: true } => {
                self.tok = JTok::Str { key, escape: false };
                return b"\"\\/bfnrt".contains(&b);
            }
            JTok::Str { key, escape: false } => {
                match b {
                    b'"' if key => {
                        self.tok = JTok::None;
                        self.expect = JExpect::Colon;
                    }
                    b'"' => self.value_done(),
                    b'\\' => self.tok = JTok::Str { key, escape: true },
                    c if c < 0x20 => return false,
                    _ => {}
                }
                return true;
            }
            JTok::Lit { word, at } => {
                if word[at] != b {
                    return false;
                }
                if at + 1 == word.len() {
                    self.value_done();
                } else {
                    self.tok = JTok::Lit { word, at: at + 1 };
                }
                return true;
            }
            JTok::Minus => {
                return match b {
                    b'0' => {
                        self.tok = JTok::Zero;
                        true
                    }
                    b'1'..=b'9' => {
                        self.tok = JTok::Digits;
                        true
                    }
                    _ => false,
                };
            }
            JTok::Digits if b.is_ascii_digit() => return true,
            JTok::Zero | JTok::Digits => self.value_done(),
            JTok::None => {}
        }
        if matches!(b, b' ' | b'\t' | b'\n' | b'\r') {
            return true;
        }
        match self.expect {
            JExpect::Value | JExpect::ValueOrClose => {
                if self.expect == JExpect::ValueOrClose && b == b']' {
                    self.stack.pop();
                    self.value_done();
                    return true;
                }
                match b {
                    b'{' | b'[' => {
                        if self.stack.len() >= crate::targets::json_subset::MAX_DEPTH {
                            return false;
                        }
                        self.stack.push(b == b'{');
                        self.expect = if b == b'{' {
                            JExpect::KeyOrClose
                        } else {
                            JExpect::ValueOrClose
                        };
                    }
                    b'"' => self.tok = JTok::Str { key: false, escape: false },
                    b'-' => self.tok = JTok::Minus,
                    b'0' => self.tok = JTok::Zero,
                    b'1'..=b'9' => self.tok = JTok::Digits,
                    b't' => self.tok = JTok::Lit { word: b"true", at: 1 },
                    b'f' => self.tok = JTok::Lit { word: b"false", at: 1 },
                    b'n' => self.tok = JTok::Lit { word: b"null", at: 1 },
                    _ => return false,
                }
                true
            }
            JExpect::Key | JExpect::KeyOrClose => match b {
                b'"' => {
                    self.tok = JTok::Str { key: true, escape: false };
                    true
                }
                b'}' if self.expect == JExpect::KeyOrClose => {
                    self.stack.pop();
                    self.value_done();
                    true
                }
                _ => false,
            },
            JExpect::Colon => {
                self.expect = JExpect::Value;
                b == b':'
            }
            JExpect::CommaOrClose => {
                if b == b',' {
                    self.expect = if self.stack.last() == Some(&true) {
                        JExpect::Key
                    } else {
                        JExpect::Value
                    };
                    true
                } else if b == self.close() {
                    self.stack.pop();
                    self.value_done();
                    true
                } else {
                    false
                }
            }
            JExpect::End => false,
        }
    }

    fn fill(&self) -> Option<u8> {
        match self.tok {
            JTok::Str { escape: true, .. } => return Some(b'n'),
            JTok::Str { .. } => return Some(b'"'),
            JTok::Minus => return Some(b'1'),
            JTok::Lit { word, at } => return Some(word[at]),
            // a number ends at the next non-digit; a closer or end does it
            JTok::Zero | JTok::Digits | JTok::None => {}
        }
        let finished_number = matches!(self.tok, JTok::Zero | JTok::Digits);
        let expect = if finished_number {
            if self.stack.is_empty() {
                JExpect::End
            } else {
                JExpect::CommaOrClose
            }
        } else {
            self.expect
        };
        match expect {
            JExpect::Value => Some(b'0'),
            JExpect::ValueOrClose | JExpect::KeyOrClose | JExpect::CommaOrClose => Some(self.close()),
            JExpect::Key => Some(b'"'),
            JExpect::Colon => Some(b':'),
            JExpect::End => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum XState {
    /// Start of the program: a statement is required.
    Start,
    /// After `;`: another statement or the end.
    StmtOrEnd,
    Operand,
    /// After `f(`: an argument or `)`.
    ArgOrClose,
    /// After an operand.
    Operator,
    /// After an identifier operand: like `Operator`, or `(` for a call.
    AfterIdent,
}

#[derive(Debug, Clone, Default)]
struct ExprMachine {
    /// `true` for a call frame.
    stack: Vec<bool>,
    state: Option<XState>,
    ident: Option<Vec<u8>>,
    number: Option<bool>,
    after_slash: bool,
    depth: usize,
    /// Whether the identifier in progress began a statement.
    ident_at_stmt: bool,
}

fn ident_byte(b: u8) -> bool {
    b == b'_' || b.is_ascii_alphanumeric()
}

impl ExprMachine {
    fn state(&self) -> XState {
        self.state.unwrap_or(XState::Start)
    }

    fn finish_token(&mut self) -> bool {
        if let Some(zero) = self.number.take() {
            if zero && self.after_slash {
                return false;
            }
            self.after_slash = false;
            self.state = Some(XState::Operator);
        }
        if let Some(word) = self.ident.take() {
            self.after_slash = false;
            if word == b"return" {
                if !self.ident_at_stmt {
                    return false;
                }
                self.state = Some(XState::Operand);
            } else {
                self.state = Some(XState::AfterIdent);
            }
        }
        true
    }

    fn operand(&mut self, b: u8, at_stmt: bool) -> bool {
        match b {
            b'0'..=b'9' => self.number = Some(b == b'0'),
            b'_' | b'a'..=b'z' | b'A'..=b'Z' => {
                self.ident = Some(vec![b]);
                self.ident_at_stmt = at_stmt;
            }
            b'(' | b'-' => {
                self.depth += 1;
                if self.depth > crate::targets::expr_lang::MAX_DEPTH - 1 {
                    return false;
                }
                if b == b'(' {
                    self.stack.push(false);
                }
                self.after_slash = false;
                self.state = Some(XState::Operand);
            }
            _ => return false,
        }
        true
    }
}

impl Machine for ExprMachine {
    fn step(&mut self, b: u8) -> bool {
        if let Some(word) = self.ident.as_mut() {
            if ident_byte(b) {
                word.push(b);
                return true;
            }
        }
        if self.number.is_some() && b.is_ascii_digit() {
            self.number = Some(false);
            return true;
        }
        if !self.finish_token() {
            return false;
        }
        if matches!(b, b' ' | b'\t' | b'\n') {
            return true;
        }
        match self.state() {
            XState::Start | XState::StmtOrEnd => self.operand(b, true),
            XState::Operand => self.operand(b, false),
            XState::ArgOrClose if b == b')' => {
                self.stack.pop();
                self.depth = self.depth.saturating_sub(1);
                self.state = Some(XState::Operator);
                true
            }
            XState::ArgOrClose => self.operand(b, false),
            XState::Operator | XState::AfterIdent => match b {
                b'(' if self.state() == XState::AfterIdent => {
                    self.depth += 1;
                    self.stack.push(true);
                    self.state = Some(XState::ArgOrClose);
                    true
                }
                b'+' | b'-' | b'*' | b'/' => {
                    self.after_slash = b == b'/';
                    self.state = Some(XState::Operand);
                    true
                }
                b';' if self.stack.is_empty() => {
                    self.depth = 0;
                    self.state = Some(XState::StmtOrEnd);
                    true
                }
                b')' if !self.stack.is_empty() => {
                    self.stack.pop();
                    self.depth = self.depth.saturating_sub(1);
                    self.state = Some(XState::Operator);
                    true
                }
                b',' if self.stack.last() == Some(&true) => {
                    self.state = Some(XState::Operand);
                    true
                }
                _ => false,
            },
        }
    }

    fn fill(&self) -> Option<u8> {
        if self.ident.is_some() || self.number.is_some() {
            // a space ends the token
            return Some(b' ');
        }
        match self.state() {
            XState::Start | XState::Operand => Some(b'1'),
            XState::ArgOrClose => Some(b')'),
            XState::Operator | XState::AfterIdent if !self.stack.is_empty() => Some(b')'),
            XState::Operator | XState::AfterIdent | XState::StmtOrEnd => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
enum IniMachine {
    #[default]
    LineStart,
    Comment,
    Section(bool),
    SectionTail,
    Key,
    Value,
}

impl Machine for IniMachine {
    fn step(&mut self, b: u8) -> bool {
        use IniMachine::*;
        let next = match (*self, b) {
            (LineStart, b' ' | b'\t' | b'\n') => LineStart,
            (LineStart, b';' | b'#') => Comment,
            (LineStart, b'[') => Section(false),
            (LineStart, b'=') => return false,
            (LineStart, _) => Key,
            (Comment | Value, b'\n') => LineStart,
            (Comment, _) => Comment,
            (Value, _) => Value,
            (Section(named), b']') => {
                if !named {
                    return false;
                }
                SectionTail
            }
            (Section(_), b'\n') => return false,
            (Section(_), _) => Section(true),
            (SectionTail, b' ' | b'\t') => SectionTail,
            (SectionTail, b'\n') => LineStart,
            (SectionTail, _) => return false,
            (Key, b'=') => Value,
            (Key, b'\n') => return false,
            (Key, _) => Key,
        };
        *self = next;
        true
    }

    fn fill(&self) -> Option<u8> {
        match self {
            IniMachine::Section(false) => Some(b's'),
            IniMachine::Section(true) => Some(b']'),
            IniMachine::Key => Some(b'='),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::oracle;

    fn check(format: Format, accepts: fn(&[u8]) -> crate::symcore::Outcome, prefixes: &[&str]) {
        for p in prefixes {
            let suffix = complete(&format, p.as_bytes())
                .unwrap_or_else(|| panic!("{p:?} should be viable"));
            let mut doc = p.as_bytes().to_vec();
            doc.extend(suffix);
            assert!(accepts(&doc).is_accept(), "{p:?} -> {:?}", String::from_utf8_lossy(&doc));
        }
    }

    #[test]
    fn json_completions() {
        check(
            Format::Json,
            oracle::json,
            &["{\"a\":", "{\"a\":[1", "[", "{", "\"ab\\", "-", "tr", "{\"k\"", "[1,", "{\"a\":1,", "12", " "],
        );
        for dead in ["{,", "}", "01", "[1 2", "\"\x01"] {
            assert!(!is_viable(&Format::Json, dead.as_bytes()), "{dead:?}");
        }
    }

    #[test]
    fn expr_completions() {
        check(
            Format::Expr,
            oracle::expr,
            &["(", "f(", "f(1,", "return", "return (", "1/", "-", "x;", "1+", "ab", "g(1"],
        );
        for dead in [")", "1/0+", "1 2", "f(1))", "@", "1+return"] {
            assert!(!is_viable(&Format::Expr, dead.as_bytes()), "{dead:?}");
        }
    }

    #[test]
    fn ini_completions() {
        check(Format::Ini, oracle::ini, &["[", "[s", "k", "; x", "", "[s] ", "a=b\n  "]);
        for dead in ["=", "[]", "[s]x", "k\n"] {
            assert!(!is_viable(&Format::Ini, dead.as_bytes()), "{dead:?}");
        }
    }
}
