//! Plain recognizers for the bundled grammars, written directly over byte
//! slices. They share no code with the instrumented targets and serve as
//! ground truth for them.

use crate::symcore::Outcome;

use super::expr_lang::{MAX_DEPTH as EXPR_MAX_DEPTH, MAX_DIGITS};
use super::json_subset::MAX_DEPTH as JSON_MAX_DEPTH;

/// Oracle outcome for a registered target name.
pub fn oracle_for(target: &str) -> Option<fn(&[u8]) -> Outcome> {
    match target {
        "json_subset" => Some(json),
        "expr_lang" => Some(expr),
        "ini_lang" => Some(ini),
        _ => None,
    }
}

fn verdict(ok: bool) -> Outcome {
    if ok {
        Outcome::Accept
    } else {
        Outcome::Reject
    }
}

pub fn json(s: &[u8]) -> Outcome {
    let mut p = Json { s, i: 0 };
    p.ws();
    let ok = p.value(0) && {
        p.ws();
        p.i == s.len()
    };
    verdict(ok)
}

struct Json<'a> {
    s: &'a [u8],
    i: usize,
}

impl Json<'_> {
    fn cur(&self) -> Option<u8> {
        self.s.get(self.i).copied()
    }

    fn ws(&mut self) {
        while matches!(self.cur(), Some(b' ' | b'\t' | b'\n' | b'\r')) {
            self.i += 1;
        }
    }

    fn value(&mut self, depth: usize) -> bool {
        if depth > JSON_MAX_DEPTH {
            return false;
        }
        match self.cur() {
            Some(b'{') => self.container(depth + 1, b'}', true),
            Some(b'[') => self.container(depth + 1, b']', false),
            Some(b'"') => self.string(),
            Some(b't') => self.word(b"true"),
            Some(b'f') => self.word(b"false"),
            Some(b'n') => self.word(b"null"),
            Some(b'-' | b'0'..=b'9') => self.number(),
            _ => false,
        }
    }

    fn word(&mut self, w: &[u8]) -> bool {
        if self.s[self.i..].starts_with(w) {
            self.i += w.len();
            true
        } else {
            false
        }
    }

    fn number(&mut self) -> bool {
        if self.cur() == Some(b'-') {
            self.i += 1;
        }
        match self.cur() {
            Some(b'0') => {
                self.i += 1;
                true
            }
            Some(b'1'..=b'9') => {
                while matches!(self.cur(), Some(b'0'..=b'9')) {
                    self.i += 1;
                }
                true
            }
            _ => false,
        }
    }

    fn string(&mut self) -> bool {
        self.i += 1;
        loop {
            match self.cur() {
                None => return false,
                Some(b'"') => {
                    self.i += 1;
                    return true;
                }
                Some(b'\\') => {
                    self.i += 1;
                    if !matches!(
                        self.cur(),
                        Some(b'"' | b'\\' | b'/' | b'b' | b'f' | b'n' | b'r' | b't')
                    ) {
                        return false;
                    }
                    self.i += 1;
                }
                Some(c) if c < 0x20 => return false,
                Some(_) => self.i += 1,
            }
        }
    }

    fn container(&mut self, depth: usize, close: u8, object: bool) -> bool {
        self.i += 1;
        self.ws();
        if self.cur() == Some(close) {
            self.i += 1;
            return true;
        }
        loop {
            if object {
                if self.cur() != Some(b'"') || !self.string() {
                    return false;
                }
                self.ws();
                if self.cur() != Some(b':') {
                    return false;
                }
                self.i += 1;
                self.ws();
            }
            if !self.value(depth) {
                return false;
            }
            self.ws();
            match self.cur() {
                Some(b',') => {
                    self.i += 1;
                    self.ws();
                }
                Some(c) if c == close => {
                    self.i += 1;
                    return true;
                }
                _ => return false,
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum T {
    Punct(u8),
    Num(bool),
    Ident,
    Return,
    Bad,
}

fn tokenize(s: &[u8]) -> Vec<T> {
    let ident = |c: u8| c == b'_' || c.is_ascii_alphabetic();
    let mut out = Vec::new();
    let mut i = 0;
    while i < s.len() {
        let c = s[i];
        if matches!(c, b' ' | b'\t' | b'\n') {
            i += 1;
        } else if b"(),+-*/;".contains(&c) {
            out.push(T::Punct(c));
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < s.len() && s[i].is_ascii_digit() {
                i += 1;
            }
            out.push(T::Num(&s[start..i] == b"0"));
        } else if ident(c) {
            let start = i;
            while i < s.len() && (ident(s[i]) || s[i].is_ascii_digit()) {
                i += 1;
            }
            out.push(if &s[start..i] == b"return" {
                T::Return
            } else {
                T::Ident
            });
        } else {
            out.push(T::Bad);
            // the lexer stops at the first bad token
            break;
        }
    }
    out
}

pub fn expr(s: &[u8]) -> Outcome {
    if s.iter().filter(|c| c.is_ascii_digit()).count() > MAX_DIGITS {
        return Outcome::Reject;
    }
    let toks = tokenize(s);
    let mut p = ExprP {
        t: &toks,
        i: 0,
        depth: 0,
    };
    match p.program() {
        Ok(()) => Outcome::Accept,
        Err(None) => Outcome::Reject,
        Err(Some(msg)) => Outcome::Crash(msg),
    }
}

struct ExprP<'a> {
    t: &'a [T],
    i: usize,
    depth: usize,
}

type R = Result<(), Option<String>>;

impl ExprP<'_> {
    fn peek(&self) -> Option<T> {
        self.t.get(self.i).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(T::Punct(c)) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn program(&mut self) -> R {
        if self.peek().is_none() {
            return Err(None);
        }
        loop {
            if self.peek() == Some(T::Return) {
                self.i += 1;
            }
            self.expr()?;
            if self.eat(b';') {
                if self.peek().is_none() {
                    return Ok(());
                }
            } else if self.peek().is_none() {
                return Ok(());
            } else {
                return Err(None);
            }
        }
    }

    fn enter(&mut self) -> R {
        self.depth += 1;
        if self.depth > EXPR_MAX_DEPTH {
            Err(None)
        } else {
            Ok(())
        }
    }

    fn expr(&mut self) -> R {
        self.enter()?;
        self.term()?;
        while self.eat(b'+') || self.eat(b'-') {
            self.term()?;
        }
        self.depth -= 1;
        Ok(())
    }

    fn term(&mut self) -> R {
        self.unary()?;
        loop {
            if self.eat(b'*') {
                self.unary()?;
            } else if self.eat(b'/') {
                if self.peek() == Some(T::Num(true)) {
                    return Err(Some("division by zero".into()));
                }
                self.unary()?;
            } else {
                return Ok(());
            }
        }
    }

    fn unary(&mut self) -> R {
        if self.eat(b'-') {
            self.enter()?;
            self.unary()?;
            self.depth -= 1;
            return Ok(());
        }
        match self.peek() {
            Some(T::Num(_)) => {
                self.i += 1;
                Ok(())
            }
            Some(T::Ident) => {
                self.i += 1;
                if !self.eat(b'(') {
                    return Ok(());
                }
                if self.eat(b')') {
                    return Ok(());
                }
                loop {
                    self.expr()?;
                    if self.eat(b')') {
                        return Ok(());
                    }
                    if !self.eat(b',') {
                        return Err(None);
                    }
                }
            }
            Some(T::Punct(b'(')) => {
                self.i += 1;
                self.expr()?;
                if self.eat(b')') {
                    Ok(())
                } else {
                    Err(None)
                }
            }
            _ => Err(None),
        }
    }
}

pub fn ini(s: &[u8]) -> Outcome {
    let text = s.split(|&c| c == b'\n');
    for line in text {
        let start = line
            .iter()
            .position(|&c| c != b' ' && c != b'\t')
            .unwrap_or(line.len());
        let line = &line[start..];
        let ok = match line.first() {
            None | Some(b';' | b'#') => true,
            Some(b'=') => false,
            Some(b'[') => match line.iter().position(|&c| c == b']') {
                Some(close) => {
                    close > 1 && line[close + 1..].iter().all(|&c| c == b' ' || c == b'\t')
                }
                None => false,
            },
            Some(_) => line.contains(&b'='),
        };
        if !ok {
            return Outcome::Reject;
        }
    }
    Outcome::Accept
}
