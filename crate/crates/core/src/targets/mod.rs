//! Bundled programs under test.
//!
//! Every input-dependent decision in these parsers goes through
//! [`TraceCtx`]; they never see raw input bytes. `oracle` holds independent
//! plain recognizers for the same grammars.

mod ctype;
pub mod expr_lang;
pub mod ini_lang;
pub mod json_subset;
pub mod oracle;

use crate::symcore::{Format, ProgramUnderTest, SymByte, SymInput};

pub const JSON_SUBSET: ProgramUnderTest = ProgramUnderTest {
    name: "json_subset",
    format: Format::Json,
    entry: json_subset::entry,
};

pub const EXPR_LANG: ProgramUnderTest = ProgramUnderTest {
    name: "expr_lang",
    format: Format::Expr,
    entry: expr_lang::entry,
};

pub const INI_LANG: ProgramUnderTest = ProgramUnderTest {
    name: "ini_lang",
    format: Format::Ini,
    entry: ini_lang::entry,
};

pub fn all() -> [ProgramUnderTest; 3] {
    [JSON_SUBSET, EXPR_LANG, INI_LANG]
}

pub fn by_name(name: &str) -> Option<ProgramUnderTest> {
    all().into_iter().find(|p| p.name == name)
}

pub fn names() -> Vec<&'static str> {
    all().iter().map(|p| p.name).collect()
}

/// Read position over a symbolic input.
#[derive(Debug, Clone)]
pub(crate) struct Cursor<'a> {
    input: &'a SymInput,
    pos: usize,
}

impl<'a> Cursor<'a> {
    pub(crate) fn new(input: &'a SymInput) -> Self {
        Cursor { input, pos: 0 }
    }

    pub(crate) fn peek(&self) -> Option<SymByte> {
        self.input.at(self.pos)
    }

    pub(crate) fn at(&self, pos: usize) -> Option<SymByte> {
        self.input.at(pos)
    }

    pub(crate) fn bump(&mut self) {
        self.pos += 1;
    }

    pub(crate) fn pos(&self) -> usize {
        self.pos
    }

    pub(crate) fn at_end(&self) -> bool {
        self.pos >= self.input.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry() {
        assert_eq!(names(), vec!["json_subset", "expr_lang", "ini_lang"]);
        assert_eq!(by_name("ini_lang").unwrap().format, Format::Ini);
        assert!(by_name("sqlite").is_none());
    }
}
