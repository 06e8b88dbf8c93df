//! Line-oriented INI recognizer: `[section]` headers, `key=value` pairs,
//! `;`/`#` comments and blank lines.

use super::Cursor;
use crate::symcore::{Outcome, SymError, SymInput, TraceCtx};
use crate::{if_site, switch_site};

const FILE: &str = "ini_lang.rs";

pub fn entry(input: &SymInput, ctx: &mut TraceCtx) -> Result<Outcome, SymError> {
    let mut cur = Cursor::new(input);
    while !cur.at_end() {
        if !ctx.call("parse_line", |ctx| parse_line(&mut cur, ctx))? {
            return Ok(Outcome::Reject);
        }
    }
    Ok(Outcome::Accept)
}

/// Consumes one line including its newline.
fn parse_line(cur: &mut Cursor, ctx: &mut TraceCtx) -> Result<bool, SymError> {
    while let Some(b) = cur.peek() {
        if ctx.switch(&switch_site!(FILE, "skip_blank"), &b, b" \t")?.is_none() {
            break;
        }
        cur.bump();
    }
    let Some(b) = cur.peek() else {
        return Ok(true);
    };
    match ctx.switch(&switch_site!(FILE, "parse_line"), &b, b"\n;#[=")? {
        Some(b'\n') => {
            cur.bump();
            Ok(true)
        }
        Some(b';' | b'#') => {
            skip_line(cur, ctx)?;
            Ok(true)
        }
        Some(b'[') => ctx.call("parse_section", |ctx| parse_section(cur, ctx)),
        Some(_) => Ok(false),
        None => ctx.call("parse_pair", |ctx| parse_pair(cur, ctx)),
    }
}

fn skip_line(cur: &mut Cursor, ctx: &mut TraceCtx) -> Result<(), SymError> {
    while let Some(b) = cur.peek() {
        cur.bump();
        if ctx.if_(&if_site!(FILE, "skip_line"), b.eq(b'\n'))? {
            break;
        }
    }
    Ok(())
}

fn parse_section(cur: &mut Cursor, ctx: &mut TraceCtx) -> Result<bool, SymError> {
    cur.bump();
    let start = cur.pos();
    loop {
        let Some(b) = cur.peek() else {
            return Ok(false);
        };
        match ctx.switch(&switch_site!(FILE, "parse_section"), &b, b"]\n")? {
            Some(b']') => break,
            Some(_) => return Ok(false),
            None => cur.bump(),
        }
    }
    if cur.pos() == start {
        return Ok(false);
    }
    cur.bump();
    while let Some(b) = cur.peek() {
        match ctx.switch(&switch_site!(FILE, "section_tail"), &b, b" \t\n")? {
            Some(b'\n') => {
                cur.bump();
                return Ok(true);
            }
            Some(_) => cur.bump(),
            None => return Ok(false),
        }
    }
    Ok(true)
}

fn parse_pair(cur: &mut Cursor, ctx: &mut TraceCtx) -> Result<bool, SymError> {
    loop {
        let Some(b) = cur.peek() else {
            return Ok(false);
        };
        match ctx.switch(&switch_site!(FILE, "parse_key"), &b, b"=\n")? {
            Some(b'=') => break,
            Some(_) => return Ok(false),
            None => cur.bump(),
        }
    }
    cur.bump();
    skip_line(cur, ctx)?;
    Ok(true)
}

#[cfg(test)]
mod tests {
    use crate::symcore::{run_concolic, Outcome};
    use crate::targets::INI_LANG;

    fn outcome(s: &str) -> Outcome {
        run_concolic(&INI_LANG, s.as_bytes()).outcome
    }

    #[test]
    fn accepts_and_rejects() {
        for ok in ["[s]\nk=v", "", "\n\n", "; c\n# d\n  k = v \n[a b]  \n", "k="] {
            assert_eq!(outcome(ok), Outcome::Accept, "{ok:?}");
        }
        for bad in ["=v", "[]", "[s", "[s]x", "key", "k\n=v", "[s\n]"] {
            assert_eq!(outcome(bad), Outcome::Reject, "{bad:?}");
        }
    }
}
