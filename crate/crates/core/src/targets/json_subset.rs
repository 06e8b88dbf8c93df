//! Recursive-descent recognizer for a JSON subset: objects, arrays,
//! strings with simple escapes, integers, `true`, `false`, `null`.

use super::ctype::is_digit;
use super::Cursor;
use crate::symcore::{Outcome, SymError, SymInput, TraceCtx};
use crate::{if_site, switch_site};

const FILE: &str = "json_subset.rs";
/// Deeper nesting is rejected.
pub const MAX_DEPTH: usize = 32;

pub fn entry(input: &SymInput, ctx: &mut TraceCtx) -> Result<Outcome, SymError> {
    let mut cur = Cursor::new(input);
    let ok = ctx.call("json_parse", |ctx| {
        skip_ws(&mut cur, ctx)?;
        if !parse_value(&mut cur, ctx, 0)? {
            return Ok(false);
        }
        skip_ws(&mut cur, ctx)?;
        Ok(cur.at_end())
    })?;
    Ok(if ok { Outcome::Accept } else { Outcome::Reject })
}

fn skip_ws(cur: &mut Cursor, ctx: &mut TraceCtx) -> Result<(), SymError> {
    while let Some(b) = cur.peek() {
        match ctx.switch(&switch_site!(FILE, "skip_ws"), &b, b" \t\n\r")? {
            Some(_) => cur.bump(),
            None => break,
        }
    }
    Ok(())
}

fn parse_value(cur: &mut Cursor, ctx: &mut TraceCtx, depth: usize) -> Result<bool, SymError> {
    if depth > MAX_DEPTH {
        return Ok(false);
    }
    let Some(b) = cur.peek() else {
        return Ok(false);
    };
    match ctx.switch(&switch_site!(FILE, "parse_value"), &b, b"{[\"-0123456789tfn")? {
        Some(b'{') => ctx.call("parse_object", |ctx| parse_object(cur, ctx, depth + 1)),
        Some(b'[') => ctx.call("parse_array", |ctx| parse_array(cur, ctx, depth + 1)),
        Some(b'"') => ctx.call("parse_string", |ctx| parse_string(cur, ctx)),
        Some(b't') => parse_literal(cur, ctx, b"true"),
        Some(b'f') => parse_literal(cur, ctx, b"false"),
        Some(b'n') => parse_literal(cur, ctx, b"null"),
        Some(_) => ctx.call("parse_number", |ctx| parse_number(cur, ctx)),
        None => Ok(false),
    }
}

fn parse_literal(cur: &mut Cursor, ctx: &mut TraceCtx, word: &[u8]) -> Result<bool, SymError> {
    cur.bump();
    for &c in &word[1..] {
        let Some(b) = cur.peek() else {
            return Ok(false);
        };
        if !ctx.if_(&if_site!(FILE, "parse_literal"), b.eq(c))? {
            return Ok(false);
        }
        cur.bump();
    }
    Ok(true)
}

fn parse_number(cur: &mut Cursor, ctx: &mut TraceCtx) -> Result<bool, SymError> {
    if let Some(b) = cur.peek() {
        if ctx.if_(&if_site!(FILE, "parse_number"), b.eq(b'-'))? {
            cur.bump();
        }
    }
    let Some(b) = cur.peek() else {
        return Ok(false);
    };
    if !is_digit(ctx, &b)? {
        return Ok(false);
    }
    let leading_zero = ctx.if_(&if_site!(FILE, "parse_number"), b.eq(b'0'))?;
    cur.bump();
    if !leading_zero {
        while let Some(b) = cur.peek() {
            if !is_digit(ctx, &b)? {
                break;
            }
            cur.bump();
        }
    }
    Ok(true)
}

fn parse_string(cur: &mut Cursor, ctx: &mut TraceCtx) -> Result<bool, SymError> {
    cur.bump();
    loop {
        let Some(b) = cur.peek() else {
            return Ok(false);
        };
        match ctx.switch(&switch_site!(FILE, "parse_string"), &b, b"\"\\")? {
            Some(b'"') => {
                cur.bump();
                return Ok(true);
            }
            Some(_) => {
                cur.bump();
                let Some(e) = cur.peek() else {
                    return Ok(false);
                };
                if ctx.switch(&switch_site!(FILE, "parse_escape"), &e, b"\"\\/bfnrt")?.is_none() {
                    return Ok(false);
                }
                cur.bump();
            }
            None => {
                if ctx.if_(&if_site!(FILE, "parse_string"), b.below(0x20))? {
                    return Ok(false);
                }
                cur.bump();
            }
        }
    }
}

fn parse_object(cur: &mut Cursor, ctx: &mut TraceCtx, depth: usize) -> Result<bool, SymError> {
    cur.bump();
    skip_ws(cur, ctx)?;
    let Some(b) = cur.peek() else {
        return Ok(false);
    };
    if ctx.if_(&if_site!(FILE, "parse_object"), b.eq(b'}'))? {
        cur.bump();
        return Ok(true);
    }
    loop {
        let Some(b) = cur.peek() else {
            return Ok(false);
        };
        if !ctx.if_(&if_site!(FILE, "parse_object"), b.eq(b'"'))? {
            return Ok(false);
        }
        if !ctx.call("parse_string", |ctx| parse_string(cur, ctx))? {
            return Ok(false);
        }
        skip_ws(cur, ctx)?;
        let Some(b) = cur.peek() else {
            return Ok(false);
        };
        if !ctx.if_(&if_site!(FILE, "parse_object"), b.eq(b':'))? {
            return Ok(false);
        }
        cur.bump();
        skip_ws(cur, ctx)?;
        if !parse_value(cur, ctx, depth)? {
            return Ok(false);
        }
        skip_ws(cur, ctx)?;
        let Some(b) = cur.peek() else {
            return Ok(false);
        };
        match ctx.switch(&switch_site!(FILE, "parse_object"), &b, b",}")? {
            Some(b',') => {
                cur.bump();
                skip_ws(cur, ctx)?;
            }
            Some(_) => {
                cur.bump();
                return Ok(true);
            }
            None => return Ok(false),
        }
    }
}

fn parse_array(cur: &mut Cursor, ctx: &mut TraceCtx, depth: usize) -> Result<bool, SymError> {
    cur.bump();
    skip_ws(cur, ctx)?;
    let Some(b) = cur.peek() else {
        return Ok(false);
    };
    if ctx.if_(&if_site!(FILE, "parse_array"), b.eq(b']'))? {
        cur.bump();
        return Ok(true);
    }
    loop {
        if !parse_value(cur, ctx, depth)? {
            return Ok(false);
        }
        skip_ws(cur, ctx)?;
        let Some(b) = cur.peek() else {
            return Ok(false);
        };
        match ctx.switch(&switch_site!(FILE, "parse_array"), &b, b",]")? {
            Some(b',') => {
                cur.bump();
                skip_ws(cur, ctx)?;
            }
            Some(_) => {
                cur.bump();
                return Ok(true);
            }
            None => return Ok(false),
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::symcore::{run_concolic, Outcome};
    use crate::targets::JSON_SUBSET;

    fn outcome(s: &str) -> Outcome {
        run_concolic(&JSON_SUBSET, s.as_bytes()).outcome
    }

    #[test]
    fn accepts_and_rejects() {
        for ok in ["{}", "{\"a\":1}", " [1, -20, \"x\\n\", true, false, null, {}] ", "0", "\"\""] {
            assert_eq!(outcome(ok), Outcome::Accept, "{ok}");
        }
        for bad in ["{,}", "", "01", "[1,]", "{\"a\"}", "tru", "\"\\q\"", "-", "{} x"] {
            assert_eq!(outcome(bad), Outcome::Reject, "{bad}");
        }
    }

    #[test]
    fn nesting_limit() {
        let deep = "[".repeat(40) + &"]".repeat(40);
        assert_eq!(outcome(&deep), Outcome::Reject);
        let ok = "[".repeat(20) + &"]".repeat(20);
        assert_eq!(outcome(&ok), Outcome::Accept);
    }
}
