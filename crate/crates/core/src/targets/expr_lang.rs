//! A small expression language: `;`-separated statements, each an
//! arithmetic expression optionally prefixed by `return`, with calls
//! `f(a, b)`, unary minus and parentheses. Dividing by the literal `0`
//! crashes the interpreter.

use super::ctype::{is_alpha, is_digit};
use super::Cursor;
use crate::symcore::{Outcome, SymError, SymInput, TraceCtx};
use crate::{if_site, switch_site};

const FILE: &str = "expr_lang.rs";
pub const MAX_DEPTH: usize = 32;
/// Inputs with more digit bytes than this are rejected up front.
pub const MAX_DIGITS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tok {
    LParen,
    RParen,
    Comma,
    Plus,
    Minus,
    Star,
    Slash,
    Semi,
    Num { start: usize, len: usize },
    Ident,
    Return,
    Eof,
    Bad,
}

enum Stop {
    Reject,
    Crash(String),
    Sym(SymError),
}

impl From<SymError> for Stop {
    fn from(e: SymError) -> Self {
        Stop::Sym(e)
    }
}

pub fn entry(input: &SymInput, ctx: &mut TraceCtx) -> Result<Outcome, SymError> {
    let digits = ctx.call("count_digits", |ctx| count_digits(input, ctx))?;
    if digits > MAX_DIGITS {
        return Ok(Outcome::Reject);
    }
    let mut p = Parser {
        cur: Cursor::new(input),
        tok: Tok::Eof,
        depth: 0,
    };
    match framed(ctx, "parse_program", |ctx| p.program(ctx)) {
        Ok(()) => Ok(Outcome::Accept),
        Err(Stop::Reject) => Ok(Outcome::Reject),
        Err(Stop::Crash(why)) => Ok(Outcome::Crash(why)),
        Err(Stop::Sym(e)) => Err(e),
    }
}

fn framed(
    ctx: &mut TraceCtx,
    func: &'static str,
    body: impl FnOnce(&mut TraceCtx) -> Result<(), Stop>,
) -> Result<(), Stop> {
    ctx.enter_fn(func);
    let r = body(ctx);
    ctx.exit_fn()?;
    r
}

/// Byte-classification pass over the whole input.
fn count_digits(input: &SymInput, ctx: &mut TraceCtx) -> Result<usize, SymError> {
    let mut n = 0;
    for i in 0..input.len() {
        let Some(b) = input.at(i) else { break };
        if ctx.if_(&if_site!(FILE, "count_digits"), b.at_most(b'9'))?
            && ctx.if_(&if_site!(FILE, "count_digits"), b.at_least(b'0'))?
        {
            n += 1;
        }
    }
    Ok(n)
}

struct Parser<'a> {
    cur: Cursor<'a>,
    tok: Tok,
    depth: usize,
}

impl Parser<'_> {
    fn advance(&mut self, ctx: &mut TraceCtx) -> Result<(), Stop> {
        self.tok = ctx.call("lex_next", |ctx| lex_next(&mut self.cur, ctx))?;
        Ok(())
    }

    fn program(&mut self, ctx: &mut TraceCtx) -> Result<(), Stop> {
        self.advance(ctx)?;
        if self.tok == Tok::Eof {
            return Err(Stop::Reject);
        }
        loop {
            if self.tok == Tok::Return {
                self.advance(ctx)?;
            }
            self.expr(ctx)?;
            match self.tok {
                Tok::Semi => {
                    self.advance(ctx)?;
                    if self.tok == Tok::Eof {
                        return Ok(());
                    }
                }
                Tok::Eof => return Ok(()),
                _ => return Err(Stop::Reject),
            }
        }
    }

    fn nest(&mut self) -> Result<(), Stop> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(Stop::Reject);
        }
        Ok(())
    }

    fn expr(&mut self, ctx: &mut TraceCtx) -> Result<(), Stop> {
        self.nest()?;
        framed(ctx, "parse_expr", |ctx| {
            self.term(ctx)?;
            while matches!(self.tok, Tok::Plus | Tok::Minus) {
                self.advance(ctx)?;
                self.term(ctx)?;
            }
            Ok(())
        })?;
        self.depth -= 1;
        Ok(())
    }

    fn term(&mut self, ctx: &mut TraceCtx) -> Result<(), Stop> {
        self.unary(ctx)?;
        while matches!(self.tok, Tok::Star | Tok::Slash) {
            let divide = self.tok == Tok::Slash;
            self.advance(ctx)?;
            if divide {
                if let Tok::Num { start, len: 1 } = self.tok {
                    let b = self.cur.at(start).ok_or(Stop::Reject)?;
                    if ctx.if_(&if_site!(FILE, "eval_div"), b.eq(b'0'))? {
                        return Err(Stop::Crash("division by zero".into()));
                    }
                }
            }
            self.unary(ctx)?;
        }
        Ok(())
    }

    fn unary(&mut self, ctx: &mut TraceCtx) -> Result<(), Stop> {
        if self.tok == Tok::Minus {
            self.nest()?;
            self.advance(ctx)?;
            framed(ctx, "parse_unary", |ctx| self.unary(ctx))?;
            self.depth -= 1;
            return Ok(());
        }
        self.primary(ctx)
    }

    fn primary(&mut self, ctx: &mut TraceCtx) -> Result<(), Stop> {
        match self.tok {
            Tok::Num { .. } => self.advance(ctx),
            Tok::Ident => {
                self.advance(ctx)?;
                if self.tok != Tok::LParen {
                    return Ok(());
                }
                self.advance(ctx)?;
                if self.tok == Tok::RParen {
                    return self.advance(ctx);
                }
                loop {
                    self.expr(ctx)?;
                    match self.tok {
                        Tok::Comma => self.advance(ctx)?,
                        Tok::RParen => return self.advance(ctx),
                        _ => return Err(Stop::Reject),
                    }
                }
            }
            Tok::LParen => {
                self.advance(ctx)?;
                self.expr(ctx)?;
                if self.tok != Tok::RParen {
                    return Err(Stop::Reject);
                }
                self.advance(ctx)
            }
            _ => Err(Stop::Reject),
        }
    }
}

fn lex_next(cur: &mut Cursor, ctx: &mut TraceCtx) -> Result<Tok, SymError> {
    while let Some(b) = cur.peek() {
        if ctx.switch(&switch_site!(FILE, "lex_space"), &b, b" \t\n")?.is_none() {
            break;
        }
        cur.bump();
    }
    let Some(b) = cur.peek() else {
        return Ok(Tok::Eof);
    };
    let punct = ctx.switch(&switch_site!(FILE, "lex_next"), &b, b"(),+-*/;")?;
    if let Some(c) = punct {
        cur.bump();
        return Ok(match c {
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b',' => Tok::Comma,
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            _ => Tok::Semi,
        });
    }
    let start = cur.pos();
    if is_digit(ctx, &b)? {
        cur.bump();
        while let Some(b) = cur.peek() {
            if !is_digit(ctx, &b)? {
                break;
            }
            cur.bump();
        }
        return Ok(Tok::Num {
            start,
            len: cur.pos() - start,
        });
    }
    if !is_ident_start(ctx, &b)? {
        return Ok(Tok::Bad);
    }
    cur.bump();
    while let Some(b) = cur.peek() {
        if !(is_ident_start(ctx, &b)? || is_digit(ctx, &b)?) {
            break;
        }
        cur.bump();
    }
    ctx.call("lex_keyword", |ctx| keyword(cur, ctx, start))
}

fn is_ident_start(
    ctx: &mut TraceCtx,
    b: &crate::symcore::SymByte,
) -> Result<bool, SymError> {
    Ok(ctx.if_(&if_site!(FILE, "is_ident_start"), b.eq(b'_'))? || is_alpha(ctx, b)?)
}

fn keyword(cur: &Cursor, ctx: &mut TraceCtx, start: usize) -> Result<Tok, SymError> {
    const WORD: [u8; 6] = *b"return";
    if cur.pos() - start != WORD.len() {
        return Ok(Tok::Ident);
    }
    for (i, &c) in WORD.iter().enumerate() {
        let Some(b) = cur.at(start + i) else {
            return Ok(Tok::Ident);
        };
        if !ctx.if_(&if_site!(FILE, "lex_keyword"), b.eq(c))? {
            return Ok(Tok::Ident);
        }
    }
    Ok(Tok::Return)
}
