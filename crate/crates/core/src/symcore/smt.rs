//! SMT-LIB flavoured text form of [`SymExpr`].
//!
//! The printer emits a canonical form (single spaces, lowercase hex) and
//! `parse_expr(e.to_string()) == e` holds for every well-sorted expression.

use std::fmt::Write as _;

use thiserror::Error;

use super::expr::{CmpOp, SymExpr};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at offset {offset}: {message}")]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

impl ParseError {
    fn new(offset: usize, message: impl Into<String>) -> Self {
        ParseError {
            offset,
            message: message.into(),
        }
    }
}

pub(crate) fn write_expr(e: &SymExpr, out: &mut String, normalize: bool) {
    match e {
        SymExpr::ByteVar(i) => {
            if normalize {
                out.push_str("k!*");
            } else {
                let _ = write!(out, "k!{i}");
            }
        }
        SymExpr::Const { value, width } => {
            if width % 4 == 0 {
                let digits = (*width / 4) as usize;
                let _ = write!(out, "#x{value:0digits$x}");
            } else {
                let digits = *width as usize;
                let _ = write!(out, "#b{value:0digits$b}");
            }
        }
        SymExpr::ZeroExtend { inner, width } => {
            let from = inner.sort().ok().and_then(|s| match s {
                super::expr::Sort::Bv(w) => Some(w),
                _ => None,
            });
            let amount = width.saturating_sub(from.unwrap_or(0));
            let _ = write!(out, "((_ zero_extend {amount}) ");
            write_expr(inner, out, normalize);
            out.push(')');
        }
        SymExpr::Concat(parts) => {
            out.push_str("(concat");
            for p in parts {
                out.push(' ');
                write_expr(p, out, normalize);
            }
            out.push(')');
        }
        SymExpr::Cmp { op, lhs, rhs } => {
            out.push('(');
            out.push_str(op.smt_name());
            out.push(' ');
            write_expr(lhs, out, normalize);
            out.push(' ');
            write_expr(rhs, out, normalize);
            out.push(')');
        }
        SymExpr::Not(inner) => {
            out.push_str("(not ");
            write_expr(inner, out, normalize);
            out.push(')');
        }
    }
}

#[derive(Debug)]
enum Sexp {
    Atom { text: String, offset: usize },
    List { items: Vec<Sexp>, offset: usize },
}

impl Sexp {
    fn offset(&self) -> usize {
        match self {
            Sexp::Atom { offset, .. } | Sexp::List { offset, .. } => *offset,
        }
    }
}

struct Reader<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn read(&mut self) -> Result<Sexp, ParseError> {
        self.skip_ws();
        let start = self.pos;
        match self.src.get(self.pos) {
            None => Err(ParseError::new(start, "unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let mut items = Vec::new();
                loop {
                    self.skip_ws();
                    match self.src.get(self.pos) {
                        None => return Err(ParseError::new(start, "unclosed '('")),
                        Some(b')') => {
                            self.pos += 1;
                            return Ok(Sexp::List {
                                items,
                                offset: start,
                            });
                        }
                        Some(_) => items.push(self.read()?),
                    }
                }
            }
            Some(b')') => Err(ParseError::new(start, "unexpected ')'")),
            Some(_) => {
                while self.pos < self.src.len() {
                    let c = self.src[self.pos];
                    if c.is_ascii_whitespace() || c == b'(' || c == b')' {
                        break;
                    }
                    self.pos += 1;
                }
                let text = String::from_utf8_lossy(&self.src[start..self.pos]).into_owned();
                Ok(Sexp::Atom {
                    text,
                    offset: start,
                })
            }
        }
    }
}

/// Parses one expression. Surrounding whitespace is allowed; trailing
/// tokens are not.
pub fn parse_expr(text: &str) -> Result<SymExpr, ParseError> {
    let mut reader = Reader {
        src: text.as_bytes(),
        pos: 0,
    };
    let sexp = reader.read()?;
    reader.skip_ws();
    if reader.pos != reader.src.len() {
        return Err(ParseError::new(reader.pos, "trailing input"));
    }
    let expr = convert(&sexp)?;
    expr.sort()
        .map_err(|e| ParseError::new(sexp.offset(), e.to_string()))?;
    Ok(expr)
}

fn convert(s: &Sexp) -> Result<SymExpr, ParseError> {
    match s {
        Sexp::Atom { text, offset } => atom(text, *offset),
        Sexp::List { items, offset } => {
            let Some(head) = items.first() else {
                return Err(ParseError::new(*offset, "empty list"));
            };
            match head {
                Sexp::Atom { text, .. } => {
                    let args = &items[1..];
                    match text.as_str() {
                        "not" => {
                            let [a] = args else {
                                return Err(ParseError::new(*offset, "not takes one argument"));
                            };
                            Ok(SymExpr::Not(Box::new(convert(a)?)))
                        }
                        "concat" => {
                            if args.len() < 2 {
                                return Err(ParseError::new(
                                    *offset,
                                    "concat takes at least two arguments",
                                ));
                            }
                            Ok(SymExpr::Concat(
                                args.iter().map(convert).collect::<Result<_, _>>()?,
                            ))
                        }
                        name => {
                            let Some(op) = CmpOp::from_smt_name(name) else {
                                return Err(ParseError::new(
                                    *offset,
                                    format!("unknown operator '{name}'"),
                                ));
                            };
                            let [a, b] = args else {
                                return Err(ParseError::new(
                                    *offset,
                                    format!("{name} takes two arguments"),
                                ));
                            };
                            Ok(SymExpr::cmp(op, convert(a)?, convert(b)?))
                        }
                    }
                }
                Sexp::List { items: inner, .. } => {
                    // ((_ zero_extend N) e)
                    let amount = match inner.as_slice() {
                        [Sexp::Atom { text: u, .. }, Sexp::Atom { text: z, .. }, Sexp::Atom {
                            text: n,
                            offset: noff,
                        }] if u == "_" && z == "zero_extend" => n
                            .parse::<u32>()
                            .map_err(|_| ParseError::new(*noff, "bad zero_extend amount"))?,
                        _ => return Err(ParseError::new(*offset, "unsupported indexed operator")),
                    };
                    let [arg] = &items[1..] else {
                        return Err(ParseError::new(*offset, "zero_extend takes one argument"));
                    };
                    let inner = convert(arg)?;
                    let from = match inner.sort() {
                        Ok(super::expr::Sort::Bv(w)) => w,
                        _ => return Err(ParseError::new(arg.offset(), "zero_extend of non bit-vector")),
                    };
                    if amount == 0 {
                        return Err(ParseError::new(*offset, "zero_extend by 0"));
                    }
                    Ok(SymExpr::zero_extend(inner, from + amount))
                }
            }
        }
    }
}

fn atom(text: &str, offset: usize) -> Result<SymExpr, ParseError> {
    if let Some(idx) = text.strip_prefix("k!") {
        return idx
            .parse::<usize>()
            .map(SymExpr::ByteVar)
            .map_err(|_| ParseError::new(offset, format!("bad symbol '{text}'")));
    }
    if let Some(hex) = text.strip_prefix("#x") {
        if hex.is_empty() || hex.len() > 8 {
            return Err(ParseError::new(offset, format!("bad hex literal '{text}'")));
        }
        let value = u32::from_str_radix(hex, 16)
            .map_err(|_| ParseError::new(offset, format!("bad hex literal '{text}'")))?;
        return Ok(SymExpr::Const {
            value,
            width: 4 * hex.len() as u32,
        });
    }
    if let Some(bin) = text.strip_prefix("#b") {
        if bin.is_empty() || bin.len() > 32 {
            return Err(ParseError::new(offset, format!("bad binary literal '{text}'")));
        }
        let value = u32::from_str_radix(bin, 2)
            .map_err(|_| ParseError::new(offset, format!("bad binary literal '{text}'")))?;
        return Ok(SymExpr::Const {
            value,
            width: bin.len() as u32,
        });
    }
    Err(ParseError::new(offset, format!("unknown atom '{text}'")))
}
