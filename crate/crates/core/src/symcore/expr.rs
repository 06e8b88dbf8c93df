//! Byte-level symbolic expressions.
//!
//! Every expression is built over the input bytes `k!n`. Bit-vectors are at
//! most 32 bits wide; comparisons zero-extend both operands to 32 bits before
//! comparing, so signed comparisons see the operands as 32-bit two's
//! complement values.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Width every comparison operand is widened to.
pub const CMP_WIDTH: u32 = 32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("byte index {index} out of range for input of length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("sort error: {0}")]
    Sort(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CmpOp {
    Eq,
    Ne,
    Slt,
    Sle,
    Sgt,
    Sge,
    Ult,
    Ule,
    Ugt,
    Uge,
}

impl CmpOp {
    pub const ALL: [CmpOp; 10] = [
        CmpOp::Eq,
        CmpOp::Ne,
        CmpOp::Slt,
        CmpOp::Sle,
        CmpOp::Sgt,
        CmpOp::Sge,
        CmpOp::Ult,
        CmpOp::Ule,
        CmpOp::Ugt,
        CmpOp::Uge,
    ];

    /// SMT-LIB operator name.
    pub fn smt_name(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "distinct",
            CmpOp::Slt => "bvslt",
            CmpOp::Sle => "bvsle",
            CmpOp::Sgt => "bvsgt",
            CmpOp::Sge => "bvsge",
            CmpOp::Ult => "bvult",
            CmpOp::Ule => "bvule",
            CmpOp::Ugt => "bvugt",
            CmpOp::Uge => "bvuge",
        }
    }

    pub fn from_smt_name(name: &str) -> Option<CmpOp> {
        CmpOp::ALL.into_iter().find(|op| op.smt_name() == name)
    }

    /// Applies the comparison to two 32-bit values.
    pub fn apply(self, lhs: u32, rhs: u32) -> bool {
        let (sl, sr) = (lhs as i32, rhs as i32);
        match self {
            CmpOp::Eq => lhs == rhs,
            CmpOp::Ne => lhs != rhs,
            CmpOp::Slt => sl < sr,
            CmpOp::Sle => sl <= sr,
            CmpOp::Sgt => sl > sr,
            CmpOp::Sge => sl >= sr,
            CmpOp::Ult => lhs < rhs,
            CmpOp::Ule => lhs <= rhs,
            CmpOp::Ugt => lhs > rhs,
            CmpOp::Uge => lhs >= rhs,
        }
    }
}

/// Sort of an expression: boolean or a bit-vector of the given width.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sort {
    Bool,
    Bv(u32),
}

/// Concrete value of an expression.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Value {
    Bool(bool),
    Bv { value: u32, width: u32 },
}

impl Value {
    pub fn as_bool(self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(b),
            Value::Bv { .. } => None,
        }
    }

    pub fn as_bv(self) -> Option<u32> {
        match self {
            Value::Bv { value, .. } => Some(value),
            Value::Bool(_) => None,
        }
    }
}

fn mask(width: u32) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum SymExpr {
    /// The input byte at the given position (`k!n`), 8 bits wide.
    ByteVar(usize),
    Const { value: u32, width: u32 },
    ZeroExtend { inner: Box<SymExpr>, width: u32 },
    Concat(Vec<SymExpr>),
    Cmp { op: CmpOp, lhs: Box<SymExpr>, rhs: Box<SymExpr> },
    Not(Box<SymExpr>),
}

impl SymExpr {
    pub fn byte(index: usize) -> SymExpr {
        SymExpr::ByteVar(index)
    }

    pub fn konst(value: u32, width: u32) -> SymExpr {
        SymExpr::Const {
            value: (value as u64 & mask(width)) as u32,
            width,
        }
    }

    /// Widens a bit-vector to 32 bits by prepending a zero constant, the
    /// `(concat #x000000 k!n)` shape concolic runtimes emit.
    pub fn widen32(inner: SymExpr) -> SymExpr {
        match inner.sort() {
            Ok(Sort::Bv(w)) if w < CMP_WIDTH => {
                SymExpr::Concat(vec![SymExpr::konst(0, CMP_WIDTH - w), inner])
            }
            _ => inner,
        }
    }

    pub fn zero_extend(inner: SymExpr, width: u32) -> SymExpr {
        SymExpr::ZeroExtend {
            inner: Box::new(inner),
            width,
        }
    }

    pub fn cmp(op: CmpOp, lhs: SymExpr, rhs: SymExpr) -> SymExpr {
        SymExpr::Cmp {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    /// Logical negation; `not (not e)` collapses to `e`.
    pub fn negate(self) -> SymExpr {
        match self {
            SymExpr::Not(inner) => *inner,
            other => SymExpr::Not(Box::new(other)),
        }
    }

    /// Computes the sort, checking the width and operand invariants.
    pub fn sort(&self) -> Result<Sort, EvalError> {
        match self {
            SymExpr::ByteVar(_) => Ok(Sort::Bv(8)),
            SymExpr::Const { value, width } => {
                if *width == 0 || *width > CMP_WIDTH {
                    return Err(EvalError::Sort(format!("constant width {width}")));
                }
                if (*value as u64) > mask(*width) {
                    return Err(EvalError::Sort(format!(
                        "constant {value:#x} does not fit in {width} bits"
                    )));
                }
                Ok(Sort::Bv(*width))
            }
            SymExpr::ZeroExtend { inner, width } => match inner.sort()? {
                Sort::Bv(w) if w < *width && *width <= CMP_WIDTH => Ok(Sort::Bv(*width)),
                Sort::Bv(w) => Err(EvalError::Sort(format!(
                    "zero_extend from {w} to {width} bits"
                ))),
                Sort::Bool => Err(EvalError::Sort("zero_extend of a boolean".into())),
            },
            SymExpr::Concat(parts) => {
                if parts.is_empty() {
                    return Err(EvalError::Sort("empty concat".into()));
                }
                let mut total = 0;
                for part in parts {
                    match part.sort()? {
                        Sort::Bv(w) => total += w,
                        Sort::Bool => return Err(EvalError::Sort("concat of a boolean".into())),
                    }
                }
                if total > CMP_WIDTH {
                    return Err(EvalError::Sort(format!("concat width {total}")));
                }
                Ok(Sort::Bv(total))
            }
            SymExpr::Cmp { lhs, rhs, .. } => match (lhs.sort()?, rhs.sort()?) {
                (Sort::Bv(_), Sort::Bv(_)) => Ok(Sort::Bool),
                _ => Err(EvalError::Sort("comparison of a boolean".into())),
            },
            SymExpr::Not(inner) => match inner.sort()? {
                Sort::Bool => Ok(Sort::Bool),
                Sort::Bv(_) => Err(EvalError::Sort("not of a bit-vector".into())),
            },
        }
    }

    pub fn eval(&self, input: &[u8]) -> Result<Value, EvalError> {
        match self {
            SymExpr::ByteVar(index) => input
                .get(*index)
                .map(|b| Value::Bv {
                    value: *b as u32,
                    width: 8,
                })
                .ok_or(EvalError::IndexOutOfRange {
                    index: *index,
                    len: input.len(),
                }),
            SymExpr::Const { value, width } => Ok(Value::Bv {
                value: *value,
                width: *width,
            }),
            SymExpr::ZeroExtend { inner, width } => {
                let value = bv(inner.eval(input)?)?;
                Ok(Value::Bv {
                    value,
                    width: *width,
                })
            }
            SymExpr::Concat(parts) => {
                let mut acc: u64 = 0;
                let mut total = 0;
                for part in parts {
                    match part.eval(input)? {
                        Value::Bv { value, width } => {
                            acc = (acc << width) | value as u64;
                            total += width;
                        }
                        Value::Bool(_) => {
                            return Err(EvalError::Sort("concat of a boolean".into()))
                        }
                    }
                }
                if total > CMP_WIDTH {
                    return Err(EvalError::Sort(format!("concat width {total}")));
                }
                Ok(Value::Bv {
                    value: acc as u32,
                    width: total,
                })
            }
            SymExpr::Cmp { op, lhs, rhs } => {
                let l = bv(lhs.eval(input)?)?;
                let r = bv(rhs.eval(input)?)?;
                Ok(Value::Bool(op.apply(l, r)))
            }
            SymExpr::Not(inner) => match inner.eval(input)? {
                Value::Bool(b) => Ok(Value::Bool(!b)),
                Value::Bv { .. } => Err(EvalError::Sort("not of a bit-vector".into())),
            },
        }
    }

    /// Evaluates a boolean expression.
    pub fn eval_bool(&self, input: &[u8]) -> Result<bool, EvalError> {
        self.eval(input)?
            .as_bool()
            .ok_or_else(|| EvalError::Sort("expected a boolean".into()))
    }

    /// Input positions referenced by `k!n` leaves.
    pub fn positions(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        self.collect_positions(&mut out);
        out
    }

    fn collect_positions(&self, out: &mut BTreeSet<usize>) {
        match self {
            SymExpr::ByteVar(i) => {
                out.insert(*i);
            }
            SymExpr::Const { .. } => {}
            SymExpr::ZeroExtend { inner, .. } | SymExpr::Not(inner) => {
                inner.collect_positions(out)
            }
            SymExpr::Concat(parts) => parts.iter().for_each(|p| p.collect_positions(out)),
            SymExpr::Cmp { lhs, rhs, .. } => {
                lhs.collect_positions(out);
                rhs.collect_positions(out);
            }
        }
    }

    /// SMT text with every `k!n` index replaced by `*`.
    pub fn normalized_text(&self) -> String {
        let mut out = String::new();
        super::smt::write_expr(self, &mut out, true);
        out
    }

    /// The constant operand of a comparison against a constant, if any.
    pub fn compared_constant(&self) -> Option<u32> {
        match self {
            SymExpr::Not(inner) => inner.compared_constant(),
            SymExpr::Cmp { lhs, rhs, .. } => match (lhs.as_ref(), rhs.as_ref()) {
                (_, SymExpr::Const { value, .. }) | (SymExpr::Const { value, .. }, _) => {
                    Some(*value)
                }
                _ => None,
            },
            _ => None,
        }
    }
}

fn bv(value: Value) -> Result<u32, EvalError> {
    value
        .as_bv()
        .ok_or_else(|| EvalError::Sort("expected a bit-vector".into()))
}

impl fmt::Display for SymExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        super::smt::write_expr(self, &mut out, false);
        f.write_str(&out)
    }
}

impl From<SymExpr> for String {
    fn from(e: SymExpr) -> String {
        e.to_string()
    }
}

impl TryFrom<String> for SymExpr {
    type Error = super::smt::ParseError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        super::smt::parse_expr(&s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn widened(i: usize) -> SymExpr {
        SymExpr::widen32(SymExpr::byte(i))
    }

    #[test]
    fn sge_constant_against_digit() {
        let e = SymExpr::cmp(CmpOp::Sge, SymExpr::konst(0x39, 32), widened(0));
        assert!(e.eval_bool(b"0").unwrap());
    }

    #[test]
    fn eq_brace() {
        let e = SymExpr::cmp(CmpOp::Eq, SymExpr::byte(0), SymExpr::konst(0x7b, 8));
        assert!(e.eval_bool(b"{ }").unwrap());
    }

    #[test]
    fn sge_on_byte_95() {
        let mut input = vec![b' '; 96];
        input[95] = b'r';
        let e = SymExpr::cmp(
            CmpOp::Sge,
            SymExpr::konst(0x39, 32),
            SymExpr::zero_extend(SymExpr::byte(95), 32),
        );
        // brute force: 0x39 >= b holds only for b <= 0x39
        let expected = (0u32..=255).filter(|b| 0x39 >= *b).any(|b| b == b'r' as u32);
        assert_eq!(e.eval_bool(&input).unwrap(), expected);
        assert!(!expected);
    }

    #[test]
    fn index_out_of_range() {
        let e = SymExpr::cmp(CmpOp::Eq, SymExpr::byte(3), SymExpr::konst(1, 8));
        assert_eq!(
            e.eval(b"ab"),
            Err(EvalError::IndexOutOfRange { index: 3, len: 2 })
        );
    }

    #[test]
    fn signed_comparison_uses_32_bit_twos_complement() {
        let e = SymExpr::cmp(
            CmpOp::Slt,
            SymExpr::konst(0xffff_ffff, 32),
            SymExpr::widen32(SymExpr::byte(0)),
        );
        assert!(e.eval_bool(&[0]).unwrap());
        let u = SymExpr::cmp(
            CmpOp::Ult,
            SymExpr::konst(0xffff_ffff, 32),
            SymExpr::widen32(SymExpr::byte(0)),
        );
        assert!(!u.eval_bool(&[0]).unwrap());
    }

    #[test]
    fn sort_invariants() {
        assert!(SymExpr::zero_extend(SymExpr::byte(0), 8).sort().is_err());
        assert!(SymExpr::Concat(vec![]).sort().is_err());
        assert!(SymExpr::Not(Box::new(SymExpr::byte(0))).sort().is_err());
        assert_eq!(widened(0).sort(), Ok(Sort::Bv(32)));
        let c = SymExpr::Concat(vec![SymExpr::byte(0), SymExpr::byte(1)]);
        assert_eq!(c.sort(), Ok(Sort::Bv(16)));
        assert_eq!(c.eval(&[0x12, 0x34]).unwrap().as_bv(), Some(0x1234));
    }

    #[test]
    fn double_negation_is_identity() {
        let e = SymExpr::cmp(CmpOp::Eq, SymExpr::byte(0), SymExpr::konst(1, 8));
        assert_eq!(e.clone().negate().negate(), e);
    }

    #[test]
    fn positions_and_normalization() {
        let e = SymExpr::cmp(
            CmpOp::Ult,
            SymExpr::Concat(vec![SymExpr::byte(4), SymExpr::byte(2)]),
            widened(9),
        );
        assert_eq!(e.positions().into_iter().collect::<Vec<_>>(), vec![2, 4, 9]);
        assert_eq!(
            e.normalized_text(),
            "(bvult (concat k!* k!*) (concat #x000000 k!*))"
        );
    }
}
