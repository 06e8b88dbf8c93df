//! Symbolic byte expressions, branch sites, and the concolic trace context.

mod expr;
mod site;
mod smt;
mod trace;

pub use expr::{CmpOp, EvalError, Sort, SymExpr, Value, CMP_WIDTH};
pub use site::{loc_group, BrType, BranchSite, SWITCH_DEFAULT, SWITCH_HEAD};
pub use smt::{parse_expr, ParseError};
pub use trace::{
    run_concolic, run_concolic_with, Cond, Entry, Format, Outcome, PathConstraint,
    ProgramUnderTest, SymByte, SymError, SymInput, Trace, TraceCtx, Visit,
    DEFAULT_CONTEXT_DEPTH,
};

/// Evaluates `expr` under the assignment `k!n := input[n]`.
pub fn eval(expr: &SymExpr, input: &[u8]) -> Result<Value, EvalError> {
    expr.eval(input)
}
