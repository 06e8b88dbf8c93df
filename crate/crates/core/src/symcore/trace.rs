//! The trace context programs under test branch through, and the record of
//! one concolic run.

use std::borrow::Cow;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::panic::{self, AssertUnwindSafe};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::expr::{CmpOp, EvalError, SymExpr, Value};
use super::site::{BrType, BranchSite, SWITCH_DEFAULT};

/// Maximum number of call frames kept as context for a visit.
pub const DEFAULT_CONTEXT_DEPTH: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SymError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("branch at {loc}: concrete value {concrete} disagrees with symbolic value {symbolic}")]
    Consistency {
        loc: String,
        concrete: String,
        symbolic: String,
    },
    #[error("exit_fn at call depth 0")]
    UnbalancedExit,
    #[error("site {loc} used as {used:?} but declared {declared:?}")]
    SiteType {
        loc: String,
        used: BrType,
        declared: BrType,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Accept,
    Reject,
    Crash(String),
}

impl Outcome {
    pub fn is_accept(&self) -> bool {
        matches!(self, Outcome::Accept)
    }

    pub fn is_crash(&self) -> bool {
        matches!(self, Outcome::Crash(_))
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Accept => f.write_str("accept"),
            Outcome::Reject => f.write_str("reject"),
            Outcome::Crash(reason) => write!(f, "crash: {reason}"),
        }
    }
}

/// Input format of a program under test.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Format {
    Json,
    Expr,
    Ini,
    Custom(String),
}

impl Format {
    pub fn name(&self) -> &str {
        match self {
            Format::Json => "JSON",
            Format::Expr => "EXPR",
            Format::Ini => "INI",
            Format::Custom(tag) => tag,
        }
    }

    pub fn parse(name: &str) -> Format {
        match name.trim().to_ascii_uppercase().as_str() {
            "JSON" => Format::Json,
            "EXPR" => Format::Expr,
            "INI" => Format::Ini,
            _ => Format::Custom(name.trim().to_string()),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One recorded branch decision.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathConstraint {
    pub site: BranchSite,
    pub expr: SymExpr,
    /// Truth value of `expr` the constraint demands.
    pub taken: bool,
    pub positions: BTreeSet<usize>,
    pub call_stack_size: usize,
    /// Function-name chain the branch executed under, capped at the
    /// context depth.
    pub context: Vec<Cow<'static, str>>,
    pub order: usize,
}

impl PathConstraint {
    /// The constraint for the other direction of the same branch edge.
    pub fn negated(&self) -> PathConstraint {
        PathConstraint {
            taken: !self.taken,
            ..self.clone()
        }
    }

    /// The constraint as a single formula that must evaluate to true.
    pub fn assertion(&self) -> SymExpr {
        if self.taken {
            self.expr.clone()
        } else {
            self.expr.clone().negate()
        }
    }

    /// True iff `input` covers every position and drives `expr` to `taken`.
    pub fn holds_on(&self, input: &[u8]) -> bool {
        match self.expr.eval_bool(input) {
            Ok(v) => v == self.taken,
            Err(_) => false,
        }
    }
}

/// One visited branch arm, with the call context it executed under.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Visit {
    pub site: BranchSite,
    pub call_stack_size: usize,
    pub context: Vec<Cow<'static, str>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub input: Vec<u8>,
    pub constraints: Vec<PathConstraint>,
    pub visits: Vec<Visit>,
    /// Case values registered per switch head loc.
    pub switch_cases: BTreeMap<String, Vec<u8>>,
    pub outcome: Outcome,
}

impl Trace {
    /// Every loc (heads and arms) this trace visited.
    pub fn visited_locs(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for v in &self.visits {
            out.insert(v.site.head_loc());
            out.insert(v.site.loc());
        }
        out
    }
}

/// Symbolic view of one input byte.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymByte {
    index: usize,
    value: u8,
}

/// A boolean condition together with its concrete value on the current
/// input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cond {
    pub expr: SymExpr,
    pub value: bool,
}

impl std::ops::Not for Cond {
    type Output = Cond;

    fn not(self) -> Cond {
        Cond {
            expr: self.expr.negate(),
            value: !self.value,
        }
    }
}

impl SymByte {
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn expr(&self) -> SymExpr {
        SymExpr::byte(self.index)
    }

    /// `(concat #x000000 k!n)`.
    pub fn widened(&self) -> SymExpr {
        SymExpr::widen32(self.expr())
    }

    fn cmp_const(&self, op: CmpOp, c: u8, byte_on_left: bool) -> Cond {
        let k = SymExpr::konst(c as u32, 32);
        let (lhs, rhs, l, r) = if byte_on_left {
            (self.widened(), k, self.value as u32, c as u32)
        } else {
            (k, self.widened(), c as u32, self.value as u32)
        };
        Cond {
            expr: SymExpr::cmp(op, lhs, rhs),
            value: op.apply(l, r),
        }
    }

    pub fn eq(&self, c: u8) -> Cond {
        self.cmp_const(CmpOp::Eq, c, true)
    }

    pub fn ne(&self, c: u8) -> Cond {
        self.cmp_const(CmpOp::Ne, c, true)
    }

    /// `byte >= c`, as `(bvsge k c)`.
    pub fn at_least(&self, c: u8) -> Cond {
        self.cmp_const(CmpOp::Sge, c, true)
    }

    /// `byte <= c`, as `(bvsge c k)`: the shape `isdigit` lowers to.
    pub fn at_most(&self, c: u8) -> Cond {
        self.cmp_const(CmpOp::Sge, c, false)
    }

    /// `byte < c` (unsigned).
    pub fn below(&self, c: u8) -> Cond {
        self.cmp_const(CmpOp::Ult, c, true)
    }
}

/// Read-only symbolic handle on the input of a run.
#[derive(Debug, Clone)]
pub struct SymInput {
    bytes: Vec<u8>,
}

impl SymInput {
    pub fn new(bytes: Vec<u8>) -> Self {
        SymInput { bytes }
    }

    pub fn len(&self) -> usize {
        self.bytes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bytes.is_empty()
    }

    pub fn at(&self, index: usize) -> Option<SymByte> {
        self.bytes
            .get(index)
            .map(|&value| SymByte { index, value })
    }
}

/// Collects constraints and visits while a program under test runs.
#[derive(Debug)]
pub struct TraceCtx {
    input: Vec<u8>,
    constraints: Vec<PathConstraint>,
    visits: Vec<Visit>,
    switch_cases: BTreeMap<String, Vec<u8>>,
    stack: Vec<Cow<'static, str>>,
    context_depth: usize,
}

impl TraceCtx {
    pub fn new(input: &[u8]) -> Self {
        Self::with_context_depth(input, DEFAULT_CONTEXT_DEPTH)
    }

    pub fn with_context_depth(input: &[u8], context_depth: usize) -> Self {
        TraceCtx {
            input: input.to_vec(),
            constraints: Vec::new(),
            visits: Vec::new(),
            switch_cases: BTreeMap::new(),
            stack: Vec::new(),
            context_depth,
        }
    }

    pub fn depth(&self) -> usize {
        self.stack.len()
    }

    pub fn enter_fn(&mut self, func: &'static str) {
        self.stack.push(Cow::Borrowed(func));
    }

    pub fn exit_fn(&mut self) -> Result<(), SymError> {
        self.stack.pop().map(|_| ()).ok_or(SymError::UnbalancedExit)
    }

    /// Runs `body` inside a call frame named `func`.
    pub fn call<T>(
        &mut self,
        func: &'static str,
        body: impl FnOnce(&mut TraceCtx) -> Result<T, SymError>,
    ) -> Result<T, SymError> {
        self.enter_fn(func);
        let result = body(self);
        self.exit_fn()?;
        result
    }

    fn context(&self) -> Vec<Cow<'static, str>> {
        let keep = self.stack.len().min(self.context_depth);
        self.stack[..keep].to_vec()
    }

    fn record(&mut self, site: BranchSite, expr: SymExpr, taken: bool) {
        let positions = expr.positions();
        let order = self.constraints.len();
        self.constraints.push(PathConstraint {
            site,
            expr,
            taken,
            positions,
            call_stack_size: self.stack.len(),
            context: self.context(),
            order,
        });
    }

    fn visit(&mut self, site: BranchSite) {
        self.visits.push(Visit {
            site,
            call_stack_size: self.stack.len(),
            context: self.context(),
        });
    }

    /// Records a two-way branch on `cond` and returns the concrete outcome.
    pub fn branch_if(
        &mut self,
        site: &BranchSite,
        cond: &SymExpr,
        concrete: bool,
    ) -> Result<bool, SymError> {
        if site.br_type != BrType::If {
            return Err(SymError::SiteType {
                loc: site.head_loc(),
                used: BrType::If,
                declared: site.br_type,
            });
        }
        let symbolic = cond.eval_bool(&self.input)?;
        if symbolic != concrete {
            return Err(SymError::Consistency {
                loc: site.head_loc(),
                concrete: concrete.to_string(),
                symbolic: symbolic.to_string(),
            });
        }
        let arm = site.with_br(if concrete { 0 } else { 1 });
        self.record(arm.clone(), cond.clone(), concrete);
        self.visit(arm);
        Ok(concrete)
    }

    /// Records a switch over `scrutinee` and returns the matched case, or
    /// `None` for the default edge.
    pub fn branch_switch(
        &mut self,
        site: &BranchSite,
        scrutinee: &SymExpr,
        concrete: u8,
        cases: &[u8],
    ) -> Result<Option<u8>, SymError> {
        if site.br_type != BrType::Switch {
            return Err(SymError::SiteType {
                loc: site.head_loc(),
                used: BrType::Switch,
                declared: site.br_type,
            });
        }
        let symbolic = match scrutinee.eval(&self.input)? {
            Value::Bv { value, .. } => value,
            Value::Bool(b) => b as u32,
        };
        if symbolic != concrete as u32 {
            return Err(SymError::Consistency {
                loc: site.head_loc(),
                concrete: concrete.to_string(),
                symbolic: symbolic.to_string(),
            });
        }
        let head = site.head_loc();
        let registered = self.switch_cases.entry(head).or_insert_with(|| {
            let mut seen = BTreeSet::new();
            cases.iter().copied().filter(|c| seen.insert(*c)).collect()
        });
        let cases = registered.clone();
        let widened = SymExpr::widen32(scrutinee.clone());
        if cases.contains(&concrete) {
            let arm = site.with_br(concrete as i64);
            let expr = SymExpr::cmp(CmpOp::Eq, widened, SymExpr::konst(concrete as u32, 32));
            self.record(arm.clone(), expr, true);
            self.visit(arm);
            Ok(Some(concrete))
        } else {
            let arm = site.with_br(SWITCH_DEFAULT);
            for c in cases {
                let expr = SymExpr::cmp(CmpOp::Ne, widened.clone(), SymExpr::konst(c as u32, 32));
                self.record(arm.clone(), expr, true);
            }
            self.visit(arm);
            Ok(None)
        }
    }

    pub fn if_(&mut self, site: &BranchSite, cond: Cond) -> Result<bool, SymError> {
        self.branch_if(site, &cond.expr, cond.value)
    }

    pub fn switch(
        &mut self,
        site: &BranchSite,
        byte: &SymByte,
        cases: &[u8],
    ) -> Result<Option<u8>, SymError> {
        self.branch_switch(site, &byte.expr(), byte.value, cases)
    }

    pub fn finish(self, outcome: Outcome) -> Trace {
        Trace {
            input: self.input,
            constraints: self.constraints,
            visits: self.visits,
            switch_cases: self.switch_cases,
            outcome,
        }
    }
}

pub type Entry = fn(&SymInput, &mut TraceCtx) -> Result<Outcome, SymError>;

/// A parser program written against [`TraceCtx`].
#[derive(Debug, Clone)]
pub struct ProgramUnderTest {
    pub name: &'static str,
    pub format: Format,
    pub entry: Entry,
}

/// Runs `program` on `input`, collecting its trace. Target errors and
/// panics become [`Outcome::Crash`].
pub fn run_concolic(program: &ProgramUnderTest, input: &[u8]) -> Trace {
    run_concolic_with(program, input, DEFAULT_CONTEXT_DEPTH)
}

pub fn run_concolic_with(program: &ProgramUnderTest, input: &[u8], context_depth: usize) -> Trace {
    let sym = SymInput::new(input.to_vec());
    let mut ctx = TraceCtx::with_context_depth(input, context_depth);
    let result = panic::catch_unwind(AssertUnwindSafe(|| (program.entry)(&sym, &mut ctx)));
    let outcome = match result {
        Ok(Ok(outcome)) => outcome,
        Ok(Err(e)) => Outcome::Crash(format!("runtime error: {e}")),
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            Outcome::Crash(format!("panic: {msg}"))
        }
    };
    ctx.finish(outcome)
}

/// Declares an `if` site at the macro invocation position.
#[macro_export]
macro_rules! if_site {
    ($file:expr, $func:expr) => {
        $crate::symcore::BranchSite::new_if($file, $func, line!(), column!())
    };
}

/// Declares a `switch` site at the macro invocation position.
#[macro_export]
macro_rules! switch_site {
    ($file:expr, $func:expr) => {
        $crate::symcore::BranchSite::new_switch($file, $func, line!(), column!())
    };
}

#[cfg(test)]
mod tests {
    use super::*;

    fn site_if() -> BranchSite {
        BranchSite::new_if("t.c", "f", 1, 1)
    }

    fn lexer_switch() -> BranchSite {
        BranchSite::new_switch("jslex.c", "jsY_lexx", 9, 3)
    }

    #[test]
    fn branch_if_records_arm() {
        let mut ctx = TraceCtx::new(b"{");
        let b = SymInput::new(b"{".to_vec()).at(0).unwrap();
        assert!(ctx.if_(&site_if(), b.eq(b'{')).unwrap());
        let t = ctx.finish(Outcome::Accept);
        assert_eq!(t.constraints.len(), 1);
        assert_eq!(t.constraints[0].site.br_id, 0);
        assert!(t.constraints[0].taken);
    }

    #[test]
    fn branch_if_same_site_twice() {
        let mut ctx = TraceCtx::new(b"ab");
        let input = SymInput::new(b"ab".to_vec());
        for i in 0..2 {
            ctx.if_(&site_if(), input.at(i).unwrap().eq(b'a')).unwrap();
        }
        let t = ctx.finish(Outcome::Reject);
        assert_eq!(t.constraints.len(), 2);
        assert_eq!(t.constraints[0].site.loc(), "t.c_f_1_1_if_0");
        assert_eq!(t.constraints[1].site.loc(), "t.c_f_1_1_if_1");
    }

    #[test]
    fn branch_if_false_on_bracket() {
        let mut ctx = TraceCtx::new(b"[");
        let cond = SymExpr::cmp(CmpOp::Eq, SymExpr::byte(0), SymExpr::konst(b'{' as u32, 8));
        let concrete = cond.eval_bool(b"[").unwrap();
        assert!(!ctx.branch_if(&site_if(), &cond, concrete).unwrap());
        let t = ctx.finish(Outcome::Reject);
        assert!(!t.constraints[0].taken);
        assert_eq!(t.constraints[0].site.br_id, 1);
    }

    #[test]
    fn branch_if_inconsistent() {
        let mut ctx = TraceCtx::new(b"[");
        let cond = SymExpr::cmp(CmpOp::Eq, SymExpr::byte(0), SymExpr::konst(b'[' as u32, 8));
        assert!(matches!(
            ctx.branch_if(&site_if(), &cond, false),
            Err(SymError::Consistency { .. })
        ));
    }

    #[test]
    fn switch_matched_case() {
        let mut ctx = TraceCtx::new(b"(");
        let b = SymInput::new(b"(".to_vec()).at(0).unwrap();
        assert_eq!(ctx.switch(&lexer_switch(), &b, b"(),").unwrap(), Some(b'('));
        let t = ctx.finish(Outcome::Accept);
        assert_eq!(t.constraints.len(), 1);
        assert_eq!(t.constraints[0].site.br_id, 0x28);
        assert_eq!(
            t.constraints[0].expr.to_string(),
            "(= (concat #x000000 k!0) #x00000028)"
        );
    }

    #[test]
    fn switch_default_emits_ne_per_case() {
        let mut ctx = TraceCtx::new(b"z");
        let b = SymInput::new(b"z".to_vec()).at(0).unwrap();
        assert_eq!(ctx.switch(&lexer_switch(), &b, b"(),").unwrap(), None);
        let t = ctx.finish(Outcome::Reject);
        assert_eq!(t.constraints.len(), 3);
        for pc in &t.constraints {
            assert!(pc.taken);
            assert_eq!(pc.site.br_id, SWITCH_DEFAULT);
            assert!(pc.expr.to_string().starts_with("(distinct"));
            assert!(pc.holds_on(b"z"));
        }
    }

    #[test]
    fn switch_cases_registered_once() {
        let mut ctx = TraceCtx::new(b"()");
        let input = SymInput::new(b"()".to_vec());
        ctx.switch(&lexer_switch(), &input.at(0).unwrap(), b"(),").unwrap();
        ctx.switch(&lexer_switch(), &input.at(1).unwrap(), b"(),").unwrap();
        let t = ctx.finish(Outcome::Accept);
        assert_eq!(t.switch_cases.len(), 1);
        assert_eq!(t.switch_cases["jslex.c_jsY_lexx_9_3_switch"], b"(),".to_vec());
    }

    #[test]
    fn call_depth() {
        let mut ctx = TraceCtx::new(b"");
        ctx.enter_fn("a");
        ctx.enter_fn("b");
        assert_eq!(ctx.depth(), 2);
        ctx.exit_fn().unwrap();
        ctx.exit_fn().unwrap();
        assert_eq!(ctx.exit_fn(), Err(SymError::UnbalancedExit));
    }

    #[test]
    fn context_is_capped() {
        let mut ctx = TraceCtx::with_context_depth(b"a", 2);
        for _ in 0..5 {
            ctx.enter_fn("rec");
        }
        let b = SymInput::new(b"a".to_vec()).at(0).unwrap();
        ctx.if_(&site_if(), b.eq(b'a')).unwrap();
        let t = ctx.finish(Outcome::Accept);
        assert_eq!(t.constraints[0].call_stack_size, 5);
        assert_eq!(t.constraints[0].context.len(), 2);
    }

    #[test]
    fn negation_flips_direction_only() {
        let mut ctx = TraceCtx::new(b"{");
        let b = SymInput::new(b"{".to_vec()).at(0).unwrap();
        ctx.if_(&site_if(), b.eq(b'{')).unwrap();
        let pc = ctx.finish(Outcome::Accept).constraints.remove(0);
        let neg = pc.negated();
        assert!(!neg.taken);
        assert_eq!(neg.expr, pc.expr);
        assert_eq!(neg.assertion(), pc.expr.clone().negate());
        assert_eq!(neg.negated(), pc);
        assert!(pc.holds_on(b"{") && !neg.holds_on(b"{"));
    }

    fn panicking(_: &SymInput, _: &mut TraceCtx) -> Result<Outcome, SymError> {
        panic!("boom")
    }

    #[test]
    fn panics_become_crashes() {
        let p = ProgramUnderTest {
            name: "panicky",
            format: Format::Custom("X".into()),
            entry: panicking,
        };
        let prev = panic::take_hook();
        panic::set_hook(Box::new(|_| {}));
        let t = run_concolic(&p, b"x");
        panic::set_hook(prev);
        assert_eq!(t.outcome, Outcome::Crash("panic: boom".into()));
    }
}
