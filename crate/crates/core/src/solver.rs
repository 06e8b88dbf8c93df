//! Baseline byte-constraint solver and the constraint evaluator.
//!
//! Search is exhaustive over the constrained positions (at most
//! [`DEFAULT_VAR_CAP`] of them) and picks the smallest satisfying
//! assignment in lexicographic order of ascending positions, so results are
//! reproducible.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::symcore::PathConstraint;

pub const DEFAULT_VAR_CAP: usize = 3;

/// Position → byte.
pub type Assignment = BTreeMap<usize, u8>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error("constraint is unsatisfiable")]
    Unsat,
    #[error("constraint has {found} variables, cap is {cap}")]
    TooManyVars { found: usize, cap: usize },
}

/// True iff every position is in range and `pc.expr` evaluates to `pc.taken`.
pub fn evaluate_constraint(pc: &PathConstraint, input: &[u8]) -> bool {
    pc.holds_on(input)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Solver {
    pub var_cap: usize,
}

impl Default for Solver {
    fn default() -> Self {
        Solver {
            var_cap: DEFAULT_VAR_CAP,
        }
    }
}

impl Solver {
    pub fn new(var_cap: usize) -> Self {
        Solver { var_cap }
    }

    /// Smallest assignment satisfying `pc` in isolation.
    pub fn get_solution(&self, pc: &PathConstraint) -> Result<Assignment, SolveError> {
        let positions: Vec<usize> = pc.expr.positions().into_iter().collect();
        if positions.len() > self.var_cap {
            return Err(SolveError::TooManyVars {
                found: positions.len(),
                cap: self.var_cap,
            });
        }
        let len = positions.last().map_or(0, |&p| p + 1);
        let mut scratch = vec![0u8; len];
        let mut digits = vec![0u8; positions.len()];
        loop {
            for (&p, &d) in positions.iter().zip(&digits) {
                scratch[p] = d;
            }
            if evaluate_constraint(pc, &scratch) {
                return Ok(positions.iter().copied().zip(digits).collect());
            }
            // odometer: the last position varies fastest
            let mut i = digits.len();
            loop {
                if i == 0 {
                    return Err(SolveError::Unsat);
                }
                i -= 1;
                if digits[i] == u8::MAX {
                    digits[i] = 0;
                } else {
                    digits[i] += 1;
                    break;
                }
            }
        }
    }

    /// `seed` with only the constrained positions rewritten; same length.
    /// Positions past the end of `seed` make the constraint unsatisfiable
    /// at fixed size.
    pub fn solve_fixed(&self, pc: &PathConstraint, seed: &[u8]) -> Result<Vec<u8>, SolveError> {
        let assignment = self.get_solution(pc)?;
        if assignment.keys().any(|&p| p >= seed.len()) {
            return Err(SolveError::Unsat);
        }
        let mut out = seed.to_vec();
        apply(&mut out, &assignment);
        Ok(out)
    }
}

/// Writes `assignment` into `bytes`, growing it with zeros if needed.
pub fn apply(bytes: &mut Vec<u8>, assignment: &Assignment) {
    if let Some((&max, _)) = assignment.iter().next_back() {
        if bytes.len() <= max {
            bytes.resize(max + 1, 0);
        }
    }
    for (&p, &b) in assignment {
        bytes[p] = b;
    }
}
