use serde::Serialize;
use thiserror::Error;

use crate::ect::EctTree;
use crate::solver::{evaluate_constraint, Assignment, SolveError, Solver};
use crate::symcore::{BrType, PathConstraint, SWITCH_DEFAULT};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidateError {
    #[error("constraint unsatisfiable, candidate dropped")]
    UnsatDrop,
    #[error(transparent)]
    Solver(SolveError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Validated {
    /// The candidate satisfied the constraint as returned.
    Direct { bytes: Vec<u8> },
    /// The candidate was patched with the baseline solution.
    Refined { bytes: Vec<u8>, assignment: Assignment },
}

impl Validated {
    pub fn bytes(&self) -> &[u8] {
        match self {
            Validated::Direct { bytes } | Validated::Refined { bytes, .. } => bytes,
        }
    }

    pub fn into_bytes(self) -> Vec<u8> {
        match self {
            Validated::Direct { bytes } | Validated::Refined { bytes, .. } => bytes,
        }
    }

    pub fn is_direct(&self) -> bool {
        matches!(self, Validated::Direct { .. })
    }
}

/// Loc of the edge a negated constraint steers towards. For a negated
/// switch case the target is "some other arm", named by the head.
pub fn expected_loc(pc: &PathConstraint) -> String {
    match pc.site.br_type {
        BrType::If => pc.site.with_br(if pc.taken { 0 } else { 1 }).loc(),
        BrType::Switch if pc.site.br_id == SWITCH_DEFAULT => {
            match (pc.taken, pc.expr.compared_constant()) {
                (true, _) => pc.site.loc(),
                (false, Some(c)) => pc.site.with_br(c as i64).loc(),
                (false, None) => pc.site.head_loc(),
            }
        }
        BrType::Switch if pc.taken => pc.site.loc(),
        BrType::Switch => pc.site.head_loc(),
    }
}

/// Returns `candidate` if it satisfies `pc`; otherwise writes the baseline
/// solution into it, borrowing bytes from `seed` where the candidate is too
/// short.
pub fn validate_and_refine(
    pc: &PathConstraint,
    candidate: &[u8],
    seed: &[u8],
    tree: &mut EctTree,
    solver: &Solver,
) -> Result<Validated, ValidateError> {
    if evaluate_constraint(pc, candidate) {
        tree.mark_expected(&expected_loc(pc));
        return Ok(Validated::Direct {
            bytes: candidate.to_vec(),
        });
    }
    let assignment = solver.get_solution(pc).map_err(|e| match e {
        SolveError::Unsat => ValidateError::UnsatDrop,
        other => ValidateError::Solver(other),
    })?;
    let mut bytes = candidate.to_vec();
    if let Some((&max, _)) = assignment.iter().next_back() {
        while bytes.len() <= max {
            bytes.push(seed.get(bytes.len()).copied().unwrap_or(0));
        }
    }
    for (&p, &b) in &assignment {
        bytes[p] = b;
    }
    if !evaluate_constraint(pc, &bytes) {
        return Err(ValidateError::UnsatDrop);
    }
    Ok(Validated::Refined { bytes, assignment })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symcore::{parse_expr, BranchSite};

    fn pc(expr: &str, taken: bool) -> PathConstraint {
        let expr = parse_expr(expr).unwrap();
        PathConstraint {
            site: BranchSite::new_if("jslex.c", "jsY_isidentifierpart", 3, 12),
            positions: expr.positions(),
            expr,
            taken,
            call_stack_size: 0,
            context: Vec::new(),
            order: 0,
        }
    }

    #[test]
    fn compliant_candidate_passes_unchanged() {
        // require byte 1 > '9'
        let p = pc("(bvsge #x00000039 (concat #x000000 k!1))", false);
        let mut tree = EctTree::new();
        let out = validate_and_refine(&p, b"return 1", b"r?turn 1", &mut tree, &Solver::default()).unwrap();
        assert_eq!(out, Validated::Direct { bytes: b"return 1".to_vec() });
        assert_eq!(tree.expected_count("jslex.c_jsY_isidentifierpart_3_12_if_1"), 1);
        // flexible size
        let longer = validate_and_refine(&p, b"return 1 + 2;", b"r?", &mut tree, &Solver::default()).unwrap();
        assert!(longer.is_direct());
    }

    #[test]
    fn wrong_byte_is_refined_to_baseline_solution() {
        let p = pc("(bvsge #x00000039 (concat #x000000 k!1))", false);
        let mut tree = EctTree::new();
        let out = validate_and_refine(&p, b"r9turn", b"r?turn", &mut tree, &Solver::default()).unwrap();
        let Validated::Refined { bytes, assignment } = out else { panic!() };
        assert_eq!(bytes, b"r:turn");
        assert_eq!(assignment, Assignment::from([(1, b':')]));
        assert!(evaluate_constraint(&p, &bytes));
    }

    #[test]
    fn short_candidate_borrows_seed() {
        let p = pc("(= (concat #x000000 k!4) #x0000002c)", true);
        let mut tree = EctTree::new();
        let out = validate_and_refine(&p, b"a", b"(1)x)", &mut tree, &Solver::default()).unwrap();
        assert_eq!(out.bytes(), b"a1)x,");
    }

    #[test]
    fn unsat_drops() {
        let p = pc("(bvugt (concat #x000000 k!0) #x000000ff)", true);
        let mut tree = EctTree::new();
        assert_eq!(
            validate_and_refine(&p, b"a", b"a", &mut tree, &Solver::default()),
            Err(ValidateError::UnsatDrop)
        );
    }
}
