use std::fs;
use std::path::Path;

use serde::Serialize;

use super::campaign::ProvenanceRecord;
use super::{files, HarnessError};
use crate::symcore::{run_concolic, Outcome, ProgramUnderTest, Trace};

#[derive(Debug, Clone, Serialize)]
pub struct ReplayReport {
    pub target: String,
    pub len: usize,
    pub outcome: Outcome,
    pub constraints: usize,
    pub visited_locs: usize,
    #[serde(skip)]
    pub trace: Trace,
}

pub fn replay(program: &ProgramUnderTest, input: &[u8]) -> ReplayReport {
    let trace = run_concolic(program, input);
    ReplayReport {
        target: program.name.to_string(),
        len: input.len(),
        outcome: trace.outcome.clone(),
        constraints: trace.constraints.len(),
        visited_locs: trace.visited_locs().len(),
        trace,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct AuditReport {
    /// Solved cases whose constraint was re-evaluated.
    pub checked: usize,
    /// Ids of solved cases that violate their constraint.
    pub violations: Vec<u64>,
}

pub fn read_provenance(dir: &Path) -> Result<Vec<ProvenanceRecord>, HarnessError> {
    let path = dir.join(files::PROVENANCE);
    let text = fs::read_to_string(&path).map_err(|e| HarnessError::io(&path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| HarnessError::malformed(&path, e)))
        .collect()
}

/// Checks every solved case in a campaign output directory against the
/// constraint recorded for it.
pub fn audit(dir: &Path) -> Result<AuditReport, HarnessError> {
    let mut report = AuditReport::default();
    for rec in read_provenance(dir)? {
        if !rec.provenance.is_solved() {
            continue;
        }
        let path = dir.join(files::CORPUS).join(&rec.file);
        let bytes = fs::read(&path).map_err(|e| HarnessError::io(&path, e))?;
        report.checked += 1;
        let holds = rec.target.as_ref().is_some_and(|pc| pc.holds_on(&bytes));
        if !holds {
            report.violations.push(rec.id);
        }
    }
    Ok(report)
}
