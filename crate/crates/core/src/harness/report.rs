use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;

use serde::Serialize;

use super::metrics::Metrics;
use super::replay::read_provenance;
use super::{files, HarnessError};
use crate::ect::{EctStats, EctTree};
use crate::testcase::Provenance;

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub iterations: u64,
    pub executed: u64,
    pub pass_rate: f64,
    pub direct_solve_rate: f64,
    pub crashes: u64,
    /// `(iteration, taken nodes)` whenever the count changed.
    pub coverage: Vec<(u64, usize)>,
    pub ect: EctStats,
    pub provenance: BTreeMap<String, usize>,
}

/// Summarizes a campaign output directory.
pub fn report(dir: &Path) -> Result<Report, HarnessError> {
    if !dir.is_dir() {
        return Err(HarnessError::io(
            dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no such directory"),
        ));
    }
    let path = dir.join(files::METRICS);
    let text = fs::read_to_string(&path).map_err(|e| HarnessError::io(&path, e))?;
    let series: Vec<Metrics> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| HarnessError::malformed(&path, e)))
        .collect::<Result<_, _>>()?;
    let last = series.last().cloned().unwrap_or_default();
    let mut coverage: Vec<(u64, usize)> = Vec::new();
    for m in &series {
        if coverage.last().is_none_or(|&(_, t)| t != m.taken_nodes) {
            coverage.push((m.iteration, m.taken_nodes));
        }
    }
    let ect_path = dir.join(files::ECT);
    let ect_text = fs::read_to_string(&ect_path).map_err(|e| HarnessError::io(&ect_path, e))?;
    let tree = EctTree::from_json(&ect_text).map_err(|e| HarnessError::malformed(&ect_path, e))?;
    let mut provenance: BTreeMap<String, usize> = Provenance::ALL.iter().map(|p| (p.to_string(), 0)).collect();
    for rec in read_provenance(dir)? {
        *provenance.entry(rec.provenance.to_string()).or_insert(0) += 1;
    }
    Ok(Report {
        iterations: last.iteration,
        executed: last.executed,
        pass_rate: last.pass_rate,
        direct_solve_rate: last.direct_solve_rate,
        crashes: last.crashes,
        coverage,
        ect: tree.stats(),
        provenance,
    })
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        let _ = writeln!(s, "iterations        {}", self.iterations);
        let _ = writeln!(s, "test cases run    {}", self.executed);
        let _ = writeln!(s, "pass rate         {:.4}", self.pass_rate);
        let _ = writeln!(s, "direct solve rate {:.4}", self.direct_solve_rate);
        let _ = writeln!(s, "crashes           {}", self.crashes);
        let _ = writeln!(
            s,
            "ECT               {} of {} branch nodes taken ({} if, {} switch), {} context nodes",
            self.ect.taken_nodes, self.ect.total_nodes, self.ect.taken_if, self.ect.taken_switch, self.ect.context_nodes
        );
        s.push_str("corpus\n");
        for (p, n) in &self.provenance {
            let _ = writeln!(s, "  {p:<18}{n}");
        }
        s.push_str("coverage (iteration: taken nodes)\n");
        for (i, t) in &self.coverage {
            let _ = writeln!(s, "  {i:>6}: {t}");
        }
        f.write_str(&s)
    }
}
