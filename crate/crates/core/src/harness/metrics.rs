use serde::{Deserialize, Serialize};

/// Campaign counters; one snapshot per iteration goes to `metrics.jsonl`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub iteration: u64,
    /// Distinct test cases run at least once.
    pub executed: u64,
    pub accepted: u64,
    pub rejected: u64,
    pub crashes: u64,
    pub constraints_collected: u64,
    /// Survivors of phase-1 dedup (equals collected under select-all).
    pub constraints_deduped: u64,
    /// Constraints handed to the solver.
    pub constraints_dispatched: u64,
    pub solved: u64,
    pub solved_direct: u64,
    pub solved_refined: u64,
    pub unsat: u64,
    pub unsolvable: u64,
    /// Solutions dropped because the same bytes were already queued.
    pub duplicates: u64,
    pub llm_requests: u64,
    pub llm_failures: u64,
    /// Unvalidated LLM answers that violate their constraint.
    pub llm_unsound: u64,
    pub seeds_acquired: u64,
    pub saturation_events: u64,
    pub generation: u64,
    pub taken_nodes: usize,
    pub total_nodes: usize,
    pub queued: usize,
    pub pass_rate: f64,
    pub direct_solve_rate: f64,
}

impl Metrics {
    pub fn refresh_rates(&mut self) {
        self.pass_rate = ratio(self.accepted, self.executed);
        self.direct_solve_rate = ratio(self.solved_direct, self.llm_requests);
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}
