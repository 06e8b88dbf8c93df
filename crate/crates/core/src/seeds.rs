//! Coverage history, saturation detection and LLM seed acquisition.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;
use std::time::Duration;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::ect::EctTree;
use crate::llm::{escape_bytes, fenced_blocks, unescape_bytes, LlmBackend, LlmRequest, RequestHint};
use crate::symcore::{loc_group, Format, Outcome, Trace};
use crate::testcase::{Provenance, TestCase};

pub const DEFAULT_SEED_COUNT: usize = 4;
pub const RECENT_RING: usize = 32;
pub const PROMPT_LOC_BUDGET: usize = 20;
pub const PROMPT_RECENT_INPUTS: usize = 3;
pub const DEFAULT_SATURATION_WINDOW: Duration = Duration::from_secs(180);

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HistoryEntry {
    pub id: u64,
    pub input: Vec<u8>,
    pub covered: BTreeSet<String>,
    pub outcome: Outcome,
    pub iteration: u64,
}

/// Which inputs covered which branches.
#[derive(Debug, Clone, Default)]
pub struct HistoryRecord {
    pub entries: Vec<HistoryEntry>,
    pub covered: BTreeSet<String>,
    /// Materialized locs with no taken node, shallowest first.
    pub uncovered: Vec<String>,
    pub recent: VecDeque<Vec<u8>>,
}

impl HistoryRecord {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, test: &TestCase, trace: &Trace, tree: &EctTree) {
        let locs = trace.visited_locs();
        self.covered.extend(locs.iter().cloned());
        self.entries.push(HistoryEntry {
            id: test.id,
            input: test.bytes.clone(),
            covered: locs,
            outcome: trace.outcome.clone(),
            iteration: test.iteration,
        });
        if self.recent.len() == RECENT_RING {
            self.recent.pop_front();
        }
        self.recent.push_back(test.bytes.clone());
        self.refresh(tree);
    }

    /// Recomputes the uncovered set from the tree's untaken nodes.
    pub fn refresh(&mut self, tree: &EctTree) {
        let mut depth: BTreeMap<&str, usize> = BTreeMap::new();
        for n in tree.branch_nodes() {
            if n.tk > 0 {
                self.covered.insert(n.loc.to_string());
            }
        }
        for n in tree.branch_nodes() {
            if n.tk == 0 && !self.covered.contains(n.loc) {
                let d = depth.entry(n.loc).or_insert(n.depth);
                *d = (*d).min(n.depth);
            }
        }
        let mut uncovered: Vec<(usize, &str)> = depth.into_iter().map(|(l, d)| (d, l)).collect();
        uncovered.sort();
        self.uncovered = uncovered.into_iter().map(|(_, l)| l.to_string()).collect();
    }
}

/// Functional wrapper over [`HistoryRecord::record`].
pub fn record_history(mut h: HistoryRecord, test: &TestCase, trace: &Trace, tree: &EctTree) -> HistoryRecord {
    h.record(test, trace, tree);
    h
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Window {
    Clock(Duration),
    /// Deterministic mode: a count of loop iterations.
    Iterations(u64),
}

/// Flags a coverage plateau: the tree generation unchanged for a window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SaturationState {
    pub window: Window,
    last_generation: u64,
    last_change_clock: Duration,
    last_change_iteration: u64,
}

impl SaturationState {
    pub fn new(window: Window) -> Self {
        SaturationState {
            window,
            last_generation: 0,
            last_change_clock: Duration::ZERO,
            last_change_iteration: 0,
        }
    }

    /// Feeds the current generation at time `now` and loop iteration
    /// `iteration`; returns whether coverage is saturated.
    pub fn observe(&mut self, generation: u64, now: Duration, iteration: u64) -> bool {
        if generation != self.last_generation {
            self.last_generation = generation;
            self.restart(now, iteration);
            return false;
        }
        match self.window {
            Window::Clock(w) => now.saturating_sub(self.last_change_clock) >= w,
            Window::Iterations(n) => iteration.saturating_sub(self.last_change_iteration) >= n,
        }
    }

    /// Starts a fresh window, e.g. after acquiring seeds.
    pub fn restart(&mut self, now: Duration, iteration: u64) {
        self.last_change_clock = now;
        self.last_change_iteration = iteration;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Timing {
    Initial,
    Fresh,
}

impl Timing {
    pub fn provenance(self) -> Provenance {
        match self {
            Timing::Initial => Provenance::SeedLlmInitial,
            Timing::Fresh => Provenance::SeedLlmFresh,
        }
    }
}

fn output_instructions(p: &mut String, count: usize) {
    let _ = writeln!(
        p,
        "Write bytes outside printable ASCII as \\xHH. Put each input in its own fenced code block, {count} blocks in total."
    );
}

pub fn build_initial_seed_prompt(format: &Format, count: usize) -> String {
    let mut p = String::new();
    let _ = writeln!(p, "The program under test parses {format} input.");
    let _ = writeln!(
        p,
        "Generate {count} syntactically valid {format} inputs that resemble inputs from bug reports against {format} parsers: nesting, escapes, empty containers, boundary numbers and unusual but legal whitespace."
    );
    p.push_str("Every input must be accepted by a conforming parser.\n\n");
    output_instructions(&mut p, count);
    p
}

/// Locs grouped by `file_func`, at most `budget` in total.
fn grouped(locs: &[String], budget: usize) -> BTreeMap<String, Vec<&str>> {
    let mut out: BTreeMap<String, Vec<&str>> = BTreeMap::new();
    for l in locs.iter().take(budget) {
        let group = loc_group(l).unwrap_or("other").to_string();
        out.entry(group).or_default().push(l);
    }
    out
}

fn write_groups(p: &mut String, title: &str, groups: &BTreeMap<String, Vec<&str>>) {
    let _ = writeln!(p, "{title}:");
    for (g, locs) in groups {
        let _ = writeln!(p, "- {g}: {}", locs.join(", "));
    }
    p.push('\n');
}

pub fn build_fresh_seed_prompt(h: &HistoryRecord, format: &Format, count: usize) -> String {
    let covered: Vec<String> = h.covered.iter().cloned().collect();
    let recent: Vec<&Vec<u8>> = h.recent.iter().rev().take(PROMPT_RECENT_INPUTS).collect();
    let mut p = String::new();
    let _ = writeln!(p, "The program under test parses {format} input.");
    p.push_str("Branch names read file_function_line_column_type_branch.\n\n");
    if h.uncovered.is_empty() {
        let _ = writeln!(
            p,
            "Every known branch is covered. Generate {count} valid {format} inputs that differ as much as possible from the recent inputs below.\n"
        );
    } else {
        write_groups(&mut p, "Covered branches", &grouped(&covered, PROMPT_LOC_BUDGET));
        write_groups(&mut p, "Uncovered branches", &grouped(&h.uncovered, PROMPT_LOC_BUDGET));
    }
    if !recent.is_empty() {
        p.push_str("Recent inputs:\n");
        for r in recent {
            let _ = write!(p, "```\n{}\n```\n", escape_bytes(r));
        }
        p.push('\n');
    }
    p.push_str("Step 1: compare the covered and uncovered branches and group them by source location.\n");
    p.push_str("Step 2: infer which input bytes decide the uncovered branches.\n");
    let _ = writeln!(
        p,
        "Step 3: synthesize {count} valid {format} inputs that reach uncovered branches, by mutating a recent input or writing one from scratch.\n"
    );
    output_instructions(&mut p, count);
    p
}

/// Uniform printable ASCII.
pub fn random_seed(rng: &mut ChaCha8Rng, length: usize) -> Vec<u8> {
    (0..length).map(|_| rng.gen_range(0x20u8..=0x7e)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Acquisition {
    pub timing: Timing,
    pub prompt: String,
    pub response: Option<String>,
    pub error: Option<String>,
    /// `(bytes, provenance)` in response order.
    pub inputs: Vec<(Vec<u8>, Provenance)>,
}

impl Acquisition {
    pub fn used_fallback(&self) -> bool {
        self.inputs.iter().any(|(_, p)| *p == Provenance::SeedRandom)
    }
}

pub struct SeedRequest<'a> {
    pub timing: Timing,
    pub history: &'a HistoryRecord,
    pub format: &'a Format,
    pub count: usize,
    pub model: &'a str,
    /// Length of random fallback seeds.
    pub random_len: usize,
}

/// Prompts for seeds; falls back to random seeds when the backend fails or
/// the response holds no input.
pub fn acquire_seeds(req: &SeedRequest<'_>, backend: &dyn LlmBackend, rng: &mut ChaCha8Rng) -> Acquisition {
    let (prompt, hint) = match req.timing {
        Timing::Initial => (
            build_initial_seed_prompt(req.format, req.count),
            RequestHint::InitialSeeds {
                format: req.format.clone(),
                count: req.count,
            },
        ),
        Timing::Fresh => (
            build_fresh_seed_prompt(req.history, req.format, req.count),
            RequestHint::FreshSeeds {
                format: req.format.clone(),
                uncovered: req.history.uncovered.iter().take(PROMPT_LOC_BUDGET).cloned().collect(),
                recent: req.history.recent.iter().rev().take(PROMPT_RECENT_INPUTS).cloned().collect(),
                count: req.count,
            },
        ),
    };
    let mut acq = Acquisition {
        timing: req.timing,
        prompt: prompt.clone(),
        response: None,
        error: None,
        inputs: Vec::new(),
    };
    match backend.complete(&LlmRequest::new(req.model, prompt, hint)) {
        Ok(resp) => {
            let prov = req.timing.provenance();
            acq.inputs = fenced_blocks(&resp.raw)
                .into_iter()
                .map(unescape_bytes)
                .filter(|b| !b.is_empty())
                .take(req.count)
                .map(|b| (b, prov))
                .collect();
            acq.response = Some(resp.raw);
        }
        Err(e) => acq.error = Some(e.to_string()),
    }
    if acq.inputs.is_empty() {
        log::warn!("seed acquisition produced nothing, using random seeds");
        acq.inputs = (0..req.count)
            .map(|_| (random_seed(rng, req.random_len), Provenance::SeedRandom))
            .collect();
    }
    acq
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{LlmError, LlmResponse, MockLlm, MockMode};
    use crate::symcore::run_concolic;
    use crate::targets::{oracle, JSON_SUBSET};
    use rand::SeedableRng;

    struct Down;

    impl LlmBackend for Down {
        fn complete(&self, _: &LlmRequest) -> Result<LlmResponse, LlmError> {
            Err(LlmError::Timeout)
        }

        fn name(&self) -> String {
            "down".into()
        }
    }

    fn run(tree: &mut EctTree, h: &mut HistoryRecord, id: u64, input: &[u8]) {
        let trace = run_concolic(&JSON_SUBSET, input);
        tree.record_trace(&trace).unwrap();
        h.record(&TestCase::seed(id, input.to_vec(), Provenance::SeedUser, id), &trace, tree);
    }

    fn all_locs(tree: &EctTree) -> BTreeSet<String> {
        tree.branch_nodes().map(|n| n.loc.to_string()).collect()
    }

    #[test]
    fn history_partitions_materialized_locs() {
        let mut tree = EctTree::new();
        let mut h = HistoryRecord::new();
        run(&mut tree, &mut h, 0, b"{\"a\":1}");
        let first = run_concolic(&JSON_SUBSET, b"{\"a\":1}").visited_locs();
        assert_eq!(h.covered, first);
        let mut before = h.covered.clone();
        for (i, input) in [&b"[1,2]"[..], b"\"s\"", b"tru", b"{}"].iter().enumerate() {
            run(&mut tree, &mut h, i as u64 + 1, input);
            let uncovered: BTreeSet<String> = h.uncovered.iter().cloned().collect();
            assert!(h.covered.is_disjoint(&uncovered));
            let union: BTreeSet<String> = h.covered.union(&uncovered).cloned().collect();
            assert_eq!(union, all_locs(&tree));
            // a covered loc never reverts to uncovered
            assert!(before.is_subset(&h.covered));
            before = h.covered.clone();
        }
        assert_eq!(h.entries.len(), 5);
    }

    #[test]
    fn saturation_windows() {
        let mut s = SaturationState::new(Window::Clock(Duration::from_secs(180)));
        assert!(!s.observe(1, Duration::from_secs(10), 1));
        assert!(!s.observe(1, Duration::from_secs(189), 2));
        assert!(s.observe(1, Duration::from_secs(191), 3));
        assert!(!s.observe(2, Duration::from_secs(192), 4));

        let mut s = SaturationState::new(Window::Iterations(5));
        assert!(!s.observe(3, Duration::ZERO, 10));
        assert!(!s.observe(3, Duration::ZERO, 14));
        assert!(s.observe(3, Duration::ZERO, 15));
        s.restart(Duration::ZERO, 15);
        assert!(!s.observe(3, Duration::ZERO, 16));
    }

    #[test]
    fn prompts() {
        let p = build_initial_seed_prompt(&Format::Json, 4);
        assert_eq!(p, build_initial_seed_prompt(&Format::Json, 4));
        assert!(p.contains("4 syntactically valid JSON inputs"));

        let mut tree = EctTree::new();
        let mut h = HistoryRecord::new();
        let empty = build_fresh_seed_prompt(&h, &Format::Json, 4);
        assert!(empty.contains("differ as much as possible"));
        run(&mut tree, &mut h, 0, b"{\"a\":1}");
        let p = build_fresh_seed_prompt(&h, &Format::Json, 4);
        assert!(p.contains(&h.uncovered[0]));
        assert!(p.contains("Uncovered branches") && p.contains("Step 3"));
        assert!(p.contains("{\"a\":1}"));
    }

    #[test]
    fn random_seeds_are_reproducible() {
        let mut a = ChaCha8Rng::seed_from_u64(1);
        let mut b = ChaCha8Rng::seed_from_u64(1);
        assert!(random_seed(&mut a, 0).is_empty());
        let x = random_seed(&mut a, 64);
        assert_eq!(x, random_seed(&mut b, 64));
        assert!(x.iter().all(|c| (0x20..=0x7e).contains(c)));
    }

    #[test]
    fn acquisition_with_mock_and_fallback() {
        let h = HistoryRecord::new();
        let req = SeedRequest {
            timing: Timing::Initial,
            history: &h,
            format: &Format::Json,
            count: 4,
            model: "mock",
            random_len: 16,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let acq = acquire_seeds(&req, &MockLlm::new(MockMode::SyntaxAware), &mut rng);
        assert_eq!(acq.inputs.len(), 4);
        assert!(acq.inputs.iter().all(|(b, p)| oracle::json(b).is_accept() && *p == Provenance::SeedLlmInitial));

        let acq = acquire_seeds(&req, &Down, &mut rng);
        assert!(acq.used_fallback());
        assert_eq!(acq.inputs.len(), 4);
        assert!(acq.error.is_some());
    }

    #[test]
    fn fresh_acquisition_targets_uncovered_cases() {
        let mut tree = EctTree::new();
        let mut h = HistoryRecord::new();
        run(&mut tree, &mut h, 0, b"{\"a\":1}");
        let req = SeedRequest {
            timing: Timing::Fresh,
            history: &h,
            format: &Format::Json,
            count: 4,
            model: "mock",
            random_len: 16,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let acq = acquire_seeds(&req, &MockLlm::new(MockMode::SyntaxAware), &mut rng);
        assert!(!acq.used_fallback());
        let before = tree.stats().taken_nodes;
        for (b, _) in &acq.inputs {
            assert!(oracle::json(b).is_accept(), "{:?}", String::from_utf8_lossy(b));
            tree.record_trace(&run_concolic(&JSON_SUBSET, b)).unwrap();
        }
        assert!(tree.stats().taken_nodes > before);
    }
}
