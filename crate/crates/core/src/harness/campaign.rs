use std::collections::{HashSet, VecDeque};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::config::{CampaignConfig, MockChoice, SelectMode, SolverMode};
use super::metrics::Metrics;
use super::{files, HarnessError};
use crate::ect::EctTree;
use crate::llm::{
    build_solve_complete_prompt, parse_response, validate_and_refine, HttpConfig, HttpTransport, LlmBackend,
    LlmError, LlmRequest, MockLlm, MockMode, RequestHint, ValidateError, Validated,
};
use crate::seeds::{acquire_seeds, HistoryRecord, SaturationState, SeedRequest, Timing, Window};
use crate::selector::{phase1_dedup, Selector};
use crate::solver::{evaluate_constraint, SolveError, Solver};
use crate::symcore::{run_concolic_with, Outcome, PathConstraint, ProgramUnderTest};
use crate::targets;
use crate::testcase::{Provenance, TestCase};

/// One line of `provenance.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceRecord {
    pub id: u64,
    pub file: String,
    pub provenance: Provenance,
    pub parent: Option<u64>,
    pub iteration: u64,
    pub outcome: Option<Outcome>,
    /// SMT form of the constraint a solved case was generated for.
    pub assertion: Option<String>,
    pub target: Option<PathConstraint>,
}

impl ProvenanceRecord {
    fn of(t: &TestCase) -> Self {
        ProvenanceRecord {
            id: t.id,
            file: t.file_name(),
            provenance: t.provenance,
            parent: t.parent,
            iteration: t.iteration,
            outcome: t.outcome.clone(),
            assertion: t.target.as_ref().map(|pc| pc.assertion().to_string()),
            target: t.target.clone(),
        }
    }
}

struct Logs {
    selection: BufWriter<File>,
    llm: BufWriter<File>,
    metrics: BufWriter<File>,
}

fn create(path: &Path) -> Result<BufWriter<File>, HarnessError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| HarnessError::io(path, e))
}

fn build_backend(cfg: &CampaignConfig) -> Result<Box<dyn LlmBackend>, HarnessError> {
    let mode = match cfg.llm.mock {
        MockChoice::Syntax => MockMode::SyntaxAware,
        MockChoice::Adversarial => MockMode::Adversarial,
        MockChoice::Echo => MockMode::Echo,
        MockChoice::Off => {
            let endpoint = cfg
                .llm
                .endpoint
                .as_deref()
                .ok_or_else(|| HarnessError::Config("llm_endpoint is required when the mock is off".into()))?;
            let http = HttpConfig {
                timeout: cfg.llm.request_timeout,
                attempts: cfg.llm.attempts,
                ..HttpConfig::new(endpoint, cfg.llm.api_key.clone())
            };
            let t = HttpTransport::new(http).map_err(|e| HarnessError::Config(e.to_string()))?;
            return Ok(Box::new(t));
        }
    };
    Ok(Box::new(MockLlm::new(mode)))
}

pub struct Campaign {
    cfg: CampaignConfig,
    program: ProgramUnderTest,
    backend: Option<Box<dyn LlmBackend>>,
    solver: Solver,
    tree: EctTree,
    selector: Selector,
    history: HistoryRecord,
    saturation: SaturationState,
    rng: ChaCha8Rng,
    /// Children of coverage-increasing parents, and the rest.
    high: VecDeque<usize>,
    low: VecDeque<usize>,
    cases: Vec<TestCase>,
    seen: HashSet<Vec<u8>>,
    cycle: usize,
    metrics: Metrics,
    series: Vec<Metrics>,
    logs: Option<Logs>,
}

impl Campaign {
    pub fn new(cfg: CampaignConfig) -> Result<Self, HarnessError> {
        cfg.validate()?;
        let needs_llm = cfg.solver_mode != SolverMode::Baseline || cfg.initial_seeds || cfg.fresh_seeds;
        let backend = if needs_llm { Some(build_backend(&cfg)?) } else { None };
        Self::with_backend(cfg, backend)
    }

    /// Like [`Campaign::new`] with a caller-supplied LLM backend.
    pub fn with_backend(cfg: CampaignConfig, backend: Option<Box<dyn LlmBackend>>) -> Result<Self, HarnessError> {
        cfg.validate()?;
        let program = targets::by_name(&cfg.target).expect("validated target");
        Ok(Campaign {
            solver: Solver::new(cfg.var_cap),
            selector: Selector::new(cfg.selector),
            saturation: SaturationState::new(cfg.saturation),
            rng: ChaCha8Rng::seed_from_u64(cfg.prng_seed),
            program,
            backend,
            tree: EctTree::new(),
            history: HistoryRecord::new(),
            high: VecDeque::new(),
            low: VecDeque::new(),
            cases: Vec::new(),
            seen: HashSet::new(),
            cycle: 0,
            metrics: Metrics::default(),
            series: Vec::new(),
            logs: None,
            cfg,
        })
    }

    pub fn tree(&self) -> &EctTree {
        &self.tree
    }

    pub fn cases(&self) -> &[TestCase] {
        &self.cases
    }

    /// Per-iteration snapshots.
    pub fn series(&self) -> &[Metrics] {
        &self.series
    }

    pub fn history(&self) -> &HistoryRecord {
        &self.history
    }

    fn open_outputs(&mut self) -> Result<(), HarnessError> {
        let out = &self.cfg.output_dir;
        if let Ok(mut entries) = fs::read_dir(out) {
            if entries.next().is_some() {
                return Err(HarnessError::Config(format!("output directory {} is not empty", out.display())));
            }
        }
        for d in [out.clone(), out.join(files::CORPUS), self.cfg.failed_dir.clone()] {
            fs::create_dir_all(&d).map_err(|e| HarnessError::io(&d, e))?;
        }
        self.logs = Some(Logs {
            selection: create(&out.join(files::SELECTION_LOG))?,
            llm: create(&out.join(files::LLM_LOG))?,
            metrics: create(&out.join(files::METRICS))?,
        });
        Ok(())
    }

    fn log_llm(&mut self, entry: serde_json::Value) {
        if let Some(l) = &mut self.logs {
            let _ = writeln!(l.llm, "{entry}");
        }
    }

    fn add_case(
        &mut self,
        bytes: Vec<u8>,
        provenance: Provenance,
        parent: Option<u64>,
        iteration: u64,
        target: Option<PathConstraint>,
        urgent: bool,
    ) -> bool {
        if !self.seen.insert(bytes.clone()) {
            self.metrics.duplicates += 1;
            return false;
        }
        let id = self.cases.len();
        self.cases.push(TestCase {
            id: id as u64,
            bytes,
            provenance,
            parent,
            iteration,
            target,
            outcome: None,
        });
        if urgent {
            self.high.push_back(id);
        } else {
            self.low.push_back(id);
        }
        true
    }

    fn load_seeds(&mut self) -> Result<(), HarnessError> {
        if let Some(dir) = self.cfg.input_dir.clone() {
            let mut paths: Vec<PathBuf> = fs::read_dir(&dir)
                .map_err(|e| HarnessError::io(&dir, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_file())
                .collect();
            paths.sort();
            for p in paths {
                let bytes = fs::read(&p).map_err(|e| HarnessError::io(&p, e))?;
                self.add_case(bytes, Provenance::SeedUser, None, 0, None, true);
            }
        }
        if self.cfg.initial_seeds {
            self.acquire(Timing::Initial, 0);
        }
        if self.cases.is_empty() {
            return Err(HarnessError::Config(
                "no seeds: the input directory is empty and initial seed acquisition is disabled".into(),
            ));
        }
        Ok(())
    }

    fn acquire(&mut self, timing: Timing, iteration: u64) {
        let Some(backend) = self.backend.as_deref() else {
            return;
        };
        let req = SeedRequest {
            timing,
            history: &self.history,
            format: &self.cfg.format,
            count: self.cfg.seed_count,
            model: &self.cfg.llm.model,
            random_len: self.cfg.random_seed_len,
        };
        let acq = acquire_seeds(&req, backend, &mut self.rng);
        self.log_llm(json!({
            "iteration": iteration,
            "kind": timing,
            "prompt": acq.prompt,
            "response": acq.response,
            "error": acq.error,
        }));
        for (bytes, prov) in acq.inputs {
            if self.add_case(bytes, prov, None, iteration, None, true) {
                self.metrics.seeds_acquired += 1;
            }
        }
    }

    fn next_case(&mut self) -> Option<usize> {
        if let Some(id) = self.high.pop_front().or_else(|| self.low.pop_front()) {
            return Some(id);
        }
        // queue drained: revisit the corpus in order
        if self.cases.is_empty() {
            return None;
        }
        let id = self.cycle % self.cases.len();
        self.cycle += 1;
        Some(id)
    }

    fn llm_candidate(&mut self, target: &PathConstraint, seed: &[u8], iteration: u64) -> Result<Vec<u8>, LlmError> {
        let backend = self
            .backend
            .as_deref()
            .ok_or_else(|| LlmError::Config("no LLM backend configured".into()))?;
        let (masked, prompt) = build_solve_complete_prompt(target, seed, &self.cfg.format);
        let hint = RequestHint::Solve {
            pc: target.clone(),
            seed: seed.to_vec(),
            masked: masked.clone(),
            format: self.cfg.format.clone(),
        };
        self.metrics.llm_requests += 1;
        let result = backend.complete(&LlmRequest::new(&self.cfg.llm.model, prompt.clone(), hint));
        let (response, parsed) = match result {
            Ok(r) => {
                let parsed = parse_response(&r.raw, &masked);
                (Some(r.raw), parsed)
            }
            Err(e) => (None, Err(e)),
        };
        self.log_llm(json!({
            "iteration": iteration,
            "kind": "solve",
            "loc": target.site.loc(),
            "prompt": prompt,
            "response": response,
            "error": parsed.as_ref().err().map(|e| e.to_string()),
        }));
        parsed
    }

    fn solve(&mut self, target: &PathConstraint, seed: &[u8], iteration: u64) -> Option<(Vec<u8>, Provenance)> {
        let unsolved = |m: &mut Metrics, e: &SolveError| match e {
            SolveError::Unsat => m.unsat += 1,
            SolveError::TooManyVars { .. } => m.unsolvable += 1,
        };
        let out = match self.cfg.solver_mode {
            SolverMode::Baseline => match self.solver.solve_fixed(target, seed) {
                Ok(b) => (b, Provenance::SolvedBaseline),
                Err(e) => {
                    unsolved(&mut self.metrics, &e);
                    return None;
                }
            },
            SolverMode::Llm => match self.llm_candidate(target, seed, iteration) {
                Ok(b) => {
                    if !evaluate_constraint(target, &b) {
                        self.metrics.llm_unsound += 1;
                    }
                    (b, Provenance::SolvedLlm)
                }
                Err(_) => {
                    self.metrics.llm_failures += 1;
                    return None;
                }
            },
            SolverMode::LlmValidated => {
                let candidate = self.llm_candidate(target, seed, iteration).unwrap_or_else(|_| {
                    self.metrics.llm_failures += 1;
                    seed.to_vec()
                });
                match validate_and_refine(target, &candidate, seed, &mut self.tree, &self.solver) {
                    Ok(Validated::Direct { bytes }) => {
                        self.metrics.solved_direct += 1;
                        (bytes, Provenance::SolvedLlm)
                    }
                    Ok(Validated::Refined { bytes, .. }) => {
                        self.metrics.solved_refined += 1;
                        (bytes, Provenance::SolvedRefined)
                    }
                    Err(ValidateError::UnsatDrop) => {
                        self.metrics.unsat += 1;
                        return None;
                    }
                    Err(ValidateError::Solver(e)) => {
                        unsolved(&mut self.metrics, &e);
                        return None;
                    }
                }
            }
        };
        self.metrics.solved += 1;
        Some(out)
    }

    fn step(&mut self, idx: usize, iteration: u64) {
        let bytes = self.cases[idx].bytes.clone();
        let trace = run_concolic_with(&self.program, &bytes, self.cfg.context_depth);
        let first_run = self.cases[idx].outcome.is_none();
        let summary = match self.tree.record_trace(&trace) {
            Ok(s) => s,
            Err(e) => {
                log::error!("test case {idx}: {e}");
                return;
            }
        };
        if first_run {
            self.cases[idx].outcome = Some(trace.outcome.clone());
            self.metrics.executed += 1;
            match &trace.outcome {
                Outcome::Accept => self.metrics.accepted += 1,
                Outcome::Reject => self.metrics.rejected += 1,
                Outcome::Crash(reason) => {
                    self.metrics.crashes += 1;
                    log::warn!("test case {idx} crashed: {reason}");
                    let path = self.cfg.failed_dir.join(self.cases[idx].file_name());
                    if self.logs.is_some() {
                        if let Err(e) = fs::write(&path, &bytes) {
                            log::error!("{}: {e}", path.display());
                        }
                    }
                }
            }
            self.history.record(&self.cases[idx], &trace, &self.tree);
        }
        self.metrics.constraints_collected += trace.constraints.len() as u64;

        let chosen: Vec<PathConstraint> = match self.cfg.select_mode {
            SelectMode::Ect => {
                let survivors = phase1_dedup(&trace);
                self.metrics.constraints_deduped += survivors.len() as u64;
                let sel = self.selector.phase2_select(&self.tree, &survivors);
                self.selector.record_dispatch(&sel.selected, iteration);
                if let Some(l) = &mut self.logs {
                    for d in &sel.decisions {
                        let w = d.weight.map_or("-".to_string(), |w| format!("{w:.2}"));
                        let decision = serde_json::to_value(d.decision).unwrap_or_default();
                        let decision = decision.as_str().unwrap_or("?");
                        let _ = writeln!(l.selection, "{iteration}\t{decision}\t{w}\t{}\t{}", d.loc, d.expr);
                    }
                }
                sel.selected.into_iter().map(|c| c.pc).collect()
            }
            SelectMode::All => {
                self.metrics.constraints_deduped += trace.constraints.len() as u64;
                if let Some(l) = &mut self.logs {
                    for pc in &trace.constraints {
                        let _ = writeln!(l.selection, "{iteration}\tselected\t-\t{}\t{}", pc.site.loc(), pc.expr);
                    }
                }
                trace.constraints.clone()
            }
        };
        self.metrics.constraints_dispatched += chosen.len() as u64;
        let urgent = summary.new_taken > 0;
        let parent = self.cases[idx].id;
        for pc in chosen {
            let target = pc.negated();
            if let Some((out, prov)) = self.solve(&target, &trace.input, iteration) {
                self.add_case(out, prov, Some(parent), iteration, Some(target), urgent);
            }
        }
    }

    fn snapshot(&mut self, iteration: u64) {
        let stats = self.tree.stats();
        let m = &mut self.metrics;
        m.iteration = iteration;
        m.generation = self.tree.generation();
        m.taken_nodes = stats.taken_nodes;
        m.total_nodes = stats.total_nodes;
        m.queued = self.high.len() + self.low.len();
        m.refresh_rates();
        if let Some(l) = &mut self.logs {
            let _ = writeln!(l.metrics, "{}", serde_json::to_string(m).expect("metrics serialize"));
        }
        self.series.push(m.clone());
    }

    /// Runs the loop until the iteration budget or the timeout is spent.
    pub fn run(&mut self) -> Result<Metrics, HarnessError> {
        self.open_outputs()?;
        self.run_loop()?;
        self.write_outputs()?;
        Ok(self.metrics.clone())
    }

    /// Runs without touching the filesystem except for reading seeds.
    pub fn run_in_memory(&mut self) -> Result<Metrics, HarnessError> {
        self.run_loop()?;
        Ok(self.metrics.clone())
    }

    fn run_loop(&mut self) -> Result<(), HarnessError> {
        let start = Instant::now();
        self.load_seeds()?;
        let mut last_poll = Duration::ZERO;
        let mut iteration = 0;
        loop {
            if self.cfg.max_iterations.is_some_and(|max| iteration >= max) || start.elapsed() >= self.cfg.timeout {
                break;
            }
            let Some(idx) = self.next_case() else { break };
            iteration += 1;
            self.step(idx, iteration);
            let now = start.elapsed();
            let poll = match self.cfg.saturation {
                Window::Iterations(_) => true,
                Window::Clock(_) => now.saturating_sub(last_poll) >= self.cfg.cov_timeout,
            };
            if poll {
                last_poll = now;
                if self.saturation.observe(self.tree.generation(), now, iteration) {
                    self.metrics.saturation_events += 1;
                    log::info!("coverage saturated at iteration {iteration}");
                    if self.cfg.fresh_seeds {
                        self.acquire(Timing::Fresh, iteration);
                    }
                    self.saturation.restart(now, iteration);
                }
            }
            self.snapshot(iteration);
        }
        Ok(())
    }

    fn write_outputs(&mut self) -> Result<(), HarnessError> {
        let out = self.cfg.output_dir.clone();
        if let Some(mut l) = self.logs.take() {
            for (w, name) in [
                (&mut l.selection, files::SELECTION_LOG),
                (&mut l.llm, files::LLM_LOG),
                (&mut l.metrics, files::METRICS),
            ] {
                w.flush().map_err(|e| HarnessError::io(&out.join(name), e))?;
            }
        }
        let write = |name: &str, text: String| {
            let p = out.join(name);
            fs::write(&p, text).map_err(|e| HarnessError::io(&p, e))
        };
        write(files::ECT, self.tree.to_json())?;
        let summary = json!({
            "target": self.cfg.target,
            "solver": self.cfg.solver_mode,
            "select": self.cfg.select_mode,
            "backend": self.backend.as_ref().map(|b| b.name()),
            "metrics": self.metrics,
            "ect": self.tree.stats(),
        });
        write(files::SUMMARY, serde_json::to_string_pretty(&summary).expect("summary serializes"))?;
        let mut prov = String::new();
        for t in &self.cases {
            let p = out.join(files::CORPUS).join(t.file_name());
            fs::write(&p, &t.bytes).map_err(|e| HarnessError::io(&p, e))?;
            prov.push_str(&serde_json::to_string(&ProvenanceRecord::of(t)).expect("record serializes"));
            prov.push('\n');
        }
        write(files::PROVENANCE, prov)
    }
}

pub fn run_campaign(cfg: CampaignConfig) -> Result<Metrics, HarnessError> {
    Campaign::new(cfg)?.run()
}
