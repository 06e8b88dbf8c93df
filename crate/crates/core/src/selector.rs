//! Two-phase path-constraint selection.
//!
//! Phase 1 drops constraints of one trace that differ from an earlier one
//! at the same loc only in their `k!n` indices. Phase 2 ranks the survivors
//! against the coverage tree by node weight
//! `alpha * untaken + beta * visit_cnt + gamma * depth` and drops those whose
//! target edge is already taken and that were dispatched before.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::ect::{EctError, EctTree};
use crate::symcore::{PathConstraint, Trace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum VisitTerm {
    /// `beta * visit_cnt`
    #[default]
    Literal,
    /// `beta / (1 + visit_cnt)`
    Inverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DepthSource {
    /// Depth of the arm node in the coverage tree.
    #[default]
    Tree,
    /// Call-stack size recorded on the node.
    Stack,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectorParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub top_k: usize,
    pub visit_term: VisitTerm,
    pub depth_source: DepthSource,
}

impl Default for SelectorParams {
    fn default() -> Self {
        SelectorParams {
            alpha: 1.0,
            beta: 3.0,
            gamma: 0.8,
            top_k: 16,
            visit_term: VisitTerm::Literal,
            depth_source: DepthSource::Tree,
        }
    }
}

impl SelectorParams {
    pub fn validate(&self) -> Result<(), String> {
        if ![self.alpha, self.beta, self.gamma].iter().all(|w| w.is_finite()) {
            return Err("selector weights must be finite".into());
        }
        if self.top_k == 0 {
            return Err("top_k must be at least 1".into());
        }
        Ok(())
    }

    /// Node weight from its three attributes.
    pub fn weight(&self, untaken: bool, visit_cnt: u64, depth: usize) -> f64 {
        let visit = match self.visit_term {
            VisitTerm::Literal => self.beta * visit_cnt as f64,
            VisitTerm::Inverse => self.beta / (1.0 + visit_cnt as f64),
        };
        self.alpha * if untaken { 1.0 } else { 0.0 } + visit + self.gamma * depth as f64
    }
}

/// Dedup key: loc plus the expression with every `k!n` index erased.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NormKey {
    pub loc: String,
    pub expr: String,
}

impl NormKey {
    pub fn of(pc: &PathConstraint) -> NormKey {
        NormKey {
            loc: pc.site.loc(),
            expr: pc.expr.normalized_text(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub pc: PathConstraint,
    pub weight: f64,
    pub norm_key: NormKey,
}

/// Keeps the first constraint per norm key, in trace order.
pub fn phase1_dedup(trace: &Trace) -> Vec<PathConstraint> {
    dedup_constraints(&trace.constraints)
}

pub fn dedup_constraints(constraints: &[PathConstraint]) -> Vec<PathConstraint> {
    let mut seen = HashSet::new();
    constraints
        .iter()
        .filter(|pc| seen.insert(NormKey::of(pc)))
        .cloned()
        .collect()
}

pub fn score(tree: &EctTree, pc: &PathConstraint, params: &SelectorParams) -> Result<f64, EctError> {
    let node = tree.node_for(pc)?;
    let untaken = tree.untaken_direction(pc)?;
    let depth = match params.depth_source {
        DepthSource::Tree => node.depth,
        DepthSource::Stack => node.cs,
    };
    Ok(params.weight(untaken, node.vc, depth))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Decision {
    Selected,
    /// Target edge taken and the key was dispatched in an earlier iteration.
    Redundant,
    /// Ranked below `top_k`.
    Ranked,
    UnknownSite,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecisionRecord {
    pub loc: String,
    pub expr: String,
    pub weight: Option<f64>,
    pub decision: Decision,
}

#[derive(Debug, Clone, Default)]
pub struct Selection {
    pub selected: Vec<Candidate>,
    pub decisions: Vec<DecisionRecord>,
}

/// Phase-2 selector holding the cross-run dispatch memory.
#[derive(Debug, Clone, Default)]
pub struct Selector {
    pub params: SelectorParams,
    dispatched: HashMap<NormKey, u64>,
}

impl Selector {
    pub fn new(params: SelectorParams) -> Self {
        Selector {
            params,
            dispatched: HashMap::new(),
        }
    }

    pub fn was_dispatched(&self, key: &NormKey) -> bool {
        self.dispatched.contains_key(key)
    }

    pub fn dispatched_count(&self) -> usize {
        self.dispatched.len()
    }

    /// Ranks phase-1 survivors; at most `top_k` are selected.
    pub fn phase2_select(&self, tree: &EctTree, candidates: &[PathConstraint]) -> Selection {
        let mut sel = Selection::default();
        let mut ranked = Vec::with_capacity(candidates.len());
        for pc in candidates {
            let key = NormKey::of(pc);
            let (weight, untaken) = match (score(tree, pc, &self.params), tree.untaken_direction(pc)) {
                (Ok(w), Ok(u)) => (w, u),
                _ => {
                    sel.decisions.push(DecisionRecord {
                        loc: key.loc,
                        expr: pc.expr.to_string(),
                        weight: None,
                        decision: Decision::UnknownSite,
                    });
                    continue;
                }
            };
            if !untaken && self.dispatched.contains_key(&key) {
                sel.decisions.push(DecisionRecord {
                    loc: key.loc,
                    expr: pc.expr.to_string(),
                    weight: Some(weight),
                    decision: Decision::Redundant,
                });
                continue;
            }
            ranked.push(Candidate {
                pc: pc.clone(),
                weight,
                norm_key: key,
            });
        }
        ranked.sort_by(|a, b| {
            b.weight
                .total_cmp(&a.weight)
                .then(a.pc.order.cmp(&b.pc.order))
                .then_with(|| a.norm_key.cmp(&b.norm_key))
        });
        for (i, c) in ranked.into_iter().enumerate() {
            let decision = if i < self.params.top_k {
                Decision::Selected
            } else {
                Decision::Ranked
            };
            sel.decisions.push(DecisionRecord {
                loc: c.norm_key.loc.clone(),
                expr: c.pc.expr.to_string(),
                weight: Some(c.weight),
                decision,
            });
            if decision == Decision::Selected {
                sel.selected.push(c);
            }
        }
        sel
    }

    pub fn record_dispatch(&mut self, candidates: &[Candidate], iteration: u64) {
        for c in candidates {
            self.dispatched.entry(c.norm_key.clone()).or_insert(iteration);
        }
    }
}
