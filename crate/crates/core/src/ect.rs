//! Expressive coverage tree.
//!
//! Nodes are branch heads and arms named by their loc string, hung under
//! call-context nodes (`fn:<name>`, one per frame of the function-name
//! chain). A head has one child per arm: `then`/`else` for an `if`, one per
//! registered case value (plus the default edge once seen) for a `switch`.
//! Untaken arms are materialized as soon as their head is visited.
//!
//! The JSON form uses the field names `loc`, `tp`, `tk`, `cs`, `vc`, `br`
//! and `ch`; leaves omit `ch` and the synthetic root carries only `loc` and
//! `ch`.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::symcore::{BrType, PathConstraint, Trace, SWITCH_DEFAULT, SWITCH_HEAD};

pub const TP_IF: u8 = 0;
pub const TP_SWITCH: u8 = 1;
/// Call-context node.
pub const TP_CALL: u8 = 2;
pub const ROOT_LOC: &str = "root";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EctError {
    #[error("site {loc} recorded with type {existing} and {found}")]
    SiteConflict { loc: String, existing: u8, found: u8 },
    #[error("unknown site {0}")]
    UnknownSite(String),
    #[error("schema error: {0}")]
    Schema(String),
}

/// Tree form of a node, the unit of the JSON document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EctNode {
    pub loc: String,
    pub tp: u8,
    pub tk: u8,
    pub cs: usize,
    pub vc: u64,
    pub br: i64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ch: Vec<EctNode>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RootDoc {
    loc: String,
    #[serde(default)]
    ch: Vec<EctNode>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct UpdateSummary {
    pub new_taken: usize,
    pub total_taken: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EctStats {
    /// Taken branch nodes (heads and arms).
    pub taken_nodes: usize,
    /// All branch nodes.
    pub total_nodes: usize,
    pub taken_if: usize,
    pub taken_switch: usize,
    pub context_nodes: usize,
}

/// Read-only view of one node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeInfo<'a> {
    pub id: usize,
    pub loc: &'a str,
    pub tp: u8,
    pub tk: u8,
    pub cs: usize,
    pub vc: u64,
    pub br: i64,
    pub depth: usize,
}

#[derive(Debug, Clone)]
struct Slot {
    loc: String,
    tp: u8,
    tk: u8,
    cs: usize,
    vc: u64,
    br: i64,
    depth: usize,
    parent: Option<usize>,
    children: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct EctTree {
    slots: Vec<Slot>,
    index: HashMap<(usize, String), usize>,
    generation: u64,
    expected: BTreeMap<String, u64>,
}

impl Default for EctTree {
    fn default() -> Self {
        Self::new()
    }
}

impl EctTree {
    pub fn new() -> Self {
        EctTree {
            slots: vec![Slot {
                loc: ROOT_LOC.to_string(),
                tp: TP_CALL,
                tk: 0,
                cs: 0,
                vc: 0,
                br: SWITCH_HEAD,
                depth: 0,
                parent: None,
                children: Vec::new(),
            }],
            index: HashMap::new(),
            generation: 0,
            expected: BTreeMap::new(),
        }
    }

    /// Bumped whenever a trace turns at least one branch node taken.
    pub fn generation(&self) -> u64 {
        self.generation
    }

    fn info(&self, id: usize) -> NodeInfo<'_> {
        let s = &self.slots[id];
        NodeInfo {
            id,
            loc: &s.loc,
            tp: s.tp,
            tk: s.tk,
            cs: s.cs,
            vc: s.vc,
            br: s.br,
            depth: s.depth,
        }
    }

    fn child(
        &mut self,
        parent: usize,
        loc: &str,
        tp: u8,
        br: i64,
        cs: usize,
    ) -> Result<usize, EctError> {
        if let Some(&id) = self.index.get(&(parent, loc.to_string())) {
            let existing = self.slots[id].tp;
            if existing != tp {
                return Err(EctError::SiteConflict {
                    loc: loc.to_string(),
                    existing,
                    found: tp,
                });
            }
            return Ok(id);
        }
        let id = self.slots.len();
        let depth = self.slots[parent].depth + 1;
        self.slots.push(Slot {
            loc: loc.to_string(),
            tp,
            tk: 0,
            cs,
            vc: 0,
            br,
            depth,
            parent: Some(parent),
            children: Vec::new(),
        });
        self.slots[parent].children.push(id);
        self.index.insert((parent, loc.to_string()), id);
        Ok(id)
    }

    /// Marks a node visited; returns 1 if it was untaken before.
    fn touch(&mut self, id: usize, cs: usize) -> usize {
        let s = &mut self.slots[id];
        s.vc += 1;
        s.cs = cs;
        if s.tk == 0 {
            s.tk = 1;
            1
        } else {
            0
        }
    }

    fn context_node(&mut self, context: &[std::borrow::Cow<'static, str>]) -> Result<usize, EctError> {
        let mut parent = 0;
        for (i, func) in context.iter().enumerate() {
            let id = self.child(parent, &format!("fn:{func}"), TP_CALL, SWITCH_HEAD, i + 1)?;
            self.touch(id, i + 1);
            parent = id;
        }
        Ok(parent)
    }

    pub fn record_trace(&mut self, trace: &Trace) -> Result<UpdateSummary, EctError> {
        let mut new_taken = 0;
        for visit in &trace.visits {
            let site = &visit.site;
            let cs = visit.call_stack_size;
            let tp = site.br_type.code();
            let parent = self.context_node(&visit.context)?;
            let head_loc = site.head_loc();
            let head = self.child(parent, &head_loc, tp, SWITCH_HEAD, cs)?;
            new_taken += self.touch(head, cs);
            let arm = self.child(head, &site.loc(), tp, site.br_id, cs)?;
            new_taken += self.touch(arm, cs);
            match site.br_type {
                BrType::If => {
                    let other = site.with_br(1 - site.br_id);
                    self.child(head, &other.loc(), tp, other.br_id, cs)?;
                }
                BrType::Switch => {
                    if let Some(cases) = trace.switch_cases.get(&head_loc) {
                        for &c in cases {
                            let case = site.with_br(c as i64);
                            self.child(head, &case.loc(), tp, case.br_id, cs)?;
                        }
                    }
                }
            }
        }
        if new_taken > 0 {
            self.generation += 1;
        }
        Ok(UpdateSummary {
            new_taken,
            total_taken: self.stats().taken_nodes,
        })
    }

    fn find_arm(&self, pc: &PathConstraint) -> Option<usize> {
        let mut parent = 0;
        for func in &pc.context {
            parent = *self.index.get(&(parent, format!("fn:{func}")))?;
        }
        let head = *self.index.get(&(parent, pc.site.head_loc()))?;
        self.index.get(&(head, pc.site.loc())).copied()
    }

    /// The arm node a constraint was recorded at.
    pub fn node_for(&self, pc: &PathConstraint) -> Result<NodeInfo<'_>, EctError> {
        self.find_arm(pc)
            .map(|id| self.info(id))
            .ok_or_else(|| EctError::UnknownSite(pc.site.loc()))
    }

    /// True iff the edge the negation of `pc` targets has not been taken.
    pub fn untaken_direction(&self, pc: &PathConstraint) -> Result<bool, EctError> {
        let arm = self
            .find_arm(pc)
            .ok_or_else(|| EctError::UnknownSite(pc.site.loc()))?;
        let head = self.slots[arm].parent.expect("arm has a head");
        let siblings = &self.slots[head].children;
        let untaken_br = |br: i64| {
            siblings
                .iter()
                .find(|&&id| self.slots[id].br == br)
                .is_none_or(|&id| self.slots[id].tk == 0)
        };
        Ok(match pc.site.br_type {
            BrType::If => untaken_br(1 - pc.site.br_id),
            BrType::Switch if pc.site.br_id == SWITCH_DEFAULT => match pc.expr.compared_constant() {
                Some(c) => untaken_br(c as i64),
                None => false,
            },
            BrType::Switch => siblings
                .iter()
                .any(|&id| id != arm && self.slots[id].tk == 0),
        })
    }

    /// Depth of the shallowest node named `loc`; root children are at 1.
    pub fn node_depth(&self, loc: &str) -> Result<usize, EctError> {
        self.slots
            .iter()
            .skip(1)
            .filter(|s| s.loc == loc)
            .map(|s| s.depth)
            .min()
            .ok_or_else(|| EctError::UnknownSite(loc.to_string()))
    }

    pub fn find_loc(&self, loc: &str) -> Option<NodeInfo<'_>> {
        (1..self.slots.len())
            .find(|&id| self.slots[id].loc == loc)
            .map(|id| self.info(id))
    }

    /// Branch nodes (heads and arms) in creation order.
    pub fn branch_nodes(&self) -> impl Iterator<Item = NodeInfo<'_>> {
        (1..self.slots.len())
            .filter(|&id| self.slots[id].tp != TP_CALL)
            .map(|id| self.info(id))
    }

    pub fn stats(&self) -> EctStats {
        let mut st = EctStats::default();
        for s in self.slots.iter().skip(1) {
            if s.tp == TP_CALL {
                st.context_nodes += 1;
                continue;
            }
            st.total_nodes += 1;
            if s.tk == 1 {
                st.taken_nodes += 1;
                match s.tp {
                    TP_IF => st.taken_if += 1,
                    _ => st.taken_switch += 1,
                }
            }
        }
        st
    }

    /// Records that a validated test case is expected to take `loc`.
    pub fn mark_expected(&mut self, loc: &str) {
        *self.expected.entry(loc.to_string()).or_default() += 1;
    }

    pub fn expected_count(&self, loc: &str) -> u64 {
        self.expected.get(loc).copied().unwrap_or(0)
    }

    fn to_node(&self, id: usize) -> EctNode {
        let s = &self.slots[id];
        EctNode {
            loc: s.loc.clone(),
            tp: s.tp,
            tk: s.tk,
            cs: s.cs,
            vc: s.vc,
            br: s.br,
            ch: s.children.iter().map(|&c| self.to_node(c)).collect(),
        }
    }

    /// Top-level nodes in tree form.
    pub fn roots(&self) -> Vec<EctNode> {
        self.slots[0]
            .children
            .iter()
            .map(|&c| self.to_node(c))
            .collect()
    }

    pub fn to_json(&self) -> String {
        let doc = RootDoc {
            loc: ROOT_LOC.to_string(),
            ch: self.roots(),
        };
        serde_json::to_string_pretty(&doc).expect("tree serializes")
    }

    /// JSON of the first node named `loc`, without the root wrapper.
    pub fn subtree_json(&self, loc: &str) -> Option<String> {
        let node = self.find_loc(loc)?;
        Some(serde_json::to_string_pretty(&self.to_node(node.id)).expect("node serializes"))
    }

    /// Parses either a full document (`{"loc":"root","ch":[...]}`) or a
    /// single partial subtree, which becomes the only child of the root.
    pub fn from_json(text: &str) -> Result<EctTree, EctError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| EctError::Schema(e.to_string()))?;
        let is_root = value
            .as_object()
            .is_some_and(|o| !o.contains_key("tp") && o.get("loc").and_then(|l| l.as_str()) == Some(ROOT_LOC));
        let top: Vec<EctNode> = if is_root {
            let doc: RootDoc =
                serde_json::from_value(value).map_err(|e| EctError::Schema(e.to_string()))?;
            doc.ch
        } else {
            vec![serde_json::from_value(value).map_err(|e| EctError::Schema(e.to_string()))?]
        };
        let mut tree = EctTree::new();
        for node in &top {
            tree.insert(0, node)?;
        }
        Ok(tree)
    }

    fn insert(&mut self, parent: usize, node: &EctNode) -> Result<(), EctError> {
        if node.tp > TP_CALL || node.tk > 1 {
            return Err(EctError::Schema(format!("bad tp/tk on {}", node.loc)));
        }
        if (node.tk == 1) != (node.vc >= 1) {
            return Err(EctError::Schema(format!(
                "tk={} with vc={} on {}",
                node.tk, node.vc, node.loc
            )));
        }
        if self.index.contains_key(&(parent, node.loc.clone())) {
            return Err(EctError::Schema(format!("duplicate sibling {}", node.loc)));
        }
        let id = self.child(parent, &node.loc, node.tp, node.br, node.cs)?;
        let s = &mut self.slots[id];
        s.tk = node.tk;
        s.vc = node.vc;
        for c in &node.ch {
            self.insert(id, c)?;
        }
        Ok(())
    }
}

impl PartialEq for EctTree {
    fn eq(&self, other: &Self) -> bool {
        self.roots() == other.roots()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symcore::{BranchSite, Outcome, SymInput, TraceCtx};
    use proptest::prelude::*;

    pub(crate) const SAMPLE_ECT: &str = r#"{
"loc": "jslex.c_jsY_lexx_9_3_switch", "tp": 1, "tk": 1, "cs": 10, "vc": 1, "br": -1,
    "ch": [
	{ "loc": "jslex.c_jsY_lexx_9_3_switch_40",
		  "tp": 1, "tk": 1, "cs": 10, "vc": 1, "br": 40 },
	{ "loc": "jslex.c_jsY_lexx_9_3_switch_41",
		  "tp": 1, "tk": 1, "cs": 10, "vc": 1, "br": 41 },
	{ "loc": "jslex.c_jsY_lexx_9_3_switch_44",
		  "tp": 1, "tk": 1, "cs": 10, "vc": 1, "br": 44 }
	]
}"#;

    fn lexer() -> BranchSite {
        BranchSite::new_switch("jslex.c", "jsY_lexx", 9, 3)
    }

    fn switch_trace(input: &[u8], depth: usize) -> Trace {
        let sym = SymInput::new(input.to_vec());
        let mut ctx = TraceCtx::new(input);
        for _ in 0..depth {
            ctx.enter_fn("frame");
        }
        for i in 0..input.len() {
            ctx.switch(&lexer(), &sym.at(i).unwrap(), b"(),").unwrap();
        }
        ctx.finish(Outcome::Accept)
    }

    fn if_trace(input: &[u8], funcs: &[&'static str]) -> Trace {
        let sym = SymInput::new(input.to_vec());
        let mut ctx = TraceCtx::new(input);
        for f in funcs {
            ctx.enter_fn(f);
        }
        let site = BranchSite::new_if("t.c", "f", 1, 1);
        for i in 0..input.len() {
            ctx.if_(&site, sym.at(i).unwrap().eq(b'a')).unwrap();
        }
        ctx.finish(Outcome::Accept)
    }

    #[test]
    fn sample_document_parses() {
        let tree = EctTree::from_json(SAMPLE_ECT).unwrap();
        let roots = tree.roots();
        assert_eq!(roots.len(), 1);
        assert_eq!(roots[0].ch.len(), 3);
        let again = EctTree::from_json(&tree.to_json()).unwrap();
        assert_eq!(again, tree);
        assert_eq!(tree.stats().taken_nodes, 4);
        assert_eq!(
            tree.node_depth("jslex.c_jsY_lexx_9_3_switch_40").unwrap(),
            tree.node_depth("jslex.c_jsY_lexx_9_3_switch").unwrap() + 1
        );
    }

    #[test]
    fn three_case_switch_trace() {
        let mut tree = EctTree::new();
        let s = tree.record_trace(&switch_trace(b"(),", 10)).unwrap();
        assert_eq!(s.new_taken, 4);
        let head = tree.find_loc("jslex.c_jsY_lexx_9_3_switch").unwrap();
        assert_eq!(head.cs, 10);
        let sub: EctNode =
            serde_json::from_str(&tree.subtree_json("jslex.c_jsY_lexx_9_3_switch").unwrap())
                .unwrap();
        assert_eq!(sub.ch.len(), 3);
        for (c, br) in sub.ch.iter().zip([40, 41, 44]) {
            assert_eq!((c.tk, c.vc, c.br, c.cs), (1, 1, br, 10));
        }
        assert_eq!(tree.stats().taken_nodes, 4);
        // the call-context chain is capped at DEFAULT_CONTEXT_DEPTH frames
        assert_eq!(tree.stats().context_nodes, crate::symcore::DEFAULT_CONTEXT_DEPTH);
    }

    #[test]
    fn if_then_only_materializes_else() {
        let mut tree = EctTree::new();
        tree.record_trace(&if_trace(b"a", &[])).unwrap();
        let head: EctNode =
            serde_json::from_str(&tree.subtree_json("t.c_f_1_1_if").unwrap()).unwrap();
        let arms: Vec<_> = head.ch.iter().map(|c| (c.br, c.tk, c.vc)).collect();
        assert_eq!(arms, vec![(0, 1, 1), (1, 0, 0)]);
    }

    #[test]
    fn replay_doubles_visit_counts() {
        let mut tree = EctTree::new();
        let t = if_trace(b"a", &[]);
        let first = tree.record_trace(&t).unwrap();
        let g = tree.generation();
        let second = tree.record_trace(&t).unwrap();
        assert_eq!(first.new_taken, 2);
        assert_eq!(second.new_taken, 0);
        assert_eq!(tree.generation(), g);
        assert_eq!(tree.find_loc("t.c_f_1_1_if_0").unwrap().vc, 2);
    }

    #[test]
    fn untaken_direction_if() {
        let mut tree = EctTree::new();
        let t = if_trace(b"a", &[]);
        tree.record_trace(&t).unwrap();
        assert!(tree.untaken_direction(&t.constraints[0]).unwrap());
        let both = if_trace(b"ab", &[]);
        tree.record_trace(&both).unwrap();
        assert!(!tree.untaken_direction(&t.constraints[0]).unwrap());
    }

    #[test]
    fn untaken_direction_switch() {
        let mut tree = EctTree::new();
        let t = switch_trace(b"(", 0);
        tree.record_trace(&t).unwrap();
        // 1 of 3 cases taken: ')' and ',' remain
        assert!(tree.untaken_direction(&t.constraints[0]).unwrap());
        let all = switch_trace(b"(),", 0);
        tree.record_trace(&all).unwrap();
        assert!(!tree.untaken_direction(&t.constraints[0]).unwrap());
        // default edge: negating `distinct k '('` targets the taken '(' case
        let d = switch_trace(b"z", 0);
        tree.record_trace(&d).unwrap();
        assert!(d.constraints.iter().all(|pc| !tree.untaken_direction(pc).unwrap()));
        let sub: EctNode =
            serde_json::from_str(&tree.subtree_json("jslex.c_jsY_lexx_9_3_switch").unwrap())
                .unwrap();
        assert_eq!(sub.ch.len(), 4);
    }

    #[test]
    fn unknown_site() {
        let tree = EctTree::new();
        let t = if_trace(b"a", &[]);
        assert!(matches!(
            tree.untaken_direction(&t.constraints[0]),
            Err(EctError::UnknownSite(_))
        ));
        assert!(tree.node_depth("nope").is_err());
    }

    #[test]
    fn depths() {
        let mut tree = EctTree::new();
        tree.record_trace(&if_trace(b"a", &[])).unwrap();
        assert_eq!(tree.node_depth("t.c_f_1_1_if").unwrap(), 1);
        assert_eq!(tree.node_depth("t.c_f_1_1_if_0").unwrap(), 2);
    }

    #[test]
    fn context_sensitive_nodes() {
        let mut tree = EctTree::new();
        tree.record_trace(&if_trace(b"a", &["main", "g"])).unwrap();
        tree.record_trace(&if_trace(b"a", &["main", "h"])).unwrap();
        let heads = tree
            .branch_nodes()
            .filter(|n| n.loc == "t.c_f_1_1_if")
            .count();
        assert_eq!(heads, 2);
        assert_eq!(tree.node_depth("t.c_f_1_1_if").unwrap(), 3);
    }

    #[test]
    fn site_conflict() {
        let mut tree = EctTree::from_json(
            r#"{"loc":"root","ch":[{"loc":"t.c_f_1_1_if","tp":1,"tk":1,"cs":0,"vc":1,"br":-1}]}"#,
        )
        .unwrap();
        assert!(matches!(
            tree.record_trace(&if_trace(b"a", &[])),
            Err(EctError::SiteConflict { .. })
        ));
    }

    #[test]
    fn empty_tree_document() {
        let t = EctTree::new();
        let v: serde_json::Value = serde_json::from_str(&t.to_json()).unwrap();
        assert_eq!(v, serde_json::json!({"loc": "root", "ch": []}));
        assert_eq!(t.stats(), EctStats::default());
    }

    #[test]
    fn schema_errors() {
        for bad in [
            r#"{"loc":"a","tp":0,"tk":1,"cs":0,"vc":1}"#,
            r#"{"loc":"a","tp":0,"tk":1,"cs":0,"vc":1,"br":0,"extra":1}"#,
            r#"{"loc":"a","tp":0,"tk":1,"cs":0,"vc":0,"br":0}"#,
            r#"{"loc":"root","ch":[],"x":1}"#,
            r#"[1,2]"#,
        ] {
            assert!(matches!(EctTree::from_json(bad), Err(EctError::Schema(_))), "{bad}");
        }
    }

    fn arb_node(depth: u32) -> impl Strategy<Value = EctNode> {
        let leaf = (0u8..3, 0u8..2, 0usize..20, 1u64..5, -2i64..256).prop_map(
            |(tp, tk, cs, vc, br)| EctNode {
                loc: String::new(),
                tp,
                tk,
                cs,
                vc: if tk == 1 { vc } else { 0 },
                br,
                ch: vec![],
            },
        );
        leaf.prop_recursive(depth, 24, 4, |inner| {
            (inner.clone(), prop::collection::vec(inner, 0..4)).prop_map(|(mut n, ch)| {
                n.ch = ch;
                n
            })
        })
    }

    fn name(node: &mut EctNode, prefix: &str) {
        node.loc = format!("{prefix}_{}", node.br);
        for (i, c) in node.ch.iter_mut().enumerate() {
            name(c, &format!("{prefix}{i}"));
        }
    }

    proptest! {
        #[test]
        fn json_round_trip(mut roots in prop::collection::vec(arb_node(3), 0..4)) {
            for (i, r) in roots.iter_mut().enumerate() {
                name(r, &format!("n{i}"));
            }
            let doc = serde_json::to_string(&RootDoc { loc: ROOT_LOC.into(), ch: roots.clone() }).unwrap();
            let tree = EctTree::from_json(&doc).unwrap();
            prop_assert_eq!(tree.roots(), roots);
            let again = EctTree::from_json(&tree.to_json()).unwrap();
            prop_assert_eq!(again.to_json(), tree.to_json());
        }
    }
}
