//! Property tests for cross-module invariants.

mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;

use ect_concolic::ect::{EctNode, EctTree};
use ect_concolic::harness::{SelectMode, SolverMode};
use ect_concolic::llm::{
    build_solve_complete_prompt, parse_response, validate_and_refine, LlmBackend, LlmRequest, MockLlm, MockMode,
    RequestHint, Validated,
};
use ect_concolic::seeds::{build_fresh_seed_prompt, HistoryRecord};
use ect_concolic::selector::{dedup_constraints, NormKey, SelectorParams, Selector};
use ect_concolic::solver::{evaluate_constraint, Solver};
use ect_concolic::symcore::{
    parse_expr, run_concolic, BranchSite, Format, Outcome, PathConstraint, ProgramUnderTest, SymInput, TraceCtx,
};
use ect_concolic::targets::{self, JSON_SUBSET};
use ect_concolic::testcase::{Provenance, TestCase};

fn program() -> impl Strategy<Value = ProgramUnderTest> {
    prop::sample::select(targets::all().to_vec())
}

/// A bundled seed with a few byte edits, biased towards grammar bytes.
fn input_for(p: &ProgramUnderTest) -> impl Strategy<Value = Vec<u8>> {
    let seeds: Vec<Vec<u8>> = common::seeds_for(p.name).iter().map(|s| s.as_bytes().to_vec()).collect();
    let byte = prop_oneof![
        3 => prop::sample::select(b"{}[]()\",:=;+-*/0123456789 \nabtrue".to_vec()),
        1 => any::<u8>(),
    ];
    (prop::sample::select(seeds), prop::collection::vec((any::<prop::sample::Index>(), byte), 0..4)).prop_map(
        |(mut s, edits)| {
            for (i, b) in edits {
                if s.is_empty() {
                    s.push(b);
                } else {
                    let at = i.index(s.len());
                    s[at] = b;
                }
            }
            s
        },
    )
}

fn case() -> impl Strategy<Value = (ProgramUnderTest, Vec<u8>)> {
    program().prop_flat_map(|p| (Just(p.clone()), input_for(&p)))
}

/// `k!n` indices read off the printed expression.
fn printed_positions(pc: &PathConstraint) -> BTreeSet<usize> {
    let text = pc.expr.to_string();
    text.split("k!")
        .skip(1)
        .map(|rest| rest.chars().take_while(char::is_ascii_digit).collect::<String>().parse().unwrap())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn concolic_runs_are_deterministic((p, input) in case()) {
        let a = serde_json::to_string(&run_concolic(&p, &input)).unwrap();
        let b = serde_json::to_string(&run_concolic(&p, &input)).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn constraints_agree_with_input((p, input) in case()) {
        let trace = run_concolic(&p, &input);
        for pc in &trace.constraints {
            prop_assert!(pc.holds_on(&input));
            prop_assert_eq!(&pc.positions, &printed_positions(pc));
            prop_assert_eq!(&pc.positions, &pc.expr.positions());
        }
    }

    #[test]
    fn negated_solutions_reach_the_site((p, input) in case(), pick in any::<prop::sample::Index>()) {
        let trace = run_concolic(&p, &input);
        prop_assume!(!trace.constraints.is_empty());
        let at = pick.index(trace.constraints.len());
        let pc = &trace.constraints[at];
        let solver = Solver::default();
        if let Ok(y) = solver.solve_fixed(&pc.negated(), &input) {
            prop_assert!(evaluate_constraint(&pc.negated(), &y));
            // only constrained bytes move
            for (i, (a, b)) in input.iter().zip(&y).enumerate() {
                prop_assert!(a == b || pc.positions.contains(&i));
            }
            // the path prefix must survive for the site to be reached again
            if trace.constraints[..at].iter().all(|e| e.holds_on(&y)) {
                let replay = run_concolic(&p, &y);
                prop_assert!(replay.visited_locs().contains(&pc.site.head_loc()));
            }
        }
    }

    #[test]
    fn taken_nodes_never_decrease(inputs in prop::collection::vec(input_for(&JSON_SUBSET), 1..12)) {
        let mut tree = EctTree::new();
        let mut last = 0;
        for input in inputs {
            tree.record_trace(&run_concolic(&JSON_SUBSET, &input)).unwrap();
            let now = tree.stats().taken_nodes;
            prop_assert!(now >= last);
            last = now;
            prop_assert_eq!(tree.to_json(), tree.to_json());
        }
    }

    #[test]
    fn switch_children_match_registered_cases((p, input) in case()) {
        let trace = run_concolic(&p, &input);
        let mut tree = EctTree::new();
        tree.record_trace(&trace).unwrap();
        for (head, cases) in &trace.switch_cases {
            let node: EctNode = serde_json::from_str(&tree.subtree_json(head).unwrap()).unwrap();
            let arms: BTreeSet<String> = node.ch.iter().map(|c| c.loc.clone()).collect();
            let expected: BTreeSet<String> = cases.iter().map(|c| format!("{head}_{c}")).collect();
            let default = format!("{head}_default");
            prop_assert!(expected.is_subset(&arms));
            prop_assert!(arms.iter().all(|a| expected.contains(a) || *a == default));
        }
    }

    #[test]
    fn phase1_keeps_every_norm_key((p, input) in case()) {
        let trace = run_concolic(&p, &input);
        let kept = dedup_constraints(&trace.constraints);
        let keys = |pcs: &[PathConstraint]| pcs.iter().map(NormKey::of).collect::<BTreeSet<_>>();
        prop_assert_eq!(keys(&trace.constraints), keys(&kept));
        prop_assert_eq!(keys(&kept).len(), kept.len());
    }

    #[test]
    fn selection_ignores_candidate_order((p, input) in case(), seed in any::<u64>(), top_k in 1usize..8) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let trace = run_concolic(&p, &input);
        let mut tree = EctTree::new();
        tree.record_trace(&trace).unwrap();
        let mut cands = dedup_constraints(&trace.constraints);
        // orders are trace positions; keep them unique across the shuffle
        let selector = Selector::new(SelectorParams { top_k, ..SelectorParams::default() });
        let pick = |c: &[PathConstraint]| selector
            .phase2_select(&tree, c)
            .selected
            .into_iter()
            .map(|c| c.norm_key)
            .collect::<BTreeSet<_>>();
        let before = pick(&cands);
        cands.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(before, pick(&cands));
    }

    #[test]
    fn untaken_first_without_visit_or_depth_terms((p, input) in case()) {
        let trace = run_concolic(&p, &input);
        let mut tree = EctTree::new();
        tree.record_trace(&trace).unwrap();
        let cands = dedup_constraints(&trace.constraints);
        let params = SelectorParams { beta: 0.0, gamma: 0.0, top_k: 1, ..SelectorParams::default() };
        let sel = Selector::new(params).phase2_select(&tree, &cands);
        let any_untaken = cands.iter().any(|pc| tree.untaken_direction(pc).unwrap());
        if any_untaken {
            prop_assert!(tree.untaken_direction(&sel.selected[0].pc).unwrap());
        }
    }

    #[test]
    fn refinement_matches_baseline_solver(
        pos in 0usize..12,
        op in prop::sample::select(vec!["=", "distinct", "bvult", "bvugt", "bvsle", "bvsge"]),
        k in 0u32..256,
        taken in any::<bool>(),
        seed in prop::collection::vec(any::<u8>(), 0..16),
    ) {
        let expr = parse_expr(&format!("({op} (concat #x000000 k!{pos}) #x{k:08x})")).unwrap();
        let pc = PathConstraint {
            site: BranchSite::new_if("p.c", "f", 1, 1),
            positions: expr.positions(),
            expr,
            taken,
            call_stack_size: 0,
            context: Vec::new(),
            order: 0,
        };
        let solver = Solver::default();
        prop_assume!(solver.get_solution(&pc).is_ok() && solver.get_solution(&pc.negated()).is_ok());
        let (masked, prompt) = build_solve_complete_prompt(&pc, &seed, &Format::Ini);
        prop_assert_eq!(&prompt, &build_solve_complete_prompt(&pc, &seed, &Format::Ini).1);
        let hint = RequestHint::Solve { pc: pc.clone(), seed: seed.clone(), masked: masked.clone(), format: Format::Ini };
        let raw = MockLlm::new(MockMode::Adversarial).complete(&LlmRequest::new("m", prompt, hint)).unwrap().raw;
        let cand = parse_response(&raw, &masked).unwrap();
        let mut tree = EctTree::new();
        let out = validate_and_refine(&pc, &cand, &seed, &mut tree, &solver).unwrap();
        let Validated::Refined { bytes, assignment } = out else {
            return Err(TestCaseError::fail("adversarial candidate passed"));
        };
        prop_assert_eq!(&assignment, &solver.get_solution(&pc).unwrap());
        prop_assert_eq!(bytes[pos], solver.solve_fixed(&pc, &seed).map(|b| b[pos]).unwrap_or(assignment[&pos]));
    }

    #[test]
    fn fresh_prompts_name_an_uncovered_loc(inputs in prop::collection::vec(input_for(&JSON_SUBSET), 1..6)) {
        let mut tree = EctTree::new();
        let mut h = HistoryRecord::new();
        for (i, input) in inputs.iter().enumerate() {
            let trace = run_concolic(&JSON_SUBSET, input);
            tree.record_trace(&trace).unwrap();
            h.record(&TestCase::seed(i as u64, input.clone(), Provenance::SeedUser, 0), &trace, &tree);
        }
        let prompt = build_fresh_seed_prompt(&h, &Format::Json, 4);
        if let Some(first) = h.uncovered.first() {
            prop_assert!(prompt.contains(first.as_str()));
        }
    }
}

#[test]
fn same_site_under_different_callers_gets_distinct_nodes() {
    let input = b"a";
    let sym = SymInput::new(input.to_vec());
    let mut ctx = TraceCtx::new(input);
    let site = BranchSite::new_if("lex.c", "is_ident", 4, 9);
    for caller in ["parse_key", "parse_value"] {
        ctx.enter_fn(caller);
        ctx.if_(&site, sym.at(0).unwrap().eq(b'a')).unwrap();
        ctx.exit_fn().unwrap();
    }
    let mut tree = EctTree::new();
    tree.record_trace(&ctx.finish(Outcome::Accept)).unwrap();
    let ids: BTreeSet<usize> = tree.branch_nodes().filter(|n| n.loc == site.with_br(0).loc()).map(|n| n.id).collect();
    assert_eq!(ids.len(), 2);
}

#[test]
fn campaign_counters_are_monotone() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = common::config(tmp.path(), "expr_lang", common::EXPR_SEEDS, 120);
    let c = common::run_in_memory(cfg, SolverMode::LlmValidated, SelectMode::Ect);
    for w in c.series().windows(2) {
        let (a, b) = (&w[0], &w[1]);
        assert!(b.executed >= a.executed && b.accepted >= a.accepted && b.solved >= a.solved);
        assert!(b.constraints_dispatched >= a.constraints_dispatched && b.taken_nodes >= a.taken_nodes);
        assert!((0.0..=1.0).contains(&b.pass_rate) && (0.0..=1.0).contains(&b.direct_solve_rate));
    }
}
