//! Deterministic offline stand-in for an LLM.
//!
//! It answers from the structured hint attached to a request rather than
//! from the prose, and formats its answers like a chat model would, so the
//! normal response parser applies.

use std::fmt::Write as _;

use super::grammar;
use super::prompt::{escape_bytes, MaskedSeed};
use super::{LlmBackend, LlmError, LlmRequest, LlmResponse, RequestHint};
use crate::solver::{apply, evaluate_constraint, Assignment, Solver};
use crate::symcore::{Format, Outcome, PathConstraint};
use crate::targets::oracle;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MockMode {
    /// Returns the seed unchanged.
    Echo,
    /// Returns the seed with constraint-violating bytes.
    Adversarial,
    /// Picks satisfying bytes that keep the input well-formed.
    SyntaxAware,
}

#[derive(Debug, Clone)]
pub struct MockLlm {
    pub mode: MockMode,
    solver: Solver,
}

impl MockLlm {
    pub fn new(mode: MockMode) -> Self {
        MockLlm {
            mode,
            solver: Solver::default(),
        }
    }
}

fn accepts(format: &Format) -> Option<fn(&[u8]) -> Outcome> {
    match format {
        Format::Json => Some(oracle::json),
        Format::Expr => Some(oracle::expr),
        Format::Ini => Some(oracle::ini),
        Format::Custom(_) => None,
    }
}

fn preference(format: &Format) -> Vec<u8> {
    let first: &[u8] = match format {
        Format::Json => b"0123456789\"{}[],:-tfn \t\n\r\\/bruesal",
        Format::Expr => b"1234567890()+-*/,;_ \t\nabcdefxyzr",
        Format::Ini => b"ks=v[]#;\n \t",
        Format::Custom(_) => b"",
    };
    let mut order = first.to_vec();
    order.extend((0x20u8..0x7f).filter(|b| !first.contains(b)));
    let rest: Vec<u8> = (0u8..=255).filter(|b| !order.contains(b)).collect();
    order.extend(rest);
    order
}

/// Seed inputs the mock offers when asked for fresh documents.
pub(crate) fn seed_bank(format: &Format) -> Vec<Vec<u8>> {
    let bank: &[&str] = match format {
        Format::Json => &[
            "{\"name\":\"ect\",\"tags\":[\"a\",\"b\"],\"n\":-12}",
            "[1,2,{\"ok\":true,\"v\":null}]",
            "{\"nested\":{\"x\":[0,false]},\"s\":\"a\\\"b\\n\"}",
            "\"text\"",
        ],
        Format::Expr => &["return f(1, 2)*3;", "-(a+b)/c; g()", "(1+2)*3", "x_1 * (y - 4)"],
        Format::Ini => &[
            "[core]\nname=ect\n",
            "; comment\n[paths]\nroot = /tmp\n",
            "# c\nkey=\n\n[s]  \n",
            "k=v",
        ],
        Format::Custom(_) => &["seed"],
    };
    bank.iter().map(|s| s.as_bytes().to_vec()).collect()
}

fn templates(format: &Format) -> &'static [&'static str] {
    match format {
        Format::Json => &[
            "@", "@0", "@]", "@}", "@\"", "@rue", "@alse", "@ull", "\"\\@\"", ",@", "\"k\":@],",
            "\"k\":@},", "[@]",
        ],
        Format::Expr => &["@", "@1", "1@1", "@1)", "(1@", "f(1@2)", ";1@1"],
        Format::Ini => &["@", "@\n", "\n@", "[s]@\n", "@k=v\n", "k@v\n", "@c\n", "[s@\n"],
        Format::Custom(_) => &["@"],
    }
}

/// Case byte of a switch-arm loc such as `f.c_g_9_3_switch_91`.
pub(crate) fn switch_case_byte(loc: &str) -> Option<u8> {
    let (head, br) = loc.rsplit_once('_')?;
    if !head.ends_with("_switch") {
        return None;
    }
    br.parse().ok()
}

fn fenced(out: &mut String, bytes: &[u8]) {
    let _ = write!(out, "```\n{}\n```\n", escape_bytes(bytes));
}

impl MockLlm {
    fn violate(&self, pc: &PathConstraint, masked: &MaskedSeed, seed: &[u8]) -> Vec<u8> {
        let mut out = masked.prefix.clone();
        match self.solver.get_solution(&pc.negated()) {
            Ok(a) => apply(&mut out, &a),
            Err(_) => return seed.to_vec(),
        }
        out.extend_from_slice(seed.get(masked.flexible_origin..).unwrap_or(&[]));
        out
    }

    fn solve_syntax_aware(&self, pc: &PathConstraint, masked: &MaskedSeed, seed: &[u8], format: &Format) -> Vec<u8> {
        let suffix = seed.get(masked.flexible_origin..).unwrap_or(&[]);
        let positions: Vec<usize> = masked.tokens.iter().map(|&(_, p)| p).collect();
        let choices: Vec<Assignment> = match positions.as_slice() {
            [p] => preference(format)
                .into_iter()
                .map(|b| Assignment::from([(*p, b)]))
                .collect(),
            _ => self.solver.get_solution(pc).into_iter().collect(),
        };
        let patched: Vec<Vec<u8>> = choices
            .iter()
            .map(|a| {
                let mut p = masked.prefix.clone();
                apply(&mut p, a);
                p
            })
            .filter(|p| evaluate_constraint(pc, p))
            .collect();
        if let Some(ok) = accepts(format) {
            // keep the seed's tail when it still parses, else complete
            for p in &patched {
                let cand = [p.as_slice(), suffix].concat();
                if ok(&cand).is_accept() {
                    return cand;
                }
            }
            for p in &patched {
                if let Some(rest) = grammar::complete(format, p) {
                    let cand = [p.as_slice(), &rest].concat();
                    if ok(&cand).is_accept() {
                        return cand;
                    }
                }
            }
        }
        let mut out = masked.prefix.clone();
        match self.solver.get_solution(pc) {
            Ok(a) => apply(&mut out, &a),
            Err(_) => return seed.to_vec(),
        }
        out.extend_from_slice(suffix);
        out
    }

    fn fresh_seeds(&self, format: &Format, uncovered: &[String], recent: &[Vec<u8>], count: usize) -> Vec<Vec<u8>> {
        let mut out: Vec<Vec<u8>> = Vec::new();
        let fresh = |c: &Vec<u8>, out: &Vec<Vec<u8>>| !out.contains(c) && !recent.contains(c);
        if let Some(ok) = accepts(format) {
            let mut cases: Vec<u8> = uncovered.iter().filter_map(|l| switch_case_byte(l)).collect();
            cases.dedup();
            'cases: for c in cases {
                if out.len() >= count {
                    break;
                }
                for t in templates(format) {
                    let snippet: Vec<u8> = t.bytes().flat_map(|b| if b == b'@' { vec![c] } else { vec![b] }).collect();
                    for r in recent {
                        for i in 0..=r.len() {
                            let cand = [&r[..i], snippet.as_slice(), &r[i..]].concat();
                            if ok(&cand).is_accept() && fresh(&cand, &out) {
                                out.push(cand);
                                continue 'cases;
                            }
                        }
                    }
                    if ok(&snippet).is_accept() && fresh(&snippet, &out) {
                        out.push(snippet);
                        continue 'cases;
                    }
                }
            }
        }
        for s in seed_bank(format) {
            if out.len() >= count {
                break;
            }
            if fresh(&s, &out) {
                out.push(s);
            }
        }
        out
    }
}

impl LlmBackend for MockLlm {
    fn complete(&self, req: &LlmRequest) -> Result<LlmResponse, LlmError> {
        let Some(hint) = &req.hint else {
            return Err(LlmError::Transport {
                status: None,
                message: "mock backend needs a structured request".into(),
            });
        };
        let mut raw = String::new();
        match hint {
            RequestHint::Solve {
                pc,
                seed,
                masked,
                format,
            } => {
                let out = match self.mode {
                    MockMode::Echo => seed.clone(),
                    MockMode::Adversarial => self.violate(pc, masked, seed),
                    MockMode::SyntaxAware => self.solve_syntax_aware(pc, masked, seed, format),
                };
                for (token, pos) in &masked.tokens {
                    let b = out.get(*pos).copied().unwrap_or(0);
                    let _ = writeln!(raw, "Step 1: {token} = {}", escape_bytes(&[b]));
                }
                raw.push_str("Step 2: completed the flexible region.\n\n");
                fenced(&mut raw, &out);
            }
            RequestHint::InitialSeeds { format, count } => {
                let _ = writeln!(raw, "Here are {count} {format} inputs.\n");
                for s in seed_bank(format).iter().take(*count) {
                    fenced(&mut raw, s);
                }
            }
            RequestHint::FreshSeeds {
                format,
                uncovered,
                recent,
                count,
            } => {
                raw.push_str("Step 1: compared covered and uncovered branches.\n");
                raw.push_str("Step 2: located the responsible input bytes.\n");
                raw.push_str("Step 3: new inputs:\n\n");
                for s in self.fresh_seeds(format, uncovered, recent, *count) {
                    fenced(&mut raw, &s);
                }
            }
        }
        Ok(LlmResponse { raw })
    }

    fn name(&self) -> String {
        match self.mode {
            MockMode::Echo => "mock:echo",
            MockMode::Adversarial => "mock:adversarial",
            MockMode::SyntaxAware => "mock:syntax",
        }
        .to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{build_solve_complete_prompt, parse_response};
    use crate::symcore::{parse_expr, BranchSite};

    fn solve(mode: MockMode, expr: &str, taken: bool, seed: &[u8], format: Format) -> Vec<u8> {
        let expr = parse_expr(expr).unwrap();
        let pc = PathConstraint {
            site: BranchSite::new_if("t.c", "f", 1, 1),
            positions: expr.positions(),
            expr,
            taken,
            call_stack_size: 0,
            context: Vec::new(),
            order: 0,
        };
        let (masked, user) = build_solve_complete_prompt(&pc, seed, &format);
        let req = LlmRequest::new(
            "mock",
            user,
            RequestHint::Solve {
                pc: pc.clone(),
                seed: seed.to_vec(),
                masked: masked.clone(),
                format,
            },
        );
        let resp = MockLlm::new(mode).complete(&req).unwrap();
        parse_response(&resp.raw, &masked).unwrap()
    }

    #[test]
    fn syntax_aware_digit_then_completion() {
        // byte 5 must be <= '9' on `{"a":x...`
        let out = solve(
            MockMode::SyntaxAware,
            "(bvsge #x00000039 (concat #x000000 k!5))",
            true,
            b"{\"a\":tru",
            Format::Json,
        );
        assert_eq!(out, b"{\"a\":0}");
        assert!(oracle::json(&out).is_accept());
    }

    #[test]
    fn syntax_aware_keeps_seed_tail() {
        let out = solve(
            MockMode::SyntaxAware,
            "(= (concat #x000000 k!1) #x0000002b)",
            false,
            b"1+2",
            Format::Expr,
        );
        assert_eq!(out, b"112");
    }

    #[test]
    fn adversarial_and_echo() {
        let expr = "(bvsge #x00000039 (concat #x000000 k!1))";
        let bad = solve(MockMode::Adversarial, expr, false, b"rXturn", Format::Expr);
        assert_eq!(bad, b"r\x00turn");
        let same = solve(MockMode::Echo, expr, false, b"rXturn", Format::Expr);
        assert_eq!(same, b"rXturn");
    }

    #[test]
    fn fresh_seeds_target_uncovered_cases() {
        let m = MockLlm::new(MockMode::SyntaxAware);
        let seeds = m.fresh_seeds(
            &Format::Json,
            &["json_subset.rs_parse_value_40_11_switch_91".to_string()],
            &[b"{\"a\":1}".to_vec()],
            4,
        );
        assert_eq!(seeds.len(), 4);
        assert!(seeds[0].contains(&b'['));
        assert!(seeds.iter().all(|s| oracle::json(s).is_accept()));
        assert_eq!(switch_case_byte("a_b_1_2_switch_default"), None);
        assert_eq!(switch_case_byte("a_b_1_2_if_1"), None);
    }

    #[test]
    fn bank_parses() {
        for f in [Format::Json, Format::Expr, Format::Ini] {
            let ok = accepts(&f).unwrap();
            assert!(seed_bank(&f).iter().all(|s| ok(s).is_accept()));
        }
    }
}
