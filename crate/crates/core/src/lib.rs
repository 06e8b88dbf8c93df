//! Concolic execution for parser programs, guided by an expressive coverage
//! tree and backed by LLM-assisted constraint solving.

pub mod symcore;
pub mod ect;
pub mod selector;
pub mod solver;
pub mod targets;
pub mod llm;
pub mod testcase;
pub mod seeds;
pub mod harness;
