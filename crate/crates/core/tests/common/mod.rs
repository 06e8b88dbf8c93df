#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use ect_concolic::harness::{Campaign, CampaignConfig, SelectMode, SolverMode};

fn golden_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

/// Compares `actual` with a checked-in file; `UPDATE_GOLDEN=1` rewrites it.
pub fn check_golden(name: &str, actual: &str) -> bool {
    let path = golden_path(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::write(&path, actual).unwrap();
        return true;
    }
    let expected = fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    if expected != actual {
        eprintln!("golden mismatch for {name}:\n--- expected\n{expected}\n--- actual\n{actual}");
        return false;
    }
    true
}

pub fn read_golden(name: &str) -> String {
    fs::read_to_string(golden_path(name)).unwrap()
}

pub fn write_seeds(dir: &Path, seeds: &[&str]) -> PathBuf {
    let d = dir.join("seeds");
    fs::create_dir_all(&d).unwrap();
    for (i, s) in seeds.iter().enumerate() {
        fs::write(d.join(format!("seed_{i:02}")), s).unwrap();
    }
    d
}

pub fn config(dir: &Path, target: &str, seeds: &[&str], iterations: u64) -> CampaignConfig {
    let mut cfg = CampaignConfig::new(target, dir.join("out"));
    cfg.input_dir = Some(write_seeds(dir, seeds));
    cfg.max_iterations = Some(iterations);
    cfg.initial_seeds = false;
    cfg.fresh_seeds = false;
    cfg.prng_seed = 7;
    cfg
}

pub fn run_in_memory(mut cfg: CampaignConfig, solver: SolverMode, select: SelectMode) -> Campaign {
    cfg.solver_mode = solver;
    cfg.select_mode = select;
    let mut c = Campaign::new(cfg).unwrap();
    c.run_in_memory().unwrap();
    c
}

pub const JSON_SEEDS: &[&str] = &["{\"name\":\"ect\",\"n\":12}", "{\"a\":true,\"b\":null}", "\"str\""];
pub const EXPR_SEEDS: &[&str] = &["(1+2)*3", "return f(1, 2);"];
pub const INI_SEEDS: &[&str] = &["[core]\nname=ect\n", "k=v"];

pub fn seeds_for(target: &str) -> &'static [&'static str] {
    match target {
        "json_subset" => JSON_SEEDS,
        "expr_lang" => EXPR_SEEDS,
        _ => INI_SEEDS,
    }
}
