//! Campaign configuration, read from an INI file.
//!
//! ```ini
//! [common-settings]
//! format = JSON
//! llm_model = gpt-4o-mini
//! api_key = sk-...
//!
//! [running-locations]
//! mainDir = ./work
//! inputDir = seeds
//! outputDir = out
//! failedDir = failed
//!
//! [running-targets]
//! target = json_subset
//!
//! [running-params]
//! timeout = 43200 // running timeout
//! cov_timeout = 60
//! ```

use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use ini::{Ini, ParseOption};
use serde::Serialize;

use super::HarnessError;
use crate::seeds::{Window, DEFAULT_SATURATION_WINDOW, DEFAULT_SEED_COUNT};
use crate::selector::{DepthSource, SelectorParams, VisitTerm};
use crate::solver::DEFAULT_VAR_CAP;
use crate::symcore::{Format, DEFAULT_CONTEXT_DEPTH};
use crate::targets;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverMode {
    Baseline,
    Llm,
    LlmValidated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectMode {
    Ect,
    /// Dispatch every recorded constraint, with no dedup or ranking.
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MockChoice {
    Syntax,
    Adversarial,
    Echo,
    /// Use the HTTP endpoint.
    Off,
}

fn bad(key: &str, value: &str) -> HarnessError {
    HarnessError::Config(format!("invalid value {value:?} for {key}"))
}

impl FromStr for SolverMode {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "baseline" => Ok(SolverMode::Baseline),
            "llm" => Ok(SolverMode::Llm),
            "llm-validated" | "llm+validator" => Ok(SolverMode::LlmValidated),
            _ => Err(bad("solver", s)),
        }
    }
}

impl FromStr for SelectMode {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ect" => Ok(SelectMode::Ect),
            "all" => Ok(SelectMode::All),
            _ => Err(bad("select", s)),
        }
    }
}

impl FromStr for MockChoice {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "syntax" | "syntax_aware" => Ok(MockChoice::Syntax),
            "adversarial" => Ok(MockChoice::Adversarial),
            "echo" => Ok(MockChoice::Echo),
            "off" => Ok(MockChoice::Off),
            _ => Err(bad("mock", s)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LlmSettings {
    pub model: String,
    #[serde(skip)]
    pub api_key: Option<String>,
    pub endpoint: Option<String>,
    pub mock: MockChoice,
    pub request_timeout: Duration,
    pub attempts: u32,
}

impl Default for LlmSettings {
    fn default() -> Self {
        LlmSettings {
            model: "gpt-4o-mini".into(),
            api_key: None,
            endpoint: None,
            mock: MockChoice::Syntax,
            request_timeout: Duration::from_secs(60),
            attempts: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CampaignConfig {
    pub target: String,
    pub format: Format,
    pub timeout: Duration,
    /// Stop after this many loop iterations; the deterministic budget.
    pub max_iterations: Option<u64>,
    /// How often the clock-based saturation check runs.
    pub cov_timeout: Duration,
    pub saturation: Window,
    pub input_dir: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub failed_dir: PathBuf,
    pub selector: SelectorParams,
    pub select_mode: SelectMode,
    pub solver_mode: SolverMode,
    pub llm: LlmSettings,
    pub prng_seed: u64,
    pub initial_seeds: bool,
    pub fresh_seeds: bool,
    pub seed_count: usize,
    pub random_seed_len: usize,
    pub var_cap: usize,
    pub context_depth: usize,
}

impl CampaignConfig {
    /// Defaults for `target`, writing under `output_dir`.
    pub fn new(target: &str, output_dir: impl Into<PathBuf>) -> Self {
        let output_dir = output_dir.into();
        let format = targets::by_name(target).map_or(Format::Json, |p| p.format);
        CampaignConfig {
            target: target.to_string(),
            format,
            timeout: Duration::from_secs(43200),
            max_iterations: None,
            cov_timeout: Duration::from_secs(60),
            saturation: Window::Clock(DEFAULT_SATURATION_WINDOW),
            input_dir: None,
            failed_dir: output_dir.join("failed"),
            output_dir,
            selector: SelectorParams::default(),
            select_mode: SelectMode::Ect,
            solver_mode: SolverMode::LlmValidated,
            llm: LlmSettings::default(),
            prng_seed: 0,
            initial_seeds: true,
            fresh_seeds: true,
            seed_count: DEFAULT_SEED_COUNT,
            random_seed_len: 32,
            var_cap: DEFAULT_VAR_CAP,
            context_depth: DEFAULT_CONTEXT_DEPTH,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let err = |m: &str| Err(HarnessError::Config(m.to_string()));
        if targets::by_name(&self.target).is_none() {
            return Err(HarnessError::Config(format!(
                "unknown target {:?}; known: {}",
                self.target,
                targets::names().join(", ")
            )));
        }
        if self.timeout.is_zero() {
            return err("timeout must be positive");
        }
        if self.output_dir == self.failed_dir || Some(&self.output_dir) == self.input_dir.as_ref() {
            return err("input, output and failed directories must be distinct");
        }
        if Some(&self.failed_dir) == self.input_dir.as_ref() {
            return err("input, output and failed directories must be distinct");
        }
        if matches!(self.saturation, Window::Iterations(0)) || self.saturation == Window::Clock(Duration::ZERO) {
            return err("saturation window must be positive");
        }
        if self.seed_count == 0 {
            return err("seed_count must be at least 1");
        }
        self.selector.validate().map_err(HarnessError::Config)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// Parses INI text; relative directories resolve against `mainDir`,
    /// itself relative to `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, HarnessError> {
        let ini = Ini::load_from_str_opt(
            text,
            ParseOption {
                enabled_escape: false,
                ..ParseOption::default()
            },
        )
        .map_err(|e| HarnessError::Config(e.to_string()))?;
        let get = |section: &str, key: &str| -> Option<String> {
            let v = ini.get_from(Some(section), key)?;
            // values may carry a trailing `// comment`
            let v = v.split(" //").next().unwrap_or(v).trim();
            (!v.is_empty()).then(|| v.to_string())
        };
        fn num<T: FromStr>(key: &str, v: Option<String>) -> Result<Option<T>, HarnessError> {
            v.map(|v| v.parse::<T>().map_err(|_| bad(key, &v))).transpose()
        }
        fn flag(key: &str, v: Option<String>) -> Result<Option<bool>, HarnessError> {
            v.map(|v| match v.as_str() {
                "true" | "yes" | "1" | "on" => Ok(true),
                "false" | "no" | "0" | "off" => Ok(false),
                _ => Err(bad(key, &v)),
            })
            .transpose()
        }

        let main = get("running-locations", "mainDir").map_or(base.to_path_buf(), |d| base.join(d));
        let dir = |key: &str| get("running-locations", key).map(|d| main.join(d));
        let target = get("running-targets", "target")
            .ok_or_else(|| HarnessError::Config("missing [running-targets] target".into()))?;
        let output_dir = dir("outputDir").unwrap_or_else(|| main.join("output"));
        let mut cfg = CampaignConfig::new(&target, output_dir);
        if let Some(f) = get("common-settings", "format") {
            cfg.format = Format::parse(&f);
        }
        cfg.input_dir = dir("inputDir");
        if let Some(d) = dir("failedDir") {
            cfg.failed_dir = d;
        }

        if let Some(m) = get("common-settings", "llm_model") {
            cfg.llm.model = m;
        }
        cfg.llm.api_key = get("common-settings", "api_key");
        cfg.llm.endpoint = get("common-settings", "llm_endpoint");
        if let Some(m) = get("common-settings", "mock") {
            cfg.llm.mock = m.parse()?;
        }
        if let Some(t) = num::<u64>("llm_timeout", get("common-settings", "llm_timeout"))? {
            cfg.llm.request_timeout = Duration::from_secs(t);
        }
        if let Some(a) = num("llm_attempts", get("common-settings", "llm_attempts"))? {
            cfg.llm.attempts = a;
        }

        let p = "running-params";
        if let Some(t) = num::<u64>("timeout", get(p, "timeout"))? {
            cfg.timeout = Duration::from_secs(t);
        }
        if let Some(t) = num::<u64>("cov_timeout", get(p, "cov_timeout"))? {
            cfg.cov_timeout = Duration::from_secs(t);
        }
        if let Some(w) = num::<u64>("saturation_window", get(p, "saturation_window"))? {
            cfg.saturation = Window::Clock(Duration::from_secs(w));
        }
        if let Some(n) = num::<u64>("saturation_iterations", get(p, "saturation_iterations"))? {
            cfg.saturation = Window::Iterations(n);
        }
        cfg.max_iterations = num("max_iterations", get(p, "max_iterations"))?;
        if let Some(s) = num("prng_seed", get(p, "prng_seed"))? {
            cfg.prng_seed = s;
        }
        if let Some(s) = get(p, "solver") {
            cfg.solver_mode = s.parse()?;
        }
        if let Some(s) = get(p, "select") {
            cfg.select_mode = s.parse()?;
        }
        if let Some(b) = flag("initial_seeds", get(p, "initial_seeds"))? {
            cfg.initial_seeds = b;
        }
        if let Some(b) = flag("fresh_seeds", get(p, "fresh_seeds"))? {
            cfg.fresh_seeds = b;
        }
        if let Some(n) = num("seed_count", get(p, "seed_count"))? {
            cfg.seed_count = n;
        }
        if let Some(n) = num("random_seed_len", get(p, "random_seed_len"))? {
            cfg.random_seed_len = n;
        }
        if let Some(n) = num("var_cap", get(p, "var_cap"))? {
            cfg.var_cap = n;
        }

        let s = "selector";
        if let Some(v) = num("alpha", get(s, "alpha"))? {
            cfg.selector.alpha = v;
        }
        if let Some(v) = num("beta", get(s, "beta"))? {
            cfg.selector.beta = v;
        }
        if let Some(v) = num("gamma", get(s, "gamma"))? {
            cfg.selector.gamma = v;
        }
        if let Some(v) = num("top_k", get(s, "top_k"))? {
            cfg.selector.top_k = v;
        }
        if let Some(v) = get(s, "visit_term") {
            cfg.selector.visit_term = match v.as_str() {
                "literal" => VisitTerm::Literal,
                "inverse" => VisitTerm::Inverse,
                _ => return Err(bad("visit_term", &v)),
            };
        }
        if let Some(v) = get(s, "depth_source") {
            cfg.selector.depth_source = match v.as_str() {
                "tree" => DepthSource::Tree,
                "stack" => DepthSource::Stack,
                _ => return Err(bad("depth_source", &v)),
            };
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
[common-settings]
format = JSON
llm_model = xxx
api_key = sk-1

[running-locations]
mainDir = work
inputDir = in
outputDir = out
failedDir = failed

[running-targets]
target = json_subset

[running-params]
timeout = 43200 // running timeout
cov_timeout = 60 // interval timeout for coverage collection
solver = baseline
saturation_iterations = 5

[selector]
top_k = 8
";

    #[test]
    fn parses_sample() {
        let cfg = CampaignConfig::parse(SAMPLE, Path::new("/tmp")).unwrap();
        assert_eq!(cfg.format, Format::Json);
        assert_eq!(cfg.llm.model, "xxx");
        assert_eq!(cfg.llm.api_key.as_deref(), Some("sk-1"));
        assert_eq!(cfg.input_dir, Some(PathBuf::from("/tmp/work/in")));
        assert_eq!(cfg.output_dir, PathBuf::from("/tmp/work/out"));
        assert_eq!(cfg.timeout, Duration::from_secs(43200));
        assert_eq!(cfg.cov_timeout, Duration::from_secs(60));
        assert_eq!(cfg.solver_mode, SolverMode::Baseline);
        assert_eq!(cfg.saturation, Window::Iterations(5));
        assert_eq!(cfg.selector.top_k, 8);
        assert_eq!(cfg.selector.beta, 3.0);
    }

    #[test]
    fn rejects_bad_configs() {
        let zero = SAMPLE.replace("timeout = 43200 // running timeout", "timeout = 0");
        assert!(CampaignConfig::parse(&zero, Path::new("/")).is_err());
        let same = SAMPLE.replace("failedDir = failed", "failedDir = out");
        assert!(CampaignConfig::parse(&same, Path::new("/")).is_err());
        let target = SAMPLE.replace("json_subset", "libxml2");
        assert!(CampaignConfig::parse(&target, Path::new("/")).is_err());
        let solver = SAMPLE.replace("solver = baseline", "solver = z3");
        assert!(CampaignConfig::parse(&solver, Path::new("/")).is_err());
        assert!(CampaignConfig::parse("[common-settings]\nformat = JSON\n", Path::new("/")).is_err());
    }
}
