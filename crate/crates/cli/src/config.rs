//! Experiment configuration files.
//!
//! A config is a JSON object naming a model file (resolved relative to the
//! config) and the utility, solver, measure, scenario and diagnostics
//! settings. [`parse_config`] reports every violation it finds rather than
//! stopping at the first.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use apm_core::diagnostics::DiagnosticsConfig;
use apm_core::optimizer::SolverConfig;
use apm_core::utility::UtilitySpec;
use apm_core::{build_market, ModelSpec, Utility};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

const MODEL_KEYS: [&str; 5] = ["m", "K", "mu", "beta_bar", "noise"];
const DEFAULT_OUTPUT_DIR: &str = "apm-out";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MeasureConfig {
    /// Exponent of the utility-gradient fallback; closer to 1 gives higher
    /// reciprocal moments at the price of a less dispersed density.
    pub fallback_alpha: f64,
    /// Moment exponents `w`; defaults to `{-2, -1, 1, 2, -p, p}`.
    pub moment_exponents: Option<Vec<f64>>,
    pub p: Option<f64>,
    /// Number of random strategies whose prices are checked.
    pub pricing_strategies: usize,
}

impl Default for MeasureConfig {
    fn default() -> Self {
        Self { fallback_alpha: 0.5, moment_exponents: None, p: None, pricing_strategies: 10 }
    }
}

impl MeasureConfig {
    pub fn exponents(&self) -> Vec<f64> {
        self.moment_exponents.clone().unwrap_or_else(|| apm_core::risk_neutral::default_moment_exponents(self.p))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScenarioConfig {
    Exact,
    MonteCarlo { n: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub config_path: PathBuf,
    /// The model path as written in the config.
    pub model_ref: String,
    pub model: ModelSpec,
    pub utility: UtilitySpec,
    pub solver: SolverConfig,
    pub measure: MeasureConfig,
    pub scenarios: ScenarioConfig,
    pub diagnostics: DiagnosticsConfig,
    pub output_dir: PathBuf,
    pub seed: Option<u64>,
}

#[derive(Debug)]
pub enum ConfigError {
    Io { path: PathBuf, source: std::io::Error },
    Syntax { path: PathBuf, source: serde_json::Error },
    Invalid(Vec<String>),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io { path, source } => write!(f, "cannot read {}: {source}", path.display()),
            ConfigError::Syntax { path, source } => write!(f, "malformed JSON in {}: {source}", path.display()),
            ConfigError::Invalid(v) => {
                write!(f, "{} configuration violation(s):", v.len())?;
                for msg in v {
                    write!(f, "\n  - {msg}")?;
                }
                Ok(())
            }
        }
    }
}

impl std::error::Error for ConfigError {}

impl ConfigError {
    pub fn violations(&self) -> &[String] {
        match self {
            ConfigError::Invalid(v) => v,
            _ => &[],
        }
    }
}

fn read_json(path: &Path) -> Result<Value, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    serde_json::from_str(&text).map_err(|source| ConfigError::Syntax { path: path.to_path_buf(), source })
}

fn section<T: for<'de> Deserialize<'de> + Default>(obj: &Map<String, Value>, key: &str, out: &mut Vec<String>) -> Option<T> {
    match obj.get(key) {
        None => Some(T::default()),
        Some(v) => serde_json::from_value(v.clone()).map_err(|e| out.push(format!("{key}: {e}"))).ok(),
    }
}

fn required<'a>(obj: &'a Map<String, Value>, key: &str, ctx: &str, out: &mut Vec<String>) -> Option<&'a Value> {
    let v = obj.get(key);
    if v.is_none() {
        out.push(format!("{ctx}missing required key `{key}`"));
    }
    v
}

fn parse_model(path: &Path, out: &mut Vec<String>) -> Option<ModelSpec> {
    let value = match read_json(path) {
        Ok(v) => v,
        Err(e) => {
            out.push(format!("model: {e}"));
            return None;
        }
    };
    let Some(obj) = value.as_object() else {
        out.push(format!("model: {} must contain a JSON object", path.display()));
        return None;
    };
    let before = out.len();
    for key in MODEL_KEYS {
        required(obj, key, "model: ", out);
    }
    let m = obj.get("m").and_then(Value::as_u64);
    let k = obj.get("K").and_then(Value::as_u64);
    if let (Some(m), Some(k)) = (m, k) {
        if k > m && !obj.contains_key("beta") {
            out.push("model: missing required key `beta` (K > m, so idiosyncratic assets need factor loadings)".into());
        }
    }
    if out.len() > before {
        return None;
    }
    let spec: ModelSpec = match serde_json::from_value(value) {
        Ok(s) => s,
        Err(e) => {
            out.push(format!("model: {e}"));
            return None;
        }
    };
    if let Err(e) = build_market(spec.clone()) {
        out.push(format!("model: {e}"));
        return None;
    }
    Some(spec)
}

/// Reads and validates an experiment config and the model it references.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let value = read_json(path)?;
    let Some(obj) = value.as_object() else {
        return Err(ConfigError::Invalid(vec!["config must be a JSON object".into()]));
    };
    let base = path.parent().unwrap_or(Path::new("."));
    let mut out = Vec::new();

    let known = ["model", "utility", "solver", "measure", "scenarios", "diagnostics", "output_dir", "seed"];
    for key in obj.keys() {
        if !known.contains(&key.as_str()) {
            out.push(format!("unknown key `{key}`"));
        }
    }

    let model_ref = match required(obj, "model", "", &mut out) {
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => {
            out.push("model: must be a path string".into());
            None
        }
        None => None,
    };
    let model = model_ref.as_ref().and_then(|r| parse_model(&base.join(r), &mut out));

    let utility = required(obj, "utility", "", &mut out).and_then(|v| {
        let spec: UtilitySpec = serde_json::from_value(v.clone()).map_err(|e| out.push(format!("utility: {e}"))).ok()?;
        Utility::from_spec(spec.clone()).map_err(|e| out.push(format!("utility: {e}"))).ok()?;
        Some(spec)
    });

    let scenarios = required(obj, "scenarios", "", &mut out).and_then(|v| {
        let Some(block) = v.as_object() else {
            out.push("scenarios: must be an object".into());
            return None;
        };
        match block.get("mode").and_then(Value::as_str) {
            Some("exact") => Some(ScenarioConfig::Exact),
            Some("monte_carlo") => {
                let n = block.get("n").and_then(Value::as_u64);
                let seed = block.get("seed").and_then(Value::as_u64);
                if n.is_none() {
                    out.push("scenarios: monte_carlo mode requires a positive integer `n`".into());
                }
                if seed.is_none() {
                    out.push("scenarios: monte_carlo mode requires an unsigned integer `seed`".into());
                }
                match (n, seed) {
                    (Some(0), _) => {
                        out.push("scenarios: `n` must be at least 1".into());
                        None
                    }
                    (Some(n), Some(seed)) => Some(ScenarioConfig::MonteCarlo { n: n as usize, seed }),
                    _ => None,
                }
            }
            Some(other) => {
                out.push(format!("scenarios: unknown mode `{other}` (expected `exact` or `monte_carlo`)"));
                None
            }
            None => {
                out.push("scenarios: missing required key `mode`".into());
                None
            }
        }
    });

    let solver: Option<SolverConfig> = section(obj, "solver", &mut out);
    if let Some(s) = &solver {
        if let Err(e) = s.validate() {
            out.push(format!("solver: {e}"));
        }
        if let Some(m) = &model {
            for &l in &s.ladder {
                if l == 0 || l > m.k {
                    out.push(format!("solver: ladder level {l} must lie in 1..={}", m.k));
                }
            }
        }
    }
    let measure: Option<MeasureConfig> = section(obj, "measure", &mut out);
    if let Some(m) = &measure {
        if !(m.fallback_alpha > 0.0 && m.fallback_alpha < 1.0) {
            out.push(format!("measure: fallback_alpha = {} must lie in (0, 1)", m.fallback_alpha));
        }
    }
    let diagnostics: Option<DiagnosticsConfig> = section(obj, "diagnostics", &mut out);

    let output_dir = match obj.get("output_dir") {
        None => Some(base.join(DEFAULT_OUTPUT_DIR)),
        Some(Value::String(s)) => Some(base.join(s)),
        Some(_) => {
            out.push("output_dir: must be a path string".into());
            None
        }
    };
    let seed = match obj.get("seed") {
        None => Some(None),
        Some(v) => match v.as_u64() {
            Some(s) => Some(Some(s)),
            None => {
                out.push("seed: must be an unsigned integer".into());
                None
            }
        },
    };

    if !out.is_empty() {
        return Err(ConfigError::Invalid(out));
    }
    Ok(ExperimentConfig {
        config_path: path.to_path_buf(),
        model_ref: model_ref.expect("checked"),
        model: model.expect("checked"),
        utility: utility.expect("checked"),
        solver: solver.expect("checked"),
        measure: measure.expect("checked"),
        scenarios: scenarios.expect("checked"),
        diagnostics: diagnostics.expect("checked"),
        output_dir: output_dir.expect("checked"),
        seed: seed.expect("checked"),
    })
}
