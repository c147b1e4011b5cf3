//! Subcommand execution.

use std::path::PathBuf;

use apm_core::diagnostics::{
    check_assumptions, emit_report, random_strategies, run_diagnostics, DiagnosticsReport, MeasureSection, ReportBundle, Section,
};
use apm_core::optimizer::{detect_unbounded, truncation_ladder, OptimizationReport};
use apm_core::risk_neutral::{build_tilted_measure, measure_moments, verify_pricing};
use apm_core::{build_market, MarketModel, ScenarioSet, Utility, Verdict};
use log::{info, warn};
use serde::Serialize;
use serde_json::json;

use crate::config::{ExperimentConfig, ScenarioConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_ASSUMPTION: i32 = 2;

/// Random directions tried when a scenario set is too large for the
/// arbitrage linear program.
const DIRECTION_BUDGET: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    /// Assumption checks only.
    Check,
    /// Truncation ladder of expected-utility maximizers.
    Optimize,
    /// Drift-removing measure, its moments and pricing residuals.
    Measure,
    /// Everything, including the Hölder chain and exponential-moment tables.
    Report,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::Optimize => "optimize",
            Command::Measure => "measure",
            Command::Report => "report",
        }
    }
}

/// Command-line and environment overrides.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    /// Value of the `SEED` environment variable, if set.
    pub env_seed: Option<u64>,
    /// Forces Monte Carlo scenarios with this many draws.
    pub scenarios: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedSource {
    Flag,
    Env,
    Scenarios,
    Config,
    Default,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SeedChoice {
    pub value: u64,
    pub source: SeedSource,
}

/// `--seed`, then `SEED`, then the Monte Carlo block's seed, then the
/// top-level `seed`, then 0.
pub fn effective_seed(cfg: &ExperimentConfig, opts: &RunOptions) -> SeedChoice {
    let mc_seed = match cfg.scenarios {
        ScenarioConfig::MonteCarlo { seed, .. } => Some(seed),
        ScenarioConfig::Exact => None,
    };
    [
        (opts.seed, SeedSource::Flag),
        (opts.env_seed, SeedSource::Env),
        (mc_seed, SeedSource::Scenarios),
        (cfg.seed, SeedSource::Config),
    ]
    .into_iter()
    .find_map(|(v, source)| v.map(|value| SeedChoice { value, source }))
    .unwrap_or(SeedChoice { value: 0, source: SeedSource::Default })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub exit_code: i32,
    pub out_dir: PathBuf,
    /// Failed assumption checks, in a fixed order.
    pub failures: Vec<String>,
}

fn build_scenarios(model: &MarketModel, cfg: &ExperimentConfig, opts: &RunOptions, seed: u64) -> apm_core::Result<ScenarioSet> {
    let draws = match cfg.scenarios {
        ScenarioConfig::MonteCarlo { n, .. } => Some(n),
        ScenarioConfig::Exact => None,
    };
    match opts.scenarios.or(draws) {
        Some(n) => {
            info!("sampling {n} Monte Carlo scenarios with seed {seed}");
            model.sample_scenarios(n, seed)
        }
        None => {
            info!("enumerating the exact scenario set");
            model.enumerate_scenarios()
        }
    }
}

fn failures_of(v: &apm_core::diagnostics::Verdicts) -> Vec<String> {
    let mut out = Vec::new();
    if v.novum_na == Verdict::Fails {
        out.push("novum_na".to_string());
    }
    if v.assumption_b == Verdict::Fails {
        out.push("assumption_b".to_string());
    }
    if v.novum_subgauss == Verdict::Fails {
        out.push("novum_subgauss".to_string());
    }
    out
}

/// Runs one subcommand and writes its bundle. Returns exit code 2 when an
/// assumption check fails (artifacts are still written) and an error for
/// internal failures.
pub fn run_command(cmd: Command, cfg: &ExperimentConfig, opts: &RunOptions) -> apm_core::Result<Outcome> {
    let model = build_market(cfg.model.clone())?;
    let u = Utility::from_spec(cfg.utility.clone())?;
    let seed = effective_seed(cfg, opts);
    info!("{}: seed {} (from {:?})", cmd.name(), seed.value, seed.source);

    let assumptions = check_assumptions(&model, &cfg.diagnostics);
    let mut failures = failures_of(&assumptions.verdicts);
    let na_ok = assumptions.verdicts.novum_na.holds();
    for f in &failures {
        warn!("assumption check failed: {f}");
    }

    let s = match cmd {
        Command::Check => None,
        _ => Some(build_scenarios(&model, cfg, opts, seed.value)?),
    };

    let optimization = match (cmd, &s) {
        (Command::Optimize | Command::Report, Some(s)) => {
            let det = detect_unbounded(&model, &u, s, DIRECTION_BUDGET)?;
            if det.found {
                warn!("scenario-set arbitrage along {:?}; refusing to report a maximizer", det.witness);
                if !failures.iter().any(|f| f == "novum_na") {
                    failures.push("scenario_arbitrage".into());
                }
                Section::Present(OptimizationReport::refused(&det))
            } else {
                info!("running truncation ladder {:?}", cfg.solver.ladder);
                Section::Present(truncation_ladder(&model, &u, s, &cfg.solver)?)
            }
        }
        _ => Section::Skipped,
    };

    let measure = match (cmd, &s) {
        (Command::Measure | Command::Report, Some(s)) if na_ok => {
            info!("building the drift-removing measure");
            let q = build_tilted_measure(&model, cfg.measure.fallback_alpha)?;
            let moments = measure_moments(&q, s, &cfg.measure.exponents())?;
            let strategies = random_strategies(q.len(), cfg.measure.pricing_strategies, 1.0, seed.value);
            let pricing = verify_pricing(&q, &model, s, &strategies)?;
            Some(MeasureSection { measure: q, moments, pricing })
        }
        _ => None,
    };

    let diagnostics = match (cmd, &s) {
        (Command::Report, Some(s)) => {
            info!("running diagnostics");
            run_diagnostics(&model, &u, measure.as_ref().map(|m| &m.measure), s, &cfg.diagnostics, seed.value)?
        }
        _ => DiagnosticsReport {
            assumptions,
            exp_moments: Section::Skipped,
            ui_tails: Section::Skipped,
            holder: Section::Skipped,
            value_cap: Section::Skipped,
        },
    };

    let run = json!({
        "command": cmd.name(),
        "seed": seed,
        "scenarios": s.as_ref().map(|s| serde_json::to_value(s.provenance()).expect("plain enum")),
        "model": cfg.model_ref,
        "utility": cfg.utility,
        "solver": cfg.solver,
        "measure": cfg.measure,
        "failures": failures,
        "version": env!("CARGO_PKG_VERSION"),
    });
    let bundle = ReportBundle { run, model, diagnostics: Section::Present(diagnostics), optimization, measure: measure.into() };
    let out_dir = opts.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    emit_report(&bundle, &out_dir)?;
    info!("wrote {}", out_dir.join("report.json").display());

    let exit_code = if failures.is_empty() { EXIT_OK } else { EXIT_ASSUMPTION };
    Ok(Outcome { exit_code, out_dir, failures })
}
