//! Run configuration file and flag overrides.

use std::path::{Path, PathBuf};

use anyhow::Result;
use serde::Deserialize;

use recall_drift::calibration::DEFAULT_BINS;
use recall_drift::counters::CounterNoise;
use recall_drift::{CostModel, Error, InterventionEffect, Policy, PriorPoint, RecallModelParams, SimConfig};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    log: Option<PathBuf>,
    #[serde(default)]
    model: Option<serde_json::Value>,
    #[serde(default)]
    effect: Option<InterventionEffect>,
    #[serde(default)]
    costs: Option<CostModel>,
    #[serde(default)]
    policy: Option<String>,
    #[serde(default)]
    rule_threshold: Option<f64>,
    #[serde(default)]
    prior_grid: Vec<PriorPoint>,
    #[serde(default)]
    sim: Option<SimConfig>,
    #[serde(default)]
    counters: Option<CounterSection>,
    #[serde(default)]
    calibration_bins: Option<usize>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
struct CounterSection {
    #[serde(default = "default_bin_width")]
    bin_width_days: u32,
    #[serde(default)]
    noise_scale: f64,
}

fn default_bin_width() -> u32 {
    7
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub policy: Option<String>,
    pub bins: Option<usize>,
    pub noise_scale: Option<f64>,
    pub log: Option<PathBuf>,
}

/// Resolved run configuration. Sections a command does not need may be
/// absent; `require_*` reports which one is missing.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub log: Option<PathBuf>,
    pub model: Option<RecallModelParams>,
    pub effect: Option<InterventionEffect>,
    pub costs: Option<CostModel>,
    pub policy: Policy,
    pub prior_grid: Vec<PriorPoint>,
    pub sim: Option<SimConfig>,
    pub counter_bin_days: u32,
    pub noise_scale: f64,
    pub calibration_bins: usize,
    pub seed: u64,
    pub out: PathBuf,
}

fn missing(field: &str) -> anyhow::Error {
    Error::config(field, "required by this command but not set in the config").into()
}

pub fn parse_policy(spec: &str, rule_threshold: Option<f64>) -> Result<Policy> {
    let spec = match (spec, rule_threshold) {
        ("rule", Some(u)) => format!("rule:{u}"),
        _ => spec.to_string(),
    };
    Ok(spec.parse::<Policy>()?)
}

impl RunConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("--config", format!("cannot read {}: {e}", path.display())))?;
        let raw: RawConfig =
            serde_json::from_str(&text).map_err(|e| Error::from_json(path.display().to_string(), &e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::resolve(raw, &base, overrides)
    }

    pub fn from_overrides(overrides: &Overrides) -> Result<Self> {
        let raw: RawConfig = serde_json::from_str("{}").expect("empty config parses");
        Self::resolve(raw, Path::new("."), overrides)
    }

    fn resolve(raw: RawConfig, base: &Path, overrides: &Overrides) -> Result<Self> {
        let model = raw
            .model
            .map(|v| RecallModelParams::from_json_value(v, "model"))
            .transpose()?;
        if let Some(effect) = &raw.effect {
            effect.validate()?;
        }
        if let Some(costs) = &raw.costs {
            costs.validate()?;
        }
        let policy_spec = overrides
            .policy
            .clone()
            .or(raw.policy)
            .unwrap_or_else(|| "never".to_string());
        let policy = parse_policy(&policy_spec, raw.rule_threshold)?;
        for p in &raw.prior_grid {
            p.validate()?;
        }
        let seed = overrides.seed.or(raw.seed).unwrap_or(0);
        let mut sim = raw.sim;
        if let Some(sim) = sim.as_mut() {
            if let Some(s) = overrides.seed {
                sim.seed = s;
            }
            sim.validate()?;
        }
        let counters = raw.counters.unwrap_or(CounterSection {
            bin_width_days: default_bin_width(),
            noise_scale: 0.0,
        });
        let noise_scale = overrides.noise_scale.unwrap_or(counters.noise_scale);
        if !noise_scale.is_finite() || noise_scale < 0.0 {
            return Err(Error::config("counters.noise_scale", "must be finite and non-negative").into());
        }
        if counters.bin_width_days == 0 {
            return Err(Error::config("counters.bin_width_days", "must be at least 1").into());
        }
        let calibration_bins = overrides.bins.or(raw.calibration_bins).unwrap_or(DEFAULT_BINS);
        if calibration_bins == 0 {
            return Err(Error::config("calibration_bins", "must be at least 1").into());
        }
        let log = overrides.log.clone().or_else(|| raw.log.map(|p| base.join(p)));
        let out = overrides
            .out
            .clone()
            .or_else(|| raw.out.map(|p| base.join(p)))
            .unwrap_or_else(|| PathBuf::from("out"));
        Ok(RunConfig {
            log,
            model,
            effect: raw.effect,
            costs: raw.costs,
            policy,
            prior_grid: raw.prior_grid,
            sim,
            counter_bin_days: counters.bin_width_days,
            noise_scale,
            calibration_bins,
            seed,
            out,
        })
    }

    pub fn require_model(&self) -> Result<&RecallModelParams> {
        self.model.as_ref().ok_or_else(|| missing("model"))
    }

    pub fn require_effect(&self) -> Result<&InterventionEffect> {
        self.effect.as_ref().ok_or_else(|| missing("effect"))
    }

    pub fn require_costs(&self) -> Result<&CostModel> {
        self.costs.as_ref().ok_or_else(|| missing("costs"))
    }

    pub fn require_sim(&self) -> Result<&SimConfig> {
        self.sim.as_ref().ok_or_else(|| missing("sim"))
    }

    pub fn require_log(&self) -> Result<&Path> {
        self.log.as_deref().ok_or_else(|| missing("log"))
    }

    pub fn noise(&self) -> CounterNoise {
        if self.noise_scale > 0.0 {
            CounterNoise::Laplace { scale: self.noise_scale, seed: self.seed }
        } else {
            CounterNoise::Off
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_threshold_applies_to_bare_rule() {
        assert_eq!(parse_policy("rule", Some(0.8)).unwrap(), Policy::Rule { uncertainty_threshold: 0.8 });
        assert_eq!(parse_policy("rule:0.3", Some(0.8)).unwrap(), Policy::Rule { uncertainty_threshold: 0.3 });
        assert_eq!(parse_policy("greedy:4", Some(0.8)).unwrap(), Policy::GreedyBudget { budget: 4 });
    }

    #[test]
    fn paths_resolve_against_config_dir_and_flags_win() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(&path, r#"{"log": "events.jsonl", "out": "o", "seed": 3, "calibration_bins": 4}"#).unwrap();
        let cfg = RunConfig::load(&path, &Overrides::default()).unwrap();
        assert_eq!(cfg.log.as_deref(), Some(dir.path().join("events.jsonl").as_path()));
        assert_eq!(cfg.out, dir.path().join("o"));
        assert_eq!((cfg.seed, cfg.calibration_bins), (3, 4));
        assert_eq!(cfg.policy, Policy::Never);
        let flags = Overrides { seed: Some(9), bins: Some(20), out: Some("elsewhere".into()), ..Default::default() };
        let cfg = RunConfig::load(&path, &flags).unwrap();
        assert_eq!((cfg.seed, cfg.calibration_bins), (9, 20));
        assert_eq!(cfg.out, PathBuf::from("elsewhere"));
    }

    #[test]
    fn noise_follows_scale() {
        let cfg = RunConfig::from_overrides(&Overrides { noise_scale: Some(2.0), seed: Some(5), ..Default::default() }).unwrap();
        assert_eq!(cfg.noise(), CounterNoise::Laplace { scale: 2.0, seed: 5 });
        assert!(RunConfig::from_overrides(&Overrides { noise_scale: Some(-1.0), ..Default::default() }).is_err());
    }
}
