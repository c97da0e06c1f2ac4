//! Command-line surface for the recall-drift engine.
//!
//! Exit status: 0 on success, 1 when `prov check` finds a widening, 2 on
//! configuration or input errors, 3 on other I/O failures.

pub mod config;
mod report;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use recall_drift::lattice::MappingFlag;
use recall_drift::provenance::{check_scope_widening, sidecar_path, Activity, WideningCheck};
use recall_drift::replay::{score_log, summarize};
use recall_drift::{
    attach_record, calibration_report, collect_counters, dominance_check, evaluate_recall, generate_log,
    map_scope, operating_points, per_event_risk, read_record, render_badge, sample_outcomes, sensitivity_sweep,
    AudienceOntology, AudienceScope, Error, EventLog, ProvenanceRecord, YearMonth,
};

use crate::config::{parse_policy, Overrides, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_WIDENING: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "recall-drift", version, about = "Overexposure risk scoring and policy replay")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Run configuration file (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory for artifacts.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// never | always | threshold | rule[:u] | greedy:B
    #[arg(long, global = true)]
    pub policy: Option<String>,
    /// Number of calibration bins.
    #[arg(long, global = true)]
    pub bins: Option<usize>,
    /// Laplace noise scale for counters (0 disables).
    #[arg(long, global = true)]
    pub noise_scale: Option<f64>,
    /// Event log (JSONL); overrides `log` in the config.
    #[arg(long, global = true)]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic event log with realized outgoing scopes.
    Simulate,
    /// Replay a log under the configured policy; also writes counters.
    Replay,
    /// Score every event and mark which ones the policy prompts.
    Policy,
    /// Replay across the prior grid and report the sensitivity band.
    Sweep {
        /// Second policy to test for dominance against.
        #[arg(long)]
        compare: Option<String>,
    },
    /// Calibration of per-event risk against observed widening.
    Calibrate,
    /// Provenance sidecars.
    Prov {
        #[command(subcommand)]
        action: ProvAction,
    },
}

#[derive(Debug, Subcommand)]
pub enum ProvAction {
    /// Write `<entity-id>.prov.json` into a directory.
    Attach {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        entity_id: String,
        /// Canonical scope (Private, Friends, Public).
        #[arg(long, conflicts_with = "foreign_scope")]
        scope: Option<String>,
        /// Foreign audience label, mapped through --ontology.
        #[arg(long, requires = "ontology")]
        foreign_scope: Option<String>,
        #[arg(long)]
        ontology: Option<PathBuf>,
        /// YYYY-MM
        #[arg(long)]
        created_at: String,
        #[arg(long)]
        agent: String,
        #[arg(long, default_value = "post")]
        activity: String,
        #[arg(long)]
        sensitive: bool,
    },
    /// Print a sidecar and its badge.
    Read { path: PathBuf },
    /// Exit 1 if the outgoing scope is broader than the sidecar's audience.
    Check {
        path: PathBuf,
        #[arg(long)]
        outgoing: String,
    },
}

impl GlobalArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            out: self.out.clone(),
            policy: self.policy.clone(),
            bins: self.bins,
            noise_scale: self.noise_scale,
            log: self.log.clone(),
        }
    }

    fn run_config(&self) -> Result<RunConfig> {
        match &self.config {
            Some(path) => RunConfig::load(path, &self.overrides()),
            None => RunConfig::from_overrides(&self.overrides()),
        }
    }
}

/// Maps an error to its exit status.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::Io { .. } => EXIT_IO,
                _ => EXIT_CONFIG,
            };
        }
    }
    EXIT_IO
}

pub fn run(cli: Cli) -> Result<i32> {
    match &cli.command {
        Command::Simulate => simulate(&cli.global.run_config()?),
        Command::Replay => replay(&cli.global.run_config()?),
        Command::Policy => policy(&cli.global.run_config()?),
        Command::Sweep { compare } => sweep(&cli.global.run_config()?, compare.as_deref()),
        Command::Calibrate => calibrate(&cli.global.run_config()?),
        Command::Prov { action } => prov(action),
    }
}

fn ensure_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    Ok(())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn load_log(cfg: &RunConfig) -> Result<EventLog> {
    let path = cfg.require_log()?;
    EventLog::load(path).map_err(|e| match e {
        // an unreadable log is an input problem, not a storage failure
        Error::Io { path, source } => Error::config("log", format!("cannot read {}: {source}", path.display())),
        other => other,
    }).map_err(Into::into)
}

fn simulate(cfg: &RunConfig) -> Result<i32> {
    let sim = cfg.require_sim()?;
    let model = cfg.require_model()?;
    let log = generate_log(sim)?;
    let sampled = sample_outcomes(&log, model, cfg.seed)?;
    ensure_out(&cfg.out)?;
    let path = cfg.out.join("events.jsonl");
    sampled.log.save(&path)?;
    println!(
        "wrote {} events ({} skipped without provenance) to {}",
        sampled.log.len(),
        sampled.skipped.len(),
        path.display()
    );
    Ok(EXIT_OK)
}

fn replay(cfg: &RunConfig) -> Result<i32> {
    let log = load_log(cfg)?;
    let decisions = score_log(&log, &cfg.policy, cfg.require_model()?, cfg.require_effect()?, cfg.require_costs()?)?;
    let summary = summarize(&decisions);
    let counters = collect_counters(&log, cfg.counter_bin_days, cfg.noise())?;
    ensure_out(&cfg.out)?;
    let text = report::policy_text(&cfg.policy, &summary);
    write_file(&cfg.out.join("report.txt"), text.as_bytes())?;
    write_file(&cfg.out.join("report.csv"), &report::csv_bytes(&[report::PolicyRow::new(&cfg.policy, &summary)])?)?;
    write_file(&cfg.out.join("counters.csv"), &report::csv_bytes(&counters.bins)?)?;
    print!("{text}");
    Ok(EXIT_OK)
}

fn policy(cfg: &RunConfig) -> Result<i32> {
    let log = load_log(cfg)?;
    let decisions = score_log(&log, &cfg.policy, cfg.require_model()?, cfg.require_effect()?, cfg.require_costs()?)?;
    ensure_out(&cfg.out)?;
    let rows: Vec<_> = decisions.iter().map(report::ScoredRow::from).collect();
    let path = cfg.out.join("scored.csv");
    write_file(&path, &report::csv_bytes(&rows)?)?;
    let prompts = decisions.iter().filter(|d| d.selected).count();
    println!("scored {} events, {} selected by {}; wrote {}", decisions.len(), prompts, cfg.policy, path.display());
    Ok(EXIT_OK)
}

fn sweep(cfg: &RunConfig, compare: Option<&str>) -> Result<i32> {
    let log = load_log(cfg)?;
    let costs = cfg.require_costs()?;
    if cfg.prior_grid.is_empty() {
        return Err(Error::config("prior_grid", "sweep needs at least one grid point").into());
    }
    let band = sensitivity_sweep(&log, &cfg.policy, &cfg.prior_grid, costs)?;
    let mut text = report::band_text(&cfg.policy, &band);
    if let Some(spec) = compare {
        let other_policy = parse_policy(spec, None)?;
        let other = sensitivity_sweep(&log, &other_policy, &cfg.prior_grid, costs)?;
        text.push_str(&report::band_text(&other_policy, &other));
        let verdict = dominance_check(&band, &other)?;
        text.push_str(&report::dominance_text(&cfg.policy, &other_policy, verdict));
    }
    ensure_out(&cfg.out)?;
    write_file(&cfg.out.join("sweep.txt"), text.as_bytes())?;
    write_file(&cfg.out.join("sweep.csv"), &report::csv_bytes(&report::grid_rows(&band))?)?;
    print!("{text}");
    Ok(EXIT_OK)
}

fn calibrate(cfg: &RunConfig) -> Result<i32> {
    let log = load_log(cfg)?;
    let model = cfg.require_model()?;
    let mut predictions = Vec::new();
    let mut outcomes = Vec::new();
    for e in log.events() {
        // only events where the widening proxy is observable
        let (Some(record), Some(outgoing)) = (e.provenance.as_ref(), e.outgoing) else {
            continue;
        };
        let (pc, po) = evaluate_recall(&e.features, model)?;
        predictions.push(per_event_risk(pc, po));
        outcomes.push(check_scope_widening(Some(record), outgoing) == WideningCheck::Widened);
    }
    if predictions.is_empty() {
        return Err(Error::config("log", "no events carry both provenance and an outgoing scope").into());
    }
    let cal = calibration_report(&predictions, &outcomes, cfg.calibration_bins)?;
    let thresholds: Vec<f64> = (0..=20).map(|i| f64::from(i) * 0.05).collect();
    let points = operating_points(&predictions, &outcomes, &thresholds)?;
    ensure_out(&cfg.out)?;
    let text = report::calibration_text(&cal);
    write_file(&cfg.out.join("calibration.txt"), text.as_bytes())?;
    write_file(&cfg.out.join("calibration.csv"), &report::csv_bytes(&report::bin_rows(&cal))?)?;
    write_file(&cfg.out.join("operating_points.csv"), &report::csv_bytes(&points)?)?;
    print!("{text}");
    Ok(EXIT_OK)
}

fn parse_activity(s: &str) -> Result<Activity> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| Error::config("--activity", format!("{s:?} is not one of post, reshare, import")).into())
}

fn prov(action: &ProvAction) -> Result<i32> {
    match action {
        ProvAction::Attach { dir, entity_id, scope, foreign_scope, ontology, created_at, agent, activity, sensitive } => {
            let scope = match (scope, foreign_scope, ontology) {
                (Some(s), _, _) => s.parse::<AudienceScope>()?,
                (None, Some(label), Some(path)) => {
                    let ontology = AudienceOntology::load(path).context("loading ontology")?;
                    let mapped = map_scope(label, &ontology);
                    match mapped.flag {
                        MappingFlag::Exact => {}
                        MappingFlag::Ambiguous => eprintln!("note: {label:?} is ambiguous in {}; using narrowest candidate {}", ontology.name(), mapped.scope),
                        MappingFlag::MissingProvenance => eprintln!("note: {label:?} is unknown to {}; defaulting to {}", ontology.name(), mapped.scope),
                    }
                    mapped.scope
                }
                _ => return Err(Error::config("--scope", "give --scope or --foreign-scope with --ontology").into()),
            };
            let record = ProvenanceRecord::new(
                entity_id.clone(),
                scope,
                created_at.parse::<YearMonth>()?,
                agent.clone(),
                parse_activity(activity)?,
                *sensitive,
            )?;
            let path = sidecar_path(dir, entity_id);
            attach_record(&record, &path)?;
            println!("{}", path.display());
            Ok(EXIT_OK)
        }
        ProvAction::Read { path } => {
            let record = read_record(path)?;
            match &record {
                Some(r) => print!("{}", String::from_utf8_lossy(&r.to_sidecar_bytes())),
                None => println!("absent"),
            }
            println!("{}", render_badge(record.as_ref()).text);
            Ok(EXIT_OK)
        }
        ProvAction::Check { path, outgoing } => {
            let outgoing: AudienceScope = outgoing.parse()?;
            let record = read_record(path)?;
            match check_scope_widening(record.as_ref(), outgoing) {
                WideningCheck::Widened => {
                    let original = record.map(|r| r.original_audience).expect("widening implies a record");
                    println!("widening: outgoing {outgoing} is broader than original {original}");
                    Ok(EXIT_WIDENING)
                }
                WideningCheck::NotWidened => {
                    println!("ok");
                    Ok(EXIT_OK)
                }
                WideningCheck::Unassessable => {
                    println!("no provenance; cannot assess (defaulting to Private is advised)");
                    Ok(EXIT_OK)
                }
            }
        }
    }
}
