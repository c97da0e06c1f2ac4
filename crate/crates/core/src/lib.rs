//! Risk modeling and policy evaluation for audience-recall drift.
//!
//! When old content resurfaces, people often misremember who could see it
//! originally, and the error tends toward broader audiences. This crate
//! scores reuse events for overexposure risk, decides when a provenance
//! prompt pays for its friction, replays event logs under candidate
//! policies, and reports reductions with calibration metrics and
//! prior-sensitivity bands.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the crate root fix it to `f64`, which the file formats and
//! the CLI use.

pub mod calibration;
pub mod counters;
pub mod error;
pub mod events;
pub mod lattice;
pub mod provenance;
pub mod recall;
pub mod replay;
pub mod risk;
pub mod scalar;
pub mod simgen;

pub use calibration::{calibration_report, operating_points};
pub use counters::{collect_counters, CounterNoise, CounterSet};
pub use error::{Error, Result};
pub use events::{Override, ReuseEvent};
pub use lattice::{classify_drift, compare_scopes, map_scope, AudienceOntology, AudienceScope, DriftKind, DriftOutcome};
pub use provenance::{attach_record, detect_scope_widening, read_record, render_badge, ProvenanceRecord, YearMonth};
pub use recall::{apply_intervention, evaluate_recall, recall_decay, AgeBucket};
pub use replay::{dominance_check, replay_policy, sensitivity_sweep, Dominance};
pub use risk::{cumulative_overexposures, delta_r, greedy_budget_select, per_event_risk, rule_trigger, should_intervene};
pub use scalar::Scalar;
pub use simgen::{generate_log, sample_outcomes};

pub type FeatureVector = recall::FeatureVector<f64>;
pub type DecayParams = recall::DecayParams<f64>;
pub type RecallModelParams = recall::RecallModelParams<f64>;
pub type InterventionEffect = recall::InterventionEffect<f64>;
pub type CostModel = risk::CostModel<f64>;
pub type ReuseRate = risk::ReuseRate<f64>;
pub type ScoredEvent = risk::ScoredEvent<f64>;
pub type EventLog = events::EventLog<f64>;
pub type Policy = replay::Policy<f64>;
pub type PolicyReport = replay::PolicyReport<f64>;
pub type PriorPoint = replay::PriorPoint<f64>;
pub type SensitivityBand = replay::SensitivityBand<f64>;
pub type ScoredDecision = replay::ScoredDecision<f64>;
pub type CalibrationReport = calibration::CalibrationReport<f64>;
pub type SimConfig = simgen::SimConfig<f64>;
