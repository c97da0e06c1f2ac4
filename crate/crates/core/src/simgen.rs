//! Seeded synthetic event streams and Monte Carlo realization of recall
//! outcomes.
//!
//! Randomness is counter-based: each item draws from its own ChaCha stream
//! keyed by `(seed, item index)` and each outcome from `(seed, event_id)`,
//! so results do not depend on generation order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::{EventLog, Override, ReuseEvent};
use crate::lattice::AudienceScope;
use crate::provenance::{Activity, ProvenanceRecord, YearMonth};
use crate::recall::{evaluate_recall, AgeBucket, FeatureVector, RecallModelParams, DEFAULT_OLD_THRESHOLD_DAYS};
use crate::risk::ReuseRate;
use crate::scalar::Scalar;

/// Perceived ages of `Old` events are drawn up to this many days past the
/// threshold.
const OLD_AGE_SPAN_DAYS: f64 = 3.0 * 365.0;
const MAX_ITEM_AGE_MONTHS: u32 = 36;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HesitationDist {
    Uniform(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureDist {
    pub old_fraction: f64,
    pub sensitive_fraction: f64,
    pub hesitation_dist: HesitationDist,
}

/// Probabilities of each original audience.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "PascalCase", deny_unknown_fields)]
pub struct ScopeDist {
    pub private: f64,
    pub friends: f64,
    pub public: f64,
}

impl ScopeDist {
    fn sample(&self, u: f64) -> AudienceScope {
        if u < self.private {
            AudienceScope::Private
        } else if u < self.private + self.friends {
            AudienceScope::Friends
        } else {
            AudienceScope::Public
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", deny_unknown_fields)]
pub struct SimConfig<T> {
    pub n_items: u32,
    pub horizon_days: u32,
    pub reuse_rate: ReuseRate<T>,
    pub feature_dist: FeatureDist,
    pub scope_dist: ScopeDist,
    pub seed: u64,
    #[serde(default = "default_threshold")]
    pub old_threshold_days: f64,
    /// Calendar month of day zero; item creation dates precede it.
    #[serde(default = "default_start")]
    pub start: YearMonth,
}

fn default_threshold() -> f64 {
    DEFAULT_OLD_THRESHOLD_DAYS
}

fn default_start() -> YearMonth {
    YearMonth::new(2025, 1).expect("valid month")
}

impl<T: Scalar> SimConfig<T> {
    pub fn validate(&self) -> Result<()> {
        self.reuse_rate.validate()?;
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::config(name, format!("{v} is outside [0, 1]")))
            }
        };
        let fd = &self.feature_dist;
        unit("feature_dist.old_fraction", fd.old_fraction)?;
        unit("feature_dist.sensitive_fraction", fd.sensitive_fraction)?;
        let HesitationDist::Uniform(a, b) = fd.hesitation_dist;
        unit("feature_dist.hesitation_dist", a)?;
        unit("feature_dist.hesitation_dist", b)?;
        if a > b {
            return Err(Error::config("feature_dist.hesitation_dist", "lower bound exceeds upper bound"));
        }
        let sd = &self.scope_dist;
        unit("scope_dist.Private", sd.private)?;
        unit("scope_dist.Friends", sd.friends)?;
        unit("scope_dist.Public", sd.public)?;
        let total = sd.private + sd.friends + sd.public;
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::config("scope_dist", format!("probabilities sum to {total}, not 1")));
        }
        if !self.old_threshold_days.is_finite() || self.old_threshold_days < 0.0 {
            return Err(Error::config("old_threshold_days", "must be finite and non-negative"));
        }
        Ok(())
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

struct Draft<T> {
    day: u32,
    item: u32,
    seq: u32,
    event: ReuseEvent<T>,
}

fn generate_item<T: Scalar>(config: &SimConfig<T>, item: u32) -> Result<Vec<Draft<T>>> {
    let mut rng = stream_rng(config.seed, u64::from(item));
    let fd = &config.feature_dist;
    let item_id = format!("item-{item}");
    let scope = config.scope_dist.sample(rng.gen());
    let sensitive = rng.gen_bool(fd.sensitive_fraction);
    let age_months = rng.gen_range(0..=MAX_ITEM_AGE_MONTHS);
    let provenance = ProvenanceRecord::new(
        item_id.clone(),
        scope,
        config.start.add_months(-i64::from(age_months)),
        format!("agent-{item}"),
        Activity::Post,
        sensitive,
    )?;

    let threshold = config.old_threshold_days;
    let HesitationDist::Uniform(h_lo, h_hi) = fd.hesitation_dist;
    let mut drafts = Vec::new();
    let mut seq = 0;
    for day in 0..config.horizon_days {
        let lambda = config.reuse_rate.at(T::from_u32(day).unwrap() + T::lit(0.5)).to_f64_lossy();
        let count = if lambda > 0.0 {
            Poisson::new(lambda)
                .map_err(|e| Error::config("reuse_rate", e.to_string()))?
                .sample(&mut rng) as u64
        } else {
            0
        };
        for _ in 0..count {
            let old = rng.gen_bool(fd.old_fraction);
            let age = if old {
                threshold + rng.gen_range(0.0..OLD_AGE_SPAN_DAYS)
            } else if threshold > 0.0 {
                rng.gen_range(0.0..threshold)
            } else {
                0.0
            };
            let hesitation = if h_hi > h_lo { rng.gen_range(h_lo..=h_hi) } else { h_lo };
            let device = if rng.gen_bool(0.7) { "mobile" } else { "desktop" };
            let time_to_post = rng.gen_range(1_000u32..30_000);
            let mut features = FeatureVector::new(
                T::lit(age),
                T::lit(threshold),
                sensitive,
                T::lit(hesitation),
                device,
            )?;
            // A zero threshold makes every event old, matching old_fraction = 1.
            if old {
                features.age_bucket = AgeBucket::Old;
            }
            drafts.push(Draft {
                day,
                item,
                seq,
                event: ReuseEvent {
                    event_id: 0,
                    item_id: item_id.clone(),
                    day_index: day,
                    features,
                    provenance: Some(provenance.clone()),
                    outgoing: None,
                    overridden: Override::None,
                    completed: true,
                    time_to_post_ms: T::from_u32(time_to_post).unwrap(),
                },
            });
            seq += 1;
        }
    }
    Ok(drafts)
}

/// Generates a deterministic log: items are simulated independently, then
/// merged by `(day, item, sequence)` and numbered from zero.
pub fn generate_log<T: Scalar>(config: &SimConfig<T>) -> Result<EventLog<T>> {
    config.validate()?;
    let mut drafts = Vec::new();
    for item in 0..config.n_items {
        drafts.extend(generate_item(config, item)?);
    }
    drafts.sort_by_key(|d| (d.day, d.item, d.seq));
    let events = drafts
        .into_iter()
        .enumerate()
        .map(|(i, mut d)| {
            d.event.event_id = i as u64;
            d.event
        })
        .collect();
    EventLog::new(events)
}

/// Log with realized outgoing scopes, plus events that could not be
/// realized for lack of provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledLog<T> {
    pub log: EventLog<T>,
    pub skipped: Vec<u64>,
}

/// Draws one recall outcome per event: correct with probability `p_c`;
/// otherwise one step wider with probability `p_o`, else one step narrower.
/// Moves off the end of the chain leave the scope unchanged.
pub fn sample_outcomes<T: Scalar>(log: &EventLog<T>, model: &RecallModelParams<T>, seed: u64) -> Result<SampledLog<T>> {
    let mut skipped = Vec::new();
    let mut events = Vec::with_capacity(log.len());
    for e in log.events() {
        let mut e = e.clone();
        match e.original_audience() {
            None => skipped.push(e.event_id),
            Some(original) => {
                let (pc, po) = evaluate_recall(&e.features, model)?;
                let mut rng = stream_rng(seed, e.event_id);
                let u_correct: f64 = rng.gen();
                let u_direction: f64 = rng.gen();
                let outgoing = if u_correct < pc.to_f64_lossy() {
                    original
                } else if u_direction < po.to_f64_lossy() {
                    original.widen().unwrap_or(original)
                } else {
                    original.narrow().unwrap_or(original)
                };
                e.outgoing = Some(outgoing);
            }
        }
        events.push(e);
    }
    Ok(SampledLog {
        log: EventLog::new(events)?,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn config(n_items: u32) -> SimConfig<f64> {
        SimConfig {
            n_items,
            horizon_days: 30,
            reuse_rate: ReuseRate::Constant(0.5),
            feature_dist: FeatureDist {
                old_fraction: 0.4,
                sensitive_fraction: 0.2,
                hesitation_dist: HesitationDist::Uniform(0.0, 1.0),
            },
            scope_dist: ScopeDist { private: 0.2, friends: 0.5, public: 0.3 },
            seed: 42,
            old_threshold_days: 180.0,
            start: YearMonth::new(2025, 1).unwrap(),
        }
    }

    #[test]
    fn zero_items_gives_empty_log() {
        assert!(generate_log(&config(0)).unwrap().is_empty());
    }

    #[test]
    fn deterministic_given_seed() {
        let a = generate_log(&config(20)).unwrap();
        let b = generate_log(&config(20)).unwrap();
        assert_eq!(a.to_jsonl_bytes(), b.to_jsonl_bytes());
        let mut other = config(20);
        other.seed = 43;
        assert_ne!(generate_log(&other).unwrap().to_jsonl_bytes(), a.to_jsonl_bytes());
    }

    #[test]
    fn items_are_independent_of_item_count() {
        // item streams are keyed by index, so item-0's events do not change
        let small = generate_log(&config(3)).unwrap();
        let large = generate_log(&config(10)).unwrap();
        let pick = |log: &EventLog<f64>| -> Vec<(u32, String)> {
            log.events().iter().filter(|e| e.item_id == "item-0").map(|e| (e.day_index, serde_json::to_string(&e.features).unwrap())).collect()
        };
        assert_eq!(pick(&small), pick(&large));
    }

    #[test]
    fn old_fraction_one_makes_everything_old() {
        let mut c = config(10);
        c.feature_dist.old_fraction = 1.0;
        let log = generate_log(&c).unwrap();
        assert!(!log.is_empty());
        assert!(log.events().iter().all(|e| e.features.age_bucket == AgeBucket::Old));
    }

    #[test]
    fn day_index_non_decreasing_and_ids_sequential() {
        let log = generate_log(&config(15)).unwrap();
        for (i, w) in log.events().windows(2).enumerate() {
            assert!(w[0].day_index <= w[1].day_index);
            assert_eq!(w[0].event_id, i as u64);
        }
    }

    #[test]
    fn invalid_distributions_rejected() {
        let mut c = config(1);
        c.scope_dist.public = 0.4;
        assert!(matches!(generate_log(&c), Err(Error::Config { .. })));
        let mut c = config(1);
        c.feature_dist.old_fraction = 1.5;
        assert!(generate_log(&c).is_err());
        let mut c = config(1);
        c.feature_dist.hesitation_dist = HesitationDist::Uniform(0.8, 0.2);
        assert!(generate_log(&c).is_err());
        let mut c = config(1);
        c.reuse_rate = ReuseRate::Constant(-1.0);
        assert!(generate_log(&c).is_err());
    }

    #[test]
    fn perfect_recall_keeps_scope() {
        let log = generate_log(&config(20)).unwrap();
        let sampled = sample_outcomes(&log, &RecallModelParams::uniform(1.0, 0.5), 7).unwrap();
        assert!(sampled.skipped.is_empty());
        for e in sampled.log.events() {
            assert_eq!(e.outgoing, e.original_audience());
        }
    }

    #[test]
    fn forced_widening_from_friends() {
        let mut c = config(20);
        c.scope_dist = ScopeDist { private: 0.0, friends: 1.0, public: 0.0 };
        let log = generate_log(&c).unwrap();
        let sampled = sample_outcomes(&log, &RecallModelParams::uniform(0.0, 1.0), 7).unwrap();
        assert!(sampled.log.events().iter().all(|e| e.outgoing == Some(AudienceScope::Public)));
    }

    #[test]
    fn chain_ends_clamp() {
        let mut c = config(20);
        c.scope_dist = ScopeDist { private: 0.5, friends: 0.0, public: 0.5 };
        let log = generate_log(&c).unwrap();
        // always wrong; Public cannot widen, Private cannot narrow
        for po in [0.0, 1.0] {
            let sampled = sample_outcomes(&log, &RecallModelParams::uniform(0.0, po), 3).unwrap();
            for e in sampled.log.events() {
                let original = e.original_audience().unwrap();
                let outgoing = e.outgoing.unwrap();
                match (original, po == 1.0) {
                    (AudienceScope::Public, true) | (AudienceScope::Private, false) => assert_eq!(outgoing, original),
                    (AudienceScope::Public, false) => assert_eq!(outgoing, AudienceScope::Friends),
                    (AudienceScope::Private, true) => assert_eq!(outgoing, AudienceScope::Friends),
                    _ => unreachable!(),
                }
            }
        }
    }

    #[test]
    fn missing_provenance_is_skipped() {
        let log = generate_log(&config(5)).unwrap();
        let mut events = log.into_events();
        events[0].provenance = None;
        let id = events[0].event_id;
        let log = EventLog::new(events).unwrap();
        let sampled = sample_outcomes(&log, &RecallModelParams::uniform(0.5, 0.5), 1).unwrap();
        assert_eq!(sampled.skipped, vec![id]);
        assert_eq!(sampled.log.events()[0].outgoing, None);
    }

    #[test]
    fn config_json_shape() {
        let text = r#"{
            "n_items": 2, "horizon_days": 5,
            "reuse_rate": {"piecewise": [[2, 1.0], [3, 0.5]]},
            "feature_dist": {"old_fraction": 0.5, "sensitive_fraction": 0.1, "hesitation_dist": {"uniform": [0.0, 1.0]}},
            "scope_dist": {"Private": 0.2, "Friends": 0.5, "Public": 0.3},
            "seed": 1
        }"#;
        let c: SimConfig<f64> = serde_json::from_str(text).unwrap();
        assert_eq!(c.reuse_rate, ReuseRate::Piecewise(vec![(2.0, 1.0), (3.0, 0.5)]));
        assert_eq!(c.old_threshold_days, 180.0);
        c.validate().unwrap();
    }
}
