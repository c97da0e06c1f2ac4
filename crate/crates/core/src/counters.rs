//! The three opt-in evaluation counters, aggregated into coarse day windows
//! with optional seeded Laplace noise on the counts.
//!
//! Noise here is a coarsening aid only; no privacy budget is tracked.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::events::{EventLog, Override};
use crate::provenance::WideningTally;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CounterNoise {
    Off,
    Laplace { scale: f64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterBin {
    pub bin_index: u32,
    pub first_day: u32,
    pub last_day: u32,
    pub events: u64,
    /// Counter 1: outgoing scope strictly broader than provenance.
    pub widening_count: u64,
    /// Events with an outgoing scope but no provenance to compare against.
    pub missing_provenance: u64,
    /// Counter 2.
    pub broaden_overrides: u64,
    pub narrow_overrides: u64,
    /// Counter 3. `None` for empty bins.
    pub completion_rate: Option<f64>,
    pub median_time_to_post_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterSet {
    pub bin_width_days: u32,
    pub bins: Vec<CounterBin>,
}

impl CounterSet {
    pub fn total_widening(&self) -> u64 {
        self.bins.iter().map(|b| b.widening_count).sum()
    }
}

fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    })
}

/// Inverse-CDF Laplace draw with location 0.
fn laplace(rng: &mut ChaCha8Rng, scale: f64) -> f64 {
    let u: f64 = rng.gen_range(-0.5..0.5);
    if u == -0.5 {
        return 0.0;
    }
    -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

fn noisy(count: u64, rng: &mut ChaCha8Rng, scale: f64) -> u64 {
    let value = count as f64 + laplace(rng, scale);
    value.round().max(0.0) as u64
}

/// Aggregates the log into consecutive windows of `bin_width_days`, from day
/// zero through the last event's window. Empty windows are kept so the bin
/// layout does not reveal activity.
pub fn collect_counters<T: Scalar>(log: &EventLog<T>, bin_width_days: u32, noise: CounterNoise) -> Result<CounterSet> {
    if bin_width_days == 0 {
        return Err(Error::parameter("bin_width_days", "must be at least 1"));
    }
    if let CounterNoise::Laplace { scale, .. } = noise {
        if !scale.is_finite() || scale < 0.0 {
            return Err(Error::parameter("noise_scale", format!("{scale} must be finite and non-negative")));
        }
    }
    let n_bins = log
        .events()
        .last()
        .map(|e| e.day_index / bin_width_days + 1)
        .unwrap_or(0);

    let mut bins = Vec::with_capacity(n_bins as usize);
    let mut events = log.events().iter().peekable();
    for bin_index in 0..n_bins {
        let first_day = bin_index * bin_width_days;
        let last_day = first_day + bin_width_days - 1;
        let mut tally = WideningTally::default();
        let (mut count, mut broaden, mut narrow, mut completed) = (0u64, 0u64, 0u64, 0u64);
        let mut times = Vec::new();
        while let Some(e) = events.next_if(|e| e.day_index <= last_day) {
            count += 1;
            if let Some(outgoing) = e.outgoing {
                tally.observe(e.provenance.as_ref(), outgoing);
            }
            match e.overridden {
                Override::Broadened => broaden += 1,
                Override::Narrowed => narrow += 1,
                Override::None => {}
            }
            if e.completed {
                completed += 1;
                times.push(e.time_to_post_ms.to_f64_lossy());
            }
        }
        bins.push(CounterBin {
            bin_index,
            first_day,
            last_day,
            events: count,
            widening_count: tally.widened,
            missing_provenance: tally.missing_provenance,
            broaden_overrides: broaden,
            narrow_overrides: narrow,
            completion_rate: (count > 0).then(|| completed as f64 / count as f64),
            median_time_to_post_ms: median(&mut times),
        });
    }

    if let CounterNoise::Laplace { scale, seed } = noise {
        if scale > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for bin in &mut bins {
                bin.widening_count = noisy(bin.widening_count, &mut rng, scale);
                bin.missing_provenance = noisy(bin.missing_provenance, &mut rng, scale);
                bin.broaden_overrides = noisy(bin.broaden_overrides, &mut rng, scale);
                bin.narrow_overrides = noisy(bin.narrow_overrides, &mut rng, scale);
            }
        }
    }
    Ok(CounterSet { bin_width_days, bins })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::ReuseEvent;
    use crate::lattice::AudienceScope;
    use crate::provenance::{Activity, ProvenanceRecord, YearMonth};
    use crate::recall::FeatureVector;

    fn event(id: u64, day: u32, outgoing: AudienceScope) -> ReuseEvent<f64> {
        ReuseEvent {
            event_id: id,
            item_id: format!("i{id}"),
            day_index: day,
            features: FeatureVector::new(30.0, 180.0, false, 0.1, "").unwrap(),
            provenance: Some(
                ProvenanceRecord::new(format!("i{id}"), AudienceScope::Friends, YearMonth::new(2024, 5).unwrap(), "a", Activity::Post, false)
                    .unwrap(),
            ),
            outgoing: Some(outgoing),
            overridden: Override::None,
            completed: true,
            time_to_post_ms: 1000.0 + id as f64,
        }
    }

    fn ten_with_one_widening() -> EventLog<f64> {
        let mut events: Vec<_> = (0..10).map(|i| event(i, 0, AudienceScope::Friends)).collect();
        events[3].outgoing = Some(AudienceScope::Public);
        EventLog::new(events).unwrap()
    }

    #[test]
    fn single_widening_counted() {
        let c = collect_counters(&ten_with_one_widening(), 1, CounterNoise::Off).unwrap();
        assert_eq!(c.bins.len(), 1);
        assert_eq!(c.bins[0].widening_count, 1);
        assert_eq!(c.bins[0].events, 10);
        assert_eq!(c.bins[0].completion_rate, Some(1.0));
        assert_eq!(c.bins[0].median_time_to_post_ms, Some(1004.5));
    }

    #[test]
    fn zero_scale_noise_is_identity() {
        let log = ten_with_one_widening();
        assert_eq!(
            collect_counters(&log, 1, CounterNoise::Off).unwrap(),
            collect_counters(&log, 1, CounterNoise::Laplace { scale: 0.0, seed: 9 }).unwrap()
        );
    }

    #[test]
    fn noise_is_seed_deterministic_and_non_negative() {
        let log = ten_with_one_widening();
        let a = collect_counters(&log, 1, CounterNoise::Laplace { scale: 3.0, seed: 5 }).unwrap();
        let b = collect_counters(&log, 1, CounterNoise::Laplace { scale: 3.0, seed: 5 }).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bins_cover_gaps_and_overrides() {
        let mut events = vec![event(0, 0, AudienceScope::Public), event(1, 1, AudienceScope::Friends), event(2, 9, AudienceScope::Private)];
        events[1].overridden = Override::Broadened;
        events[2].overridden = Override::Narrowed;
        events[2].completed = false;
        events[0].provenance = None;
        let c = collect_counters(&EventLog::new(events).unwrap(), 3, CounterNoise::Off).unwrap();
        assert_eq!(c.bins.len(), 4);
        assert_eq!(c.bins[0].missing_provenance, 1);
        assert_eq!(c.bins[0].widening_count, 0);
        assert_eq!(c.bins[0].broaden_overrides, 1);
        assert_eq!(c.bins[1].events, 0);
        assert_eq!(c.bins[1].completion_rate, None);
        assert_eq!(c.bins[3].narrow_overrides, 1);
        assert_eq!(c.bins[3].completion_rate, Some(0.0));
        assert_eq!(c.bins[3].median_time_to_post_ms, None);
    }

    #[test]
    fn zero_width_rejected() {
        assert!(collect_counters(&ten_with_one_widening(), 0, CounterNoise::Off).is_err());
        assert!(collect_counters(&ten_with_one_widening(), 1, CounterNoise::Laplace { scale: -1.0, seed: 0 }).is_err());
    }
}
