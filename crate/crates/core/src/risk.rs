//! Per-event overexposure risk, intervention benefit, cost gating,
//! cumulative expected overexposures, and greedy budgeted selection.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::recall::{apply_intervention, evaluate_recall, AgeBucket, FeatureVector, InterventionEffect, RecallModelParams};
use crate::scalar::{is_non_negative, Scalar};

/// Friction cost per prompt (`c_f`) and harm cost per overexposure (`c_o`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", deny_unknown_fields)]
pub struct CostModel<T> {
    pub c_f: T,
    pub c_o: T,
}

impl<T: Scalar> CostModel<T> {
    pub fn new(c_f: T, c_o: T) -> Result<Self> {
        let costs = CostModel { c_f, c_o };
        costs.validate()?;
        Ok(costs)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("costs.c_f", self.c_f), ("costs.c_o", self.c_o)] {
            if !v.is_finite() || v < T::zero() {
                return Err(Error::config(name, format!("{v} must be finite and non-negative")));
            }
        }
        Ok(())
    }
}

/// `(1 - p_c) * p_o`.
pub fn per_event_risk<T: Scalar>(p_c: T, p_o: T) -> T {
    (T::one() - p_c) * p_o
}

/// Absolute reduction in per-event risk. Negative when the intervention
/// makes things worse.
pub fn delta_r<T: Scalar>(p_c: T, p_o: T, pc_after: T, po_after: T) -> T {
    per_event_risk(p_c, p_o) - per_event_risk(pc_after, po_after)
}

/// Prompt iff `c_o * delta_r > c_f`. Equality does not prompt.
pub fn should_intervene<T: Scalar>(delta_r: T, costs: &CostModel<T>) -> bool {
    costs.c_o * delta_r > costs.c_f
}

/// Fires on old events that are either uncertain or sensitive.
pub fn rule_trigger<T: Scalar>(x: &FeatureVector<T>, uncertainty_threshold: T) -> bool {
    x.age_bucket == AgeBucket::Old && (x.hesitation >= uncertainty_threshold || x.sensitive)
}

/// Reuse rate `λ(t)` in events per day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", rename_all = "lowercase")]
pub enum ReuseRate<T> {
    Constant(T),
    /// Consecutive `(span_days, rate)` segments starting at `t = 0`; the
    /// rate is zero past the last segment.
    Piecewise(Vec<(T, T)>),
}

impl<T: Scalar> ReuseRate<T> {
    pub fn at(&self, t: T) -> T {
        match self {
            ReuseRate::Constant(rate) => *rate,
            ReuseRate::Piecewise(segments) => {
                let mut start = T::zero();
                for &(span, rate) in segments {
                    let end = start + span;
                    if t >= start && t < end {
                        return rate;
                    }
                    start = end;
                }
                T::zero()
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: T| v.is_finite() && v >= T::zero();
        match self {
            ReuseRate::Constant(rate) if !ok(*rate) => {
                Err(Error::config("reuse_rate.constant", "rate must be finite and non-negative"))
            }
            ReuseRate::Piecewise(segments) => {
                for (i, &(span, rate)) in segments.iter().enumerate() {
                    if !ok(span) || !ok(rate) {
                        return Err(Error::config(
                            format!("reuse_rate.piecewise[{i}]"),
                            "span and rate must be finite and non-negative",
                        ));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Composite midpoint rule over `[0, horizon]` with cells of width `step`.
/// A trailing partial cell is integrated at its own midpoint.
pub fn integrate_midpoint<T: Scalar>(mut f: impl FnMut(T) -> T, horizon: T, step: T) -> Result<T> {
    if !is_non_negative(step) || step == T::zero() {
        return Err(Error::parameter("step", format!("{step} must be positive")));
    }
    if !is_non_negative(horizon) {
        return Err(Error::parameter("horizon", format!("{horizon} must be non-negative")));
    }
    let half = T::lit(0.5);
    let full_cells = (horizon / step).floor();
    let n = full_cells.to_u64().unwrap_or(0);
    let mut total = T::zero();
    for i in 0..n {
        let left = T::from_u64(i).unwrap() * step;
        total = total + f(left + half * step) * step;
    }
    let covered = full_cells * step;
    let rest = horizon - covered;
    if rest > T::zero() {
        total = total + f(covered + half * rest) * rest;
    }
    Ok(total)
}

/// Expected overexposures of one item over `[0, horizon]`: the integral of
/// `λ(t) (1 - p_c(x_t)) p_o(x_t)`.
pub fn cumulative_overexposures<T: Scalar>(
    rate: impl Fn(T) -> T,
    model: &RecallModelParams<T>,
    features_at: impl Fn(T) -> FeatureVector<T>,
    horizon: T,
    step: T,
) -> Result<T> {
    // Surface model errors instead of folding them into the integral.
    let mut failure = None;
    let total = integrate_midpoint(
        |t| match evaluate_recall(&features_at(t), model) {
            Ok((pc, po)) => rate(t) * per_event_risk(pc, po),
            Err(e) => {
                failure.get_or_insert(e);
                T::zero()
            }
        },
        horizon,
        step,
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(total),
    }
}

/// One candidate event with its risk and intervention benefit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredEvent<T> {
    pub event_id: u64,
    pub day_index: u32,
    pub risk: T,
    pub delta_r: T,
    /// `c_o * delta_r`.
    pub weighted_benefit: T,
}

impl<T: Scalar> ScoredEvent<T> {
    pub fn score(
        event_id: u64,
        day_index: u32,
        (p_c, p_o): (T, T),
        effect: &InterventionEffect<T>,
        costs: &CostModel<T>,
    ) -> Self {
        let (pc_after, po_after) = apply_intervention(p_c, p_o, effect);
        let delta = delta_r(p_c, p_o, pc_after, po_after);
        ScoredEvent {
            event_id,
            day_index,
            risk: per_event_risk(p_c, p_o),
            delta_r: delta,
            weighted_benefit: costs.c_o * delta,
        }
    }
}

fn by_benefit_then_id<T: PartialOrd>(a: &ScoredEvent<T>, b: &ScoredEvent<T>) -> Ordering {
    b.weighted_benefit
        .partial_cmp(&a.weighted_benefit)
        .unwrap_or(Ordering::Equal)
        .then(a.event_id.cmp(&b.event_id))
}

/// Picks, for every day index independently, the `budget` events with the
/// largest weighted benefit (ties by ascending event id). Output is grouped
/// by ascending day, best-first within a day.
///
/// Only needs `PartialOrd` on the benefit so exact number types work too.
pub fn greedy_budget_select<T: PartialOrd + Clone>(
    candidates: &[ScoredEvent<T>],
    budget: usize,
) -> Vec<ScoredEvent<T>> {
    let mut days: BTreeMap<u32, Vec<&ScoredEvent<T>>> = BTreeMap::new();
    for c in candidates {
        days.entry(c.day_index).or_default().push(c);
    }
    let mut selected = Vec::new();
    for (_, mut day) in days {
        day.sort_by(|a, b| by_benefit_then_id(a, b));
        selected.extend(day.into_iter().take(budget).cloned());
    }
    selected
}
