//! Counterfactual replay of event logs under candidate prompt policies, and
//! prior-sensitivity bands over a grid of plausible priors.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::{EventLog, ReuseEvent};
use crate::recall::{apply_intervention, evaluate_recall, InterventionEffect, RecallModelParams};
use crate::risk::{greedy_budget_select, per_event_risk, rule_trigger, should_intervene, CostModel, ScoredEvent};
use crate::scalar::Scalar;

pub const DEFAULT_RULE_THRESHOLD: f64 = 0.5;

/// Which events get a prompt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Policy<T> {
    Never,
    Always,
    /// Prompt when `c_o * delta_r > c_f`.
    Threshold,
    /// Prompt old events that are uncertain or sensitive.
    Rule { uncertainty_threshold: T },
    /// Prompt the top `budget` events per day by `c_o * delta_r`.
    GreedyBudget { budget: usize },
}

impl<T: Scalar> fmt::Display for Policy<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Policy::Never => f.write_str("never"),
            Policy::Always => f.write_str("always"),
            Policy::Threshold => f.write_str("threshold"),
            Policy::Rule { uncertainty_threshold } => write!(f, "rule:{uncertainty_threshold}"),
            Policy::GreedyBudget { budget } => write!(f, "greedy:{budget}"),
        }
    }
}

impl<T: Scalar> FromStr for Policy<T> {
    type Err = Error;

    /// Accepts `never`, `always`, `threshold`, `rule`, `rule:<u>`, `greedy:<B>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: String| Error::config("policy", msg);
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        match (head, arg) {
            ("never", None) => Ok(Policy::Never),
            ("always", None) => Ok(Policy::Always),
            ("threshold", None) => Ok(Policy::Threshold),
            ("rule", None) => Ok(Policy::Rule { uncertainty_threshold: T::lit(DEFAULT_RULE_THRESHOLD) }),
            ("rule", Some(a)) => {
                let u: f64 = a.parse().map_err(|_| bad(format!("{a:?} is not a number")))?;
                if !(0.0..=1.0).contains(&u) {
                    return Err(bad(format!("rule threshold {u} is outside [0, 1]")));
                }
                Ok(Policy::Rule { uncertainty_threshold: T::lit(u) })
            }
            ("greedy", Some(a)) => {
                let budget = a.parse().map_err(|_| bad(format!("{a:?} is not a non-negative integer budget")))?;
                Ok(Policy::GreedyBudget { budget })
            }
            ("greedy", None) => Err(bad("greedy policy needs a budget, e.g. greedy:3".into())),
            _ => Err(bad(format!("unknown policy {s:?}"))),
        }
    }
}

/// A scored event plus the replay decision and the risk it ends up with.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredDecision<T> {
    #[serde(flatten)]
    pub scored: ScoredEvent<T>,
    pub selected: bool,
    /// Risk after the policy: post-intervention risk if selected, else the
    /// baseline risk.
    pub risk_with_policy: T,
}

/// Aggregate replay result. The baseline is the `Never` policy on the same log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyReport<T> {
    pub n_events: usize,
    pub prompts_shown: usize,
    pub expected_overexposures_baseline: T,
    pub expected_overexposures_with_policy: T,
    /// Share of `with_policy` coming from prompted events.
    pub expected_prompted: T,
    /// Share of `with_policy` coming from events left alone.
    pub expected_unprompted: T,
    pub absolute_reduction: T,
    /// `absolute / baseline`, or zero when the baseline is zero.
    pub relative_reduction: T,
}

fn select<T: Scalar>(
    events: &[ReuseEvent<T>],
    scored: &[ScoredEvent<T>],
    policy: &Policy<T>,
    costs: &CostModel<T>,
) -> Vec<bool> {
    match policy {
        Policy::Never => vec![false; scored.len()],
        Policy::Always => vec![true; scored.len()],
        Policy::Threshold => scored.iter().map(|s| should_intervene(s.delta_r, costs)).collect(),
        Policy::Rule { uncertainty_threshold } => events
            .iter()
            .map(|e| rule_trigger(&e.features, *uncertainty_threshold))
            .collect(),
        Policy::GreedyBudget { budget } => {
            let chosen = greedy_budget_select(scored, *budget);
            let mut ids: Vec<u64> = chosen.iter().map(|s| s.event_id).collect();
            ids.sort_unstable();
            scored.iter().map(|s| ids.binary_search(&s.event_id).is_ok()).collect()
        }
    }
}

/// Scores every event with caller-supplied before/after probabilities and
/// applies the policy.
pub fn score_with<T: Scalar>(
    log: &EventLog<T>,
    policy: &Policy<T>,
    costs: &CostModel<T>,
    mut probabilities: impl FnMut(&ReuseEvent<T>) -> Result<((T, T), (T, T))>,
) -> Result<Vec<ScoredDecision<T>>> {
    let events = log.events();
    let mut scored = Vec::with_capacity(events.len());
    let mut after = Vec::with_capacity(events.len());
    for e in events {
        let ((pc, po), (pca, poa)) = probabilities(e)?;
        let risk = per_event_risk(pc, po);
        let risk_after = per_event_risk(pca, poa);
        let delta = risk - risk_after;
        scored.push(ScoredEvent {
            event_id: e.event_id,
            day_index: e.day_index,
            risk,
            delta_r: delta,
            weighted_benefit: costs.c_o * delta,
        });
        after.push(risk_after);
    }
    let selected = select(events, &scored, policy, costs);
    Ok(scored
        .into_iter()
        .zip(after)
        .zip(selected)
        .map(|((scored, risk_after), selected)| ScoredDecision {
            risk_with_policy: if selected { risk_after } else { scored.risk },
            scored,
            selected,
        })
        .collect())
}

/// Scores the log under a recall model and intervention effect.
pub fn score_log<T: Scalar>(
    log: &EventLog<T>,
    policy: &Policy<T>,
    model: &RecallModelParams<T>,
    effect: &InterventionEffect<T>,
    costs: &CostModel<T>,
) -> Result<Vec<ScoredDecision<T>>> {
    score_with(log, policy, costs, |e| {
        let (pc, po) = evaluate_recall(&e.features, model)?;
        Ok(((pc, po), apply_intervention(pc, po, effect)))
    })
}

/// Sums a scored replay into a report, in event order.
pub fn summarize<T: Scalar>(decisions: &[ScoredDecision<T>]) -> PolicyReport<T> {
    let mut baseline = T::zero();
    let mut prompted = T::zero();
    let mut unprompted = T::zero();
    let mut prompts = 0;
    for d in decisions {
        baseline = baseline + d.scored.risk;
        if d.selected {
            prompts += 1;
            prompted = prompted + d.risk_with_policy;
        } else {
            unprompted = unprompted + d.risk_with_policy;
        }
    }
    let with_policy = prompted + unprompted;
    let absolute = baseline - with_policy;
    PolicyReport {
        n_events: decisions.len(),
        prompts_shown: prompts,
        expected_overexposures_baseline: baseline,
        expected_overexposures_with_policy: with_policy,
        expected_prompted: prompted,
        expected_unprompted: unprompted,
        absolute_reduction: absolute,
        relative_reduction: if baseline > T::zero() { absolute / baseline } else { T::zero() },
    }
}

pub fn replay_policy<T: Scalar>(
    log: &EventLog<T>,
    policy: &Policy<T>,
    model: &RecallModelParams<T>,
    effect: &InterventionEffect<T>,
    costs: &CostModel<T>,
) -> Result<PolicyReport<T>> {
    Ok(summarize(&score_log(log, policy, model, effect, costs)?))
}

/// One plausible prior: baseline `(p_c, p_o)` and post-intervention
/// `(p̃_c, p̃_o)`, applied uniformly to every event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", deny_unknown_fields)]
pub struct PriorPoint<T> {
    pub p_c: T,
    pub p_o: T,
    pub pc_after: T,
    pub po_after: T,
}

impl<T: Scalar> PriorPoint<T> {
    pub fn new(p_c: T, p_o: T, pc_after: T, po_after: T) -> Self {
        PriorPoint { p_c, p_o, pc_after, po_after }
    }

    pub fn validate(&self) -> Result<()> {
        for v in [self.p_c, self.p_o, self.pc_after, self.po_after] {
            if !(v >= T::zero() && v <= T::one()) {
                return Err(Error::config("prior_grid", format!("probability {v} is outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Relative reductions across a prior grid, summarized as min/median/max.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct SensitivityBand<T> {
    pub prior_grid: Vec<PriorPoint<T>>,
    /// Relative reduction per grid point, in grid order.
    pub reductions: Vec<T>,
    pub reduction_min: T,
    pub reduction_mid: T,
    pub reduction_max: T,
}

/// Replays the log once per grid point, substituting the prior for the
/// recall model.
pub fn replay_prior<T: Scalar>(
    log: &EventLog<T>,
    policy: &Policy<T>,
    prior: &PriorPoint<T>,
    costs: &CostModel<T>,
) -> Result<PolicyReport<T>> {
    prior.validate()?;
    let decisions = score_with(log, policy, costs, |_| {
        Ok(((prior.p_c, prior.p_o), (prior.pc_after, prior.po_after)))
    })?;
    Ok(summarize(&decisions))
}

pub fn sensitivity_sweep<T: Scalar>(
    log: &EventLog<T>,
    policy: &Policy<T>,
    prior_grid: &[PriorPoint<T>],
    costs: &CostModel<T>,
) -> Result<SensitivityBand<T>> {
    if prior_grid.is_empty() {
        return Err(Error::parameter("prior_grid", "grid must be non-empty"));
    }
    let reductions = prior_grid
        .iter()
        .map(|p| replay_prior(log, policy, p, costs).map(|r| r.relative_reduction))
        .collect::<Result<Vec<T>>>()?;
    let mut sorted = reductions.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = sorted.len();
    let mid = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / T::lit(2.0)
    };
    Ok(SensitivityBand {
        prior_grid: prior_grid.to_vec(),
        reduction_min: sorted[0],
        reduction_mid: mid,
        reduction_max: sorted[n - 1],
        reductions,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Dominance {
    ADominates,
    BDominates,
    Overlap,
}

/// A dominates B when A's worst reduction beats B's best.
pub fn dominance_check<T: Scalar>(a: &SensitivityBand<T>, b: &SensitivityBand<T>) -> Result<Dominance> {
    if a.prior_grid != b.prior_grid {
        return Err(Error::parameter("prior_grid", "bands were computed on different grids"));
    }
    Ok(compare_intervals(
        (a.reduction_min, a.reduction_max),
        (b.reduction_min, b.reduction_max),
    ))
}

pub(crate) fn compare_intervals<T: Scalar>(a: (T, T), b: (T, T)) -> Dominance {
    if a.0 > b.1 {
        Dominance::ADominates
    } else if b.0 > a.1 {
        Dominance::BDominates
    } else {
        Dominance::Overlap
    }
}
