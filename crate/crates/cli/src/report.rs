//! Text and CSV renderings of engine outputs.

use anyhow::Result;
use serde::Serialize;

use recall_drift::replay::Dominance;
use recall_drift::{CalibrationReport, Policy, PolicyReport, ScoredDecision, SensitivityBand};

pub fn csv_bytes<S: Serialize>(rows: &[S]) -> Result<Vec<u8>> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row)?;
    }
    Ok(writer.into_inner().map_err(|e| e.into_error())?)
}

pub fn policy_text(policy: &Policy, r: &PolicyReport) -> String {
    format!(
        "policy: {policy}\n\
         events: {}\n\
         prompts shown: {}\n\
         expected overexposures, baseline:    {:>10.1}\n\
         expected overexposures, with policy: {:>10.1}\n\
         \x20 prompted events:                  {:>10.1}\n\
         \x20 unprompted events:                {:>10.1}\n\
         absolute reduction:                  {:>10.1}\n\
         relative reduction:                  {:>9.1}%\n",
        r.n_events,
        r.prompts_shown,
        r.expected_overexposures_baseline,
        r.expected_overexposures_with_policy,
        r.expected_prompted,
        r.expected_unprompted,
        r.absolute_reduction,
        100.0 * r.relative_reduction,
    )
}

#[derive(Debug, Serialize)]
pub struct PolicyRow {
    pub policy: String,
    pub n_events: usize,
    pub prompts_shown: usize,
    pub expected_overexposures_baseline: f64,
    pub expected_overexposures_with_policy: f64,
    pub expected_prompted: f64,
    pub expected_unprompted: f64,
    pub absolute_reduction: f64,
    pub relative_reduction: f64,
}

impl PolicyRow {
    pub fn new(policy: &Policy, r: &PolicyReport) -> Self {
        PolicyRow {
            policy: policy.to_string(),
            n_events: r.n_events,
            prompts_shown: r.prompts_shown,
            expected_overexposures_baseline: r.expected_overexposures_baseline,
            expected_overexposures_with_policy: r.expected_overexposures_with_policy,
            expected_prompted: r.expected_prompted,
            expected_unprompted: r.expected_unprompted,
            absolute_reduction: r.absolute_reduction,
            relative_reduction: r.relative_reduction,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ScoredRow {
    pub event_id: u64,
    pub risk: f64,
    pub delta_r: f64,
    pub weighted_benefit: f64,
    pub selected: bool,
}

impl From<&ScoredDecision> for ScoredRow {
    fn from(d: &ScoredDecision) -> Self {
        ScoredRow {
            event_id: d.scored.event_id,
            risk: d.scored.risk,
            delta_r: d.scored.delta_r,
            weighted_benefit: d.scored.weighted_benefit,
            selected: d.selected,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct GridRow {
    pub grid_index: usize,
    pub p_c: f64,
    pub p_o: f64,
    pub pc_after: f64,
    pub po_after: f64,
    pub relative_reduction: f64,
}

pub fn grid_rows(band: &SensitivityBand) -> Vec<GridRow> {
    band.prior_grid
        .iter()
        .zip(&band.reductions)
        .enumerate()
        .map(|(i, (p, &r))| GridRow {
            grid_index: i,
            p_c: p.p_c,
            p_o: p.p_o,
            pc_after: p.pc_after,
            po_after: p.po_after,
            relative_reduction: r,
        })
        .collect()
}

pub fn band_text(policy: &Policy, band: &SensitivityBand) -> String {
    format!(
        "policy {policy}: relative reduction over {} priors  min {:.2}%  median {:.2}%  max {:.2}%\n",
        band.prior_grid.len(),
        100.0 * band.reduction_min,
        100.0 * band.reduction_mid,
        100.0 * band.reduction_max,
    )
}

pub fn dominance_text(a: &Policy, b: &Policy, verdict: Dominance) -> String {
    match verdict {
        Dominance::ADominates => format!("{a} dominates {b} across the grid\n"),
        Dominance::BDominates => format!("{b} dominates {a} across the grid\n"),
        Dominance::Overlap => format!("{a} and {b} overlap; neither dominates\n"),
    }
}

#[derive(Debug, Serialize)]
pub struct BinRow {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    pub mean_predicted: Option<f64>,
    pub empirical_rate: Option<f64>,
}

pub fn bin_rows(cal: &CalibrationReport) -> Vec<BinRow> {
    cal.reliability_bins
        .iter()
        .map(|b| BinRow {
            lower: b.lower,
            upper: b.upper,
            count: b.count,
            mean_predicted: b.mean_predicted,
            empirical_rate: b.empirical_rate,
        })
        .collect()
}

pub fn calibration_text(cal: &CalibrationReport) -> String {
    let mut text = format!(
        "samples: {}\nbrier score: {:.6}\nexpected calibration error: {:.6}\n\nbin            count  mean_pred  observed\n",
        cal.n, cal.brier_score, cal.expected_calibration_error
    );
    for b in &cal.reliability_bins {
        let fmt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into());
        text.push_str(&format!(
            "[{:.2}, {:.2})  {:>6}  {:>9}  {:>8}\n",
            b.lower,
            b.upper,
            b.count,
            fmt(b.mean_predicted),
            fmt(b.empirical_rate)
        ));
    }
    text
}
