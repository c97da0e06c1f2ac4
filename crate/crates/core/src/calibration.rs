//! Brier score, equal-width reliability bins, expected calibration error,
//! and sensitivity/specificity across score thresholds.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{in_unit, Scalar};

pub const DEFAULT_BINS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReliabilityBin<T> {
    pub lower: T,
    pub upper: T,
    /// `None` for empty bins.
    pub mean_predicted: Option<T>,
    pub empirical_rate: Option<T>,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationReport<T> {
    pub n: usize,
    pub brier_score: T,
    pub reliability_bins: Vec<ReliabilityBin<T>>,
    pub expected_calibration_error: T,
}

fn check_inputs<T: Scalar>(predictions: &[T], outcomes: &[bool]) -> Result<()> {
    if predictions.is_empty() {
        return Err(Error::parameter("predictions", "need at least one prediction"));
    }
    if predictions.len() != outcomes.len() {
        return Err(Error::parameter(
            "outcomes",
            format!("{} predictions but {} outcomes", predictions.len(), outcomes.len()),
        ));
    }
    if let Some(p) = predictions.iter().find(|p| !in_unit(**p)) {
        return Err(Error::parameter("predictions", format!("{p} is outside [0, 1]")));
    }
    Ok(())
}

fn indicator<T: Scalar>(outcome: bool) -> T {
    if outcome {
        T::one()
    } else {
        T::zero()
    }
}

pub fn brier_score<T: Scalar>(predictions: &[T], outcomes: &[bool]) -> Result<T> {
    check_inputs(predictions, outcomes)?;
    let sum = predictions
        .iter()
        .zip(outcomes)
        .fold(T::zero(), |acc, (&p, &o)| {
            let d = p - indicator::<T>(o);
            acc + d * d
        });
    Ok(sum / T::from_usize(predictions.len()).unwrap())
}

/// Bin `i` covers `[i/n, (i+1)/n)`; a prediction of exactly 1 goes in the last bin.
fn bin_of<T: Scalar>(p: T, n_bins: usize) -> usize {
    let raw = (p * T::from_usize(n_bins).unwrap()).floor().to_usize().unwrap_or(0);
    raw.min(n_bins - 1)
}

pub fn calibration_report<T: Scalar>(predictions: &[T], outcomes: &[bool], n_bins: usize) -> Result<CalibrationReport<T>> {
    if n_bins == 0 {
        return Err(Error::parameter("n_bins", "must be at least 1"));
    }
    let brier = brier_score(predictions, outcomes)?;
    let mut sums = vec![(T::zero(), T::zero(), 0usize); n_bins];
    for (&p, &o) in predictions.iter().zip(outcomes) {
        let slot = &mut sums[bin_of(p, n_bins)];
        slot.0 = slot.0 + p;
        slot.1 = slot.1 + indicator::<T>(o);
        slot.2 += 1;
    }
    let n = T::from_usize(predictions.len()).unwrap();
    let width = T::from_usize(n_bins).unwrap();
    let mut ece = T::zero();
    let bins = sums
        .into_iter()
        .enumerate()
        .map(|(i, (sum_p, sum_o, count))| {
            let (mean_predicted, empirical_rate) = if count > 0 {
                let c = T::from_usize(count).unwrap();
                let (mp, er) = (sum_p / c, sum_o / c);
                ece = ece + c / n * (mp - er).abs();
                (Some(mp), Some(er))
            } else {
                (None, None)
            };
            ReliabilityBin {
                lower: T::from_usize(i).unwrap() / width,
                upper: T::from_usize(i + 1).unwrap() / width,
                mean_predicted,
                empirical_rate,
                count,
            }
        })
        .collect();
    Ok(CalibrationReport {
        n: predictions.len(),
        brier_score: brier,
        reliability_bins: bins,
        expected_calibration_error: ece,
    })
}

/// Confusion-matrix summary of prompting every event with score ≥ threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OperatingPoint<T> {
    pub threshold: T,
    /// True-positive rate; `None` without positives.
    pub sensitivity: Option<T>,
    /// True-negative rate; `None` without negatives.
    pub specificity: Option<T>,
    pub prompt_rate: T,
}

pub fn operating_points<T: Scalar>(scores: &[T], outcomes: &[bool], thresholds: &[T]) -> Result<Vec<OperatingPoint<T>>> {
    check_inputs(scores, outcomes)?;
    let n = T::from_usize(scores.len()).unwrap();
    Ok(thresholds
        .iter()
        .map(|&threshold| {
            let (mut tp, mut fp, mut tn, mut fneg) = (0usize, 0usize, 0usize, 0usize);
            for (&s, &o) in scores.iter().zip(outcomes) {
                match (s >= threshold, o) {
                    (true, true) => tp += 1,
                    (true, false) => fp += 1,
                    (false, false) => tn += 1,
                    (false, true) => fneg += 1,
                }
            }
            let rate = |num: usize, den: usize| (den > 0).then(|| T::from_usize(num).unwrap() / T::from_usize(den).unwrap());
            OperatingPoint {
                threshold,
                sensitivity: rate(tp, tp + fneg),
                specificity: rate(tn, tn + fp),
                prompt_rate: T::from_usize(tp + fp).unwrap() / n,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions() {
        let r = calibration_report(&[1.0, 0.0, 1.0, 0.0], &[true, false, true, false], 10).unwrap();
        assert_eq!(r.brier_score, 0.0);
        assert_eq!(r.expected_calibration_error, 0.0);
        assert_eq!(r.reliability_bins.iter().map(|b| b.count).sum::<usize>(), 4);
    }

    #[test]
    fn constant_prediction_brier_identity() {
        // 3 of 10 positive, predict 0.3 everywhere
        let outcomes: Vec<bool> = (0..10).map(|i| i < 3).collect();
        let r = calibration_report(&[0.3f64; 10], &outcomes, 10).unwrap();
        assert!((r.brier_score - 0.3 * 0.7).abs() < 1e-12);
        assert!(r.expected_calibration_error.abs() < 1e-12);
    }

    #[test]
    fn hand_computed_four_points() {
        // predictions 0.1, 0.4, 0.45, 0.9 with outcomes F, T, F, T, 2 bins
        // brier = (0.01 + 0.36 + 0.2025 + 0.01) / 4 = 0.145625
        // bin0: mean_p 0.3167, rate 1/3 ; bin1: mean_p 0.9, rate 1
        // ece = 3/4 * |0.95/3 - 1/3| + 1/4 * 0.1 = 0.0125 + 0.025
        let r = calibration_report(&[0.1f64, 0.4, 0.45, 0.9], &[false, true, false, true], 2).unwrap();
        assert!((r.brier_score - 0.145625).abs() < 1e-12);
        assert_eq!(r.reliability_bins[0].count, 3);
        assert_eq!(r.reliability_bins[1].count, 1);
        assert!((r.reliability_bins[0].mean_predicted.unwrap() - 0.95 / 3.0).abs() < 1e-12);
        assert!((r.reliability_bins[0].empirical_rate.unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.reliability_bins[1].mean_predicted, Some(0.9));
        assert_eq!(r.reliability_bins[1].empirical_rate, Some(1.0));
        assert!((r.expected_calibration_error - 0.0375).abs() < 1e-12);
        assert_eq!((r.reliability_bins[1].lower, r.reliability_bins[1].upper), (0.5, 1.0));
    }

    #[test]
    fn input_errors() {
        assert!(calibration_report::<f64>(&[], &[], 10).is_err());
        assert!(calibration_report(&[0.5], &[true, false], 10).is_err());
        assert!(calibration_report(&[0.5], &[true], 0).is_err());
        assert!(calibration_report(&[1.5], &[true], 10).is_err());
    }

    #[test]
    fn operating_point_sweep() {
        let scores = [0.1, 0.2, 0.6, 0.8];
        let outcomes = [false, true, false, true];
        let pts = operating_points(&scores, &outcomes, &[0.0, 0.5, 0.9]).unwrap();
        assert_eq!(pts[0].sensitivity, Some(1.0));
        assert_eq!(pts[0].specificity, Some(0.0));
        assert_eq!(pts[1].sensitivity, Some(0.5));
        assert_eq!(pts[1].specificity, Some(0.5));
        assert_eq!(pts[1].prompt_rate, 0.5);
        assert_eq!(pts[2].sensitivity, Some(0.0));
        assert_eq!(pts[2].specificity, Some(1.0));
    }
}
