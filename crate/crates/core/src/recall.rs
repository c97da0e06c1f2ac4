//! Parametric recall model: correctness `p_c`, widening-given-error `p_o`,
//! intervention effects, and the perceived-age decay curve.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{clamp_unit, in_unit, is_non_negative, Scalar};

pub const DEFAULT_OLD_THRESHOLD_DAYS: f64 = 180.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AgeBucket {
    Recent,
    Old,
}

impl AgeBucket {
    pub fn from_age<T: Scalar>(perceived_age_days: T, old_threshold_days: T) -> Self {
        if perceived_age_days >= old_threshold_days {
            AgeBucket::Old
        } else {
            AgeBucket::Recent
        }
    }
}

/// Features of one reuse event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct FeatureVector<T> {
    pub perceived_age_days: T,
    pub age_bucket: AgeBucket,
    pub sensitive: bool,
    /// Uncertainty proxy in `[0, 1]`.
    pub hesitation: T,
    #[serde(default)]
    pub device_context: String,
}

impl<T: Scalar> FeatureVector<T> {
    /// Builds a feature vector, deriving the age bucket from the threshold.
    pub fn new(
        perceived_age_days: T,
        old_threshold_days: T,
        sensitive: bool,
        hesitation: T,
        device_context: impl Into<String>,
    ) -> Result<Self> {
        let fv = FeatureVector {
            perceived_age_days,
            age_bucket: AgeBucket::from_age(perceived_age_days, old_threshold_days),
            sensitive,
            hesitation,
            device_context: device_context.into(),
        };
        fv.validate()?;
        Ok(fv)
    }

    pub fn validate(&self) -> Result<()> {
        if !is_non_negative(self.perceived_age_days) {
            return Err(Error::parameter(
                "perceived_age_days",
                format!("{} must be finite and non-negative", self.perceived_age_days),
            ));
        }
        if !in_unit(self.hesitation) {
            return Err(Error::parameter(
                "hesitation",
                format!("{} is outside [0, 1]", self.hesitation),
            ));
        }
        Ok(())
    }
}

/// Exponential age curve `floor + (ceiling - floor) * 2^(-t / half_life)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct DecayParams<T> {
    pub floor: T,
    pub ceiling: T,
    pub half_life_days: T,
}

impl<T: Scalar> DecayParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !in_unit(self.floor) || !in_unit(self.ceiling) {
            return Err(Error::config("decay", "floor and ceiling must lie in [0, 1]"));
        }
        if self.floor > self.ceiling {
            return Err(Error::config("decay.floor", "floor exceeds ceiling"));
        }
        if !is_non_negative(self.half_life_days) || self.half_life_days == T::zero() {
            return Err(Error::config("decay.half_life_days", "must be finite and positive"));
        }
        Ok(())
    }
}

impl<T: Scalar> Default for DecayParams<T> {
    fn default() -> Self {
        DecayParams {
            floor: T::lit(0.3),
            ceiling: T::one(),
            half_life_days: T::lit(365.0),
        }
    }
}

/// Recall specificity at perceived age `t` days. Monotone non-increasing,
/// equal to `ceiling` at zero and tending to `floor`.
pub fn recall_decay<T: Scalar>(t: T, decay: &DecayParams<T>) -> T {
    let t = t.max(T::zero());
    let span = decay.ceiling - decay.floor;
    decay.floor + span * T::lit(2.0).powf(-t / decay.half_life_days)
}

/// Table-driven recall model, optionally scaled by the decay curve.
#[derive(Debug, Clone, PartialEq)]
pub struct RecallModelParams<T> {
    pub bucket_table: BTreeMap<(AgeBucket, bool), (T, T)>,
    pub decay: DecayParams<T>,
    pub blend: bool,
    pub old_threshold_days: T,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", deny_unknown_fields)]
struct BucketRow<T> {
    age: AgeBucket,
    sensitive: bool,
    p_c: T,
    p_o: T,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", deny_unknown_fields)]
struct ModelFile<T> {
    buckets: Vec<BucketRow<T>>,
    #[serde(default)]
    decay: Option<DecayParams<T>>,
    #[serde(default)]
    blend: bool,
    #[serde(default)]
    old_threshold_days: Option<T>,
}

impl<T: Scalar> RecallModelParams<T> {
    /// Same `(p_c, p_o)` for every bucket, blend off.
    pub fn uniform(p_c: T, p_o: T) -> Self {
        let mut bucket_table = BTreeMap::new();
        for age in [AgeBucket::Recent, AgeBucket::Old] {
            for sensitive in [false, true] {
                bucket_table.insert((age, sensitive), (p_c, p_o));
            }
        }
        RecallModelParams {
            bucket_table,
            decay: DecayParams::default(),
            blend: false,
            old_threshold_days: T::lit(DEFAULT_OLD_THRESHOLD_DAYS),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for ((age, sensitive), (pc, po)) in &self.bucket_table {
            if !in_unit(*pc) || !in_unit(*po) {
                return Err(Error::config(
                    format!("buckets[{age:?}, sensitive={sensitive}]"),
                    format!("probabilities ({pc}, {po}) must lie in [0, 1]"),
                ));
            }
        }
        self.decay.validate()?;
        if !is_non_negative(self.old_threshold_days) {
            return Err(Error::config("old_threshold_days", "must be non-negative"));
        }
        Ok(())
    }

    pub fn from_json_value(value: serde_json::Value, source_name: &str) -> Result<Self> {
        let file: ModelFile<T> =
            serde_json::from_value(value).map_err(|e| Error::from_json(source_name, &e))?;
        let mut bucket_table = BTreeMap::new();
        for row in file.buckets {
            if bucket_table
                .insert((row.age, row.sensitive), (row.p_c, row.p_o))
                .is_some()
            {
                return Err(Error::config(
                    format!("buckets[{:?}, sensitive={}]", row.age, row.sensitive),
                    "bucket listed twice",
                ));
            }
        }
        let params = RecallModelParams {
            bucket_table,
            decay: file.decay.unwrap_or_default(),
            blend: file.blend,
            old_threshold_days: file
                .old_threshold_days
                .unwrap_or_else(|| T::lit(DEFAULT_OLD_THRESHOLD_DAYS)),
        };
        params.validate()?;
        Ok(params)
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let file = ModelFile {
            buckets: self
                .bucket_table
                .iter()
                .map(|(&(age, sensitive), &(p_c, p_o))| BucketRow { age, sensitive, p_c, p_o })
                .collect(),
            decay: Some(self.decay),
            blend: self.blend,
            old_threshold_days: Some(self.old_threshold_days),
        };
        serde_json::to_value(file).expect("model serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let value = serde_json::from_str(&text).map_err(|e| Error::from_json(path.display().to_string(), &e))?;
        Self::from_json_value(value, &path.display().to_string())
    }
}

/// Evaluates `(p_c, p_o)` for a feature vector. With `blend` on, `p_c` is
/// scaled by `decay(t) / ceiling`, which is 1 at `t = 0`.
pub fn evaluate_recall<T: Scalar>(x: &FeatureVector<T>, params: &RecallModelParams<T>) -> Result<(T, T)> {
    let &(pc, po) = params
        .bucket_table
        .get(&(x.age_bucket, x.sensitive))
        .ok_or_else(|| {
            Error::config(
                "buckets",
                format!("no entry for ({:?}, sensitive={})", x.age_bucket, x.sensitive),
            )
        })?;
    let pc = if params.blend {
        let ceiling = params.decay.ceiling;
        let scale = if ceiling > T::zero() {
            recall_decay(x.perceived_age_days, &params.decay) / ceiling
        } else {
            T::zero()
        };
        pc * scale
    } else {
        pc
    };
    Ok((clamp_unit(pc), clamp_unit(po)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EffectMode {
    /// Replace the probabilities.
    Absolute,
    /// Add to the probabilities, then clamp.
    Delta,
}

/// Post-intervention probabilities `(p̃_c, p̃_o)`, given either absolutely
/// or as additive shifts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", deny_unknown_fields)]
pub struct InterventionEffect<T> {
    pub pc_after: T,
    pub po_after: T,
    pub mode: EffectMode,
}

impl<T: Scalar> InterventionEffect<T> {
    pub fn absolute(pc_after: T, po_after: T) -> Self {
        InterventionEffect { pc_after, po_after, mode: EffectMode::Absolute }
    }

    pub fn delta(pc_shift: T, po_shift: T) -> Self {
        InterventionEffect { pc_after: pc_shift, po_after: po_shift, mode: EffectMode::Delta }
    }

    pub fn identity() -> Self {
        Self::delta(T::zero(), T::zero())
    }

    pub fn validate(&self) -> Result<()> {
        match self.mode {
            EffectMode::Absolute if !in_unit(self.pc_after) || !in_unit(self.po_after) => Err(
                Error::config("effect", "absolute probabilities must lie in [0, 1]"),
            ),
            EffectMode::Delta
                if !self.pc_after.is_finite() || !self.po_after.is_finite() =>
            {
                Err(Error::config("effect", "delta shifts must be finite"))
            }
            _ => Ok(()),
        }
    }
}

pub fn apply_intervention<T: Scalar>(p_c: T, p_o: T, effect: &InterventionEffect<T>) -> (T, T) {
    match effect.mode {
        EffectMode::Absolute => (clamp_unit(effect.pc_after), clamp_unit(effect.po_after)),
        EffectMode::Delta => (clamp_unit(p_c + effect.pc_after), clamp_unit(p_o + effect.po_after)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn features(age: f64, sensitive: bool) -> FeatureVector<f64> {
        FeatureVector::new(age, 180.0, sensitive, 0.2, "mobile").unwrap()
    }

    #[test]
    fn bucket_derivation_uses_threshold() {
        assert_eq!(features(179.9, false).age_bucket, AgeBucket::Recent);
        assert_eq!(features(180.0, false).age_bucket, AgeBucket::Old);
    }

    #[test]
    fn feature_validation() {
        assert!(FeatureVector::new(-1.0, 180.0, false, 0.5, "").is_err());
        assert!(FeatureVector::new(1.0, 180.0, false, 1.5, "").is_err());
        assert!(FeatureVector::new(f64::NAN, 180.0, false, 0.5, "").is_err());
    }

    #[test]
    fn baseline_bucket_lookup() {
        let mut params = RecallModelParams::uniform(0.9, 0.3);
        params.bucket_table.insert((AgeBucket::Old, false), (0.57, 0.57));
        assert_eq!(evaluate_recall(&features(400.0, false), &params).unwrap(), (0.57, 0.57));
        assert_eq!(evaluate_recall(&features(10.0, false), &params).unwrap(), (0.9, 0.3));
    }

    #[test]
    fn perfect_recall_stays_one_without_blend() {
        let params = RecallModelParams::uniform(1.0, 0.5);
        assert_eq!(evaluate_recall(&features(900.0, true), &params).unwrap().0, 1.0);
    }

    #[test]
    fn blended_value_at_half_life() {
        let mut params = RecallModelParams::uniform(0.8, 0.5);
        params.blend = true;
        params.decay = DecayParams { floor: 0.2, ceiling: 1.0, half_life_days: 120.0 };
        // decay(120) = 0.2 + 0.8 / 2 = 0.6, normalized by ceiling 1.0
        let (pc, po) = evaluate_recall(&features(120.0, false), &params).unwrap();
        assert!((pc - 0.8 * 0.6).abs() < 1e-15);
        assert_eq!(po, 0.5);
        // non-unit ceiling: scale = decay / ceiling
        params.decay = DecayParams { floor: 0.2, ceiling: 0.8, half_life_days: 120.0 };
        let (pc, _) = evaluate_recall(&features(120.0, false), &params).unwrap();
        assert!((pc - 0.8 * (0.5 / 0.8)).abs() < 1e-15);
    }

    #[test]
    fn missing_bucket_is_config_error() {
        let mut params = RecallModelParams::uniform(0.5, 0.5);
        params.bucket_table.remove(&(AgeBucket::Old, true));
        assert!(matches!(
            evaluate_recall(&features(400.0, true), &params),
            Err(Error::Config { .. })
        ));
    }

    #[test]
    fn decay_examples() {
        let d = DecayParams::<f64> { floor: 0.25, ceiling: 0.95, half_life_days: 90.0 };
        assert_eq!(recall_decay(0.0, &d), 0.95);
        assert!((recall_decay(90.0f64, &d) - (0.25 + 0.95) / 2.0).abs() < 1e-15);
        assert!(recall_decay(360.0, &d) <= recall_decay(30.0, &d));
        assert!((recall_decay(1e6f64, &d) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn decay_validation() {
        assert!(DecayParams { floor: 0.6, ceiling: 0.5, half_life_days: 1.0 }.validate().is_err());
        assert!(DecayParams { floor: 0.1, ceiling: 0.5, half_life_days: 0.0 }.validate().is_err());
        assert!(DecayParams::<f64>::default().validate().is_ok());
    }

    #[test]
    fn intervention_examples() {
        assert_eq!(
            apply_intervention(0.57, 0.57, &InterventionEffect::absolute(0.72, 0.47)),
            (0.72, 0.47)
        );
        assert_eq!(apply_intervention(0.3, 0.6, &InterventionEffect::identity()), (0.3, 0.6));
        assert_eq!(
            apply_intervention(0.5, 0.5, &InterventionEffect::delta(0.9, -0.9)),
            (1.0, 0.0)
        );
    }

    #[test]
    fn model_json_round_trip() {
        let mut params = RecallModelParams::uniform(0.8f64, 0.4);
        params.bucket_table.insert((AgeBucket::Old, true), (0.5, 0.7));
        params.blend = true;
        let back = RecallModelParams::<f64>::from_json_value(params.to_json_value(), "inline").unwrap();
        assert_eq!(back, params);
    }

    #[test]
    fn model_json_rejects_out_of_range() {
        let value = serde_json::json!({"buckets":[{"age":"Old","sensitive":false,"p_c":1.2,"p_o":0.5}]});
        assert!(RecallModelParams::<f64>::from_json_value(value, "inline").is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let params = RecallModelParams::uniform(0.57f32, 0.57f32);
        let x = FeatureVector::new(200.0f32, 180.0, false, 0.1, "").unwrap();
        assert_eq!(evaluate_recall(&x, &params).unwrap(), (0.57f32, 0.57f32));
    }

    proptest! {
        #[test]
        fn evaluated_probabilities_in_unit(
            age in 0.0f64..5000.0,
            hes in 0.0f64..=1.0,
            sensitive: bool,
            pc in 0.0f64..=1.0,
            po in 0.0f64..=1.0,
            floor in 0.0f64..=1.0,
            span in 0.0f64..=1.0,
            half in 0.1f64..1000.0,
            blend: bool,
        ) {
            let mut params = RecallModelParams::uniform(pc, po);
            params.blend = blend;
            params.decay = DecayParams { floor: floor * (1.0 - span), ceiling: floor * (1.0 - span) + span, half_life_days: half };
            prop_assume!(params.decay.ceiling <= 1.0);
            let x = FeatureVector::new(age, 180.0, sensitive, hes, "").unwrap();
            let (a, b) = evaluate_recall(&x, &params).unwrap();
            prop_assert!((0.0..=1.0).contains(&a));
            prop_assert!((0.0..=1.0).contains(&b));
        }

        #[test]
        fn decay_monotone_on_sorted_grid(mut ts in proptest::collection::vec(0.0f64..10_000.0, 2..40), half in 0.5f64..2000.0) {
            ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let d = DecayParams { floor: 0.1, ceiling: 0.9, half_life_days: half };
            for w in ts.windows(2) {
                prop_assert!(recall_decay(w[1], &d) <= recall_decay(w[0], &d));
            }
        }

        #[test]
        fn absolute_effect_idempotent(pc in 0.0f64..=1.0, po in 0.0f64..=1.0, a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let e = InterventionEffect::absolute(a, b);
            let once = apply_intervention(pc, po, &e);
            prop_assert_eq!(apply_intervention(once.0, once.1, &e), once);
        }

        #[test]
        fn delta_effect_stays_in_unit(pc in 0.0f64..=1.0, po in 0.0f64..=1.0, a in -2.0f64..2.0, b in -2.0f64..2.0) {
            let (x, y) = apply_intervention(pc, po, &InterventionEffect::delta(a, b));
            prop_assert!((0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y));
        }
    }
}
