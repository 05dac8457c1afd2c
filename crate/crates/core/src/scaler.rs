//! Maps the planner's discrete depth label to a metric step length.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScalerError {
    #[error("depth label {label} outside 1..={levels}")]
    LabelOutOfRange { label: u32, levels: u32 },
    #[error("invalid scaler config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepMode {
    Adaptive,
    Fixed { step: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalerConfig {
    /// Global scale in meters; the step for the largest label.
    pub scale: f64,
    /// Number of depth labels.
    pub levels: u32,
    /// Curve exponent.
    pub exponent: f64,
    /// Lower bound on the step, meters.
    pub min_step: f64,
    pub mode: StepMode,
}

/// Fixed step used when the fixed mode is requested without a value.
pub const DEFAULT_FIXED_STEP: f64 = 2.0;

impl Default for ScalerConfig {
    fn default() -> Self {
        Self {
            scale: 10.0,
            levels: 10,
            exponent: 1.8,
            min_step: 0.1,
            mode: StepMode::Adaptive,
        }
    }
}

impl ScalerConfig {
    pub fn fixed(mut self, step: f64) -> Self {
        self.mode = StepMode::Fixed { step };
        self
    }

    pub fn validate(&self) -> Result<(), ScalerError> {
        let bad = |m: String| Err(ScalerError::InvalidConfig(m));
        if self.levels < 1 {
            return bad("levels must be >= 1".into());
        }
        if !(self.exponent.is_finite() && self.exponent > 0.0) {
            return bad(format!("exponent must be > 0, got {}", self.exponent));
        }
        if !(self.min_step.is_finite() && self.min_step > 0.0) {
            return bad(format!("min_step must be > 0, got {}", self.min_step));
        }
        if !(self.scale.is_finite() && self.min_step <= self.scale) {
            return bad(format!(
                "min_step {} must not exceed scale {}",
                self.min_step, self.scale
            ));
        }
        if let StepMode::Fixed { step } = self.mode {
            if !(step.is_finite() && step > 0.0) {
                return bad(format!("fixed step must be > 0, got {step}"));
            }
        }
        Ok(())
    }
}

/// A depth label in `1..=levels`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DepthLabel(u32);

impl DepthLabel {
    pub fn new(label: u32, levels: u32) -> Result<Self, ScalerError> {
        if label == 0 || label > levels {
            return Err(ScalerError::LabelOutOfRange { label, levels });
        }
        Ok(Self(label))
    }

    /// Clamps any integer into `1..=levels`.
    pub fn saturating(label: i64, levels: u32) -> Self {
        Self(label.clamp(1, levels.max(1) as i64) as u32)
    }

    pub fn get(self) -> u32 {
        self.0
    }
}

pub fn scale_depth(cfg: &ScalerConfig, label: DepthLabel) -> Result<f64, ScalerError> {
    if label.0 == 0 || label.0 > cfg.levels {
        return Err(ScalerError::LabelOutOfRange {
            label: label.0,
            levels: cfg.levels,
        });
    }
    match cfg.mode {
        StepMode::Fixed { step } => Ok(step),
        StepMode::Adaptive => {
            // label == levels short-circuits so the endpoint is exactly `scale`
            let ratio = label.0 as f64 / cfg.levels as f64;
            let curve = if label.0 == cfg.levels {
                cfg.scale
            } else {
                cfg.scale * ratio.powf(cfg.exponent)
            };
            Ok(curve.max(cfg.min_step))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigUint;
    use proptest::prelude::*;

    /// 10 * (k/10)^(9/5) evaluated as an exact integer fifth root,
    /// carrying `digits` decimal places.
    fn curve_oracle(k: u32, digits: u32) -> f64 {
        // (k/10)^(9/5) * 10^digits = root5(k^9 * 10^(5*digits - 9))
        let n = BigUint::from(k).pow(9) * BigUint::from(10u32).pow(5 * digits - 9);
        let root = n.nth_root(5);
        let s = root.to_string();
        let scaled: f64 = format!("{}e-{}", s, digits).parse().unwrap();
        10.0 * scaled
    }

    // computed once from curve_oracle(k, 40), cross-checked with mpmath at 50 digits
    const FROZEN: [f64; 9] = [
        0.15848931924611134,
        0.5518918645844859,
        1.1450336728854529,
        1.92179909437029,
        2.8717458874925876,
        3.987238835693844,
        5.262310526550319,
        6.692093136584148,
        8.272495069561094,
    ];

    fn reference_cfg() -> ScalerConfig {
        ScalerConfig::default()
    }

    #[test]
    fn oracle_matches_frozen_table() {
        for k in 1..=9u32 {
            let o = curve_oracle(k, 40);
            let f = FROZEN[(k - 1) as usize];
            assert!(((o - f) / f).abs() < 1e-15, "k={k}: oracle {o} frozen {f}");
        }
    }

    #[test]
    fn adaptive_matches_oracle() {
        let cfg = reference_cfg();
        for k in 1..=9u32 {
            let got = scale_depth(&cfg, DepthLabel::new(k, 10).unwrap()).unwrap();
            let want = FROZEN[(k - 1) as usize];
            assert!(((got - want) / want).abs() < 1e-9, "k={k}: {got} vs {want}");
        }
        assert_eq!(
            scale_depth(&cfg, DepthLabel::new(10, 10).unwrap()).unwrap(),
            10.0
        );
    }

    #[test]
    fn floor_binds_for_small_scale() {
        let cfg = ScalerConfig {
            scale: 1.0,
            ..reference_cfg()
        };
        assert_eq!(
            scale_depth(&cfg, DepthLabel::new(1, 10).unwrap()).unwrap(),
            0.1
        );
    }

    #[test]
    fn fixed_mode_ignores_label() {
        let cfg = reference_cfg().fixed(DEFAULT_FIXED_STEP);
        for k in 1..=10 {
            assert_eq!(
                scale_depth(&cfg, DepthLabel::new(k, 10).unwrap()).unwrap(),
                2.0
            );
        }
    }

    #[test]
    fn label_range_is_enforced() {
        assert!(DepthLabel::new(0, 10).is_err());
        assert!(DepthLabel::new(11, 10).is_err());
        assert_eq!(DepthLabel::saturating(14, 10).get(), 10);
        assert_eq!(DepthLabel::saturating(-3, 10).get(), 1);
        // label minted for a larger scale
        let big = DepthLabel::new(12, 20).unwrap();
        assert!(matches!(
            scale_depth(&reference_cfg(), big),
            Err(ScalerError::LabelOutOfRange {
                label: 12,
                levels: 10
            })
        ));
    }

    #[test]
    fn config_validation() {
        assert!(reference_cfg().validate().is_ok());
        let c = ScalerConfig {
            min_step: 20.0,
            ..reference_cfg()
        };
        assert!(c.validate().is_err());
        let c = ScalerConfig {
            exponent: 0.0,
            ..reference_cfg()
        };
        assert!(c.validate().is_err());
        assert!(reference_cfg().fixed(-1.0).validate().is_err());
    }

    proptest! {
        #[test]
        fn monotone_and_bounded(
            scale in 0.5f64..50.0,
            levels in 1u32..40,
            exponent in 0.1f64..4.0,
            min_frac in 0.001f64..1.0,
        ) {
            let cfg = ScalerConfig { scale, levels, exponent, min_step: scale * min_frac, mode: StepMode::Adaptive };
            let mut prev = 0.0;
            for k in 1..=levels {
                let d = scale_depth(&cfg, DepthLabel::new(k, levels).unwrap()).unwrap();
                prop_assert!(d >= cfg.min_step && d <= scale);
                prop_assert!(d >= prev);
                let raw = scale * (k as f64 / levels as f64).powf(exponent);
                if k > 1 && raw > cfg.min_step && prev > cfg.min_step {
                    prop_assert!(d > prev);
                }
                prev = d;
            }
            prop_assert_eq!(scale_depth(&cfg, DepthLabel::new(levels, levels).unwrap()).unwrap(), scale);
        }
    }
}
