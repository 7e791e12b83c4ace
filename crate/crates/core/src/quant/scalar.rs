use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default opacity bit depth.
pub const OPACITY_BITS: u8 = 8;

/// Uniform quantizer with `2^bits` reconstruction levels spanning `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalarQuantizer {
    pub bits: u8,
    pub lo: f64,
    pub hi: f64,
}

impl ScalarQuantizer {
    pub fn new(bits: u8, lo: f64, hi: f64) -> Result<Self> {
        if !(1..=24).contains(&bits) {
            return Err(Error::validation(format!("bit depth {bits} outside 1..=24")));
        }
        if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
            return Err(Error::validation(format!("empty quantizer range [{lo}, {hi}]")));
        }
        Ok(ScalarQuantizer { bits, lo, hi })
    }

    /// Quantizer over the observed range of `values`. A degenerate range is
    /// widened upward so the single value stays exactly representable.
    pub fn fit(bits: u8, values: &[f64]) -> Result<Self> {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if values.is_empty() {
            return ScalarQuantizer::new(bits, 0.0, 1.0);
        }
        let hi = if hi > lo { hi } else { lo + 1.0 };
        ScalarQuantizer::new(bits, lo, hi)
    }

    pub fn max_code(&self) -> u32 {
        (1u32 << self.bits) - 1
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / self.max_code() as f64
    }

    pub fn code(&self, x: f64) -> u32 {
        let x = x.clamp(self.lo, self.hi);
        // f64::round rounds half away from zero
        let c = ((x - self.lo) / self.step()).round();
        (c as u32).min(self.max_code())
    }

    pub fn dequantize(&self, code: u32) -> f64 {
        if code >= self.max_code() {
            return self.hi;
        }
        self.lo + code as f64 * self.step()
    }

    pub fn quantize(&self, x: f64) -> (u32, f64) {
        let c = self.code(x);
        (c, self.dequantize(c))
    }
}

pub fn scalar_quantize(x: f64, q: &ScalarQuantizer) -> (u32, f64) {
    q.quantize(x)
}

/// Which opacity-related parameters are scalar-quantized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpacityPolicy {
    pub static_opacity: bool,
    pub dynamic_opacity: bool,
    /// Temporal centers `a_s`, `a_f`.
    pub centers: bool,
    /// Temporal variances `b_s`, `b_f`. Only the ablation ladder turns this on.
    pub variances: bool,
}

impl Default for OpacityPolicy {
    fn default() -> Self {
        OpacityPolicy {
            static_opacity: true,
            dynamic_opacity: true,
            centers: true,
            variances: false,
        }
    }
}

impl OpacityPolicy {
    pub const NONE: OpacityPolicy = OpacityPolicy {
        static_opacity: false,
        dynamic_opacity: false,
        centers: false,
        variances: false,
    };

    /// Rows of the opacity ablation: nothing, then one more attribute per row.
    pub fn ladder() -> [(&'static str, OpacityPolicy); 5] {
        let s = OpacityPolicy {
            static_opacity: true,
            ..OpacityPolicy::NONE
        };
        let d = OpacityPolicy {
            dynamic_opacity: true,
            ..s
        };
        let c = OpacityPolicy { centers: true, ..d };
        let v = OpacityPolicy { variances: true, ..c };
        [
            ("none", OpacityPolicy::NONE),
            ("static_opacity", s),
            ("+dynamic_opacity", d),
            ("+centers", c),
            ("+variances", v),
        ]
    }

    pub(crate) fn bits(&self) -> u8 {
        self.static_opacity as u8
            | (self.dynamic_opacity as u8) << 1
            | (self.centers as u8) << 2
            | (self.variances as u8) << 3
    }

    pub(crate) fn from_bits(b: u8) -> Option<Self> {
        if b >> 4 != 0 {
            return None;
        }
        Some(OpacityPolicy {
            static_opacity: b & 1 != 0,
            dynamic_opacity: b & 2 != 0,
            centers: b & 4 != 0,
            variances: b & 8 != 0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_and_bound() {
        let q = ScalarQuantizer::new(8, 0.0, 1.0).unwrap();
        assert_eq!(q.quantize(0.0).0, 0);
        assert_eq!(q.quantize(1.0), (255, 1.0));
        assert!((q.quantize(0.5).1 - 0.5).abs() <= 1.0 / 256.0);
        for i in 0..=1000 {
            let x = i as f64 / 1000.0;
            assert!((q.quantize(x).1 - x).abs() <= 1.0 / 256.0);
        }
    }

    #[test]
    fn half_rounds_away_from_zero() {
        let q = ScalarQuantizer::new(1, 0.0, 2.0).unwrap();
        assert_eq!(q.code(1.0), 1);
        let q = ScalarQuantizer::new(2, 0.0, 3.0).unwrap();
        assert_eq!(q.code(0.5), 1);
        assert_eq!(q.code(1.5), 2);
    }

    #[test]
    fn bad_ranges() {
        assert!(ScalarQuantizer::new(8, 1.0, 1.0).is_err());
        assert!(ScalarQuantizer::new(8, 2.0, 1.0).is_err());
        assert!(ScalarQuantizer::new(0, 0.0, 1.0).is_err());
        let q = ScalarQuantizer::fit(8, &[0.3, 0.3]).unwrap();
        assert_eq!(q.quantize(0.3).1, 0.3);
    }

    #[test]
    fn policy_bits_round_trip() {
        for (_, p) in OpacityPolicy::ladder() {
            assert_eq!(OpacityPolicy::from_bits(p.bits()), Some(p));
        }
        assert!(!OpacityPolicy::default().variances);
        assert_eq!(OpacityPolicy::from_bits(16), None);
    }
}
