//! Six-level operating points and config-file overrides.

use std::path::Path;

use serde::Deserialize;

use crate::codec::CodecConfig;
use crate::error::{Error, Result};
use crate::quant::OpacityPolicy;

/// Gaussian pruning weights for levels 1..=6.
pub const LAMBDA_GS_SCHEDULE: [f64; 6] = [0.05, 0.02, 0.01, 0.005, 0.002, 0.0005];
/// SH band pruning weights for levels 1..=6.
pub const LAMBDA_SH_SCHEDULE: [f64; 6] = [0.5, 0.2, 0.1, 0.05, 0.02, 0.005];
/// Codebook size per level.
pub const CODEBOOK_SCHEDULE: [usize; 6] = [16, 24, 32, 48, 64, 96];
pub const LEVELS: std::ops::RangeInclusive<u8> = 1..=6;

/// Rate weight shared by all levels.
pub const DEFAULT_LAMBDA_R: f64 = 5.0;

#[derive(Clone, Debug, PartialEq)]
pub struct LevelPreset {
    pub level: u8,
    pub codec: CodecConfig,
}

impl LevelPreset {
    pub fn new(level: u8) -> Result<Self> {
        if !LEVELS.contains(&level) {
            return Err(Error::validation(format!("level must lie in 1..=6, got {level}")));
        }
        let i = level as usize - 1;
        Ok(LevelPreset {
            level,
            codec: CodecConfig {
                lambda_gs: LAMBDA_GS_SCHEDULE[i],
                lambda_sh: LAMBDA_SH_SCHEDULE[i],
                lambda_r: DEFAULT_LAMBDA_R,
                codebook_size: CODEBOOK_SCHEDULE[i],
                ..CodecConfig::default()
            },
        })
    }

    pub fn all() -> Vec<LevelPreset> {
        LEVELS.map(|l| LevelPreset::new(l).expect("valid level")).collect()
    }

    pub fn apply(&mut self, o: &Overrides) {
        let c = &mut self.codec;
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = o.$f { c.$f = v; })* };
        }
        set!(
            lambda_r,
            vq_weight,
            codebook_size,
            ecvq_iterations,
            wavelet_levels,
            keep_levels,
            position_step,
            opacity_bits,
            seed
        );
        if let Some(v) = o.lambda_gs.as_ref().and_then(|v| v.get(self.level as usize - 1)) {
            c.lambda_gs = *v;
        }
        if let Some(v) = o.lambda_sh.as_ref().and_then(|v| v.get(self.level as usize - 1)) {
            c.lambda_sh = *v;
        }
        let p = &mut c.opacity_policy;
        if let Some(v) = o.quantize_static_opacity {
            p.static_opacity = v;
        }
        if let Some(v) = o.quantize_dynamic_opacity {
            p.dynamic_opacity = v;
        }
        if let Some(v) = o.quantize_centers {
            p.centers = v;
        }
        if let Some(v) = o.quantize_variances {
            p.variances = v;
        }
    }
}

/// Optional preset fields; unset fields keep the preset value.
///
/// ```toml
/// lambda_r = 0.5
/// codebook_size = 128
/// lambda_gs = [0.05, 0.02, 0.01, 0.005, 0.002, 0.0005]
/// quantize_variances = true
/// ```
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub lambda_r: Option<f64>,
    pub vq_weight: Option<f64>,
    pub codebook_size: Option<usize>,
    pub ecvq_iterations: Option<usize>,
    pub wavelet_levels: Option<u8>,
    pub keep_levels: Option<u8>,
    pub position_step: Option<f64>,
    pub opacity_bits: Option<u8>,
    pub seed: Option<u64>,
    /// Per-level schedule, six entries.
    pub lambda_gs: Option<Vec<f64>>,
    pub lambda_sh: Option<Vec<f64>>,
    pub quantize_static_opacity: Option<bool>,
    pub quantize_dynamic_opacity: Option<bool>,
    pub quantize_centers: Option<bool>,
    pub quantize_variances: Option<bool>,
}

impl Overrides {
    pub fn parse(text: &str) -> Result<Self> {
        let o: Overrides =
            toml::from_str(text).map_err(|e| Error::validation(format!("config: {e}")))?;
        for (name, s) in [("lambda_gs", &o.lambda_gs), ("lambda_sh", &o.lambda_sh)] {
            if let Some(s) = s {
                if s.len() != 6 {
                    return Err(Error::validation(format!("config: {name} needs six entries")));
                }
            }
        }
        Ok(o)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Overrides::parse(&std::fs::read_to_string(path)?)
    }

    /// `other` wins where both are set.
    pub fn merged(&self, other: &Overrides) -> Overrides {
        macro_rules! pick {
            ($($f:ident),*) => { Overrides { $($f: other.$f.clone().or_else(|| self.$f.clone()),)* } };
        }
        pick!(
            lambda_r,
            vq_weight,
            codebook_size,
            ecvq_iterations,
            wavelet_levels,
            keep_levels,
            position_step,
            opacity_bits,
            seed,
            lambda_gs,
            lambda_sh,
            quantize_static_opacity,
            quantize_dynamic_opacity,
            quantize_centers,
            quantize_variances
        )
    }
}

/// Preset for `level` with overrides applied and validated.
pub fn resolve(level: u8, o: &Overrides) -> Result<LevelPreset> {
    let mut p = LevelPreset::new(level)?;
    p.apply(o);
    p.codec.validate()?;
    Ok(p)
}

/// Convenience for ablations that only change the policy.
pub fn with_policy(mut p: LevelPreset, policy: OpacityPolicy) -> LevelPreset {
    p.codec.opacity_policy = policy;
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedules() {
        assert_eq!(LevelPreset::new(1).unwrap().codec.lambda_gs, 0.05);
        assert_eq!(LevelPreset::new(6).unwrap().codec.lambda_sh, 0.005);
        for s in [LAMBDA_GS_SCHEDULE, LAMBDA_SH_SCHEDULE] {
            assert!(s.windows(2).all(|w| w[0] > w[1]));
        }
        assert!(LevelPreset::new(0).is_err());
        assert!(LevelPreset::new(7).is_err());
    }

    #[test]
    fn overrides_layer() {
        let file = Overrides::parse("lambda_r = 0.25\ncodebook_size = 128\n").unwrap();
        let flags = Overrides { codebook_size: Some(32), ..Overrides::default() };
        let p = resolve(2, &file.merged(&flags)).unwrap();
        assert_eq!(p.codec.lambda_r, 0.25);
        assert_eq!(p.codec.codebook_size, 32);
        assert_eq!(p.codec.lambda_gs, 0.02);
        assert!(Overrides::parse("bogus = 1").is_err());
        assert!(Overrides::parse("lambda_gs = [1.0]").is_err());
        let sched = Overrides::parse("lambda_gs = [6.0, 5.0, 4.0, 3.0, 2.0, 1.0]").unwrap();
        assert_eq!(resolve(3, &sched).unwrap().codec.lambda_gs, 4.0);
    }

    #[test]
    fn invalid_override_rejected() {
        let o = Overrides { wavelet_levels: Some(1), keep_levels: Some(2), ..Overrides::default() };
        assert!(resolve(1, &o).is_err());
    }
}
