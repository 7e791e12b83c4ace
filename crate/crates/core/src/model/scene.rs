use serde::{Deserialize, Serialize};

use super::quat::{Quat, Vec3};
use crate::error::{Error, Result};

/// Tolerance on quaternion norms accepted by validation.
pub const UNIT_TOLERANCE: f64 = 1e-6;

/// Number of SH coefficient triples for maximum degree `k`.
pub fn sh_len(k: u8) -> usize {
    let k = k as usize;
    (k + 1) * (k + 1)
}

/// Coefficient index range of SH band `l` inside a coefficient list.
pub fn sh_band(l: usize) -> std::ops::Range<usize> {
    l * l..(l + 1) * (l + 1)
}

/// Gaussian whose position moves linearly over the whole sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StaticGaussian {
    pub pivot: Vec3,
    pub displacement: Vec3,
    /// Natural log of the per-axis standard deviations.
    pub log_scale: Vec3,
    pub rotation: Quat,
    pub opacity: f64,
    pub sh: Vec<[f64; 3]>,
}

/// Gaussian described by keyframe samples and a temporal opacity window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicGaussian {
    pub keyframe_positions: Vec<Vec3>,
    pub keyframe_rotations: Vec<Quat>,
    pub log_scale: Vec3,
    pub base_opacity: f64,
    /// Start of the fully visible plateau.
    pub appear_center: f64,
    /// End of the fully visible plateau.
    pub vanish_center: f64,
    /// Width of the fade-in edge.
    pub appear_variance: f64,
    /// Width of the fade-out edge.
    pub vanish_variance: f64,
    pub sh: Vec<[f64; 3]>,
}

impl StaticGaussian {
    pub fn scale(&self) -> Vec3 {
        self.log_scale.map(f64::exp)
    }
}

impl DynamicGaussian {
    pub fn scale(&self) -> Vec3 {
        self.log_scale.map(f64::exp)
    }
}

/// A complete static + dynamic scene with its time metadata.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianScene {
    pub statics: Vec<StaticGaussian>,
    pub dynamics: Vec<DynamicGaussian>,
    pub duration: f64,
    pub keyframe_interval: u32,
    pub timestamps: Vec<f64>,
    pub max_sh_degree: u8,
}

impl GaussianScene {
    /// Empty scene with the given timing.
    pub fn empty(duration: f64, keyframe_interval: u32, timestamps: Vec<f64>, k: u8) -> Self {
        GaussianScene {
            statics: Vec::new(),
            dynamics: Vec::new(),
            duration,
            keyframe_interval,
            timestamps,
            max_sh_degree: k,
        }
    }

    /// Number of uniformly spaced keyframes `t_n = n * I` needed to cover `[0, L]`.
    pub fn keyframe_count(&self) -> usize {
        keyframe_count(self.duration, self.keyframe_interval)
    }

    pub fn keyframe_times(&self) -> Vec<f64> {
        (0..self.keyframe_count())
            .map(|n| n as f64 * self.keyframe_interval as f64)
            .collect()
    }

    pub fn len(&self) -> usize {
        self.statics.len() + self.dynamics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statics.is_empty() && self.dynamics.is_empty()
    }

    /// Check every structural invariant of the scene.
    pub fn validate(&self) -> Result<()> {
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(Error::validation("scene duration must be positive"));
        }
        if self.keyframe_interval == 0 {
            return Err(Error::validation("keyframe interval must be positive"));
        }
        if self.max_sh_degree > 3 {
            return Err(Error::validation("max SH degree must be in [0, 3]"));
        }
        if self
            .timestamps
            .windows(2)
            .any(|w| !(w[0] <= w[1]))
        {
            return Err(Error::validation("timestamps must be ordered"));
        }
        if self
            .timestamps
            .iter()
            .any(|&t| !(t >= 0.0 && t <= self.duration))
        {
            return Err(Error::validation("timestamps must lie in [0, L]"));
        }
        let n_sh = sh_len(self.max_sh_degree);
        for (i, g) in self.statics.iter().enumerate() {
            let ctx = |m: &str| Error::validation(format!("static {i}: {m}"));
            if !g.rotation.is_unit(UNIT_TOLERANCE) {
                return Err(ctx("rotation is not unit norm"));
            }
            if !(0.0..=1.0).contains(&g.opacity) {
                return Err(ctx("opacity outside [0, 1]"));
            }
            if g.sh.len() != n_sh {
                return Err(ctx("SH coefficient count does not match the scene degree"));
            }
            if !all_finite(&g.pivot) || !all_finite(&g.displacement) || !all_finite(&g.log_scale) {
                return Err(ctx("non-finite geometry"));
            }
        }
        let kf = self.keyframe_count();
        for (i, g) in self.dynamics.iter().enumerate() {
            let ctx = |m: &str| Error::validation(format!("dynamic {i}: {m}"));
            if g.keyframe_positions.len() != kf || g.keyframe_rotations.len() != kf {
                return Err(ctx("keyframe count does not match the scene"));
            }
            if g
                .keyframe_rotations
                .iter()
                .any(|q| !q.is_unit(UNIT_TOLERANCE))
            {
                return Err(ctx("keyframe rotation is not unit norm"));
            }
            if g.appear_center > g.vanish_center {
                return Err(ctx("appear center after vanish center"));
            }
            if !(g.appear_variance > 0.0 && g.vanish_variance > 0.0) {
                return Err(ctx("temporal variances must be positive"));
            }
            if !(0.0..=1.0).contains(&g.base_opacity) {
                return Err(ctx("base opacity outside [0, 1]"));
            }
            if g.sh.len() != n_sh {
                return Err(ctx("SH coefficient count does not match the scene degree"));
            }
            if g.keyframe_positions.iter().any(|p| !all_finite(p)) || !all_finite(&g.log_scale) {
                return Err(ctx("non-finite geometry"));
            }
        }
        Ok(())
    }

    /// Axis-aligned bounding box diagonal of every stored position sample.
    pub fn extent(&self) -> f64 {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        let mut grow = |p: Vec3| {
            for a in 0..3 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        };
        for g in &self.statics {
            grow(g.pivot);
            grow(super::quat::add3(g.pivot, g.displacement));
        }
        for g in &self.dynamics {
            g.keyframe_positions.iter().copied().for_each(&mut grow);
        }
        if lo[0] > hi[0] {
            return 1.0;
        }
        let d = super::quat::norm3(super::quat::sub3(hi, lo));
        if d > 0.0 {
            d
        } else {
            1.0
        }
    }
}

pub fn keyframe_count(duration: f64, interval: u32) -> usize {
    let steps = (duration / interval as f64 - 1e-9).ceil().max(0.0) as usize;
    steps.max(1) + 1
}

fn all_finite(v: &Vec3) -> bool {
    v.iter().all(|x| x.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keyframes_cover_duration() {
        assert_eq!(keyframe_count(62.0, 2), 32);
        assert_eq!(keyframe_count(63.0, 2), 33);
        assert_eq!(keyframe_count(1.0, 4), 2);
    }

    #[test]
    fn sh_band_ranges() {
        assert_eq!(sh_band(0), 0..1);
        assert_eq!(sh_band(1), 1..4);
        assert_eq!(sh_band(3), 9..16);
        assert_eq!(sh_len(3), 16);
    }

    #[test]
    fn validation_rejects_bad_rotation() {
        let mut s = GaussianScene::empty(4.0, 2, vec![0.0, 4.0], 0);
        s.statics.push(StaticGaussian {
            pivot: [0.0; 3],
            displacement: [0.0; 3],
            log_scale: [0.0; 3],
            rotation: Quat::new(1.0, 0.1, 0.0, 0.0),
            opacity: 0.5,
            sh: vec![[0.0; 3]],
        });
        assert!(matches!(s.validate(), Err(Error::Validation(_))));
        s.statics[0].rotation = Quat::IDENTITY;
        s.validate().unwrap();
    }
}
