//! Deterministic synthetic desk-scale scenes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, UnitSphere};

use super::probes::{ProbeConfig, ProbeSet};
use super::render::color_to_dc;
use crate::bytes::f32r;
use crate::error::{Error, Result};
use crate::model::{sh_band, sh_len, DynamicGaussian, GaussianScene, Quat, StaticGaussian, Vec3};

/// Generator settings. Dynamics follow slow circular orbits; a share of them
/// are only visible inside a temporal window ("events").
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorConfig {
    pub n_static: usize,
    pub n_dynamic: usize,
    pub n_frames: usize,
    pub keyframe_interval: u32,
    pub sh_degree: u8,
    /// Share of dynamics with an appear/disappear window.
    pub event_fraction: f64,
    pub orbit_radius: (f64, f64),
    /// Orbit revolutions over the whole sequence.
    pub orbit_revolutions: (f64, f64),
    /// Log-uniform range of temporal edge widths for events.
    pub event_variance: (f64, f64),
    /// Log-uniform range of Gaussian standard deviations.
    pub scale: (f64, f64),
    /// Standard deviation of degree-1 SH coefficients; band `l` uses `sh_energy / l`.
    pub sh_energy: f64,
    pub probes: ProbeConfig,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig::standard()
    }
}

impl GeneratorConfig {
    /// 2000 static + 500 dynamic Gaussians, 64 frames, keyframe interval 2.
    pub fn standard() -> Self {
        GeneratorConfig {
            n_static: 2000,
            n_dynamic: 500,
            n_frames: 64,
            keyframe_interval: 2,
            sh_degree: 3,
            event_fraction: 0.3,
            orbit_radius: (0.15, 0.4),
            orbit_revolutions: (0.25, 0.5),
            event_variance: (0.3, 8.0),
            scale: (0.03, 0.09),
            sh_energy: 0.08,
            probes: ProbeConfig::default(),
        }
    }

    /// Motion-dominated scene: every dynamic Gaussian on a persistent smooth orbit.
    pub fn smooth_orbits() -> Self {
        GeneratorConfig {
            n_static: 500,
            event_fraction: 0.0,
            orbit_revolutions: (0.1, 0.25),
            ..GeneratorConfig::standard()
        }
    }

    /// Smaller scene dominated by short-lived appearance events.
    pub fn events() -> Self {
        GeneratorConfig {
            n_static: 600,
            n_dynamic: 600,
            event_fraction: 1.0,
            event_variance: (0.02, 300.0),
            ..GeneratorConfig::standard()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_frames < 2 {
            return Err(Error::validation("at least two frames are required"));
        }
        if self.keyframe_interval == 0 {
            return Err(Error::validation("keyframe interval must be positive"));
        }
        if self.sh_degree > 3 {
            return Err(Error::validation("SH degree must be at most 3"));
        }
        if !(0.0..=1.0).contains(&self.event_fraction) {
            return Err(Error::validation("event fraction must lie in [0, 1]"));
        }
        for (name, (lo, hi)) in [
            ("orbit radius", self.orbit_radius),
            ("orbit revolutions", self.orbit_revolutions),
            ("event variance", self.event_variance),
            ("scale", self.scale),
        ] {
            if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
                return Err(Error::validation(format!("invalid {name} range")));
            }
        }
        if !(self.sh_energy >= 0.0) {
            return Err(Error::validation("SH energy must be non-negative"));
        }
        Ok(())
    }

    /// Sequence length `L`: the last keyframe time at or before the final frame.
    pub fn duration(&self) -> f64 {
        let i = self.keyframe_interval as usize;
        (i * (self.n_frames.div_ceil(i) - 1).max(1)) as f64
    }
}

/// Generated scene plus reference renders at the probe cameras.
#[derive(Clone, Debug)]
pub struct SyntheticScene {
    pub scene: GaussianScene,
    pub probes: ProbeSet,
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

fn log_uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    uniform(rng, (lo.ln(), hi.ln())).exp()
}

fn unit_vector(rng: &mut ChaCha8Rng) -> Vec3 {
    UnitSphere.sample(rng)
}

fn random_rotation(rng: &mut ChaCha8Rng) -> Quat {
    let axis = unit_vector(rng);
    Quat::from_axis_angle(axis, rng.random_range(0.0..std::f64::consts::PI)).canonical()
}

fn round_quat(q: Quat) -> Quat {
    Quat::from_array(q.normalized().to_array().map(f32r))
}

fn random_sh(rng: &mut ChaCha8Rng, k: u8, energy: f64) -> Vec<[f64; 3]> {
    let mut sh = vec![[0.0; 3]; sh_len(k)];
    let color = [0; 3].map(|_| rng.random_range(0.1..0.9));
    sh[0] = color_to_dc(color).map(f32r);
    for l in 1..=k as usize {
        let normal = Normal::new(0.0, energy / l as f64).expect("finite deviation");
        for c in &mut sh[sh_band(l)] {
            *c = [0; 3].map(|_| f32r(normal.sample(rng)));
        }
    }
    sh
}

fn box_point(rng: &mut ChaCha8Rng, half: Vec3) -> Vec3 {
    half.map(|h| rng.random_range(-h..h))
}

/// Build a scene and its probe references. Identical inputs give identical outputs.
pub fn generate_synthetic_scene(cfg: &GeneratorConfig, seed: u64) -> Result<SyntheticScene> {
    cfg.validate()?;
    let scene = synthetic_scene(cfg, seed)?;
    let probes = ProbeSet::new(&scene, &cfg.probes)?;
    Ok(SyntheticScene { scene, probes })
}

/// Scene part of [`generate_synthetic_scene`] without probe rendering.
pub fn synthetic_scene(cfg: &GeneratorConfig, seed: u64) -> Result<GaussianScene> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let duration = cfg.duration();
    let timestamps = (0..cfg.n_frames)
        .map(|f| f as f64 * duration / (cfg.n_frames - 1) as f64)
        .collect();
    let mut scene =
        GaussianScene::empty(duration, cfg.keyframe_interval, timestamps, cfg.sh_degree);
    let drift = Normal::new(0.0, 0.02).expect("finite deviation");
    for _ in 0..cfg.n_static {
        let pivot = box_point(&mut rng, [1.3, 1.3, 0.8]).map(f32r);
        let moving = rng.random::<f64>() < 0.2;
        let displacement = if moving {
            [0; 3].map(|_| f32r(drift.sample(&mut rng)))
        } else {
            [0.0; 3]
        };
        let log_scale = [0; 3].map(|_| f32r(log_uniform(&mut rng, cfg.scale).ln()));
        scene.statics.push(StaticGaussian {
            pivot,
            displacement,
            log_scale,
            rotation: round_quat(random_rotation(&mut rng)),
            opacity: f32r(rng.random_range(0.3..0.95)),
            sh: random_sh(&mut rng, cfg.sh_degree, cfg.sh_energy),
        });
    }
    let kf_times = scene.keyframe_times();
    for _ in 0..cfg.n_dynamic {
        let center = box_point(&mut rng, [0.8, 0.8, 0.5]);
        let radius = uniform(&mut rng, cfg.orbit_radius);
        let revolutions = uniform(&mut rng, cfg.orbit_revolutions);
        let normal = unit_vector(&mut rng);
        let helper = if normal[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
        let e1 = normalize(cross(normal, helper));
        let e2 = cross(normal, e1);
        let phase = rng.random_range(0.0..std::f64::consts::TAU);
        let spin_axis = unit_vector(&mut rng);
        let spin = rng.random_range(-1.0..1.0) * std::f64::consts::FRAC_PI_2;
        let q0 = random_rotation(&mut rng);
        let keyframe_positions = kf_times
            .iter()
            .map(|&t| {
                let th = phase + std::f64::consts::TAU * revolutions * t / duration;
                let (s, c) = th.sin_cos();
                [0, 1, 2].map(|a| f32r(center[a] + radius * (c * e1[a] + s * e2[a])))
            })
            .collect();
        let keyframe_rotations = kf_times
            .iter()
            .map(|&t| round_quat((q0 * Quat::from_axis_angle(spin_axis, spin * t / duration)).canonical()))
            .collect();
        let log_scale = [0; 3].map(|_| f32r(log_uniform(&mut rng, cfg.scale).ln()));
        let event = rng.random::<f64>() < cfg.event_fraction;
        let (a_s, a_f, b_s, b_f) = if event {
            let a_s = rng.random_range(0.1..0.6) * duration;
            let len = rng.random_range(0.05..0.25) * duration;
            (
                a_s,
                a_s + len,
                log_uniform(&mut rng, cfg.event_variance),
                log_uniform(&mut rng, cfg.event_variance),
            )
        } else {
            (-1.0, duration + 1.0, 1.0, 1.0)
        };
        scene.dynamics.push(DynamicGaussian {
            keyframe_positions,
            keyframe_rotations,
            log_scale,
            base_opacity: f32r(rng.random_range(0.5..1.0)),
            appear_center: f32r(a_s),
            vanish_center: f32r(a_f),
            appear_variance: f32r(b_s),
            vanish_variance: f32r(b_f),
            sh: random_sh(&mut rng, cfg.sh_degree, cfg.sh_energy),
        });
    }
    scene.validate()?;
    Ok(scene)
}

fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn normalize(v: Vec3) -> Vec3 {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    v.map(|x| x / n)
}
