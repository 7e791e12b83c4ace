#![allow(dead_code)]

use std::path::PathBuf;

use g4dc::codec::CodecConfig;
use g4dc::eval::{synthetic_scene, GeneratorConfig};
use g4dc::model::GaussianScene;
use g4dc::preset::LevelPreset;
use g4dc::quant::OpacityPolicy;

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn small(n_static: usize, n_dynamic: usize, frames: usize) -> GeneratorConfig {
    GeneratorConfig {
        n_static,
        n_dynamic,
        n_frames: frames,
        ..GeneratorConfig::standard()
    }
}

/// Scene and encoder settings behind each checked-in container.
pub fn fixtures() -> Vec<(&'static str, GaussianScene, CodecConfig)> {
    let pruned = synthetic_scene(&small(60, 20, 16), 7).unwrap();
    let events = synthetic_scene(
        &GeneratorConfig {
            n_static: 30,
            n_dynamic: 30,
            n_frames: 20,
            ..GeneratorConfig::events()
        },
        11,
    )
    .unwrap();
    let statics = synthetic_scene(
        &GeneratorConfig {
            sh_degree: 1,
            ..small(80, 0, 8)
        },
        3,
    )
    .unwrap();
    let deep = synthetic_scene(&small(10, 12, 24), 5).unwrap();

    let level3 = LevelPreset::new(3).unwrap().codec;
    let mut raw_traj = LevelPreset::new(6).unwrap().codec;
    raw_traj.wavelet_levels = 0;
    raw_traj.opacity_policy = OpacityPolicy {
        variances: true,
        ..OpacityPolicy::default()
    };
    let level1 = LevelPreset::new(1).unwrap().codec;
    let mut two_levels = CodecConfig {
        wavelet_levels: 2,
        keep_levels: 1,
        codebook_size: 8,
        opacity_policy: OpacityPolicy::NONE,
        ..CodecConfig::default()
    };
    two_levels.seed = 9;
    vec![
        ("pruned_level3", pruned, level3),
        ("events_raw_trajectories", events, raw_traj),
        ("statics_only_level1", statics, level1),
        ("two_level_wavelet", deep, two_levels),
    ]
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
