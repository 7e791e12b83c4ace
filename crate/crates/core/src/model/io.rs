//! Uncompressed scene interchange file (`.g4s`).
//!
//! All values are little-endian. Layout:
//!
//! ```text
//! magic        4 bytes  "G4SC"
//! version      u16      1
//! sh_degree    u8       k in [0, 3]
//! reserved     u8       0
//! duration     f64      L
//! interval     u32      I
//! n_frames     u32
//! frame times  f64 x n_frames
//! n_static     u32
//! n_dynamic    u32
//! n_keyframes  u32      ceil(L / I) + 1
//! static records, f32 each:
//!     pivot[3] displacement[3] log_scale[3] rotation[4] (w,x,y,z) opacity
//!     sh[(k+1)^2][3]
//! dynamic records, f32 each:
//!     positions[n_keyframes][3] rotations[n_keyframes][4] log_scale[3]
//!     base_opacity appear_center vanish_center appear_variance vanish_variance
//!     sh[(k+1)^2][3]
//! ```
//!
//! Per-Gaussian values are single precision; decoded scenes are always
//! representable exactly, arbitrary scenes are rounded on write.

use std::path::Path;

use sha2::{Digest, Sha256};

use super::quat::Quat;
use super::scene::{sh_len, DynamicGaussian, GaussianScene, StaticGaussian};
use crate::bytes::{ByteReader, ByteWriter};
use crate::error::{Error, Result};

pub const SCENE_MAGIC: &[u8; 4] = b"G4SC";
pub const SCENE_VERSION: u16 = 1;

fn put3(w: &mut ByteWriter, v: &[f64; 3]) {
    v.iter().for_each(|&x| w.f32(x));
}

fn get3(r: &mut ByteReader) -> Result<[f64; 3]> {
    Ok([r.f32()?, r.f32()?, r.f32()?])
}

fn put_quat(w: &mut ByteWriter, q: &Quat) {
    q.to_array().iter().for_each(|&x| w.f32(x));
}

fn get_quat(r: &mut ByteReader) -> Result<Quat> {
    Ok(Quat::new(r.f32()?, r.f32()?, r.f32()?, r.f32()?))
}

/// Serialize a scene to the interchange layout.
pub fn encode_scene_file(scene: &GaussianScene) -> Vec<u8> {
    let mut w = ByteWriter::new();
    w.bytes(SCENE_MAGIC);
    w.u16(SCENE_VERSION);
    w.u8(scene.max_sh_degree);
    w.u8(0);
    w.f64(scene.duration);
    w.u32(scene.keyframe_interval);
    w.u32(scene.timestamps.len() as u32);
    scene.timestamps.iter().for_each(|&t| w.f64(t));
    w.u32(scene.statics.len() as u32);
    w.u32(scene.dynamics.len() as u32);
    w.u32(scene.keyframe_count() as u32);
    for g in &scene.statics {
        put3(&mut w, &g.pivot);
        put3(&mut w, &g.displacement);
        put3(&mut w, &g.log_scale);
        put_quat(&mut w, &g.rotation);
        w.f32(g.opacity);
        g.sh.iter().for_each(|c| put3(&mut w, c));
    }
    for g in &scene.dynamics {
        g.keyframe_positions.iter().for_each(|p| put3(&mut w, p));
        g.keyframe_rotations.iter().for_each(|q| put_quat(&mut w, q));
        put3(&mut w, &g.log_scale);
        for v in [
            g.base_opacity,
            g.appear_center,
            g.vanish_center,
            g.appear_variance,
            g.vanish_variance,
        ] {
            w.f32(v);
        }
        g.sh.iter().for_each(|c| put3(&mut w, c));
    }
    w.buf
}

/// Parse and validate an interchange file.
pub fn decode_scene_file(data: &[u8]) -> Result<GaussianScene> {
    let mut r = ByteReader::new(data);
    let magic = r.take(4).map_err(|_| Error::format("file too short for a scene header"))?;
    if magic != SCENE_MAGIC {
        return Err(Error::format("not a scene interchange file (bad magic)"));
    }
    let version = r.u16()?;
    if version != SCENE_VERSION {
        return Err(Error::format(format!("unsupported scene version {version}")));
    }
    let k = r.u8()?;
    let _reserved = r.u8()?;
    if k > 3 {
        return Err(Error::format(format!("SH degree {k} out of range")));
    }
    let duration = r.f64()?;
    let interval = r.u32()?;
    let n_frames = r.u32()? as usize;
    if n_frames > r.remaining() / 8 {
        return Err(Error::format("frame count exceeds file size"));
    }
    let timestamps = (0..n_frames).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    let n_static = r.u32()? as usize;
    let n_dynamic = r.u32()? as usize;
    let n_kf = r.u32()? as usize;
    let mut scene = GaussianScene::empty(duration, interval, timestamps, k);
    if interval == 0 || !(duration > 0.0) || n_kf != scene.keyframe_count() {
        return Err(Error::format("inconsistent keyframe metadata"));
    }
    let n_sh = sh_len(k);
    let static_bytes = 4 * (14 + 3 * n_sh);
    let dynamic_bytes = 4 * (7 * n_kf + 8 + 3 * n_sh);
    let expected = n_static
        .checked_mul(static_bytes)
        .and_then(|a| n_dynamic.checked_mul(dynamic_bytes).map(|b| a + b));
    if expected != Some(r.remaining()) {
        return Err(Error::format("record section length does not match counts"));
    }
    for _ in 0..n_static {
        let pivot = get3(&mut r)?;
        let displacement = get3(&mut r)?;
        let log_scale = get3(&mut r)?;
        let rotation = get_quat(&mut r)?;
        let opacity = r.f32()?;
        let sh = (0..n_sh).map(|_| get3(&mut r)).collect::<Result<_>>()?;
        scene.statics.push(StaticGaussian {
            pivot,
            displacement,
            log_scale,
            rotation,
            opacity,
            sh,
        });
    }
    for _ in 0..n_dynamic {
        let keyframe_positions = (0..n_kf).map(|_| get3(&mut r)).collect::<Result<_>>()?;
        let keyframe_rotations = (0..n_kf).map(|_| get_quat(&mut r)).collect::<Result<_>>()?;
        let log_scale = get3(&mut r)?;
        let base_opacity = r.f32()?;
        let appear_center = r.f32()?;
        let vanish_center = r.f32()?;
        let appear_variance = r.f32()?;
        let vanish_variance = r.f32()?;
        let sh = (0..n_sh).map(|_| get3(&mut r)).collect::<Result<_>>()?;
        scene.dynamics.push(DynamicGaussian {
            keyframe_positions,
            keyframe_rotations,
            log_scale,
            base_opacity,
            appear_center,
            vanish_center,
            appear_variance,
            vanish_variance,
            sh,
        });
    }
    r.finish("scene records")?;
    scene.validate()?;
    Ok(scene)
}

/// Hex SHA-256 of the interchange encoding; the parameter digest used by
/// golden fixtures and the command line.
pub fn scene_digest(scene: &GaussianScene) -> String {
    hex::encode(Sha256::digest(encode_scene_file(scene)))
}

pub fn save_scene(path: impl AsRef<Path>, scene: &GaussianScene) -> Result<()> {
    std::fs::write(path, encode_scene_file(scene))?;
    Ok(())
}

pub fn load_scene(path: impl AsRef<Path>) -> Result<GaussianScene> {
    decode_scene_file(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> GaussianScene {
        let mut s = GaussianScene::empty(4.0, 2, vec![0.0, 1.0, 2.0, 3.0, 4.0], 1);
        s.statics.push(StaticGaussian {
            pivot: [0.5, -0.25, 1.0],
            displacement: [0.0, 0.125, 0.0],
            log_scale: [-2.0, -2.5, -3.0],
            rotation: Quat::IDENTITY,
            opacity: 0.75,
            sh: vec![[0.5, 0.25, 0.125]; 4],
        });
        s.dynamics.push(DynamicGaussian {
            keyframe_positions: vec![[0.0, 0.0, 0.0], [0.5, 0.0, 0.0], [1.0, 0.0, 0.0]],
            keyframe_rotations: vec![Quat::IDENTITY; 3],
            log_scale: [-2.0; 3],
            base_opacity: 0.5,
            appear_center: 1.0,
            vanish_center: 3.0,
            appear_variance: 0.5,
            vanish_variance: 0.25,
            sh: vec![[0.0; 3]; 4],
        });
        s
    }

    #[test]
    fn round_trip_is_exact_for_single_precision_values() {
        let s = sample();
        let bytes = encode_scene_file(&s);
        assert_eq!(decode_scene_file(&bytes).unwrap(), s);
        assert_eq!(scene_digest(&s).len(), 64);
    }

    #[test]
    fn rejects_bad_magic_and_truncation() {
        let bytes = encode_scene_file(&sample());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode_scene_file(&bad), Err(Error::Format(_))));
        for cut in [0, 3, 10, bytes.len() - 1] {
            assert!(decode_scene_file(&bytes[..cut]).is_err());
        }
    }
}
