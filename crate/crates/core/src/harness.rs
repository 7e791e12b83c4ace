//! Rate-distortion sweeps and ablations with CSV output.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::codec::{Encoded, Encoder, SECTIONS};
use crate::error::Result;
use crate::eval::{trajectory_psnr, PSNR_INFINITY};
use crate::model::{GaussianScene, Vec3};
use crate::preset::{with_policy, LevelPreset};
use crate::quant::OpacityPolicy;

pub const SWEEP_SCHEMA: &str = "# g4dc-sweep v1";
pub const OPACITY_SCHEMA: &str = "# g4dc-ablate-opacity v1";
pub const WAVELET_SCHEMA: &str = "# g4dc-ablate-wavelet v1";

/// Quality of one decoded scene against the encoder's input.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quality {
    pub psnr: f64,
    pub ssim: f64,
    pub trajectory_psnr: f64,
}

/// Keyframe trajectories of the dynamics that survived pruning.
fn kept_trajectories(original: &GaussianScene, e: &Encoded) -> Vec<Vec<Vec3>> {
    let ns = original.statics.len();
    original
        .dynamics
        .iter()
        .enumerate()
        .filter(|(i, _)| e.payload.gaussian_mask[ns + i])
        .map(|(_, g)| g.keyframe_positions.clone())
        .collect()
}

pub fn quality(encoder: &Encoder, e: &Encoded) -> Result<Quality> {
    let probes = encoder.probes()?;
    let original = encoder.scene();
    let recon: Vec<Vec<Vec3>> = e
        .scene
        .dynamics
        .iter()
        .map(|g| g.keyframe_positions.clone())
        .collect();
    Ok(Quality {
        psnr: probes.psnr(&e.scene),
        ssim: probes.ssim(&e.scene),
        trajectory_psnr: trajectory_psnr(&kept_trajectories(original, e), &recon, original.extent())?,
    })
}

fn fmt_db(v: f64) -> String {
    if v == PSNR_INFINITY {
        "inf".to_string()
    } else {
        format!("{v:.4}")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub level: u8,
    pub size: usize,
    pub header: usize,
    /// Bytes per section in container order.
    pub sections: Vec<usize>,
    pub quality: Quality,
    pub static_before: usize,
    pub static_after: usize,
    pub dynamic_before: usize,
    pub dynamic_after: usize,
}

/// Container bytes and report row for one level.
#[derive(Clone, Debug)]
pub struct SweepEntry {
    pub row: SweepRow,
    pub container: Vec<u8>,
}

/// Encode, decode and evaluate every preset. Levels run in parallel; the
/// result follows the order of `presets`.
pub fn sweep(encoder: &Encoder, presets: &[LevelPreset]) -> Result<Vec<SweepEntry>> {
    encoder.probes()?;
    presets
        .par_iter()
        .map(|p| {
            let e = encoder.encode(&p.codec)?;
            let q = quality(encoder, &e)?;
            let c = e.counts;
            Ok(SweepEntry {
                row: SweepRow {
                    level: p.level,
                    size: e.bytes.len(),
                    header: e.report.header_bytes,
                    sections: e.report.sections.iter().map(|s| s.bytes).collect(),
                    quality: q,
                    static_before: c.static_before,
                    static_after: c.static_after,
                    dynamic_before: c.dynamic_before,
                    dynamic_after: c.dynamic_after,
                },
                container: e.bytes,
            })
        })
        .collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::new();
    writeln!(out, "{SWEEP_SCHEMA}").unwrap();
    write!(out, "level,size_bytes,header").unwrap();
    for s in SECTIONS {
        write!(out, ",{s}").unwrap();
    }
    writeln!(
        out,
        ",psnr,ssim,trajectory_psnr,static_before,static_after,dynamic_before,dynamic_after"
    )
    .unwrap();
    for r in rows {
        write!(out, "{},{},{}", r.level, r.size, r.header).unwrap();
        for s in &r.sections {
            write!(out, ",{s}").unwrap();
        }
        writeln!(
            out,
            ",{},{:.6},{},{},{},{},{}",
            fmt_db(r.quality.psnr),
            r.quality.ssim,
            fmt_db(r.quality.trajectory_psnr),
            r.static_before,
            r.static_after,
            r.dynamic_before,
            r.dynamic_after
        )
        .unwrap();
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct OpacityRow {
    pub policy: &'static str,
    pub size: usize,
    pub opacity_bytes: usize,
    pub psnr: f64,
    /// Decoded variances equal the input bit for bit.
    pub variances_exact: bool,
}

/// Run the quantization ladder at one preset.
pub fn ablate_opacity(encoder: &Encoder, preset: &LevelPreset) -> Result<Vec<OpacityRow>> {
    encoder.probes()?;
    OpacityPolicy::ladder()
        .par_iter()
        .map(|&(name, policy)| {
            let e = encoder.encode(&with_policy(preset.clone(), policy).codec)?;
            let r = &e.report;
            let opacity_bytes = ["opacity_centers", "beta_var", "base_opacities"]
                .iter()
                .filter_map(|s| r.section(s))
                .sum();
            Ok(OpacityRow {
                policy: name,
                size: e.bytes.len(),
                opacity_bytes,
                psnr: encoder.probes()?.psnr(&e.scene),
                variances_exact: variances_exact(encoder.scene(), &e),
            })
        })
        .collect()
}

fn variances_exact(original: &GaussianScene, e: &Encoded) -> bool {
    let ns = original.statics.len();
    let kept = original
        .dynamics
        .iter()
        .enumerate()
        .filter(|(i, _)| e.payload.gaussian_mask[ns + i])
        .map(|(_, g)| g);
    kept.zip(&e.scene.dynamics).all(|(a, b)| {
        a.appear_variance.to_bits() == b.appear_variance.to_bits()
            && a.vanish_variance.to_bits() == b.vanish_variance.to_bits()
    })
}

pub fn opacity_csv(rows: &[OpacityRow]) -> String {
    let mut out = format!("{OPACITY_SCHEMA}\npolicy,size_bytes,opacity_bytes,psnr,variances_exact\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.policy,
            r.size,
            r.opacity_bytes,
            fmt_db(r.psnr),
            r.variances_exact
        )
        .unwrap();
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct WaveletRow {
    /// 0 stores keyframes directly.
    pub levels: u8,
    pub raw_coefficients: usize,
    pub stored_coefficients: usize,
    pub f_masked_bytes: usize,
    pub size: usize,
    pub psnr: f64,
    pub trajectory_psnr: f64,
}

/// Encode at each decomposition depth with all details discarded.
pub fn ablate_wavelet(
    encoder: &Encoder,
    preset: &LevelPreset,
    depths: &[u8],
) -> Result<Vec<WaveletRow>> {
    encoder.probes()?;
    depths
        .par_iter()
        .map(|&levels| {
            let mut p = preset.clone();
            p.codec.wavelet_levels = levels;
            p.codec.keep_levels = 0;
            p.codec.validate()?;
            let e = encoder.encode(&p.codec)?;
            let h = &e.payload.header;
            let (approx, detail) = h.trajectory_rows();
            let q = quality(encoder, &e)?;
            Ok(WaveletRow {
                levels,
                raw_coefficients: h.n_dynamic * 3 * h.keyframes(),
                stored_coefficients: h.n_dynamic * 3 * (approx + detail),
                f_masked_bytes: e.report.section("f_masked").unwrap_or(0),
                size: e.bytes.len(),
                psnr: q.psnr,
                trajectory_psnr: q.trajectory_psnr,
            })
        })
        .collect()
}

pub fn wavelet_csv(rows: &[WaveletRow]) -> String {
    let mut out = format!(
        "{WAVELET_SCHEMA}\nwavelet_levels,raw_coefficients,stored_coefficients,f_masked_bytes,size_bytes,psnr,trajectory_psnr\n"
    );
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.levels,
            r.raw_coefficients,
            r.stored_coefficients,
            r.f_masked_bytes,
            r.size,
            fmt_db(r.psnr),
            fmt_db(r.trajectory_psnr)
        )
        .unwrap();
    }
    out
}

pub const REPORT_SCHEMA: &str = "# g4dc-report v1";

/// Section table of one container as CSV.
pub fn report_csv(r: &crate::codec::RateReport) -> String {
    let mut out = format!("{REPORT_SCHEMA}\ncomponent,bytes,percent\n");
    writeln!(out, "header,{},{:.4}", r.header_bytes, r.header_percent).unwrap();
    for s in &r.sections {
        writeln!(out, "{},{},{:.4}", s.name, s.bytes, s.percent).unwrap();
    }
    writeln!(out, "total,{},100.0000", r.total_bytes).unwrap();
    out
}
