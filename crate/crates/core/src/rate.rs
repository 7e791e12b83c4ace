//! Objective terms: image distortion, index rate, VQ distortion and
//! regularization, and their weighted composition.
//!
//! Rates in [`entropy_loss`] are divided by a per-group divisor, while
//! codeword selection multiplies rate by its lambda. Both express the same
//! trade-off; the divisor defaults to one.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::eval::{mean_abs, ssim, Image};
use crate::model::{sub3, GaussianScene, Quat};
use crate::quant::{EcvqCodebook, GroupId};

/// Default D-SSIM weight.
pub const LAMBDA_DSSIM: f64 = 0.2;

/// `(1 - w) * L1 + w * (1 - SSIM)`.
pub fn distortion_loss(rendered: &Image, truth: &Image, lambda_dssim: f64) -> Result<f64> {
    rendered.check_same_shape(truth)?;
    let l1 = mean_abs(rendered, truth)?;
    if lambda_dssim == 0.0 {
        return Ok(l1);
    }
    Ok((1.0 - lambda_dssim) * l1 + lambda_dssim * (1.0 - ssim(rendered, truth)?))
}

/// Index stream for one attribute group.
#[derive(Clone, Debug, PartialEq)]
pub struct IndexStream {
    pub group: GroupId,
    pub indices: Vec<usize>,
}

/// Samples and their codeword assignment for one attribute group.
#[derive(Clone, Debug, PartialEq)]
pub struct AssignedSamples {
    pub group: GroupId,
    pub samples: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
}

fn codebook_for<'a>(codebooks: &'a [EcvqCodebook], group: GroupId) -> Result<&'a EcvqCodebook> {
    codebooks
        .iter()
        .find(|c| c.group == group)
        .ok_or_else(|| Error::validation(format!("no codebook for group {group}")))
}

/// `(1/N) * sum over groups and symbols of (-log2 p_j) / divisor(group)`.
pub fn entropy_loss(
    streams: &[IndexStream],
    codebooks: &[EcvqCodebook],
    divisors: &BTreeMap<GroupId, f64>,
    n: usize,
) -> Result<f64> {
    if n == 0 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for s in streams {
        let cb = codebook_for(codebooks, s.group)?;
        let div = divisors.get(&s.group).copied().unwrap_or(1.0);
        if !(div > 0.0) {
            return Err(Error::validation("rate divisors must be positive"));
        }
        let mut bits = 0.0;
        for &j in &s.indices {
            if j >= cb.len() {
                return Err(Error::validation(format!(
                    "index {j} outside codebook of {} entries for {}",
                    cb.len(),
                    s.group
                )));
            }
            bits += cb.rate_bits(j);
        }
        total += bits / div;
    }
    Ok(total / n as f64)
}

/// `(1/N) * sum of squared distances between samples and assigned codewords`.
pub fn vq_loss(groups: &[AssignedSamples], codebooks: &[EcvqCodebook], n: usize) -> Result<f64> {
    if n == 0 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for g in groups {
        if g.samples.len() != g.assignments.len() {
            return Err(Error::validation(format!("misaligned samples for {}", g.group)));
        }
        let cb = codebook_for(codebooks, g.group)?;
        for (x, &j) in g.samples.iter().zip(&g.assignments) {
            if j >= cb.len() || x.len() != cb.dim {
                return Err(Error::validation(format!("bad assignment for {}", g.group)));
            }
            total += x
                .iter()
                .zip(cb.codeword(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>();
        }
    }
    Ok(total / n as f64)
}

fn mean(sum: f64, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Relative rotation vector from `a` to `b`.
fn rotation_step(a: Quat, b: Quat) -> [f64; 3] {
    (a.conj() * b).canonical().log()
}

/// Mean squared static displacement, plus mean squared second difference of
/// keyframe positions, plus the same for keyframe rotations (as differences
/// of consecutive relative rotation vectors).
pub fn reg_loss(scene: &GaussianScene) -> f64 {
    let disp: f64 = scene
        .statics
        .iter()
        .map(|g| g.displacement.iter().map(|v| v * v).sum::<f64>())
        .sum();
    let (mut pos, mut rot, mut triples) = (0.0, 0.0, 0usize);
    for g in &scene.dynamics {
        let p = &g.keyframe_positions;
        let q = &g.keyframe_rotations;
        for n in 1..p.len().saturating_sub(1) {
            let d2 = sub3(sub3(p[n + 1], p[n]), sub3(p[n], p[n - 1]));
            pos += d2.iter().map(|v| v * v).sum::<f64>();
            let r2 = sub3(rotation_step(q[n], q[n + 1]), rotation_step(q[n - 1], q[n]));
            rot += r2.iter().map(|v| v * v).sum::<f64>();
            triples += 1;
        }
    }
    mean(disp, scene.statics.len()) + mean(pos, triples) + mean(rot, triples)
}

/// Weights of the objective.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossWeights {
    pub lambda_r: f64,
    pub lambda_reg: f64,
    pub lambda_dssim: f64,
    pub lambda_gs: f64,
    pub lambda_sh: f64,
}

/// Unweighted sub-terms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossParts {
    pub dist: f64,
    pub gs_prune: f64,
    pub sh_prune: f64,
    pub entropy: f64,
    pub vq: f64,
    pub reg: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossBreakdown {
    pub dist: f64,
    pub rate: f64,
    pub reg: f64,
    pub total: f64,
    pub gs_prune: f64,
    pub sh_prune: f64,
    pub entropy: f64,
    pub vq: f64,
    pub weights: LossWeights,
}

/// `rate = w_gs * L_gs + w_sh * L_sh + L_entropy + L_vq` and
/// `total = dist + lambda_r * rate + lambda_reg * reg`.
pub fn total_loss(parts: &LossParts, weights: &LossWeights) -> Result<LossBreakdown> {
    let values = [
        parts.dist,
        parts.gs_prune,
        parts.sh_prune,
        parts.entropy,
        parts.vq,
        parts.reg,
        weights.lambda_r,
        weights.lambda_reg,
        weights.lambda_dssim,
        weights.lambda_gs,
        weights.lambda_sh,
    ];
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::validation("loss terms must be finite"));
    }
    let rate =
        weights.lambda_gs * parts.gs_prune + weights.lambda_sh * parts.sh_prune + parts.entropy + parts.vq;
    let total = parts.dist + weights.lambda_r * rate + weights.lambda_reg * parts.reg;
    Ok(LossBreakdown {
        dist: parts.dist,
        rate,
        reg: parts.reg,
        total,
        gs_prune: parts.gs_prune,
        sh_prune: parts.sh_prune,
        entropy: parts.entropy,
        vq: parts.vq,
        weights: *weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DynamicGaussian, StaticGaussian};
    use crate::quant::{Attribute, Component};

    fn cb(probs: Vec<f64>, dim: usize) -> EcvqCodebook {
        EcvqCodebook {
            group: GroupId::new(Attribute::Scale, Component::Static),
            dim,
            codewords: (0..probs.len() * dim).map(|v| v as f64).collect(),
            probabilities: probs,
            lambda: 0.0,
        }
    }

    #[test]
    fn distortion_examples() {
        let a = Image::filled(12, 12, [0.3; 3]);
        assert_eq!(distortion_loss(&a, &a, 0.2).unwrap(), 0.0);
        let z = Image::new(12, 12);
        let h = Image::filled(12, 12, [0.5; 3]);
        assert_eq!(distortion_loss(&h, &z, 0.0).unwrap(), 0.5);
        assert!(distortion_loss(&a, &Image::new(3, 12), 0.2).is_err());
        let b = Image::filled(12, 12, [0.4; 3]);
        let c1 = 1e-4;
        let s = (2.0 * 0.3 * 0.4 + c1) / (0.09 + 0.16 + c1);
        let want = 0.8 * 0.1 + 0.2 * (1.0 - s);
        assert!((distortion_loss(&a, &b, 0.2).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn entropy_examples() {
        let g = GroupId::new(Attribute::Scale, Component::Static);
        let uniform = cb(vec![1.0 / 256.0; 256], 3);
        let s = IndexStream { group: g, indices: (0..512).map(|i| i % 256).collect() };
        let none = BTreeMap::new();
        assert!((entropy_loss(&[s.clone()], &[uniform.clone()], &none, 512).unwrap() - 8.0).abs() < 1e-12);
        let single = cb(vec![1.0], 3);
        let s1 = IndexStream { group: g, indices: vec![0; 10] };
        assert_eq!(entropy_loss(&[s1], &[single], &none, 10).unwrap(), 0.0);
        let bad = IndexStream { group: g, indices: vec![300] };
        assert!(entropy_loss(&[bad], &[uniform], &none, 1).is_err());
    }

    #[test]
    fn vq_examples() {
        let g = GroupId::new(Attribute::Scale, Component::Static);
        let book = cb(vec![1.0], 1);
        let at = AssignedSamples { group: g, samples: vec![vec![2.0]], assignments: vec![0] };
        assert_eq!(vq_loss(&[at], &[book.clone()], 1).unwrap(), 4.0);
        let exact = AssignedSamples { group: g, samples: vec![vec![0.0]], assignments: vec![0] };
        assert_eq!(vq_loss(&[exact], &[book.clone()], 1).unwrap(), 0.0);
        let bad = AssignedSamples { group: g, samples: vec![vec![0.0]], assignments: vec![] };
        assert!(vq_loss(&[bad], &[book], 1).is_err());
    }

    #[test]
    fn reg_examples() {
        let mut s = GaussianScene::empty(4.0, 1, vec![0.0], 0);
        assert_eq!(reg_loss(&s), 0.0);
        s.statics.push(StaticGaussian {
            pivot: [0.0; 3],
            displacement: [1.0, 0.0, 0.0],
            log_scale: [0.0; 3],
            rotation: Quat::IDENTITY,
            opacity: 1.0,
            sh: vec![[0.0; 3]],
        });
        assert_eq!(reg_loss(&s), 1.0);
        s.statics.clear();
        let axis = [0.0, 0.0, 1.0];
        s.dynamics.push(DynamicGaussian {
            keyframe_positions: (0..5).map(|i| [i as f64, 2.0 * i as f64, 0.0]).collect(),
            keyframe_rotations: (0..5).map(|i| Quat::from_axis_angle(axis, 0.1 * i as f64)).collect(),
            log_scale: [0.0; 3],
            base_opacity: 1.0,
            appear_center: 0.0,
            vanish_center: 4.0,
            appear_variance: 1.0,
            vanish_variance: 1.0,
            sh: vec![[0.0; 3]],
        });
        assert!(reg_loss(&s) < 1e-20);
    }

    #[test]
    fn composition() {
        let w = LossWeights { lambda_r: 0.01, lambda_reg: 0.1, lambda_dssim: 0.2, lambda_gs: 0.0, lambda_sh: 0.0 };
        let p = LossParts { dist: 0.1, gs_prune: 0.0, sh_prune: 0.0, entropy: 2.0, vq: 0.0, reg: 3.0 };
        assert!((total_loss(&p, &w).unwrap().total - 0.42).abs() < 1e-15);
        let w0 = LossWeights { lambda_r: 0.0, lambda_reg: 0.0, ..w };
        assert_eq!(total_loss(&p, &w0).unwrap().total, 0.1);
        let nan = LossParts { vq: f64::NAN, ..p };
        assert!(total_loss(&nan, &w).is_err());
    }
}
