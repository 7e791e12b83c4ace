//! Greedy rate-distortion pruning of whole Gaussians and SH bands.
//!
//! Candidates are ranked by ascending importance. Removing the first `n`
//! candidates changes the objective by `D(n) - lambda * S(n)`, where `D` is the
//! probe distortion and `S` the prune-loss saving. The chosen `n` is the
//! smallest global minimizer over a fixed grid of prefix lengths, so larger
//! `lambda` never prunes less.

use rayon::prelude::*;

use super::mask::{settle, squash, PruneMask, ShMask, GS_THRESHOLD, SH_THRESHOLD};
use crate::model::{sh_band, GaussianScene};

/// Probe-based distortion and importance estimates.
pub trait DistortionOracle: Sync {
    /// Distortion of `scene` against the oracle's reference frames.
    fn distortion(&self, scene: &GaussianScene) -> f64;
    /// Non-negative importance per Gaussian, statics first.
    fn importance(&self, scene: &GaussianScene) -> Vec<f64>;
}

/// Static/dynamic Gaussian counts before and after pruning.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PruneCounts {
    pub static_before: usize,
    pub static_after: usize,
    pub dynamic_before: usize,
    pub dynamic_after: usize,
}

impl PruneCounts {
    pub fn static_ratio(&self) -> f64 {
        ratio(self.static_before, self.static_after)
    }

    pub fn dynamic_ratio(&self) -> f64 {
        ratio(self.dynamic_before, self.dynamic_after)
    }
}

fn ratio(before: usize, after: usize) -> f64 {
    if before == 0 {
        0.0
    } else {
        (before - after) as f64 / before as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PruneOutcome {
    pub gaussian_mask: PruneMask,
    pub sh_mask: ShMask,
    pub counts: PruneCounts,
}

/// Prefix lengths at which removals are evaluated; depends only on `n`.
pub fn prefix_grid(n: usize) -> Vec<usize> {
    if n <= 64 {
        return (0..=n).collect();
    }
    let mut grid: Vec<usize> = (0..=32).map(|j| (n * j + 16) / 32).collect();
    let mut x = 1.0;
    while x < n as f64 / 32.0 {
        grid.push(x as usize);
        x *= 1.6;
    }
    grid.sort_unstable();
    grid.dedup();
    grid
}

/// Distortion and saving for each prefix of a ranked candidate list.
#[derive(Clone, Debug)]
pub struct PruneCurve {
    /// Candidate ids in removal order.
    pub order: Vec<usize>,
    /// Raw soft mask value per candidate id.
    pub soft: Vec<f64>,
    pub grid: Vec<usize>,
    pub distortion: Vec<f64>,
    /// Prune-loss reduction after removing each grid prefix.
    pub saving: Vec<f64>,
}

impl PruneCurve {
    fn build(
        scores: &[f64],
        weights: &[f64],
        population: usize,
        eval: impl Fn(&[usize]) -> f64 + Sync,
    ) -> PruneCurve {
        let n = scores.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
        let reference = median(scores);
        let soft: Vec<f64> = scores.iter().map(|&s| squash(s, reference)).collect();
        let grid = prefix_grid(n);
        let distortion: Vec<f64> = grid.par_iter().map(|&m| eval(&order[..m])).collect();
        let denom = population.max(1) as f64;
        let mut saving = Vec::with_capacity(grid.len());
        let mut acc = 0.0;
        let mut done = 0;
        for &m in &grid {
            for &c in &order[done..m] {
                acc += weights[c] * soft[c];
            }
            done = m;
            saving.push(acc / denom);
        }
        PruneCurve {
            order,
            soft,
            grid,
            distortion,
            saving,
        }
    }

    /// Smallest prefix length minimizing `D(n) - lambda * S(n)`.
    pub fn select(&self, lambda: f64) -> usize {
        let mut best = 0;
        let mut best_value = f64::INFINITY;
        for (k, &m) in self.grid.iter().enumerate() {
            let v = self.distortion[k] - lambda * self.saving[k];
            if v < best_value {
                best_value = v;
                best = m;
            }
        }
        best
    }

    /// Keep flags per candidate id after removing the first `n` ranked ones.
    pub fn keep_flags(&self, n: usize) -> Vec<bool> {
        let mut keep = vec![true; self.order.len()];
        self.order[..n].iter().for_each(|&c| keep[c] = false);
        keep
    }
}

fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s[s.len() / 2]
}

/// Scene keeping only Gaussians whose flag is set (statics first).
pub fn retain_gaussians(scene: &GaussianScene, keep: &[bool]) -> GaussianScene {
    let ns = scene.statics.len();
    let mut out = GaussianScene::empty(
        scene.duration,
        scene.keyframe_interval,
        scene.timestamps.clone(),
        scene.max_sh_degree,
    );
    out.statics = scene
        .statics
        .iter()
        .zip(&keep[..ns])
        .filter(|(_, &k)| k)
        .map(|(g, _)| g.clone())
        .collect();
    out.dynamics = scene
        .dynamics
        .iter()
        .zip(&keep[ns..])
        .filter(|(_, &k)| k)
        .map(|(g, _)| g.clone())
        .collect();
    out
}

fn sh_mut(scene: &mut GaussianScene, i: usize) -> &mut Vec<[f64; 3]> {
    let ns = scene.statics.len();
    if i < ns {
        &mut scene.statics[i].sh
    } else {
        &mut scene.dynamics[i - ns].sh
    }
}

fn sh_ref(scene: &GaussianScene, i: usize) -> &[[f64; 3]] {
    let ns = scene.statics.len();
    if i < ns {
        &scene.statics[i].sh
    } else {
        &scene.dynamics[i - ns].sh
    }
}

/// Zero every masked SH band and drop masked Gaussians.
pub fn apply_masks(scene: &GaussianScene, gaussians: &PruneMask, sh: &ShMask) -> GaussianScene {
    let mut s = scene.clone();
    for (i, row) in sh.hard.iter().enumerate() {
        for (l0, &kept) in row.iter().enumerate() {
            if !kept {
                sh_mut(&mut s, i)[sh_band(l0 + 1)].fill([0.0; 3]);
            }
        }
    }
    retain_gaussians(&s, &gaussians.hard)
}

/// Curve over whole-Gaussian removals; independent of any lambda.
pub fn gaussian_prune_curve(
    scene: &GaussianScene,
    importance: &[f64],
    eval: &dyn DistortionOracle,
) -> PruneCurve {
    let n = scene.len();
    PruneCurve::build(importance, &vec![1.0; n], n, |removed| {
        let mut keep = vec![true; n];
        removed.iter().for_each(|&i| keep[i] = false);
        eval.distortion(&retain_gaussians(scene, &keep))
    })
}

/// SH candidates `(gaussian, degree)` for the kept Gaussians.
pub fn sh_candidates(scene: &GaussianScene, keep: &[bool]) -> Vec<(usize, usize)> {
    let k = scene.max_sh_degree as usize;
    (0..scene.len())
        .filter(|&i| keep[i])
        .flat_map(|i| (1..=k).map(move |l| (i, l)))
        .collect()
}

/// Curve over SH band removals on the Gaussians that survive `keep`.
pub fn sh_prune_curve(
    scene: &GaussianScene,
    importance: &[f64],
    keep: &[bool],
    eval: &dyn DistortionOracle,
) -> (Vec<(usize, usize)>, PruneCurve) {
    let k = scene.max_sh_degree;
    let candidates = sh_candidates(scene, keep);
    let scores: Vec<f64> = candidates
        .iter()
        .map(|&(i, l)| {
            let energy: f64 = sh_ref(scene, i)[sh_band(l)]
                .iter()
                .flat_map(|c| c.iter())
                .map(|v| v * v)
                .sum();
            importance[i] * energy
        })
        .collect();
    let weights: Vec<f64> = candidates
        .iter()
        .map(|&(_, l)| super::mask::sh_degree_weight(l, k))
        .collect();
    let curve = PruneCurve::build(&scores, &weights, scene.len(), |removed| {
        let mut s = scene.clone();
        for &c in removed {
            let (i, l) = candidates[c];
            sh_mut(&mut s, i)[sh_band(l)].fill([0.0; 3]);
        }
        eval.distortion(&retain_gaussians(&s, keep))
    });
    (candidates, curve)
}

/// Gaussian mask from a curve and a chosen prefix length.
pub fn gaussian_mask_from(curve: &PruneCurve, n: usize) -> PruneMask {
    let keep = curve.keep_flags(n);
    let soft = curve
        .soft
        .iter()
        .zip(&keep)
        .map(|(&s, &k)| settle(s, k, GS_THRESHOLD))
        .collect();
    PruneMask::from_soft(soft, GS_THRESHOLD)
}

/// SH mask over all Gaussians; bands of pruned Gaussians count as removed.
pub fn sh_mask_from(
    scene: &GaussianScene,
    candidates: &[(usize, usize)],
    curve: &PruneCurve,
    n: usize,
) -> ShMask {
    let k = scene.max_sh_degree;
    let mut soft = vec![vec![settle(0.0, false, SH_THRESHOLD); k as usize]; scene.len()];
    let keep = curve.keep_flags(n);
    for (c, &(i, l)) in candidates.iter().enumerate() {
        soft[i][l - 1] = settle(curve.soft[c], keep[c], SH_THRESHOLD);
    }
    ShMask::from_soft(k, soft, SH_THRESHOLD)
}

pub fn prune_counts(scene: &GaussianScene, mask: &PruneMask) -> PruneCounts {
    let ns = scene.statics.len();
    PruneCounts {
        static_before: ns,
        static_after: mask.hard[..ns].iter().filter(|&&h| h).count(),
        dynamic_before: scene.dynamics.len(),
        dynamic_after: mask.hard[ns..].iter().filter(|&&h| h).count(),
    }
}

/// Greedy pruning with effective multipliers `lambda_gs` and `lambda_sh`.
pub fn rd_greedy_prune(
    scene: &GaussianScene,
    lambda_gs: f64,
    lambda_sh: f64,
    eval: &dyn DistortionOracle,
) -> PruneOutcome {
    let importance = eval.importance(scene);
    let gs = gaussian_prune_curve(scene, &importance, eval);
    let n_gs = gs.select(lambda_gs);
    prune_with_curve(scene, &importance, &gs, n_gs, lambda_sh, eval)
}

/// SH stage and mask assembly given a precomputed Gaussian curve.
pub fn prune_with_curve(
    scene: &GaussianScene,
    importance: &[f64],
    gs: &PruneCurve,
    n_gs: usize,
    lambda_sh: f64,
    eval: &dyn DistortionOracle,
) -> PruneOutcome {
    let gaussian_mask = gaussian_mask_from(gs, n_gs);
    let sh_mask = if scene.max_sh_degree == 0 {
        ShMask::from_soft(0, vec![Vec::new(); scene.len()], SH_THRESHOLD)
    } else {
        let (candidates, curve) = sh_prune_curve(scene, importance, &gaussian_mask.hard, eval);
        let n_sh = curve.select(lambda_sh);
        sh_mask_from(scene, &candidates, &curve, n_sh)
    };
    PruneOutcome {
        counts: prune_counts(scene, &gaussian_mask),
        gaussian_mask,
        sh_mask,
    }
}
