use crate::error::{Error, Result};

/// Default hard-mask threshold for whole Gaussians.
pub const GS_THRESHOLD: f64 = 0.01;
/// Default hard-mask threshold for SH bands.
pub const SH_THRESHOLD: f64 = 0.5;

/// Forward rule of the straight-through binarization: `soft > threshold`.
pub fn binarize(soft: f64, threshold: f64) -> bool {
    soft > threshold
}

/// Monotone map of a non-negative score onto `(0, 1)`, `0.5` at `reference`.
pub fn squash(score: f64, reference: f64) -> f64 {
    let eps = 1e-12;
    let s = score.max(0.0) + eps;
    let r = reference.max(0.0) + eps;
    s / (s + r)
}

/// Soft value after a keep/prune decision so that thresholding reproduces
/// the decision: kept values land in `(threshold, 1)`, pruned ones in
/// `(0, threshold)`.
pub fn settle(soft: f64, keep: bool, threshold: f64) -> f64 {
    if keep {
        threshold + (1.0 - threshold) * soft
    } else {
        threshold * soft
    }
}

/// Soft and hard keep-masks over Gaussians.
#[derive(Clone, Debug, PartialEq)]
pub struct PruneMask {
    pub soft: Vec<f64>,
    pub hard: Vec<bool>,
    pub threshold: f64,
}

impl PruneMask {
    pub fn from_soft(soft: Vec<f64>, threshold: f64) -> Self {
        let hard = soft.iter().map(|&s| binarize(s, threshold)).collect();
        PruneMask {
            soft,
            hard,
            threshold,
        }
    }

    /// Mask keeping every one of `n` Gaussians.
    pub fn keep_all(n: usize) -> Self {
        PruneMask::from_soft(vec![settle(0.5, true, GS_THRESHOLD); n], GS_THRESHOLD)
    }

    pub fn len(&self) -> usize {
        self.soft.len()
    }

    pub fn is_empty(&self) -> bool {
        self.soft.is_empty()
    }

    pub fn kept(&self) -> usize {
        self.hard.iter().filter(|&&h| h).count()
    }
}

/// Per-Gaussian, per-degree (`1..=k`) keep-masks for SH bands.
#[derive(Clone, Debug, PartialEq)]
pub struct ShMask {
    pub k: u8,
    /// `soft[i][l - 1]`
    pub soft: Vec<Vec<f64>>,
    pub hard: Vec<Vec<bool>>,
    pub threshold: f64,
}

impl ShMask {
    pub fn from_soft(k: u8, soft: Vec<Vec<f64>>, threshold: f64) -> Self {
        let hard = soft
            .iter()
            .map(|row| row.iter().map(|&s| binarize(s, threshold)).collect())
            .collect();
        ShMask {
            k,
            soft,
            hard,
            threshold,
        }
    }

    pub fn keep_all(n: usize, k: u8) -> Self {
        ShMask::from_soft(
            k,
            vec![vec![settle(0.5, true, SH_THRESHOLD); k as usize]; n],
            SH_THRESHOLD,
        )
    }

    /// Bit pattern of kept bands for Gaussian `i` (bit `l - 1` set when band `l` survives).
    pub fn pattern(&self, i: usize) -> u8 {
        self.hard[i]
            .iter()
            .enumerate()
            .fold(0u8, |acc, (l, &h)| acc | ((h as u8) << l))
    }
}

/// `(1/N) * sum_i soft_i`.
pub fn gs_prune_loss(mask: &PruneMask) -> f64 {
    if mask.soft.is_empty() {
        return 0.0;
    }
    mask.soft.iter().sum::<f64>() / mask.soft.len() as f64
}

/// Weight of SH degree `l` in the band pruning loss: `(2l+1) / ((k+1)^2 - 1)`.
pub fn sh_degree_weight(l: usize, k: u8) -> f64 {
    let k = k as usize;
    (2 * l + 1) as f64 / ((k + 1) * (k + 1) - 1) as f64
}

/// `(1/N) * sum_i sum_{l=1..k} w_l * soft_i^(l)`.
pub fn sh_prune_loss(mask: &ShMask, k: u8) -> Result<f64> {
    if !(1..=3).contains(&k) {
        return Err(Error::validation("SH pruning needs k in 1..=3"));
    }
    if mask.soft.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = mask
        .soft
        .iter()
        .map(|row| {
            (1..=k as usize)
                .map(|l| sh_degree_weight(l, k) * row.get(l - 1).copied().unwrap_or(0.0))
                .sum::<f64>()
        })
        .sum();
    Ok(total / mask.soft.len() as f64)
}
