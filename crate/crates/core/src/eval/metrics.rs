use super::image::Image;
use crate::error::{Error, Result};
use crate::model::{dist2, Vec3};

/// Reported PSNR for identical inputs.
pub const PSNR_INFINITY: f64 = f64::INFINITY;

const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_WINDOW: usize = 11;

pub fn mse(a: &Image, b: &Image) -> Result<f64> {
    a.check_same_shape(b)?;
    if a.pixels.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = a
        .pixels
        .iter()
        .zip(&b.pixels)
        .map(|(p, q)| (0..3).map(|c| (p[c] - q[c]).powi(2)).sum::<f64>())
        .sum();
    Ok(sum / (3 * a.pixels.len()) as f64)
}

/// Mean absolute error over all channels.
pub fn mean_abs(a: &Image, b: &Image) -> Result<f64> {
    a.check_same_shape(b)?;
    if a.pixels.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = a
        .pixels
        .iter()
        .zip(&b.pixels)
        .map(|(p, q)| (0..3).map(|c| (p[c] - q[c]).abs()).sum::<f64>())
        .sum();
    Ok(sum / (3 * a.pixels.len()) as f64)
}

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse <= 0.0 {
        PSNR_INFINITY
    } else {
        -10.0 * mse.log10()
    }
}

/// `10 log10(1 / MSE)` for images in `[0, 1]`.
pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    Ok(psnr_from_mse(mse(a, b)?))
}

/// PSNR over paired image sets with the MSE pooled across all of them.
pub fn pooled_psnr(a: &[Image], b: &[Image]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::validation("image set sizes differ"));
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for (x, y) in a.iter().zip(b) {
        total += mse(x, y)? * (3 * x.pixels.len()) as f64;
        count += 3 * x.pixels.len();
    }
    if count == 0 {
        return Ok(PSNR_INFINITY);
    }
    Ok(psnr_from_mse(total / count as f64))
}

fn gaussian_window(size: usize) -> Vec<f64> {
    let c = (size as f64 - 1.0) / 2.0;
    let w: Vec<f64> = (0..size)
        .map(|i| (-(i as f64 - c).powi(2) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp())
        .collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

/// Window side used for a `w x h` image: 11, shrunk to the largest odd size that fits.
pub fn ssim_window_size(w: usize, h: usize) -> usize {
    let s = SSIM_WINDOW.min(w).min(h);
    if s % 2 == 0 {
        s.saturating_sub(1).max(1)
    } else {
        s
    }
}

fn ssim_channel(a: &[f64], b: &[f64], w: usize, h: usize) -> f64 {
    let size = ssim_window_size(w, h);
    let g = gaussian_window(size);
    let c1 = (SSIM_K1 * 1.0f64).powi(2);
    let c2 = (SSIM_K2 * 1.0f64).powi(2);
    let mut total = 0.0;
    let mut count = 0usize;
    for y0 in 0..=h - size {
        for x0 in 0..=w - size {
            let (mut ma, mut mb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for (dy, gy) in g.iter().enumerate() {
                let row = (y0 + dy) * w + x0;
                for (dx, gx) in g.iter().enumerate() {
                    let k = gy * gx;
                    let va = a[row + dx];
                    let vb = b[row + dx];
                    ma += k * va;
                    mb += k * vb;
                    saa += k * va * va;
                    sbb += k * vb * vb;
                    sab += k * va * vb;
                }
            }
            let va = saa - ma * ma;
            let vb = sbb - mb * mb;
            let cov = sab - ma * mb;
            total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
                / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            count += 1;
        }
    }
    total / count as f64
}

/// Mean SSIM over the valid region, averaged across channels.
pub fn ssim(a: &Image, b: &Image) -> Result<f64> {
    a.check_same_shape(b)?;
    if a.pixels.is_empty() {
        return Ok(1.0);
    }
    let s: f64 = (0..3)
        .map(|c| ssim_channel(&a.channel(c), &b.channel(c), a.width, a.height))
        .sum();
    Ok(s / 3.0)
}

/// PSNR of point positions with peak `extent`: `10 log10(extent^2 / mean |p - q|^2)`.
pub fn trajectory_psnr(original: &[Vec<Vec3>], reconstructed: &[Vec<Vec3>], extent: f64) -> Result<f64> {
    if original.len() != reconstructed.len()
        || original.iter().zip(reconstructed).any(|(a, b)| a.len() != b.len())
    {
        return Err(Error::validation("trajectory shapes differ"));
    }
    if !(extent > 0.0) {
        return Err(Error::validation("scene extent must be positive"));
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for (a, b) in original.iter().zip(reconstructed) {
        for (p, q) in a.iter().zip(b) {
            total += dist2(*p, *q);
            count += 1;
        }
    }
    if count == 0 || total == 0.0 {
        return Ok(PSNR_INFINITY);
    }
    Ok(10.0 * (extent * extent / (total / count as f64)).log10())
}
