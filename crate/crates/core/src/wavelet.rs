//! Pointwise orthonormal Haar transform of keyframe trajectories.
//!
//! A trajectory is a `T x 3` list of positions. Each axis is transformed
//! independently: one analysis step maps a pair `(p_2k, p_2k+1)` to
//! `a_k = (p_2k + p_2k+1) / sqrt 2` and `d_k = (p_2k - p_2k+1) / sqrt 2`;
//! deeper levels recurse on the approximation. Lengths that are not a
//! multiple of `2^levels` are extended by half-sample symmetric reflection
//! and truncated again after synthesis.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::model::Vec3;

/// Multi-level Haar decomposition of one trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveletPyramid {
    pub levels: usize,
    /// Coarsest approximation, `padded_length / 2^levels` rows.
    pub approx: Vec<Vec3>,
    /// `details[l - 1]` holds level `l` (finest first), `padded_length / 2^l` rows.
    pub details: Vec<Vec<Vec3>>,
    /// Per-level flag: detail band zeroed and not stored.
    pub discarded: Vec<bool>,
    pub original_length: usize,
}

impl WaveletPyramid {
    pub fn padded_length(&self) -> usize {
        self.approx.len() << self.levels
    }

    /// Coefficient rows kept for storage (approximation plus undiscarded details).
    pub fn retained_coefficients(&self) -> usize {
        self.approx.len()
            + self
                .details
                .iter()
                .zip(&self.discarded)
                .filter(|(_, &gone)| !gone)
                .map(|(d, _)| d.len())
                .sum::<usize>()
    }

    pub fn discarded_coefficients(&self) -> usize {
        self.details
            .iter()
            .zip(&self.discarded)
            .filter(|(_, &gone)| gone)
            .map(|(d, _)| d.len())
            .sum()
    }

    /// Number of detail levels still stored.
    pub fn kept_levels(&self) -> usize {
        self.discarded.iter().filter(|&&d| !d).count()
    }

    fn check_shape(&self) -> Result<()> {
        if self.levels == 0
            || self.details.len() != self.levels
            || self.discarded.len() != self.levels
            || self.approx.is_empty()
        {
            return Err(Error::validation("wavelet pyramid level structure is inconsistent"));
        }
        let padded = self.padded_length();
        for (l, d) in self.details.iter().enumerate() {
            if d.len() != padded >> (l + 1) {
                return Err(Error::validation(format!(
                    "detail level {} has {} rows, expected {}",
                    l + 1,
                    d.len(),
                    padded >> (l + 1)
                )));
            }
        }
        if self.original_length > padded || padded - self.original_length >= (1 << self.levels)
        {
            return Err(Error::validation("original length does not match the padded length"));
        }
        Ok(())
    }
}

/// Length after padding to a multiple of `2^levels`.
pub fn padded_length(len: usize, levels: usize) -> usize {
    let block = 1usize << levels;
    len.div_ceil(block) * block
}

/// Half-sample symmetric extension index.
fn reflect(i: usize, n: usize) -> usize {
    let j = i % (2 * n);
    if j < n {
        j
    } else {
        2 * n - 1 - j
    }
}

fn analysis_step(x: &[Vec3]) -> (Vec<Vec3>, Vec<Vec3>) {
    x.chunks_exact(2)
        .map(|p| {
            let mut a = [0.0; 3];
            let mut d = [0.0; 3];
            for ax in 0..3 {
                a[ax] = (p[0][ax] + p[1][ax]) * FRAC_1_SQRT_2;
                d[ax] = (p[0][ax] - p[1][ax]) * FRAC_1_SQRT_2;
            }
            (a, d)
        })
        .unzip()
}

fn synthesis_step(a: &[Vec3], d: Option<&[Vec3]>) -> Vec<Vec3> {
    let mut out = Vec::with_capacity(a.len() * 2);
    for (k, ak) in a.iter().enumerate() {
        let dk = d.map(|d| d[k]).unwrap_or([0.0; 3]);
        let mut even = [0.0; 3];
        let mut odd = [0.0; 3];
        for ax in 0..3 {
            even[ax] = (ak[ax] + dk[ax]) * FRAC_1_SQRT_2;
            odd[ax] = (ak[ax] - dk[ax]) * FRAC_1_SQRT_2;
        }
        out.push(even);
        out.push(odd);
    }
    out
}

/// Forward multi-level Haar analysis.
pub fn haar_forward(trajectory: &[Vec3], levels: usize) -> Result<WaveletPyramid> {
    let n = trajectory.len();
    if n < 2 {
        return Err(Error::validation("trajectory needs at least two samples"));
    }
    if levels == 0 {
        return Err(Error::validation("at least one decomposition level is required"));
    }
    let padded = padded_length(n, levels);
    let mut current: Vec<Vec3> = (0..padded).map(|i| trajectory[reflect(i, n)]).collect();
    let mut details = Vec::with_capacity(levels);
    for _ in 0..levels {
        let (a, d) = analysis_step(&current);
        details.push(d);
        current = a;
    }
    Ok(WaveletPyramid {
        levels,
        approx: current,
        details,
        discarded: vec![false; levels],
        original_length: n,
    })
}

/// Inverse transform; discarded bands contribute zeros.
pub fn haar_inverse(pyramid: &WaveletPyramid) -> Result<Vec<Vec3>> {
    pyramid.check_shape()?;
    let mut current = pyramid.approx.clone();
    for l in (0..pyramid.levels).rev() {
        let d = (!pyramid.discarded[l]).then(|| pyramid.details[l].as_slice());
        current = synthesis_step(&current, d);
    }
    current.truncate(pyramid.original_length);
    Ok(current)
}

/// Zero all but the `keep_levels` coarsest detail bands.
///
/// `keep_levels = 0` keeps only the approximation; values above
/// `pyramid.levels` keep everything.
pub fn mask_details(pyramid: &WaveletPyramid, keep_levels: usize) -> WaveletPyramid {
    let mut out = pyramid.clone();
    let drop_below = pyramid.levels.saturating_sub(keep_levels);
    for l in 0..drop_below {
        out.discarded[l] = true;
        out.details[l].iter_mut().for_each(|v| *v = [0.0; 3]);
    }
    out
}

/// Explicit `n x n` analysis matrix `W` for one axis, rows ordered
/// `[approx; detail_levels; ...; detail_1]`. Requires `n` divisible by `2^levels`.
pub fn haar_matrix(n: usize, levels: usize) -> Result<Vec<Vec<f64>>> {
    if levels == 0 || n == 0 || n % (1 << levels) != 0 {
        return Err(Error::validation("matrix size must be a multiple of 2^levels"));
    }
    let s = FRAC_1_SQRT_2;
    // Row r of the level matrix applied to the current approximation block.
    let mut w: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut block = n;
    for _ in 0..levels {
        let half = block / 2;
        let mut step: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        for k in 0..half {
            for j in 0..block {
                step[k][j] = 0.0;
                step[half + k][j] = 0.0;
            }
            step[k][2 * k] = s;
            step[k][2 * k + 1] = s;
            step[half + k][2 * k] = s;
            step[half + k][2 * k + 1] = -s;
        }
        w = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).map(|m| step[i][m] * w[m][j]).sum())
                    .collect()
            })
            .collect();
        block = half;
    }
    Ok(w)
}

/// Flatten one axis of a pyramid in the row order used by [`haar_matrix`].
pub fn flatten_axis(pyramid: &WaveletPyramid, axis: usize) -> Vec<f64> {
    let mut out: Vec<f64> = pyramid.approx.iter().map(|v| v[axis]).collect();
    for d in pyramid.details.iter().rev() {
        out.extend(d.iter().map(|v| v[axis]));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn column(xs: &[f64]) -> Vec<Vec3> {
        xs.iter().map(|&x| [x, 0.0, 0.0]).collect()
    }

    fn random_traj(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec3> {
        (0..n)
            .map(|_| [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)])
            .collect()
    }

    #[test]
    fn constant_signal_has_no_detail() {
        let c = 1.75;
        let p = haar_forward(&column(&[c; 4]), 1).unwrap();
        assert!(p.details[0].iter().all(|d| d[0].abs() < 1e-15));
        for a in &p.approx {
            assert!((a[0] - c * 2f64.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn four_sample_ramp_coefficients() {
        let p = haar_forward(&column(&[0.0, 1.0, 2.0, 3.0]), 1).unwrap();
        let s = FRAC_1_SQRT_2;
        let a: Vec<f64> = p.approx.iter().map(|v| v[0]).collect();
        let d: Vec<f64> = p.details[0].iter().map(|v| v[0]).collect();
        assert!((a[0] - s).abs() < 1e-15 && (a[1] - 5.0 * s).abs() < 1e-15);
        assert!((d[0] + s).abs() < 1e-15 && (d[1] + s).abs() < 1e-15);
    }

    #[test]
    fn energy_is_preserved() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_traj(&mut rng, 8);
        for levels in 1..=3 {
            let p = haar_forward(&x, levels).unwrap();
            let e_in: f64 = x.iter().flat_map(|v| v.iter()).map(|v| v * v).sum();
            let e_out: f64 = p
                .approx
                .iter()
                .chain(p.details.iter().flatten())
                .flat_map(|v| v.iter())
                .map(|v| v * v)
                .sum();
            assert!((e_in - e_out).abs() <= 1e-9 * e_in);
        }
    }

    #[test]
    fn round_trip_and_masked_pairwise_means() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = random_traj(&mut rng, 16);
        let back = haar_inverse(&haar_forward(&x, 2).unwrap()).unwrap();
        for (a, b) in x.iter().zip(&back) {
            for ax in 0..3 {
                assert!((a[ax] - b[ax]).abs() <= 1e-10 * a[ax].abs().max(1.0));
            }
        }
        let masked = mask_details(&haar_forward(&column(&[0.0, 1.0, 2.0, 3.0]), 1).unwrap(), 0);
        let r: Vec<f64> = haar_inverse(&masked).unwrap().iter().map(|v| v[0]).collect();
        let expect = [0.5, 0.5, 2.5, 2.5];
        for (a, b) in r.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
        let mut zero = haar_forward(&x, 1).unwrap();
        zero.approx.iter_mut().for_each(|v| *v = [0.0; 3]);
        zero.details[0].iter_mut().for_each(|v| *v = [0.0; 3]);
        assert!(haar_inverse(&zero).unwrap().iter().all(|v| *v == [0.0; 3]));
    }

    #[test]
    fn retained_fractions() {
        let x = column(&(0..32).map(|i| i as f64).collect::<Vec<_>>());
        for (levels, denom) in [(1, 2), (2, 4), (3, 8)] {
            let p = mask_details(&haar_forward(&x, levels).unwrap(), 0);
            assert_eq!(p.retained_coefficients() * denom, 32);
            assert_eq!(p.retained_coefficients() + p.discarded_coefficients(), 32);
        }
        let p = haar_forward(&x, 3).unwrap();
        assert_eq!(mask_details(&p, 3), p);
        assert_eq!(mask_details(&p, 1).kept_levels(), 1);
    }

    #[test]
    fn odd_lengths_are_reflected_and_truncated() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [2, 3, 5, 7, 33] {
            let x = random_traj(&mut rng, n);
            for levels in 1..=3 {
                let p = haar_forward(&x, levels).unwrap();
                assert_eq!(p.padded_length(), padded_length(n, levels));
                let back = haar_inverse(&p).unwrap();
                assert_eq!(back.len(), n);
                for (a, b) in x.iter().zip(&back) {
                    for ax in 0..3 {
                        assert!((a[ax] - b[ax]).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn errors() {
        assert!(haar_forward(&column(&[1.0]), 1).is_err());
        assert!(haar_forward(&column(&[1.0, 2.0]), 0).is_err());
        let mut p = haar_forward(&column(&[1.0, 2.0, 3.0, 4.0]), 1).unwrap();
        p.details[0].pop();
        assert!(haar_inverse(&p).is_err());
    }

    #[test]
    fn matrix_is_orthogonal_and_matches_transform() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [2usize, 4, 8, 16, 32] {
            for levels in 1..=3 {
                if n % (1 << levels) != 0 {
                    continue;
                }
                let w = haar_matrix(n, levels).unwrap();
                for i in 0..n {
                    for j in 0..n {
                        let dot: f64 = (0..n).map(|k| w[i][k] * w[j][k]).sum();
                        let target = if i == j { 1.0 } else { 0.0 };
                        assert!((dot - target).abs() < 1e-12);
                    }
                }
                let x = random_traj(&mut rng, n);
                let p = haar_forward(&x, levels).unwrap();
                for axis in 0..3 {
                    let f = flatten_axis(&p, axis);
                    for i in 0..n {
                        let wx: f64 = (0..n).map(|k| w[i][k] * x[k][axis]).sum();
                        assert!((wx - f[i]).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn masked_error_grows_with_discarded_levels() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let x = random_traj(&mut rng, 32);
        let p = haar_forward(&x, 3).unwrap();
        let err = |keep: usize| -> f64 {
            let r = haar_inverse(&mask_details(&p, keep)).unwrap();
            x.iter()
                .zip(&r)
                .map(|(a, b)| crate::model::dist2(*a, *b))
                .sum()
        };
        assert!(err(3) <= err(2) && err(2) <= err(1) && err(1) <= err(0));
    }

    #[test]
    fn axes_are_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random_traj(&mut rng, 8);
        let full = haar_forward(&x, 2).unwrap();
        for axis in 0..3 {
            let single: Vec<Vec3> = x.iter().map(|v| [v[axis], 0.0, 0.0]).collect();
            let p = haar_forward(&single, 2).unwrap();
            assert_eq!(flatten_axis(&p, 0), flatten_axis(&full, axis));
        }
    }

    #[test]
    fn linear_ramp_masked_error_bound() {
        let step = 0.37;
        let x: Vec<Vec3> = (0..16).map(|i| [i as f64 * step, 0.0, 0.0]).collect();
        let r = haar_inverse(&mask_details(&haar_forward(&x, 1).unwrap(), 0)).unwrap();
        for (k, (a, b)) in x.iter().zip(&r).enumerate() {
            let pair_mean = (x[k & !1][0] + x[k | 1][0]) / 2.0;
            assert!((b[0] - pair_mean).abs() < 1e-12);
            assert!((a[0] - b[0]).abs() <= step / 2.0 + 1e-12);
        }
    }
}
