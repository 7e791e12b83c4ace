use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::camera::ProbeCamera;
use super::image::Image;
use super::metrics::{pooled_psnr, ssim};
use super::render::{gaussians_at, render, splats, MIN_ALPHA};
use crate::error::{Error, Result};
use crate::model::GaussianScene;
use crate::quant::DistortionOracle;
use crate::rate::distortion_loss;

/// Probe layout: a ring of cameras around the origin at several instants.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeConfig {
    pub cameras: usize,
    pub times: usize,
    pub width: usize,
    pub height: usize,
    pub distance: f64,
    pub fov_y: f64,
    pub lambda_dssim: f64,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            cameras: 8,
            times: 4,
            width: 64,
            height: 64,
            distance: 5.0,
            fov_y: 45f64.to_radians(),
            lambda_dssim: 0.2,
            seed: 42,
        }
    }
}

/// Probe instants: one frame time per equal slice of the sequence, jittered by the seed.
pub fn probe_times(scene: &GaussianScene, count: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7469_6d65);
    let ts = &scene.timestamps;
    (0..count)
        .map(|j| {
            if ts.is_empty() {
                let slice = scene.duration / count as f64;
                return slice * (j as f64 + rng.random::<f64>());
            }
            let lo = j * ts.len() / count;
            let hi = ((j + 1) * ts.len() / count).max(lo + 1).min(ts.len());
            ts[rng.random_range(lo..hi)]
        })
        .collect()
}

pub fn probe_cameras(scene: &GaussianScene, cfg: &ProbeConfig) -> Result<Vec<ProbeCamera>> {
    if cfg.cameras == 0 || cfg.times == 0 {
        return Err(Error::validation("probe set needs at least one camera and one time"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let phase = rng.random::<f64>() * std::f64::consts::TAU;
    let times = probe_times(scene, cfg.times, cfg.seed);
    let mut cams = Vec::with_capacity(cfg.cameras * cfg.times);
    for i in 0..cfg.cameras {
        let azimuth = phase + std::f64::consts::TAU * i as f64 / cfg.cameras as f64;
        let elevation = if i % 2 == 0 { 15f64 } else { 35f64 }.to_radians();
        let eye = [
            cfg.distance * elevation.cos() * azimuth.cos(),
            cfg.distance * elevation.cos() * azimuth.sin(),
            cfg.distance * elevation.sin(),
        ];
        for &t in &times {
            cams.push(ProbeCamera::look_at(
                eye,
                [0.0; 3],
                [0.0, 0.0, 1.0],
                cfg.fov_y,
                cfg.width,
                cfg.height,
                t,
            )?);
        }
    }
    Ok(cams)
}

/// Fixed cameras plus reference renders of the uncompressed scene.
#[derive(Clone, Debug)]
pub struct ProbeSet {
    pub cameras: Vec<ProbeCamera>,
    pub reference: Vec<Image>,
    pub lambda_dssim: f64,
}

impl ProbeSet {
    pub fn new(reference_scene: &GaussianScene, cfg: &ProbeConfig) -> Result<Self> {
        let cameras = probe_cameras(reference_scene, cfg)?;
        let reference = cameras
            .par_iter()
            .map(|c| render(reference_scene, c))
            .collect();
        Ok(ProbeSet {
            cameras,
            reference,
            lambda_dssim: cfg.lambda_dssim,
        })
    }

    pub fn render_all(&self, scene: &GaussianScene) -> Vec<Image> {
        self.cameras.par_iter().map(|c| render(scene, c)).collect()
    }

    /// PSNR with the squared error pooled over every probe.
    pub fn psnr(&self, scene: &GaussianScene) -> f64 {
        pooled_psnr(&self.render_all(scene), &self.reference).expect("probe shapes agree")
    }

    pub fn ssim(&self, scene: &GaussianScene) -> f64 {
        let imgs = self.render_all(scene);
        let vals: Vec<f64> = imgs
            .iter()
            .zip(&self.reference)
            .map(|(a, b)| ssim(a, b).expect("probe shapes agree"))
            .collect();
        vals.iter().sum::<f64>() / vals.len() as f64
    }
}

impl DistortionOracle for ProbeSet {
    fn distortion(&self, scene: &GaussianScene) -> f64 {
        let losses: Vec<f64> = self
            .cameras
            .par_iter()
            .zip(&self.reference)
            .map(|(c, r)| distortion_loss(&render(scene, c), r, self.lambda_dssim).expect("probe shapes agree"))
            .collect();
        losses.iter().sum::<f64>() / losses.len() as f64
    }

    /// Mean effective opacity x mean projected area x fraction of probes
    /// where the Gaussian is temporally present.
    fn importance(&self, scene: &GaussianScene) -> Vec<f64> {
        let n = scene.len();
        let per_probe: Vec<(Vec<f64>, Vec<f64>)> = self
            .cameras
            .par_iter()
            .map(|cam| {
                let opacity: Vec<f64> = gaussians_at(scene, cam.time).iter().map(|g| g.opacity).collect();
                let mut area = vec![0.0; n];
                for s in splats(scene, cam) {
                    area[s.id] = s.area();
                }
                (opacity, area)
            })
            .collect();
        let p = per_probe.len() as f64;
        (0..n)
            .map(|i| {
                let (mut o, mut a, mut c) = (0.0, 0.0, 0.0);
                for (op, ar) in &per_probe {
                    o += op[i];
                    a += ar[i];
                    if op[i] >= MIN_ALPHA {
                        c += 1.0;
                    }
                }
                (o / p) * (a / p) * (c / p)
            })
            .collect()
    }
}
