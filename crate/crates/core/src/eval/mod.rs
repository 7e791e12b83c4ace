//! Distortion oracle: probe cameras, a CPU splatting renderer, image and
//! trajectory metrics, and the synthetic scene generator.

mod camera;
mod image;
mod metrics;
mod probes;
mod render;
mod synth;

pub use camera::ProbeCamera;
pub use image::Image;
pub use metrics::{
    mean_abs, mse, pooled_psnr, psnr, psnr_from_mse, ssim, ssim_window_size, trajectory_psnr,
    PSNR_INFINITY,
};
pub use probes::{probe_cameras, probe_times, ProbeConfig, ProbeSet};
pub use render::{
    color_to_dc, dc_color, gaussians_at, project, render, sh_basis, sh_color, splats, GaussianAt,
    Splat, DILATION, MIN_ALPHA, MIN_TRANSMITTANCE,
};
pub use synth::{generate_synthetic_scene, synthetic_scene, GeneratorConfig, SyntheticScene};
