//! Scene encoding and decoding.
//!
//! The encoder fills a [`Payload`] and then runs the same [`reconstruct`]
//! the decoder uses, so the quantized model it reports is exactly what a
//! decode of the written bytes yields.

use std::sync::OnceLock;

use log::debug;
use rayon::prelude::*;

use super::container::{
    codebook_of, indices_of, read_container, write_container, Header,
    OpacityField, Payload, Stored, StoredCodebook,
};
use super::range::{category_table, FrequencyTable};
use super::report::{report_from_layout, RateReport};
use crate::bytes::f32r;
use crate::error::{Error, Result};
use crate::eval::{ProbeConfig, ProbeSet};
use crate::model::{sh_band, sh_len, DynamicGaussian, GaussianScene, Quat, StaticGaussian, Vec3};
use crate::quant::{
    apply_masks, ecvq_encode, gaussian_prune_curve, prune_counts, prune_with_curve,
    train_group, Attribute, Component, DistortionOracle, EcvqCodebook, GroupId, OpacityPolicy,
    PruneCounts, PruneCurve, PruneMask, ScalarQuantizer, ShMask, OPACITY_BITS,
};
use crate::wavelet::{haar_forward, haar_inverse, mask_details, WaveletPyramid};

/// Encoder settings for one operating point.
#[derive(Clone, Debug, PartialEq)]
pub struct CodecConfig {
    /// Gaussian pruning weight; the effective multiplier is `lambda_r * lambda_gs`.
    pub lambda_gs: f64,
    /// SH band pruning weight; the effective multiplier is `lambda_r * lambda_sh`.
    pub lambda_sh: f64,
    pub lambda_r: f64,
    /// Codeword rate weight relative to `lambda_r`, scaled by each group's variance.
    pub vq_weight: f64,
    pub codebook_size: usize,
    pub ecvq_iterations: usize,
    /// Decomposition depth for trajectories; 0 stores keyframes directly.
    pub wavelet_levels: u8,
    /// Coarsest detail levels kept.
    pub keep_levels: u8,
    /// Position quantization step in scene units.
    pub position_step: f64,
    pub opacity_policy: OpacityPolicy,
    pub opacity_bits: u8,
    pub seed: u64,
}

impl Default for CodecConfig {
    fn default() -> Self {
        CodecConfig {
            lambda_gs: 0.0,
            lambda_sh: 0.0,
            lambda_r: 1.0,
            vq_weight: 0.01,
            codebook_size: 64,
            ecvq_iterations: 20,
            wavelet_levels: 1,
            keep_levels: 0,
            position_step: 0.002,
            opacity_policy: OpacityPolicy::default(),
            opacity_bits: OPACITY_BITS,
            seed: 42,
        }
    }
}

impl CodecConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lambda_gs", self.lambda_gs),
            ("lambda_sh", self.lambda_sh),
            ("lambda_r", self.lambda_r),
            ("vq_weight", self.vq_weight),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::validation(format!("{name} must be finite and non-negative")));
            }
        }
        if !(1..=u16::MAX as usize).contains(&self.codebook_size) {
            return Err(Error::validation("codebook size must lie in 1..=65535"));
        }
        if self.wavelet_levels > 8 {
            return Err(Error::validation("at most 8 wavelet levels are supported"));
        }
        if self.keep_levels > self.wavelet_levels {
            return Err(Error::validation("kept detail levels exceed the decomposition depth"));
        }
        if !(self.position_step > 0.0 && self.position_step.is_finite()) {
            return Err(Error::validation("position step must be positive"));
        }
        if !(1..=24).contains(&self.opacity_bits) {
            return Err(Error::validation("opacity bits must lie in 1..=24"));
        }
        Ok(())
    }
}

/// Result of encoding one scene at one operating point.
#[derive(Clone, Debug)]
pub struct Encoded {
    pub bytes: Vec<u8>,
    pub report: RateReport,
    /// The decoder's view of the scene.
    pub scene: GaussianScene,
    pub payload: Payload,
    pub counts: PruneCounts,
}

/// Encoder bound to one input scene. Probe renders, importance scores and
/// the Gaussian pruning curve are computed once and shared across configs.
pub struct Encoder {
    scene: GaussianScene,
    probe_config: ProbeConfig,
    probes: OnceLock<ProbeSet>,
    importance: OnceLock<Vec<f64>>,
    gs_curve: OnceLock<PruneCurve>,
}

impl Encoder {
    pub fn new(scene: GaussianScene, probe_config: ProbeConfig) -> Result<Self> {
        scene.validate()?;
        Ok(Encoder {
            scene,
            probe_config,
            probes: OnceLock::new(),
            importance: OnceLock::new(),
            gs_curve: OnceLock::new(),
        })
    }

    /// Reuse already rendered probes (they must belong to this scene).
    pub fn with_probes(scene: GaussianScene, probes: ProbeSet) -> Result<Self> {
        let e = Encoder::new(scene, ProbeConfig::default())?;
        let _ = e.probes.set(probes);
        Ok(e)
    }

    pub fn scene(&self) -> &GaussianScene {
        &self.scene
    }

    pub fn probes(&self) -> Result<&ProbeSet> {
        if let Some(p) = self.probes.get() {
            return Ok(p);
        }
        let p = ProbeSet::new(&self.scene, &self.probe_config)?;
        Ok(self.probes.get_or_init(|| p))
    }

    fn importance(&self) -> Result<&[f64]> {
        let probes = self.probes()?;
        Ok(self.importance.get_or_init(|| probes.importance(&self.scene)))
    }

    fn gs_curve(&self) -> Result<&PruneCurve> {
        let probes = self.probes()?;
        let importance = self.importance()?;
        Ok(self
            .gs_curve
            .get_or_init(|| gaussian_prune_curve(&self.scene, importance, probes)))
    }

    fn prune(&self, cfg: &CodecConfig) -> Result<(PruneMask, ShMask)> {
        let s = &self.scene;
        let lgs = cfg.lambda_r * cfg.lambda_gs;
        let lsh = cfg.lambda_r * cfg.lambda_sh;
        if s.is_empty() || (lgs == 0.0 && (lsh == 0.0 || s.max_sh_degree == 0)) {
            return Ok((PruneMask::keep_all(s.len()), ShMask::keep_all(s.len(), s.max_sh_degree)));
        }
        let curve = self.gs_curve()?;
        let n_gs = curve.select(lgs);
        let out = prune_with_curve(s, self.importance()?, curve, n_gs, lsh, self.probes()?);
        Ok((out.gaussian_mask, out.sh_mask))
    }

    pub fn encode(&self, cfg: &CodecConfig) -> Result<Encoded> {
        cfg.validate()?;
        let (gmask, shmask) = self.prune(cfg)?;
        let counts = prune_counts(&self.scene, &gmask);
        debug!(
            "pruned to {} static / {} dynamic",
            counts.static_after, counts.dynamic_after
        );
        let payload = build_payload(&self.scene, &gmask, &shmask, cfg)?;
        let scene = reconstruct(&payload)?;
        let (bytes, sizes) = write_container(&payload)?;
        let overhead = bytes.len() - sizes.iter().sum::<usize>();
        let report = report_from_layout(&payload.header, overhead, &sizes);
        Ok(Encoded {
            bytes,
            report,
            scene,
            payload,
            counts,
        })
    }
}

/// One-shot encode; renders probes only when pruning is active.
pub fn encode_scene(scene: &GaussianScene, cfg: &CodecConfig) -> Result<Encoded> {
    Encoder::new(scene.clone(), ProbeConfig::default())?.encode(cfg)
}

/// Parse and reconstruct a container.
pub fn decode_scene(data: &[u8]) -> Result<GaussianScene> {
    reconstruct(&read_container(data)?)
}

fn group_seed(seed: u64, g: GroupId) -> u64 {
    let pos = GroupId::all().position(|x| x == g).unwrap_or(0) as u64;
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(pos + 1)
}

/// Sorted order of one component's survivors: stable by SH pattern.
fn sort_by_pattern(patterns: &[u8]) -> Vec<u32> {
    let mut idx: Vec<u32> = (0..patterns.len() as u32).collect();
    idx.sort_by_key(|&i| patterns[i as usize]);
    idx
}

fn rotation_sample(q: Quat) -> Vec<f64> {
    q.canonical().to_array().to_vec()
}

fn sh_sample(sh: &[[f64; 3]], l: usize) -> Vec<f64> {
    sh[sh_band(l)].iter().flatten().copied().collect()
}

fn total_variance(samples: &[Vec<f64>]) -> f64 {
    let n = samples.len() as f64;
    let dim = samples[0].len();
    (0..dim)
        .map(|d| {
            let mean = samples.iter().map(|s| s[d]).sum::<f64>() / n;
            samples.iter().map(|s| (s[d] - mean).powi(2)).sum::<f64>() / n
        })
        .sum()
}

fn quantize_group(
    samples: &[Vec<f64>],
    g: GroupId,
    cfg: &CodecConfig,
) -> Result<(StoredCodebook, Vec<usize>)> {
    let m = cfg.codebook_size.min(samples.len());
    let lambda = cfg.lambda_r * cfg.vq_weight * total_variance(samples);
    let trained = train_group(
        samples,
        m,
        lambda,
        cfg.ecvq_iterations,
        group_seed(cfg.seed, g),
        g,
    )?;
    let rounded = EcvqCodebook {
        codewords: trained.codebook.codewords.iter().map(|&v| f32r(v)).collect(),
        ..trained.codebook
    };
    let assignments = samples
        .par_iter()
        .map(|s| ecvq_encode(s, &rounded).map(|c| c.index))
        .collect::<Result<Vec<_>>>()?;
    let (cb, idx) = rounded.compact(&assignments);
    let mut hist = vec![0u64; cb.len()];
    idx.iter().for_each(|&j| hist[j] += 1);
    let table = FrequencyTable::from_histogram(&hist)?;
    debug!("{g}: {} codewords, lambda {lambda:.3e}", cb.len());
    Ok((
        StoredCodebook {
            dim: cb.dim,
            codewords: cb.codewords,
            table,
        },
        idx,
    ))
}

fn approx_step(q: f64, levels: u8) -> f64 {
    q * 2f64.powf(levels as f64 / 2.0)
}

fn detail_step(q: f64, level: usize) -> f64 {
    q * 2f64.powf(level as f64 / 2.0)
}

fn quantize_coefficient(v: f64, step: f64) -> Result<i64> {
    let c = (v / step).round();
    if !(c.abs() <= super::range::MAX_INT_MAGNITUDE as f64) {
        return Err(Error::Encoding("trajectory coefficient exceeds the coder range".into()));
    }
    Ok(c as i64)
}

/// Quantized trajectory codes for one Gaussian: approximation codes and
/// kept detail codes, each ordered axis-major.
fn trajectory_codes(positions: &[Vec3], h: &Header) -> Result<(Vec<i64>, Vec<i64>)> {
    let q = h.position_step;
    let mut approx = Vec::new();
    let mut detail = Vec::new();
    if h.wavelet_levels == 0 {
        for ax in 0..3 {
            for p in positions {
                approx.push(quantize_coefficient(p[ax], q)?);
            }
        }
        return Ok((approx, detail));
    }
    let levels = h.wavelet_levels as usize;
    let pyr = mask_details(&haar_forward(positions, levels)?, h.keep_levels as usize);
    let sa = approx_step(q, h.wavelet_levels);
    for ax in 0..3 {
        for a in &pyr.approx {
            approx.push(quantize_coefficient(a[ax], sa)?);
        }
        for l in levels - h.keep_levels as usize..levels {
            let sd = detail_step(q, l + 1);
            for d in &pyr.details[l] {
                detail.push(quantize_coefficient(d[ax], sd)?);
            }
        }
    }
    Ok((approx, detail))
}

fn delta_encode(rows: &[i64], row_len: usize) -> Vec<i64> {
    let mut out = Vec::with_capacity(rows.len());
    for chunk in rows.chunks(row_len.max(1)) {
        let mut prev = 0;
        for &v in chunk {
            out.push(v - prev);
            prev = v;
        }
    }
    out
}

fn delta_decode(deltas: &[i64], row_len: usize) -> Vec<i64> {
    let mut out = Vec::with_capacity(deltas.len());
    for chunk in deltas.chunks(row_len.max(1)) {
        let mut acc = 0i64;
        for &d in chunk {
            acc += d;
            out.push(acc);
        }
    }
    out
}

fn store(values: &[f64], q: Option<ScalarQuantizer>) -> Stored {
    match q {
        None => Stored::Raw(values.iter().map(|&v| f32r(v)).collect()),
        Some(q) => Stored::Codes(values.iter().map(|&v| q.code(v)).collect()),
    }
}

fn load(s: &Stored, q: Option<ScalarQuantizer>) -> Result<Vec<f64>> {
    match (s, q) {
        (Stored::Raw(v), None) => Ok(v.clone()),
        (Stored::Codes(c), Some(q)) => {
            if c.iter().any(|&c| c > q.max_code()) {
                return Err(Error::format("scalar code exceeds the quantizer range"));
            }
            Ok(c.iter().map(|&c| f32r(q.dequantize(c))).collect())
        }
        _ => Err(Error::format("opacity storage disagrees with the policy")),
    }
}

fn fit_range(cfg: &CodecConfig, field: OpacityField, values: &[f64]) -> Result<(f64, f64)> {
    if !field.quantized(&cfg.opacity_policy) {
        return Ok((0.0, 0.0));
    }
    let q = ScalarQuantizer::fit(cfg.opacity_bits, values)?;
    Ok((q.lo, q.hi))
}

/// Sorted survivors of one component: their positions in the pruned scene
/// and their SH patterns.
struct SortedComponent {
    order: Vec<u32>,
    patterns: Vec<u8>,
}

fn sorted_component(patterns: Vec<u8>) -> SortedComponent {
    let order = sort_by_pattern(&patterns);
    let patterns = order.iter().map(|&i| patterns[i as usize]).collect();
    SortedComponent { order, patterns }
}

fn pattern_counts(patterns: &[u8], k: u8) -> Vec<u32> {
    let mut c = vec![0u32; 1 << k];
    patterns.iter().for_each(|&p| c[p as usize] += 1);
    c
}

fn build_payload(
    scene: &GaussianScene,
    gmask: &PruneMask,
    shmask: &ShMask,
    cfg: &CodecConfig,
) -> Result<Payload> {
    let pruned = apply_masks(scene, gmask, shmask);
    let ns_before = scene.statics.len();
    let k = scene.max_sh_degree;
    let kept: Vec<usize> = (0..scene.len()).filter(|&i| gmask.hard[i]).collect();
    let pat: Vec<u8> = kept.iter().map(|&i| shmask.pattern(i)).collect();
    let n_static = pruned.statics.len();
    let stat = sorted_component(pat[..n_static].to_vec());
    let dynm = sorted_component(pat[n_static..].to_vec());
    let statics: Vec<&StaticGaussian> =
        stat.order.iter().map(|&i| &pruned.statics[i as usize]).collect();
    let dynamics: Vec<&DynamicGaussian> =
        dynm.order.iter().map(|&i| &pruned.dynamics[i as usize]).collect();

    let s_opacity: Vec<f64> = statics.iter().map(|g| g.opacity).collect();
    let d_opacity: Vec<f64> = dynamics.iter().map(|g| g.base_opacity).collect();
    let a_s: Vec<f64> = dynamics.iter().map(|g| g.appear_center).collect();
    let a_f: Vec<f64> = dynamics.iter().map(|g| g.vanish_center).collect();
    let b_s: Vec<f64> = dynamics.iter().map(|g| g.appear_variance).collect();
    let b_f: Vec<f64> = dynamics.iter().map(|g| g.vanish_variance).collect();
    let fields = [&s_opacity, &d_opacity, &a_s, &a_f, &b_s, &b_f];
    let mut ranges = [(0.0, 0.0); 6];
    for (f, values) in OpacityField::ALL.iter().zip(fields) {
        ranges[*f as usize] = fit_range(cfg, *f, values)?;
    }

    let header = Header {
        duration: scene.duration,
        keyframe_interval: scene.keyframe_interval,
        timestamps: scene.timestamps.clone(),
        sh_degree: k,
        static_before: ns_before,
        dynamic_before: scene.dynamics.len(),
        n_static,
        n_dynamic: dynamics.len(),
        wavelet_levels: cfg.wavelet_levels,
        keep_levels: cfg.keep_levels,
        position_step: cfg.position_step,
        policy: cfg.opacity_policy,
        opacity_bits: cfg.opacity_bits,
        ranges,
    };
    let quant = |f: OpacityField| header.quantizer(f);

    // ECVQ groups in container order.
    let mut group_samples: Vec<(GroupId, Vec<Vec<f64>>)> = Vec::new();
    for g in GroupId::all() {
        let samples: Vec<Vec<f64>> = match (g.component, g.attribute) {
            (Component::Static, Attribute::Scale) => {
                statics.iter().map(|s| s.log_scale.to_vec()).collect()
            }
            (Component::Static, Attribute::Rotation) => {
                statics.iter().map(|s| rotation_sample(s.rotation)).collect()
            }
            (Component::Static, Attribute::Dc) => statics.iter().map(|s| s.sh[0].to_vec()).collect(),
            (Component::Dynamic, Attribute::Scale) => {
                dynamics.iter().map(|s| s.log_scale.to_vec()).collect()
            }
            (Component::Dynamic, Attribute::Rotation) => dynamics
                .iter()
                .flat_map(|s| s.keyframe_rotations.iter().map(|&q| rotation_sample(q)))
                .collect(),
            (Component::Dynamic, Attribute::Dc) => {
                dynamics.iter().map(|s| s.sh[0].to_vec()).collect()
            }
            (c, a) => {
                let l = a.sh_band().expect("SH attribute");
                if l > k as usize {
                    Vec::new()
                } else {
                    let (sh, pats): (Vec<&Vec<[f64; 3]>>, &[u8]) = match c {
                        Component::Static => {
                            (statics.iter().map(|s| &s.sh).collect(), &stat.patterns)
                        }
                        Component::Dynamic => {
                            (dynamics.iter().map(|s| &s.sh).collect(), &dynm.patterns)
                        }
                    };
                    sh.iter()
                        .zip(pats)
                        .filter(|(_, &p)| p >> (l - 1) & 1 == 1)
                        .map(|(sh, _)| sh_sample(sh, l))
                        .collect()
                }
            }
        };
        group_samples.push((g, samples));
    }
    let quantized: Vec<Option<(StoredCodebook, Vec<usize>)>> = group_samples
        .par_iter()
        .map(|(g, s)| {
            if s.is_empty() {
                Ok(None)
            } else {
                quantize_group(s, *g, cfg).map(Some)
            }
        })
        .collect::<Result<_>>()?;
    let (codebooks, indices): (Vec<_>, Vec<_>) = quantized
        .into_iter()
        .map(|q| match q {
            None => (None, Vec::new()),
            Some((cb, idx)) => (Some(cb), idx),
        })
        .unzip();

    let (approx_rows, _) = header.trajectory_rows();
    let codes = dynamics
        .par_iter()
        .map(|g| trajectory_codes(&g.keyframe_positions, &header))
        .collect::<Result<Vec<_>>>()?;
    let approx_abs: Vec<i64> = codes.iter().flat_map(|c| c.0.iter().copied()).collect();
    let approx = delta_encode(&approx_abs, approx_rows);
    let detail: Vec<i64> = codes.iter().flat_map(|c| c.1.iter().copied()).collect();
    let (approx_table, detail_table) = if dynamics.is_empty() {
        (None, None)
    } else {
        (Some(category_table(&approx)?), Some(category_table(&detail)?))
    };

    Ok(Payload {
        gaussian_mask: gmask.hard.clone(),
        pattern_counts: [pattern_counts(&stat.patterns, k), pattern_counts(&dynm.patterns, k)],
        sort_idx: [stat.order.clone(), dynm.order.clone()],
        codebooks,
        indices,
        approx,
        detail,
        approx_table,
        detail_table,
        mu_disp: statics.iter().map(|s| s.displacement.map(f32r)).collect(),
        mu_0: statics.iter().map(|s| s.pivot.map(f32r)).collect(),
        appear_centers: store(&a_s, quant(OpacityField::AppearCenter)?),
        vanish_centers: store(&a_f, quant(OpacityField::VanishCenter)?),
        appear_variances: store(&b_s, quant(OpacityField::AppearVariance)?),
        vanish_variances: store(&b_f, quant(OpacityField::VanishVariance)?),
        static_opacity: store(&s_opacity, quant(OpacityField::StaticOpacity)?),
        dynamic_opacity: store(&d_opacity, quant(OpacityField::DynamicOpacity)?),
        header,
    })
}

fn lookup<'a>(p: &'a Payload, g: GroupId) -> Result<(Option<&'a StoredCodebook>, &'a [usize])> {
    let cb = codebook_of(p, g);
    let idx = indices_of(p, g);
    if let Some(cb) = cb {
        if idx.iter().any(|&j| j >= cb.len()) {
            return Err(Error::corrupt("indexes", format!("index outside the {g} codebook")));
        }
    } else if !idx.is_empty() {
        return Err(Error::corrupt("codebooks", format!("missing codebook for {g}")));
    }
    Ok((cb, idx))
}

fn vec3(c: &[f64]) -> Vec3 {
    [c[0], c[1], c[2]]
}

fn rotation_from(c: &[f64]) -> Quat {
    let q = Quat::from_array([c[0], c[1], c[2], c[3]]);
    if q.norm() < 1e-12 {
        return Quat::IDENTITY;
    }
    Quat::from_array(q.normalized().to_array().map(f32r))
}

/// SH coefficients of the sorted Gaussians of one component.
fn sh_of(p: &Payload, c: Component, patterns: &[u8]) -> Result<Vec<Vec<[f64; 3]>>> {
    let k = p.header.sh_degree;
    let (dc_cb, dc_idx) = lookup(p, GroupId::new(Attribute::Dc, c))?;
    let mut out = vec![vec![[0.0; 3]; sh_len(k)]; patterns.len()];
    if let Some(cb) = dc_cb {
        for (sh, &j) in out.iter_mut().zip(dc_idx) {
            sh[0] = vec3(cb.codeword(j));
        }
    }
    for attr in [Attribute::Sh1, Attribute::Sh2, Attribute::Sh3] {
        let l = attr.sh_band().expect("SH attribute");
        if l > k as usize {
            continue;
        }
        let (cb, idx) = lookup(p, GroupId::new(attr, c))?;
        let mut next = idx.iter();
        for (sh, &pat) in out.iter_mut().zip(patterns) {
            if pat >> (l - 1) & 1 == 0 {
                continue;
            }
            let (Some(cb), Some(&j)) = (cb, next.next()) else {
                return Err(Error::corrupt("indexes", "SH index stream too short"));
            };
            for (dst, src) in sh[sh_band(l)].iter_mut().zip(cb.codeword(j).chunks_exact(3)) {
                *dst = vec3(src);
            }
        }
    }
    Ok(out)
}

fn trajectories(p: &Payload) -> Result<Vec<Vec<Vec3>>> {
    let h = &p.header;
    let n = h.n_dynamic;
    let kf = h.keyframes();
    let (ar, dr) = h.trajectory_rows();
    if p.approx.len() != n * 3 * ar || p.detail.len() != n * 3 * dr {
        return Err(Error::corrupt("f_masked", "coefficient count mismatch"));
    }
    let approx = delta_decode(&p.approx, ar);
    let q = h.position_step;
    (0..n)
        .map(|i| {
            let a = &approx[i * 3 * ar..(i + 1) * 3 * ar];
            let d = &p.detail[i * 3 * dr..(i + 1) * 3 * dr];
            let positions = if h.wavelet_levels == 0 {
                (0..kf)
                    .map(|t| [0, 1, 2].map(|ax| a[ax * ar + t] as f64 * q))
                    .collect()
            } else {
                let levels = h.wavelet_levels as usize;
                let kept = h.keep_levels as usize;
                let sa = approx_step(q, h.wavelet_levels);
                let mut pyr = WaveletPyramid {
                    levels,
                    approx: vec![[0.0; 3]; ar],
                    details: (1..=levels)
                        .map(|l| vec![[0.0; 3]; (ar << levels) >> l])
                        .collect(),
                    discarded: (0..levels).map(|l| l < levels - kept).collect(),
                    original_length: kf,
                };
                let per_axis = dr;
                for ax in 0..3 {
                    for (r, v) in pyr.approx.iter_mut().enumerate() {
                        v[ax] = a[ax * ar + r] as f64 * sa;
                    }
                    let mut pos = ax * per_axis;
                    for l in levels - kept..levels {
                        let sd = detail_step(q, l + 1);
                        for v in pyr.details[l].iter_mut() {
                            v[ax] = d[pos] as f64 * sd;
                            pos += 1;
                        }
                    }
                }
                haar_inverse(&pyr)?
            };
            Ok(positions.into_iter().map(|v: Vec3| v.map(f32r)).collect())
        })
        .collect()
}

/// Scene described by a payload, Gaussians in their original order.
pub fn reconstruct(p: &Payload) -> Result<GaussianScene> {
    let h = &p.header;
    let kf = h.keyframes();
    let mut scene = GaussianScene::empty(h.duration, h.keyframe_interval, h.timestamps.clone(), h.sh_degree);
    let q = |f: OpacityField| h.quantizer(f);

    // statics
    let sp = p.patterns(Component::Static);
    let ssh = sh_of(p, Component::Static, &sp)?;
    let (scale_cb, scale_idx) = lookup(p, GroupId::new(Attribute::Scale, Component::Static))?;
    let (rot_cb, rot_idx) = lookup(p, GroupId::new(Attribute::Rotation, Component::Static))?;
    let opacity = load(&p.static_opacity, q(OpacityField::StaticOpacity)?)?;
    let n_s = h.n_static;
    if scale_idx.len() != n_s || rot_idx.len() != n_s || opacity.len() != n_s || p.mu_0.len() != n_s {
        return Err(Error::corrupt("indexes", "static attribute counts disagree"));
    }
    let mut statics: Vec<Option<StaticGaussian>> = vec![None; n_s];
    for (s, sh) in ssh.into_iter().enumerate() {
        let g = StaticGaussian {
            pivot: p.mu_0[s],
            displacement: p.mu_disp[s],
            log_scale: vec3(scale_cb.expect("non-empty").codeword(scale_idx[s])),
            rotation: rotation_from(rot_cb.expect("non-empty").codeword(rot_idx[s])),
            opacity: opacity[s],
            sh,
        };
        statics[p.sort_idx[0][s] as usize] = Some(g);
    }
    scene.statics = statics.into_iter().map(|g| g.expect("permutation")).collect();

    // dynamics
    let n_d = h.n_dynamic;
    let dp = p.patterns(Component::Dynamic);
    let dsh = sh_of(p, Component::Dynamic, &dp)?;
    let (scale_cb, scale_idx) = lookup(p, GroupId::new(Attribute::Scale, Component::Dynamic))?;
    let (rot_cb, rot_idx) = lookup(p, GroupId::new(Attribute::Rotation, Component::Dynamic))?;
    let opacity = load(&p.dynamic_opacity, q(OpacityField::DynamicOpacity)?)?;
    let a_s = load(&p.appear_centers, q(OpacityField::AppearCenter)?)?;
    let a_f = load(&p.vanish_centers, q(OpacityField::VanishCenter)?)?;
    let b_s = load(&p.appear_variances, q(OpacityField::AppearVariance)?)?;
    let b_f = load(&p.vanish_variances, q(OpacityField::VanishVariance)?)?;
    if scale_idx.len() != n_d || rot_idx.len() != n_d * kf || opacity.len() != n_d {
        return Err(Error::corrupt("indexes", "dynamic attribute counts disagree"));
    }
    let traj = trajectories(p)?;
    let mut dynamics: Vec<Option<DynamicGaussian>> = vec![None; n_d];
    for (s, (sh, positions)) in dsh.into_iter().zip(traj).enumerate() {
        let rcb = rot_cb.expect("non-empty");
        let g = DynamicGaussian {
            keyframe_positions: positions,
            keyframe_rotations: rot_idx[s * kf..(s + 1) * kf]
                .iter()
                .map(|&j| rotation_from(rcb.codeword(j)))
                .collect(),
            log_scale: vec3(scale_cb.expect("non-empty").codeword(scale_idx[s])),
            base_opacity: opacity[s],
            appear_center: a_s[s],
            vanish_center: a_f[s].max(a_s[s]),
            appear_variance: b_s[s],
            vanish_variance: b_f[s],
            sh,
        };
        dynamics[p.sort_idx[1][s] as usize] = Some(g);
    }
    scene.dynamics = dynamics.into_iter().map(|g| g.expect("permutation")).collect();
    scene
        .validate()
        .map_err(|e| Error::corrupt("payload", format!("decoded scene is invalid: {e}")))?;
    Ok(scene)
}

/// Decoded payload view: the scene plus component counts.
pub fn inspect_payload(data: &[u8]) -> Result<(Payload, GaussianScene)> {
    let p = read_container(data)?;
    let s = reconstruct(&p)?;
    Ok((p, s))
}
