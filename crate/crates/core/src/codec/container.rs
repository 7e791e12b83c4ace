//! `.g4c` container layout.
//!
//! ```text
//! magic         4 bytes  "G4DC"
//! version       u16
//! header_len    u32
//! header        header_len bytes
//! header_crc    u32      CRC32 of the header bytes
//! section_count u8       12
//! table         section_count x (id u8, len u32, crc32 u32)
//! payloads      concatenated in table order
//! ```
//!
//! Header fields, in order: duration f64, keyframe interval u32, frame
//! count u32, frame times f64, SH degree u8, static/dynamic counts before
//! pruning u32 x2, after pruning u32 x2, keyframe count u32, wavelet levels
//! u8, kept detail levels u8, position step f64, opacity policy bits u8,
//! opacity bit depth u8, six `(lo, hi)` f64 pairs for static opacity,
//! dynamic opacity, appear center, vanish center, appear variance, vanish
//! variance (zero when unused).
//!
//! Everything after pruning is stored per component (statics, then
//! dynamics) in SH-pattern order: Gaussians are stably sorted by the bit
//! pattern of surviving SH degrees, `sh_mask` holds the run length of every
//! pattern and `sort_idx` maps sorted positions back to the original order
//! with a fixed-width index.
//!
//! Sections:
//!
//! * `gaussian_mask`: keep bit per input Gaussian, MSB first.
//! * `sh_mask`: `u32` count per pattern `0..2^k`, statics then dynamics.
//! * `sort_idx`: packed indices, statics then dynamics, each byte aligned.
//! * `indexes`: one range-coded stream with every ECVQ index, groups in
//!   static-then-dynamic, scale/rotation/dc/sh1/sh2/sh3 order; dynamic
//!   rotations carry one index per keyframe.
//! * `f_masked`: range-coded trajectory coefficients, category + mantissa.
//!   All approximation values (delta coded along time) come first, then
//!   kept detail values; per Gaussian, per axis.
//! * `mu_disp`, `mu_0`: static displacement and pivot, f32 x 3.
//! * `codebooks`: per group `u16` size then codewords as f32.
//! * `logits`: `u16` frequencies per codeword for every non-empty group,
//!   then the two 33-entry trajectory category tables when dynamics exist.
//! * `opacity_centers`: appear then vanish centers, packed codes or f32.
//! * `beta_var`: appear then vanish variances, f32 unless the policy
//!   quantizes them.
//! * `base_opacities`: statics then dynamics, packed codes or f32.

use crate::bytes::{index_width, pack_bits, pack_fixed, unpack_bits, unpack_fixed, ByteReader, ByteWriter};
use crate::error::{Error, Result};
use crate::model::{keyframe_count, Vec3};
use crate::quant::{Attribute, Component, GroupId, OpacityPolicy, ScalarQuantizer};
use crate::wavelet::padded_length;

use super::range::{
    decode_int, encode_int, FrequencyTable, RangeDecoder, RangeEncoder, CATEGORY_SYMBOLS,
};

pub const CONTAINER_MAGIC: &[u8; 4] = b"G4DC";
pub const CONTAINER_VERSION: u16 = 1;

/// Section names in storage order.
pub const SECTIONS: [&str; 12] = [
    "gaussian_mask",
    "sh_mask",
    "sort_idx",
    "indexes",
    "f_masked",
    "mu_disp",
    "mu_0",
    "codebooks",
    "logits",
    "opacity_centers",
    "beta_var",
    "base_opacities",
];

/// Opacity-related scalars in header order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OpacityField {
    StaticOpacity,
    DynamicOpacity,
    AppearCenter,
    VanishCenter,
    AppearVariance,
    VanishVariance,
}

impl OpacityField {
    pub const ALL: [OpacityField; 6] = [
        OpacityField::StaticOpacity,
        OpacityField::DynamicOpacity,
        OpacityField::AppearCenter,
        OpacityField::VanishCenter,
        OpacityField::AppearVariance,
        OpacityField::VanishVariance,
    ];

    pub fn quantized(self, p: &OpacityPolicy) -> bool {
        match self {
            OpacityField::StaticOpacity => p.static_opacity,
            OpacityField::DynamicOpacity => p.dynamic_opacity,
            OpacityField::AppearCenter | OpacityField::VanishCenter => p.centers,
            OpacityField::AppearVariance | OpacityField::VanishVariance => p.variances,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Header {
    pub duration: f64,
    pub keyframe_interval: u32,
    pub timestamps: Vec<f64>,
    pub sh_degree: u8,
    pub static_before: usize,
    pub dynamic_before: usize,
    pub n_static: usize,
    pub n_dynamic: usize,
    pub wavelet_levels: u8,
    pub keep_levels: u8,
    pub position_step: f64,
    pub policy: OpacityPolicy,
    pub opacity_bits: u8,
    pub ranges: [(f64, f64); 6],
}

impl Header {
    pub fn keyframes(&self) -> usize {
        keyframe_count(self.duration, self.keyframe_interval)
    }

    pub fn count(&self, c: Component) -> usize {
        match c {
            Component::Static => self.n_static,
            Component::Dynamic => self.n_dynamic,
        }
    }

    /// Quantizer for a field, `None` when the field is stored raw.
    pub fn quantizer(&self, f: OpacityField) -> Result<Option<ScalarQuantizer>> {
        if !f.quantized(&self.policy) {
            return Ok(None);
        }
        let (lo, hi) = self.ranges[f as usize];
        ScalarQuantizer::new(self.opacity_bits, lo, hi).map(Some)
    }

    /// Stored coefficient rows per axis: approximation rows and kept detail rows.
    pub fn trajectory_rows(&self) -> (usize, usize) {
        let k = self.keyframes();
        let levels = self.wavelet_levels as usize;
        if levels == 0 {
            return (k, 0);
        }
        let padded = padded_length(k, levels);
        let kept = (self.keep_levels as usize).min(levels);
        let detail: usize = (levels - kept + 1..=levels).map(|l| padded >> l).sum();
        (padded >> levels, detail)
    }

    fn write(&self, w: &mut ByteWriter) {
        w.f64(self.duration);
        w.u32(self.keyframe_interval);
        w.u32(self.timestamps.len() as u32);
        self.timestamps.iter().for_each(|&t| w.f64(t));
        w.u8(self.sh_degree);
        for n in [self.static_before, self.dynamic_before, self.n_static, self.n_dynamic] {
            w.u32(n as u32);
        }
        w.u32(self.keyframes() as u32);
        w.u8(self.wavelet_levels);
        w.u8(self.keep_levels);
        w.f64(self.position_step);
        w.u8(self.policy.bits());
        w.u8(self.opacity_bits);
        for (lo, hi) in self.ranges {
            w.f64(lo);
            w.f64(hi);
        }
    }

    fn read(r: &mut ByteReader) -> Result<Header> {
        let duration = r.f64()?;
        let keyframe_interval = r.u32()?;
        let n_frames = r.u32()? as usize;
        if n_frames > r.remaining() / 8 {
            return Err(Error::format("frame count exceeds header size"));
        }
        let timestamps = (0..n_frames).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        let sh_degree = r.u8()?;
        let static_before = r.u32()? as usize;
        let dynamic_before = r.u32()? as usize;
        let n_static = r.u32()? as usize;
        let n_dynamic = r.u32()? as usize;
        let n_kf = r.u32()? as usize;
        let wavelet_levels = r.u8()?;
        let keep_levels = r.u8()?;
        let position_step = r.f64()?;
        let policy = OpacityPolicy::from_bits(r.u8()?)
            .ok_or_else(|| Error::format("unknown opacity policy bits"))?;
        let opacity_bits = r.u8()?;
        let mut ranges = [(0.0, 0.0); 6];
        for range in ranges.iter_mut() {
            *range = (r.f64()?, r.f64()?);
        }
        if !(duration > 0.0 && duration.is_finite()) || keyframe_interval == 0 {
            return Err(Error::format("invalid timing in header"));
        }
        if sh_degree > 3 || wavelet_levels > 8 || keep_levels > wavelet_levels {
            return Err(Error::format("header field out of range"));
        }
        if n_static > static_before || n_dynamic > dynamic_before {
            return Err(Error::format("pruned counts exceed input counts"));
        }
        if !(position_step > 0.0 && position_step.is_finite()) {
            return Err(Error::format("invalid position step"));
        }
        let h = Header {
            duration,
            keyframe_interval,
            timestamps,
            sh_degree,
            static_before,
            dynamic_before,
            n_static,
            n_dynamic,
            wavelet_levels,
            keep_levels,
            position_step,
            policy,
            opacity_bits,
            ranges,
        };
        if n_kf != h.keyframes() {
            return Err(Error::format("keyframe count disagrees with timing"));
        }
        for f in OpacityField::ALL {
            h.quantizer(f).map_err(|e| Error::format(e.to_string()))?;
        }
        Ok(h)
    }
}

/// Raw single-precision values or scalar codes.
#[derive(Clone, Debug, PartialEq)]
pub enum Stored {
    Raw(Vec<f64>),
    Codes(Vec<u32>),
}

impl Stored {
    pub fn len(&self) -> usize {
        match self {
            Stored::Raw(v) => v.len(),
            Stored::Codes(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn write(&self, w: &mut ByteWriter, bits: u8) {
        match self {
            Stored::Raw(v) => v.iter().for_each(|&x| w.f32(x)),
            Stored::Codes(c) => w.bytes(&pack_fixed(c, bits as u32)),
        }
    }

    fn read(r: &mut ByteReader, n: usize, quantized: bool, bits: u8) -> Result<Stored> {
        if quantized {
            let len = (n * bits as usize).div_ceil(8);
            let bytes = r.take(len)?;
            Ok(Stored::Codes(unpack_fixed(bytes, n, bits as u32)))
        } else {
            Ok(Stored::Raw((0..n).map(|_| r.f32()).collect::<Result<_>>()?))
        }
    }
}

/// Codewords (single precision) and their coding table.
#[derive(Clone, Debug, PartialEq)]
pub struct StoredCodebook {
    pub dim: usize,
    pub codewords: Vec<f64>,
    pub table: FrequencyTable,
}

impl StoredCodebook {
    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn codeword(&self, j: usize) -> &[f64] {
        &self.codewords[j * self.dim..(j + 1) * self.dim]
    }
}

/// Everything a container stores, in storage order.
#[derive(Clone, Debug, PartialEq)]
pub struct Payload {
    pub header: Header,
    pub gaussian_mask: Vec<bool>,
    /// Run length per SH pattern, per component.
    pub pattern_counts: [Vec<u32>; 2],
    /// Original (post-pruning) index of each sorted Gaussian, per component.
    pub sort_idx: [Vec<u32>; 2],
    /// One entry per group in [`GroupId::all`] order.
    pub codebooks: Vec<Option<StoredCodebook>>,
    pub indices: Vec<Vec<usize>>,
    /// Quantized approximation values, delta coded along time.
    pub approx: Vec<i64>,
    pub detail: Vec<i64>,
    pub approx_table: Option<FrequencyTable>,
    pub detail_table: Option<FrequencyTable>,
    pub mu_disp: Vec<Vec3>,
    pub mu_0: Vec<Vec3>,
    pub appear_centers: Stored,
    pub vanish_centers: Stored,
    pub appear_variances: Stored,
    pub vanish_variances: Stored,
    pub static_opacity: Stored,
    pub dynamic_opacity: Stored,
}

pub(crate) fn component_index(c: Component) -> usize {
    match c {
        Component::Static => 0,
        Component::Dynamic => 1,
    }
}

impl Payload {
    /// SH pattern of every sorted Gaussian of a component.
    pub fn patterns(&self, c: Component) -> Vec<u8> {
        self.pattern_counts[component_index(c)]
            .iter()
            .enumerate()
            .flat_map(|(p, &n)| std::iter::repeat_n(p as u8, n as usize))
            .collect()
    }

    /// Number of ECVQ indices the group carries.
    pub fn group_samples(&self, g: GroupId) -> usize {
        let h = &self.header;
        let n = h.count(g.component);
        match g.attribute {
            Attribute::Scale | Attribute::Dc => n,
            Attribute::Rotation => match g.component {
                Component::Static => n,
                Component::Dynamic => n * h.keyframes(),
            },
            a => {
                let l = a.sh_band().expect("SH attribute");
                if l > h.sh_degree as usize {
                    return 0;
                }
                self.pattern_counts[component_index(g.component)]
                    .iter()
                    .enumerate()
                    .filter(|(p, _)| p >> (l - 1) & 1 == 1)
                    .map(|(_, &c)| c as usize)
                    .sum()
            }
        }
    }
}

fn group_position(g: GroupId) -> usize {
    GroupId::all().position(|x| x == g).expect("known group")
}

pub(crate) fn codebook_of(p: &Payload, g: GroupId) -> Option<&StoredCodebook> {
    p.codebooks[group_position(g)].as_ref()
}

pub(crate) fn indices_of(p: &Payload, g: GroupId) -> &[usize] {
    &p.indices[group_position(g)]
}

/// Serialized sections in storage order.
pub fn write_sections(p: &Payload) -> Result<Vec<Vec<u8>>> {
    let h = &p.header;
    let mut out = Vec::with_capacity(SECTIONS.len());

    out.push(pack_bits(p.gaussian_mask.iter().copied()));

    let mut w = ByteWriter::new();
    for counts in &p.pattern_counts {
        counts.iter().for_each(|&c| w.u32(c));
    }
    out.push(w.buf);

    let mut w = ByteWriter::new();
    for (perm, n) in p.sort_idx.iter().zip([h.n_static, h.n_dynamic]) {
        w.bytes(&pack_fixed(perm, index_width(n)));
    }
    out.push(w.buf);

    let mut enc = RangeEncoder::new();
    for (g, (cb, idx)) in GroupId::all().zip(p.codebooks.iter().zip(&p.indices)) {
        if idx.is_empty() {
            continue;
        }
        let cb = cb
            .as_ref()
            .ok_or_else(|| Error::Encoding(format!("indices without a codebook for {g}")))?;
        for &i in idx {
            enc.encode(&cb.table, i)?;
        }
    }
    out.push(enc.finish());

    let mut enc = RangeEncoder::new();
    if let (Some(at), Some(dt)) = (&p.approx_table, &p.detail_table) {
        for &v in &p.approx {
            encode_int(&mut enc, at, v)?;
        }
        for &v in &p.detail {
            encode_int(&mut enc, dt, v)?;
        }
    }
    out.push(enc.finish());

    for block in [&p.mu_disp, &p.mu_0] {
        let mut w = ByteWriter::new();
        block.iter().flatten().for_each(|&x| w.f32(x));
        out.push(w.buf);
    }

    let mut w = ByteWriter::new();
    for cb in &p.codebooks {
        match cb {
            None => w.u16(0),
            Some(cb) => {
                w.u16(cb.len() as u16);
                cb.codewords.iter().for_each(|&x| w.f32(x));
            }
        }
    }
    out.push(w.buf);

    let mut w = ByteWriter::new();
    for cb in p.codebooks.iter().flatten() {
        cb.table.write(&mut w);
    }
    if let (Some(at), Some(dt)) = (&p.approx_table, &p.detail_table) {
        at.write(&mut w);
        dt.write(&mut w);
    }
    out.push(w.buf);

    let bits = h.opacity_bits;
    let mut w = ByteWriter::new();
    p.appear_centers.write(&mut w, bits);
    p.vanish_centers.write(&mut w, bits);
    out.push(w.buf);

    let mut w = ByteWriter::new();
    p.appear_variances.write(&mut w, bits);
    p.vanish_variances.write(&mut w, bits);
    out.push(w.buf);

    let mut w = ByteWriter::new();
    p.static_opacity.write(&mut w, bits);
    p.dynamic_opacity.write(&mut w, bits);
    out.push(w.buf);

    Ok(out)
}

/// Full container bytes and the per-section payload sizes.
pub fn write_container(p: &Payload) -> Result<(Vec<u8>, Vec<usize>)> {
    let sections = write_sections(p)?;
    let mut hw = ByteWriter::new();
    p.header.write(&mut hw);
    let mut w = ByteWriter::new();
    w.bytes(CONTAINER_MAGIC);
    w.u16(CONTAINER_VERSION);
    w.u32(hw.len() as u32);
    w.bytes(&hw.buf);
    w.u32(crc32fast::hash(&hw.buf));
    w.u8(sections.len() as u8);
    for (id, s) in sections.iter().enumerate() {
        w.u8(id as u8);
        w.u32(s.len() as u32);
        w.u32(crc32fast::hash(s));
    }
    for s in &sections {
        w.bytes(s);
    }
    Ok((w.buf, sections.iter().map(Vec::len).collect()))
}

/// Byte layout of a container: header size and section lengths.
#[derive(Clone, Debug, PartialEq)]
pub struct Layout {
    /// Bytes before the first payload (magic, header, table).
    pub overhead: usize,
    pub sections: Vec<usize>,
}

/// Validate framing and checksums; returns the header, section slices and layout.
pub fn split_container(data: &[u8]) -> Result<(Header, Vec<&[u8]>, Layout)> {
    let mut r = ByteReader::new(data);
    let magic = r
        .take(4)
        .map_err(|_| Error::format("file too short for a container"))?;
    if magic != CONTAINER_MAGIC {
        return Err(Error::format("not a .g4c container (bad magic)"));
    }
    let version = r.u16().map_err(|e| e.in_section("header"))?;
    if version != CONTAINER_VERSION {
        return Err(Error::format(format!(
            "unsupported container version {version} (expected {CONTAINER_VERSION})"
        )));
    }
    let header_len = r.u32().map_err(|e| e.in_section("header"))? as usize;
    let header_bytes = r.take(header_len).map_err(|e| e.in_section("header"))?;
    let crc = r.u32().map_err(|e| e.in_section("header"))?;
    if crc32fast::hash(header_bytes) != crc {
        return Err(Error::corrupt("header", "checksum mismatch"));
    }
    let mut hr = ByteReader::new(header_bytes);
    let header = Header::read(&mut hr).map_err(|e| e.in_section("header"))?;
    hr.finish("header").map_err(|e| e.in_section("header"))?;

    let count = r.u8().map_err(|e| e.in_section("section table"))? as usize;
    if count != SECTIONS.len() {
        return Err(Error::corrupt(
            "section table",
            format!("{count} sections, expected {}", SECTIONS.len()),
        ));
    }
    let mut entries = Vec::with_capacity(count);
    for expected in 0..count {
        let id = r.u8().map_err(|e| e.in_section("section table"))? as usize;
        let len = r.u32().map_err(|e| e.in_section("section table"))? as usize;
        let crc = r.u32().map_err(|e| e.in_section("section table"))?;
        if id != expected {
            return Err(Error::corrupt("section table", format!("unexpected section id {id}")));
        }
        entries.push((len, crc));
    }
    let overhead = r.position();
    let total: usize = entries.iter().map(|e| e.0).sum();
    if total != r.remaining() {
        return Err(Error::corrupt(
            "section table",
            format!(
                "section lengths sum to {total} bytes but {} remain",
                r.remaining()
            ),
        ));
    }
    let mut slices = Vec::with_capacity(count);
    for (id, &(len, crc)) in entries.iter().enumerate() {
        let s = r.take(len).map_err(|e| e.in_section(SECTIONS[id]))?;
        if crc32fast::hash(s) != crc {
            return Err(Error::corrupt(SECTIONS[id], "checksum mismatch"));
        }
        slices.push(s);
    }
    let layout = Layout {
        overhead,
        sections: entries.iter().map(|e| e.0).collect(),
    };
    Ok((header, slices, layout))
}

fn section<T>(name: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    f().map_err(|e| e.in_section(name))
}

fn finish(r: &ByteReader, name: &str) -> Result<()> {
    r.finish(name)
}

/// Parse a container into its payload.
pub fn read_container(data: &[u8]) -> Result<Payload> {
    let (header, s, _) = split_container(data)?;
    let h = &header;
    let n_total = h.static_before + h.dynamic_before;

    let gaussian_mask = section("gaussian_mask", || {
        if s[0].len() != n_total.div_ceil(8) {
            return Err(Error::format("mask length does not match the Gaussian count"));
        }
        let m = unpack_bits(s[0], n_total);
        let kept_static = m[..h.static_before].iter().filter(|&&b| b).count();
        let kept_dynamic = m[h.static_before..].iter().filter(|&&b| b).count();
        if kept_static != h.n_static || kept_dynamic != h.n_dynamic {
            return Err(Error::format("mask disagrees with the kept counts"));
        }
        Ok(m)
    })?;

    let patterns = 1usize << h.sh_degree;
    let pattern_counts = section("sh_mask", || {
        let mut r = ByteReader::new(s[1]);
        let mut out = [Vec::new(), Vec::new()];
        for (c, n) in out.iter_mut().zip([h.n_static, h.n_dynamic]) {
            *c = (0..patterns).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
            if c.iter().map(|&v| v as usize).sum::<usize>() != n {
                return Err(Error::format("pattern counts do not add up"));
            }
        }
        finish(&r, "sh_mask")?;
        Ok(out)
    })?;

    let sort_idx = section("sort_idx", || {
        let mut r = ByteReader::new(s[2]);
        let mut out = [Vec::new(), Vec::new()];
        for (perm, n) in out.iter_mut().zip([h.n_static, h.n_dynamic]) {
            let w = index_width(n);
            let bytes = r.take((n * w as usize).div_ceil(8))?;
            *perm = unpack_fixed(bytes, n, w);
            let mut seen = vec![false; n];
            for &i in perm.iter() {
                let i = i as usize;
                if i >= n || seen[i] {
                    return Err(Error::format("sort indices are not a permutation"));
                }
                seen[i] = true;
            }
        }
        finish(&r, "sort_idx")?;
        Ok(out)
    })?;

    let codebooks = section("codebooks", || {
        let mut r = ByteReader::new(s[7]);
        let mut out = Vec::new();
        for g in GroupId::all() {
            let m = r.u16()? as usize;
            if m == 0 {
                out.push(None);
                continue;
            }
            let dim = g.attribute.dim();
            let codewords = (0..m * dim).map(|_| r.f32()).collect::<Result<Vec<_>>>()?;
            out.push(Some((dim, codewords)));
        }
        finish(&r, "codebooks")?;
        Ok(out)
    })?;

    let (codebooks, approx_table, detail_table) = section("logits", || {
        let mut r = ByteReader::new(s[8]);
        let mut books = Vec::new();
        for cb in codebooks {
            books.push(match cb {
                None => None,
                Some((dim, codewords)) => {
                    let m = codewords.len() / dim;
                    Some(StoredCodebook {
                        dim,
                        codewords,
                        table: FrequencyTable::read(&mut r, m)?,
                    })
                }
            });
        }
        let tables = if h.n_dynamic > 0 {
            (
                Some(FrequencyTable::read(&mut r, CATEGORY_SYMBOLS)?),
                Some(FrequencyTable::read(&mut r, CATEGORY_SYMBOLS)?),
            )
        } else {
            (None, None)
        };
        finish(&r, "logits")?;
        Ok((books, tables.0, tables.1))
    })?;

    let mut payload = Payload {
        header: header.clone(),
        gaussian_mask,
        pattern_counts,
        sort_idx,
        codebooks,
        indices: Vec::new(),
        approx: Vec::new(),
        detail: Vec::new(),
        approx_table,
        detail_table,
        mu_disp: Vec::new(),
        mu_0: Vec::new(),
        appear_centers: Stored::Raw(Vec::new()),
        vanish_centers: Stored::Raw(Vec::new()),
        appear_variances: Stored::Raw(Vec::new()),
        vanish_variances: Stored::Raw(Vec::new()),
        static_opacity: Stored::Raw(Vec::new()),
        dynamic_opacity: Stored::Raw(Vec::new()),
    };

    payload.indices = section("indexes", || {
        let mut dec = RangeDecoder::new(s[3]);
        let mut out = Vec::new();
        for (pos, g) in GroupId::all().enumerate() {
            let n = payload.group_samples(g);
            if n == 0 {
                out.push(Vec::new());
                continue;
            }
            let cb = payload.codebooks[pos]
                .as_ref()
                .ok_or_else(|| Error::format(format!("missing codebook for {g}")))?;
            if cb.dim != g.attribute.dim() {
                return Err(Error::format(format!("codebook dimension mismatch for {g}")));
            }
            out.push((0..n).map(|_| dec.decode(&cb.table)).collect::<Result<Vec<_>>>()?);
        }
        dec.finish()?;
        Ok(out)
    })?;

    let (approx_rows, detail_rows) = h.trajectory_rows();
    (payload.approx, payload.detail) = section("f_masked", || {
        let mut dec = RangeDecoder::new(s[4]);
        let (mut a, mut d) = (Vec::new(), Vec::new());
        if let (Some(at), Some(dt)) = (&payload.approx_table, &payload.detail_table) {
            for _ in 0..h.n_dynamic * 3 * approx_rows {
                a.push(decode_int(&mut dec, at)?);
            }
            for _ in 0..h.n_dynamic * 3 * detail_rows {
                d.push(decode_int(&mut dec, dt)?);
            }
        }
        dec.finish()?;
        Ok((a, d))
    })?;

    let read_points = |name: &str, bytes: &[u8]| {
        section(name, || {
            let mut r = ByteReader::new(bytes);
            let pts = (0..h.n_static)
                .map(|_| Ok([r.f32()?, r.f32()?, r.f32()?]))
                .collect::<Result<Vec<Vec3>>>()?;
            finish(&r, name)?;
            Ok(pts)
        })
    };
    payload.mu_disp = read_points("mu_disp", s[5])?;
    payload.mu_0 = read_points("mu_0", s[6])?;

    let bits = h.opacity_bits;
    let q = |f: OpacityField| f.quantized(&h.policy);
    (payload.appear_centers, payload.vanish_centers) = section("opacity_centers", || {
        let mut r = ByteReader::new(s[9]);
        let a = Stored::read(&mut r, h.n_dynamic, q(OpacityField::AppearCenter), bits)?;
        let v = Stored::read(&mut r, h.n_dynamic, q(OpacityField::VanishCenter), bits)?;
        finish(&r, "opacity_centers")?;
        Ok((a, v))
    })?;
    (payload.appear_variances, payload.vanish_variances) = section("beta_var", || {
        let mut r = ByteReader::new(s[10]);
        let a = Stored::read(&mut r, h.n_dynamic, q(OpacityField::AppearVariance), bits)?;
        let v = Stored::read(&mut r, h.n_dynamic, q(OpacityField::VanishVariance), bits)?;
        finish(&r, "beta_var")?;
        Ok((a, v))
    })?;
    (payload.static_opacity, payload.dynamic_opacity) = section("base_opacities", || {
        let mut r = ByteReader::new(s[11]);
        let a = Stored::read(&mut r, h.n_static, q(OpacityField::StaticOpacity), bits)?;
        let v = Stored::read(&mut r, h.n_dynamic, q(OpacityField::DynamicOpacity), bits)?;
        finish(&r, "base_opacities")?;
        Ok((a, v))
    })?;
    Ok(payload)
}
