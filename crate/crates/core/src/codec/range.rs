//! Static-model range coder with carry propagation (LZMA style) and a
//! category/mantissa coder for signed integers.
//!
//! Standalone streams from [`range_encode`] are `[crc32 of coder bytes, u32 LE][coder bytes]`.
//! The coder emits exactly as many bytes as the decoder consumes, so a
//! truncated or padded stream is always detected.

use crate::bytes::{ByteReader, ByteWriter};
use crate::error::{Error, Result};

/// Frequencies sum to `1 << PROB_BITS`.
pub const PROB_BITS: u32 = 15;
pub const PROB_TOTAL: u32 = 1 << PROB_BITS;
const TOP: u32 = 1 << 24;

/// Quantized symbol frequencies with cumulative lookup.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrequencyTable {
    freqs: Vec<u32>,
    cum: Vec<u32>,
}

impl FrequencyTable {
    /// Counts summing to [`PROB_TOTAL`] exactly.
    pub fn from_counts(counts: &[u32]) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::format("empty frequency table"));
        }
        let mut cum = Vec::with_capacity(counts.len() + 1);
        let mut acc = 0u32;
        cum.push(0);
        for &c in counts {
            acc = acc
                .checked_add(c)
                .ok_or_else(|| Error::format("frequency overflow"))?;
            cum.push(acc);
        }
        if acc != PROB_TOTAL {
            return Err(Error::format(format!(
                "frequencies sum to {acc}, expected {PROB_TOTAL}"
            )));
        }
        Ok(FrequencyTable {
            freqs: counts.to_vec(),
            cum,
        })
    }

    /// Scale non-negative weights to integer frequencies. Every positive
    /// weight keeps a frequency of at least one.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::validation("weights must be finite and non-negative"));
        }
        let sum: f64 = weights.iter().sum();
        let nonzero = weights.iter().filter(|&&w| w > 0.0).count();
        if sum <= 0.0 {
            return Err(Error::validation("weights sum to zero"));
        }
        if nonzero > PROB_TOTAL as usize {
            return Err(Error::validation("too many symbols for the frequency precision"));
        }
        let mut freqs: Vec<u32> = weights
            .iter()
            .map(|&w| {
                if w > 0.0 {
                    ((w / sum * PROB_TOTAL as f64).round() as u32).max(1)
                } else {
                    0
                }
            })
            .collect();
        let mut total: i64 = freqs.iter().map(|&f| f as i64).sum();
        while total != PROB_TOTAL as i64 {
            // largest frequency absorbs the rounding error; ties go to the lowest index
            let (j, &f) = freqs
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
                .expect("non-empty");
            let diff = PROB_TOTAL as i64 - total;
            let next = (f as i64 + diff).max(1);
            total += next - f as i64;
            freqs[j] = next as u32;
        }
        FrequencyTable::from_counts(&freqs)
    }

    /// Table from observed symbol counts.
    pub fn from_histogram(counts: &[u64]) -> Result<Self> {
        let w: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
        FrequencyTable::from_weights(&w)
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    pub fn counts(&self) -> &[u32] {
        &self.freqs
    }

    pub fn freq(&self, s: usize) -> u32 {
        self.freqs[s]
    }

    pub fn probability(&self, s: usize) -> f64 {
        self.freqs[s] as f64 / PROB_TOTAL as f64
    }

    /// Ideal code length of `s` under this table.
    pub fn bits(&self, s: usize) -> f64 {
        -self.probability(s).log2()
    }

    fn lookup(&self, v: u32) -> usize {
        // last index whose cumulative start is <= v
        self.cum.partition_point(|&c| c <= v) - 1
    }

    /// `u16` count per symbol; the symbol count is stored by the caller.
    pub(crate) fn write(&self, w: &mut ByteWriter) {
        for &f in &self.freqs {
            w.u16(f.min(u16::MAX as u32) as u16);
        }
    }

    pub(crate) fn read(r: &mut ByteReader, n: usize) -> Result<Self> {
        let counts = (0..n)
            .map(|_| r.u16().map(u32::from))
            .collect::<Result<Vec<_>>>()?;
        FrequencyTable::from_counts(&counts)
    }
}

/// Range encoder; `finish` flushes the pending bytes.
#[derive(Debug)]
pub struct RangeEncoder {
    low: u64,
    range: u32,
    cache: u8,
    cache_size: u64,
    used: bool,
    out: Vec<u8>,
}

impl Default for RangeEncoder {
    fn default() -> Self {
        RangeEncoder::new()
    }
}

impl RangeEncoder {
    pub fn new() -> Self {
        RangeEncoder {
            low: 0,
            range: u32::MAX,
            cache: 0,
            cache_size: 1,
            used: false,
            out: Vec::new(),
        }
    }

    fn shift_low(&mut self) {
        if (self.low as u32) < 0xFF00_0000 || (self.low >> 32) != 0 {
            let carry = (self.low >> 32) as u8;
            let mut temp = self.cache;
            loop {
                self.out.push(temp.wrapping_add(carry));
                temp = 0xFF;
                self.cache_size -= 1;
                if self.cache_size == 0 {
                    break;
                }
            }
            self.cache = ((self.low >> 24) & 0xFF) as u8;
        }
        self.cache_size += 1;
        self.low = (self.low & 0x00FF_FFFF) << 8;
    }

    fn encode_range(&mut self, cum: u32, freq: u32, total_bits: u32) {
        self.used = true;
        let r = self.range >> total_bits;
        self.low += r as u64 * cum as u64;
        self.range = r * freq;
        while self.range < TOP {
            self.range <<= 8;
            self.shift_low();
        }
    }

    pub fn encode(&mut self, table: &FrequencyTable, symbol: usize) -> Result<()> {
        if symbol >= table.len() {
            return Err(Error::Encoding(format!(
                "symbol {symbol} outside table of {} entries",
                table.len()
            )));
        }
        let f = table.freq(symbol);
        if f == 0 {
            return Err(Error::Encoding(format!("symbol {symbol} has zero probability")));
        }
        self.encode_range(table.cum[symbol], f, PROB_BITS);
        Ok(())
    }

    /// Equiprobable raw bits, most significant chunk first.
    pub fn encode_bits(&mut self, value: u64, nbits: u32) {
        let mut left = nbits;
        while left > 0 {
            let n = left.min(8);
            left -= n;
            let chunk = ((value >> left) & ((1 << n) - 1)) as u32;
            self.encode_range(chunk, 1, n);
        }
    }

    pub fn finish(mut self) -> Vec<u8> {
        if self.used {
            for _ in 0..5 {
                self.shift_low();
            }
        }
        self.out
    }
}

/// Decoder mirroring [`RangeEncoder`].
#[derive(Debug)]
pub struct RangeDecoder<'a> {
    data: &'a [u8],
    pos: usize,
    code: u32,
    range: u32,
    started: bool,
}

impl<'a> RangeDecoder<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        RangeDecoder {
            data,
            pos: 0,
            code: 0,
            range: u32::MAX,
            started: false,
        }
    }

    fn next_byte(&mut self) -> Result<u8> {
        let b = *self
            .data
            .get(self.pos)
            .ok_or(Error::Truncated { position: self.pos })?;
        self.pos += 1;
        Ok(b)
    }

    fn start(&mut self) -> Result<()> {
        if !self.started {
            self.started = true;
            if self.next_byte()? != 0 {
                return Err(Error::Encoding("range coder stream has a bad lead byte".into()));
            }
            for _ in 0..4 {
                self.code = (self.code << 8) | self.next_byte()? as u32;
            }
        }
        Ok(())
    }

    fn decode_range(&mut self, total_bits: u32, total: u32) -> Result<(u32, u32)> {
        self.start()?;
        let r = self.range >> total_bits;
        let v = self.code / r;
        if v >= total {
            return Err(Error::Encoding(format!(
                "range coder value out of bounds near byte {}",
                self.pos
            )));
        }
        Ok((r, v))
    }

    fn narrow(&mut self, r: u32, cum: u32, freq: u32) -> Result<()> {
        self.code -= r * cum;
        self.range = r * freq;
        while self.range < TOP {
            self.range <<= 8;
            self.code = (self.code << 8) | self.next_byte()? as u32;
        }
        Ok(())
    }

    pub fn decode(&mut self, table: &FrequencyTable) -> Result<usize> {
        let (r, v) = self.decode_range(PROB_BITS, PROB_TOTAL)?;
        let s = table.lookup(v);
        if table.freq(s) == 0 {
            return Err(Error::Encoding("decoded a zero-probability symbol".into()));
        }
        self.narrow(r, table.cum[s], table.freq(s))?;
        Ok(s)
    }

    pub fn decode_bits(&mut self, nbits: u32) -> Result<u64> {
        let mut left = nbits;
        let mut value = 0u64;
        while left > 0 {
            let n = left.min(8);
            left -= n;
            let (r, v) = self.decode_range(n, 1 << n)?;
            self.narrow(r, v, 1)?;
            value = (value << n) | v as u64;
        }
        Ok(value)
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    /// Require that every byte was consumed.
    pub fn finish(&self) -> Result<()> {
        if self.pos != self.data.len() {
            return Err(Error::Encoding(format!(
                "{} unread bytes after the coded symbols",
                self.data.len() - self.pos
            )));
        }
        Ok(())
    }
}

/// Self-checking stream: CRC header followed by coder bytes.
pub fn range_encode(symbols: &[usize], table: &FrequencyTable) -> Result<Vec<u8>> {
    let mut enc = RangeEncoder::new();
    for &s in symbols {
        enc.encode(table, s)?;
    }
    let body = enc.finish();
    let mut out = crc32fast::hash(&body).to_le_bytes().to_vec();
    out.extend_from_slice(&body);
    Ok(out)
}

pub fn range_decode(bytes: &[u8], table: &FrequencyTable, count: usize) -> Result<Vec<usize>> {
    if bytes.len() < 4 {
        return Err(Error::Truncated { position: bytes.len() });
    }
    let (crc, body) = bytes.split_at(4);
    let mut dec = RangeDecoder::new(body);
    let mut out = Vec::with_capacity(count.min(body.len() * 8 + 16));
    for _ in 0..count {
        out.push(dec.decode(table).map_err(|e| offset_position(e, 4))?);
    }
    dec.finish()?;
    if crc32fast::hash(body).to_le_bytes() != crc {
        return Err(Error::Encoding("range coded stream checksum mismatch".into()));
    }
    Ok(out)
}

fn offset_position(e: Error, by: usize) -> Error {
    match e {
        Error::Truncated { position } => Error::Truncated {
            position: position + by,
        },
        other => other,
    }
}

/// Largest magnitude accepted by the integer coder.
pub const MAX_INT_MAGNITUDE: i64 = (1 << 31) - 1;
/// Category alphabet: zero plus bit lengths 1..=32 of zigzag values.
pub const CATEGORY_SYMBOLS: usize = 33;

pub fn zigzag(v: i64) -> u64 {
    ((v << 1) ^ (v >> 63)) as u64
}

pub fn unzigzag(z: u64) -> i64 {
    ((z >> 1) as i64) ^ -((z & 1) as i64)
}

/// Bit length of the zigzag value.
pub fn category(v: i64) -> usize {
    (64 - zigzag(v).leading_zeros()) as usize
}

fn check_int(v: i64) -> Result<()> {
    if v.abs() > MAX_INT_MAGNITUDE {
        return Err(Error::Encoding(format!("integer {v} exceeds the coder range")));
    }
    Ok(())
}

/// Category table fitted to `values`.
pub fn category_table(values: &[i64]) -> Result<FrequencyTable> {
    let mut counts = vec![0u64; CATEGORY_SYMBOLS];
    for &v in values {
        check_int(v)?;
        counts[category(v)] += 1;
    }
    if values.is_empty() {
        counts[0] = 1;
    }
    FrequencyTable::from_histogram(&counts)
}

pub fn encode_int(enc: &mut RangeEncoder, table: &FrequencyTable, v: i64) -> Result<()> {
    check_int(v)?;
    let z = zigzag(v);
    let c = category(v);
    enc.encode(table, c)?;
    if c >= 2 {
        enc.encode_bits(z & ((1u64 << (c - 1)) - 1), (c - 1) as u32);
    }
    Ok(())
}

pub fn decode_int(dec: &mut RangeDecoder<'_>, table: &FrequencyTable) -> Result<i64> {
    let c = dec.decode(table)?;
    let z = match c {
        0 => 0,
        1 => 1,
        _ => (1u64 << (c - 1)) | dec.decode_bits((c - 1) as u32)?,
    };
    Ok(unzigzag(z))
}

/// Ideal cost in bits of `v` under a category table.
pub fn int_bits(table: &FrequencyTable, v: i64) -> f64 {
    let c = category(v);
    table.bits(c) + c.saturating_sub(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn uniform(n: usize) -> FrequencyTable {
        FrequencyTable::from_weights(&vec![1.0; n]).unwrap()
    }

    #[test]
    fn empty_stream_is_header_only() {
        let t = uniform(4);
        let bytes = range_encode(&[], &t).unwrap();
        assert_eq!(bytes.len(), 4);
        assert!(range_decode(&bytes, &t, 0).unwrap().is_empty());
    }

    #[test]
    fn uniform_bytes_cost_one_byte_each() {
        let t = uniform(256);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s: Vec<usize> = (0..10_000).map(|_| rng.random_range(0..256)).collect();
        let bytes = range_encode(&s, &t).unwrap();
        assert!((bytes.len() as f64 - 10_000.0).abs() < 200.0, "{}", bytes.len());
        assert_eq!(range_decode(&bytes, &t, s.len()).unwrap(), s);
    }

    #[test]
    fn skewed_stream() {
        let t = FrequencyTable::from_weights(&[0.99, 0.01]).unwrap();
        let s = vec![0usize; 10_000];
        let bytes = range_encode(&s, &t).unwrap();
        let ideal = 10_000.0 * -(0.99f64).log2() / 8.0;
        assert!((bytes.len() as f64) <= ideal + 64.0, "{} vs {ideal}", bytes.len());
        assert_eq!(range_decode(&bytes, &t, s.len()).unwrap(), s);
    }

    #[test]
    fn repeated_ramp_round_trip() {
        let t = uniform(256);
        let s: Vec<usize> = (0..2560).map(|i| i % 256).collect();
        let bytes = range_encode(&s, &t).unwrap();
        assert_eq!(range_decode(&bytes, &t, s.len()).unwrap(), s);
    }

    #[test]
    fn corruption_and_truncation_are_detected() {
        let t = FrequencyTable::from_weights(&[5.0, 3.0, 1.0, 1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s: Vec<usize> = (0..500).map(|_| rng.random_range(0..4)).collect();
        let bytes = range_encode(&s, &t).unwrap();
        for cut in 0..bytes.len() {
            assert!(range_decode(&bytes[..cut], &t, s.len()).is_err());
        }
        let mut bad = bytes.clone();
        *bad.last_mut().unwrap() ^= 0x01;
        assert!(range_decode(&bad, &t, s.len()).is_err());
        let mut long = bytes.clone();
        long.push(0);
        assert!(range_decode(&long, &t, s.len()).is_err());
    }

    #[test]
    fn zero_probability_symbol_is_rejected() {
        let t = FrequencyTable::from_weights(&[1.0, 0.0]).unwrap();
        assert!(matches!(range_encode(&[1], &t), Err(Error::Encoding(_))));
        assert!(range_encode(&[2], &t).is_err());
    }

    #[test]
    fn table_normalization() {
        let t = FrequencyTable::from_weights(&[1e-9, 1.0, 0.0]).unwrap();
        assert_eq!(t.freq(0), 1);
        assert_eq!(t.freq(2), 0);
        assert_eq!(t.counts().iter().sum::<u32>(), PROB_TOTAL);
        let mut w = ByteWriter::new();
        t.write(&mut w);
        let mut r = ByteReader::new(&w.buf);
        assert_eq!(FrequencyTable::read(&mut r, 3).unwrap(), t);
        assert!(FrequencyTable::from_counts(&[1, 2]).is_err());
    }

    #[test]
    fn integers_round_trip() {
        let values: Vec<i64> = vec![0, 1, -1, 2, -2, 77, -1000, 123_456, -MAX_INT_MAGNITUDE, MAX_INT_MAGNITUDE];
        let t = category_table(&values).unwrap();
        let mut enc = RangeEncoder::new();
        for &v in &values {
            encode_int(&mut enc, &t, v).unwrap();
        }
        let bytes = enc.finish();
        let mut dec = RangeDecoder::new(&bytes);
        for &v in &values {
            assert_eq!(decode_int(&mut dec, &t).unwrap(), v);
        }
        dec.finish().unwrap();
        assert!(category_table(&[i64::MAX]).is_err());
        for v in [-5i64, 0, 9, -(1 << 20)] {
            assert_eq!(unzigzag(zigzag(v)), v);
        }
        assert_eq!(category(0), 0);
        assert_eq!(category(-1), 1);
        assert_eq!(category(1), 2);
    }

    #[test]
    fn wide_raw_bits() {
        let mut enc = RangeEncoder::new();
        enc.encode_bits(0x1_2345_6789, 33);
        enc.encode_bits(5, 3);
        let bytes = enc.finish();
        let mut dec = RangeDecoder::new(&bytes);
        assert_eq!(dec.decode_bits(33).unwrap(), 0x1_2345_6789);
        assert_eq!(dec.decode_bits(3).unwrap(), 5);
        dec.finish().unwrap();
    }
}
