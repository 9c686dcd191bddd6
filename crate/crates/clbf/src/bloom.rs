//! Classical Bloom filter over byte-string identities.
//!
//! Storing `n` keys at false positive rate `eps` takes
//! `log2(e) * n * log2(1/eps)` bits, which is `log2(e)` times the
//! information-theoretic lower bound, with `k = ceil(log2(1/eps))` hash
//! functions. Probes use double hashing, `position_i = (h1 + i*h2) mod m`,
//! from two independent 64-bit hashes of the item and the filter seed.
//!
//! Two degenerate shapes fall out of the sizing rules and are relied on by
//! the cascade:
//! * `eps = 1` gives a zero-bit, zero-hash filter that answers found for
//!   everything (an always-pass slot in the structure);
//! * `n = 0` with `eps < 1` gives a zero-bit filter with `k >= 1` hashes
//!   that answers not-found for everything (a region no key routes to).

use crate::error::{Error, Result};
use crate::hash::{prehash, probe_pair, PreHash};

/// `log2(e)`: bits per key per `log2(1/eps)` of accuracy.
pub const BITS_PER_KEY_FACTOR: f64 = std::f64::consts::LOG2_E;

/// Floor applied to target false positive rates; 2^-64.
pub const MIN_FPR: f64 = 1.0 / 18_446_744_073_709_551_616.0;

fn check_fpr(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::invalid(format!(
            "target false positive rate must be in (0, 1], got {eps}"
        )));
    }
    Ok(())
}

/// Bit-array length for `n` keys at rate `eps`: `ceil(log2(e)*n*log2(1/eps))`.
///
/// Zero when `eps = 1` (nothing stored) or `n = 0` (nothing to store).
/// Rates below [`MIN_FPR`] clamp to it so sizes stay finite.
pub fn theoretical_size_bits(n: u64, eps: f64) -> Result<u64> {
    check_fpr(eps)?;
    if n == 0 || eps >= 1.0 {
        return Ok(0);
    }
    let eps = eps.max(MIN_FPR);
    Ok((BITS_PER_KEY_FACTOR * n as f64 * -eps.log2()).ceil() as u64)
}

fn hash_count(eps: f64) -> u32 {
    if eps >= 1.0 {
        0
    } else {
        (-eps.max(MIN_FPR).log2()).ceil().max(1.0) as u32
    }
}

/// Insert-only Bloom filter.
#[derive(Debug, Clone, PartialEq)]
pub struct BloomFilter {
    words: Vec<u64>,
    bit_len: u64,
    num_hashes: u32,
    seed: u64,
    capacity_keys: u64,
    target_fpr: f64,
}

impl BloomFilter {
    /// Empty filter sized for `n` keys at rate `eps`.
    pub fn new(n: u64, eps: f64, seed: u64) -> Result<Self> {
        check_fpr(eps)?;
        let eps = if eps >= 1.0 { 1.0 } else { eps.max(MIN_FPR) };
        let bit_len = theoretical_size_bits(n, eps)?;
        Ok(BloomFilter {
            words: vec![0u64; bit_len.div_ceil(64) as usize],
            bit_len,
            num_hashes: hash_count(eps),
            seed,
            capacity_keys: n,
            target_fpr: eps,
        })
    }

    pub fn size_bits(&self) -> u64 {
        self.bit_len
    }

    pub fn num_hashes(&self) -> u32 {
        self.num_hashes
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn capacity_keys(&self) -> u64 {
        self.capacity_keys
    }

    pub fn target_fpr(&self) -> f64 {
        self.target_fpr
    }

    /// True for the `eps = 1` degenerate that reports found for everything.
    pub fn is_pass_all(&self) -> bool {
        self.num_hashes == 0
    }

    /// Fraction of bits set; 0 for zero-length filters.
    pub fn fill_ratio(&self) -> f64 {
        if self.bit_len == 0 {
            return 0.0;
        }
        let ones: u64 = self.words.iter().map(|w| w.count_ones() as u64).sum();
        ones as f64 / self.bit_len as f64
    }

    #[inline]
    fn set_bit(&mut self, pos: u64) {
        self.words[(pos / 64) as usize] |= 1u64 << (pos % 64);
    }

    #[inline]
    fn get_bit(&self, pos: u64) -> bool {
        self.words[(pos / 64) as usize] & (1u64 << (pos % 64)) != 0
    }

    pub fn insert(&mut self, item: &[u8]) {
        self.insert_prehashed(prehash(item));
    }

    /// Insert using a precomputed identity digest.
    pub fn insert_prehashed(&mut self, ph: PreHash) {
        if self.num_hashes == 0 {
            return; // pass-all filter stores nothing
        }
        debug_assert!(
            self.bit_len > 0,
            "insert into a filter sized for zero keys"
        );
        if self.bit_len == 0 {
            return;
        }
        let (h1, h2) = probe_pair(ph, self.seed);
        let mut pos = h1;
        for _ in 0..self.num_hashes {
            self.set_bit(pos % self.bit_len);
            pos = pos.wrapping_add(h2);
        }
    }

    pub fn contains(&self, item: &[u8]) -> bool {
        self.contains_prehashed(prehash(item))
    }

    /// Membership check using a precomputed identity digest.
    #[inline]
    pub fn contains_prehashed(&self, ph: PreHash) -> bool {
        if self.num_hashes == 0 {
            return true; // eps = 1: everything is (possibly) present
        }
        if self.bit_len == 0 {
            return false; // sized for zero keys: nothing is present
        }
        let (h1, h2) = probe_pair(ph, self.seed);
        let mut pos = h1;
        for _ in 0..self.num_hashes {
            if !self.get_bit(pos % self.bit_len) {
                return false;
            }
            pos = pos.wrapping_add(h2);
        }
        true
    }

    /// Serialize: little-endian `[m: u64][k: u32][seed: u64][n: u64][eps: f64]`
    /// followed by the bit payload, `m` bits padded to whole bytes
    /// (bit `i` is bit `i % 8` of payload byte `i / 8`).
    pub fn to_bytes(&self) -> Vec<u8> {
        let payload_len = self.bit_len.div_ceil(8) as usize;
        let mut out = Vec::with_capacity(36 + payload_len);
        out.extend_from_slice(&self.bit_len.to_le_bytes());
        out.extend_from_slice(&self.num_hashes.to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        out.extend_from_slice(&self.capacity_keys.to_le_bytes());
        out.extend_from_slice(&self.target_fpr.to_le_bytes());
        let mut payload = Vec::with_capacity(self.words.len() * 8);
        for w in &self.words {
            payload.extend_from_slice(&w.to_le_bytes());
        }
        payload.truncate(payload_len);
        out.extend_from_slice(&payload);
        out
    }

    /// Parse one filter from the front of `buf`; returns it and the number
    /// of bytes consumed.
    pub fn from_bytes(buf: &[u8]) -> Result<(Self, usize)> {
        let mut r = crate::bloom::Reader::new(buf);
        let bit_len = r.u64()?;
        let num_hashes = r.u32()?;
        let seed = r.u64()?;
        let capacity_keys = r.u64()?;
        let target_fpr = r.f64()?;
        if !(target_fpr > 0.0 && target_fpr <= 1.0) {
            return Err(Error::format(format!(
                "serialized filter has fpr {target_fpr} outside (0, 1]"
            )));
        }
        let payload_len = bit_len.div_ceil(8) as usize;
        let payload = r.bytes(payload_len)?;
        let mut words = vec![0u64; bit_len.div_ceil(64) as usize];
        for (i, chunk) in payload.chunks(8).enumerate() {
            let mut w = [0u8; 8];
            w[..chunk.len()].copy_from_slice(chunk);
            words[i] = u64::from_le_bytes(w);
        }
        Ok((
            BloomFilter {
                words,
                bit_len,
                num_hashes,
                seed,
                capacity_keys,
                target_fpr,
            },
            r.consumed(),
        ))
    }
}

/// Little-endian cursor over a byte slice, shared by the container formats.
pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    pub(crate) fn consumed(&self) -> usize {
        self.pos
    }

    pub(crate) fn bytes(&mut self, len: usize) -> Result<&'a [u8]> {
        if self.pos + len > self.buf.len() {
            return Err(Error::format(format!(
                "truncated payload: need {} bytes at offset {}, have {}",
                len,
                self.pos,
                self.buf.len() - self.pos
            )));
        }
        let out = &self.buf[self.pos..self.pos + len];
        self.pos += len;
        Ok(out)
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes(4)?.try_into().unwrap()))
    }

    pub(crate) fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes(8)?.try_into().unwrap()))
    }

    pub(crate) fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes(8)?.try_into().unwrap()))
    }

    pub(crate) fn u8(&mut self) -> Result<u8> {
        Ok(self.bytes(1)?[0])
    }

    pub(crate) fn magic(&mut self, expect: &[u8]) -> Result<()> {
        let got = self.bytes(expect.len())?;
        if got != expect {
            return Err(Error::format(format!(
                "bad magic: expected {:?}, found {:?}",
                String::from_utf8_lossy(expect),
                String::from_utf8_lossy(got)
            )));
        }
        Ok(())
    }
}
