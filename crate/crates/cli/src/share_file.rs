//! On-disk share format.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "MOUL"
//! 4       2     format version (1), big-endian
//! 6       2*4   n, k, d, s
//! 14      8     field modulus
//! 22      2     node index h (0-based)
//! 24      8     star scalar a_h
//! 32      8     chunk count
//! 40      ...   chunk_count * alpha field elements, fixed-width big-endian
//! ```
//!
//! The element width is the smallest byte count holding modulus−1. Shares
//! are bit-reproducible: the encoder basis and this serialization are both
//! deterministic.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use moulin::storage_sim::symbol_width;

pub const MAGIC: &[u8; 4] = b"MOUL";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 40;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShareHeader {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub s: usize,
    pub modulus: u64,
    pub node: usize,
    pub star_scalar: u64,
    pub chunks: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShareFile {
    pub header: ShareHeader,
    /// chunk-major: chunk 0's alpha symbols, then chunk 1's, ...
    pub symbols: Vec<u64>,
}

impl ShareHeader {
    /// Headers must agree on everything except the node index.
    pub fn compatible(&self, other: &ShareHeader) -> bool {
        self.n == other.n
            && self.k == other.k
            && self.d == other.d
            && self.s == other.s
            && self.modulus == other.modulus
            && self.chunks == other.chunks
    }
}

pub fn write_share(path: &Path, share: &ShareFile) -> Result<()> {
    let h = &share.header;
    let width = symbol_width(h.modulus);
    let mut buf = Vec::with_capacity(HEADER_LEN + share.symbols.len() * width);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_be_bytes());
    for v in [h.n, h.k, h.d, h.s] {
        buf.extend_from_slice(&(v as u16).to_be_bytes());
    }
    buf.extend_from_slice(&h.modulus.to_be_bytes());
    buf.extend_from_slice(&(h.node as u16).to_be_bytes());
    buf.extend_from_slice(&h.star_scalar.to_be_bytes());
    buf.extend_from_slice(&h.chunks.to_be_bytes());
    for &sym in &share.symbols {
        buf.extend_from_slice(&sym.to_be_bytes()[8 - width..]);
    }
    fs::write(path, buf).with_context(|| format!("writing share {}", path.display()))
}

pub fn read_share(path: &Path) -> Result<ShareFile> {
    let buf = fs::read(path).with_context(|| format!("reading share {}", path.display()))?;
    if buf.len() < HEADER_LEN {
        bail!("{}: truncated share header", path.display());
    }
    if &buf[0..4] != MAGIC {
        bail!("{}: not a share file (bad magic)", path.display());
    }
    let u16_at = |off: usize| u16::from_be_bytes([buf[off], buf[off + 1]]);
    let u64_at = |off: usize| {
        let mut b = [0u8; 8];
        b.copy_from_slice(&buf[off..off + 8]);
        u64::from_be_bytes(b)
    };
    let version = u16_at(4);
    if version != VERSION {
        bail!("{}: unsupported share format version {version}", path.display());
    }
    let header = ShareHeader {
        n: u16_at(6) as usize,
        k: u16_at(8) as usize,
        d: u16_at(10) as usize,
        s: u16_at(12) as usize,
        modulus: u64_at(14),
        node: u16_at(22) as usize,
        star_scalar: u64_at(24),
        chunks: u64_at(32),
    };
    let width = symbol_width(header.modulus);
    let body = &buf[HEADER_LEN..];
    if body.len() % width != 0 {
        bail!("{}: payload is not a whole number of symbols", path.display());
    }
    let symbols: Vec<u64> = body
        .chunks(width)
        .map(|c| c.iter().fold(0u64, |acc, &b| (acc << 8) | b as u64))
        .collect();
    for &s in &symbols {
        if s >= header.modulus {
            bail!("{}: symbol out of field range", path.display());
        }
    }
    Ok(ShareFile { header, symbols })
}
