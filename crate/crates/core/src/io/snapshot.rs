//! Binary snapshot format: a 48-byte little-endian header
//! (`"FLNS"`, version, dim, N, alpha, nu, s, t) followed by the spectral
//! coefficients as `(re, im)` pairs of `f64`, components outermost.

use std::fs;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{GridSpec, SpectralField};

pub const MAGIC: &[u8; 4] = b"FLNS";
pub const FORMAT_VERSION: u32 = 1;
pub const HEADER_LEN: usize = 48;

/// Relative Hermitian defect tolerated on read.
const SYMMETRY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotMeta {
    pub alpha: f64,
    pub nu: f64,
    pub s: f64,
    pub t: f64,
}

pub fn encode(field: &SpectralField, meta: &SnapshotMeta) -> Vec<u8> {
    let grid = field.grid();
    let mut buf = Vec::with_capacity(HEADER_LEN + 16 * field.coeffs().len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(grid.dim() as u32).to_le_bytes());
    buf.extend_from_slice(&(grid.n() as u32).to_le_bytes());
    for v in [meta.alpha, meta.nu, meta.s, meta.t] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for c in field.coeffs() {
        buf.extend_from_slice(&c.re.to_le_bytes());
        buf.extend_from_slice(&c.im.to_le_bytes());
    }
    buf
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"))
}

fn f64_at(bytes: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes"))
}

pub fn decode(bytes: &[u8]) -> Result<(SpectralField, SnapshotMeta)> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(Error::BadMagic);
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::CorruptPayload(format!("header truncated at {} bytes", bytes.len())));
    }
    let version = u32_at(bytes, 4);
    if version != FORMAT_VERSION {
        return Err(Error::VersionMismatch(version));
    }
    let dim = u32_at(bytes, 8) as usize;
    let n = u32_at(bytes, 12) as usize;
    let grid = GridSpec::new(dim, n).map_err(|e| Error::CorruptPayload(format!("bad grid: {e}")))?;
    let meta = SnapshotMeta {
        alpha: f64_at(bytes, 16),
        nu: f64_at(bytes, 24),
        s: f64_at(bytes, 32),
        t: f64_at(bytes, 40),
    };
    let count = dim * grid.len();
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != 16 * count {
        return Err(Error::CorruptPayload(format!(
            "expected {} payload bytes, found {}",
            16 * count,
            payload.len()
        )));
    }
    let coeffs: Vec<Complex64> = payload
        .chunks_exact(16)
        .map(|c| Complex64::new(f64_at(c, 0), f64_at(c, 8)))
        .collect();
    let field = SpectralField::from_coeffs(grid, dim, coeffs)?;
    if !field.is_hermitian(SYMMETRY_TOL) {
        return Err(Error::CorruptPayload("coefficients are not Hermitian".into()));
    }
    Ok((field, meta))
}

pub fn write_snapshot(field: &SpectralField, meta: &SnapshotMeta, path: &Path) -> Result<()> {
    fs::write(path, encode(field, meta)).map_err(|e| Error::io(path, e))
}

pub fn read_snapshot(path: &Path) -> Result<(SpectralField, SnapshotMeta)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}
