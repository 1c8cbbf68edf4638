//! Binary field snapshots.
//!
//! Layout (little endian): magic `MSQG`, `u32` version, `u32` storage
//! extent `N`, `f64` delta, `u8` formulation code, `u8` Hermitian flag, then
//! for every nonzero box mode in row-major order (`k1` outer, `k2` inner,
//! both from `-N` to `N`) the pair `(re, im)` as `f64`.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::{LatticeBox, SpectralField};

pub const MAGIC: &[u8; 4] = b"MSQG";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotHeader {
    pub extent: u32,
    pub delta: f64,
    /// 0 regularized, 1 stream function, 2 stream function (inverted prefactor).
    pub formulation_code: u8,
    pub hermitian: bool,
}

pub fn write_snapshot<T: Real, W: Write>(mut w: W, field: &SpectralField<T>, delta: f64, formulation_code: u8) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&field.extent().to_le_bytes())?;
    w.write_all(&delta.to_le_bytes())?;
    w.write_all(&[formulation_code, field.is_hermitian() as u8])?;
    let mut buf = Vec::with_capacity(16 * field.grid().mode_count());
    for (_, c) in field.iter() {
        buf.extend_from_slice(&c.re.to_f64_lossy().to_le_bytes());
        buf.extend_from_slice(&c.im.to_f64_lossy().to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_snapshot<R: Read>(mut r: R) -> Result<(SnapshotHeader, SpectralField<f64>)> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad snapshot magic".into()));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported snapshot version {version}")));
    }
    let extent = read_u32(&mut r)?;
    if extent > 1 << 14 {
        return Err(Error::Format(format!("snapshot extent {extent} is implausibly large")));
    }
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let delta = f64::from_le_bytes(b8);
    let mut flags = [0u8; 2];
    r.read_exact(&mut flags)?;
    if flags[0] > 2 || flags[1] > 1 {
        return Err(Error::Format("bad snapshot flags".into()));
    }
    let header = SnapshotHeader { extent, delta, formulation_code: flags[0], hermitian: flags[1] == 1 };

    let grid = LatticeBox::new(extent);
    let mut coeffs = vec![Complex::new(0.0, 0.0); grid.len()];
    let mut body = vec![0u8; 16 * grid.mode_count()];
    r.read_exact(&mut body)?;
    let mut chunks = body.chunks_exact(16);
    for k in grid.modes() {
        let chunk = chunks.next().expect("body sized to the mode count");
        let re = f64::from_le_bytes(chunk[..8].try_into().unwrap());
        let im = f64::from_le_bytes(chunk[8..].try_into().unwrap());
        coeffs[grid.index_unchecked(k)] = Complex::new(re, im);
    }
    Ok((header, SpectralField::from_raw(grid, coeffs, header.hermitian)))
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub fn save_snapshot<T: Real>(path: &Path, field: &SpectralField<T>, delta: f64, formulation_code: u8) -> Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_snapshot(file, field, delta, formulation_code)
}

pub fn load_snapshot(path: &Path) -> Result<(SnapshotHeader, SpectralField<f64>)> {
    read_snapshot(std::io::BufReader::new(std::fs::File::open(path)?))
}
