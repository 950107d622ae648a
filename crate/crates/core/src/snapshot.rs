//! Little-endian binary snapshots: `VPF2` for spatial fields and `VPF4`
//! for phase-space samples.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::spectral_field::{PeriodicGrid, ScalarField2D};

pub const VERSION: u32 = 1;

#[derive(Debug, Clone)]
pub struct FieldSnapshot {
    pub field: ScalarField2D,
    pub time: f64,
}

/// Phase-space samples, `x` index slow and `v` index fast:
/// `values[(ix1·Nx + ix2)·Nv² + iv1·Nv + iv2]`, `v` nodes spanning `[-v_max, v_max)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSnapshot {
    pub nx: usize,
    pub nv: usize,
    pub half_length: f64,
    pub v_max: f64,
    pub time: f64,
    pub values: Vec<f64>,
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn read_samples(r: &mut impl Read, count: usize) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; count * 8];
    r.read_exact(&mut bytes)?;
    Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}

fn expect_magic(r: &mut impl Read, magic: &[u8; 4]) -> Result<()> {
    let mut m = [0u8; 4];
    r.read_exact(&mut m)?;
    if &m != magic {
        return Err(Error::InvalidArgument(format!(
            "bad snapshot magic {:?}, expected {:?}",
            String::from_utf8_lossy(&m),
            String::from_utf8_lossy(magic)
        )));
    }
    let v = read_u32(r)?;
    if v != VERSION {
        return Err(Error::InvalidArgument(format!("unsupported snapshot version {v}")));
    }
    Ok(())
}

pub fn write_field(w: &mut impl Write, field: &ScalarField2D, time: f64) -> Result<()> {
    w.write_all(b"VPF2")?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(field.grid.n as u32).to_le_bytes())?;
    w.write_all(&field.grid.half_length.to_le_bytes())?;
    w.write_all(&time.to_le_bytes())?;
    for v in &field.values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_field(r: &mut impl Read) -> Result<FieldSnapshot> {
    expect_magic(r, b"VPF2")?;
    let n = read_u32(r)? as usize;
    let l = read_f64(r)?;
    let time = read_f64(r)?;
    let grid = PeriodicGrid::new(l, n)?;
    let field = ScalarField2D::new(grid, read_samples(r, n * n)?)?;
    Ok(FieldSnapshot { field, time })
}

pub fn write_phase(w: &mut impl Write, s: &PhaseSnapshot) -> Result<()> {
    w.write_all(b"VPF4")?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(s.nx as u32).to_le_bytes())?;
    w.write_all(&(s.nv as u32).to_le_bytes())?;
    w.write_all(&s.half_length.to_le_bytes())?;
    w.write_all(&s.v_max.to_le_bytes())?;
    w.write_all(&s.time.to_le_bytes())?;
    for v in &s.values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_phase(r: &mut impl Read) -> Result<PhaseSnapshot> {
    expect_magic(r, b"VPF4")?;
    let nx = read_u32(r)? as usize;
    let nv = read_u32(r)? as usize;
    let half_length = read_f64(r)?;
    let v_max = read_f64(r)?;
    let time = read_f64(r)?;
    let values = read_samples(r, nx * nx * nv * nv)?;
    Ok(PhaseSnapshot { nx, nv, half_length, v_max, time, values })
}

/// Reads either snapshot kind; phase-space snapshots are reduced to their
/// density `∫ f dv`.
pub fn read_any_as_density(bytes: &[u8]) -> Result<FieldSnapshot> {
    if bytes.starts_with(b"VPF2") {
        return read_field(&mut &bytes[..]);
    }
    let p = read_phase(&mut &bytes[..])?;
    let grid = PeriodicGrid::new(p.half_length, p.nx)?;
    let dv = 2.0 * p.v_max / p.nv as f64;
    let block = p.nv * p.nv;
    let rho = p.values.chunks_exact(block).map(|c| c.iter().sum::<f64>() * dv * dv).collect();
    Ok(FieldSnapshot { field: ScalarField2D::new(grid, rho)?, time: p.time })
}
