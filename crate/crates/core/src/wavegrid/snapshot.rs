//! Flat binary field snapshots.
//!
//! Layout (little endian): magic `SWSNAP01`, `u32` rank, `u32` layout code
//! (`0` cartesian, `n` for radial in `n` dimensions), `rank × u64` points per
//! axis, `f64` extent, `f64` time, then the row-major `f64` payload.

use std::io::{self, Read, Write};

use super::{Grid, Layout};

pub const MAGIC: &[u8; 8] = b"SWSNAP01";

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub layout_code: u32,
    pub points: Vec<u64>,
    pub extent: f64,
    pub time: f64,
    pub data: Vec<f64>,
}

impl Snapshot {
    pub fn from_grid(grid: &Grid, field: &[f64], time: f64) -> Self {
        let (rank, layout_code) = match grid.spec().layout {
            Layout::Cartesian { dim } => (dim, 0),
            Layout::Radial { n } => (1, n as u32),
        };
        Self {
            layout_code,
            points: grid.shape()[..rank].iter().map(|&p| p as u64).collect(),
            extent: grid.spec().extent,
            time,
            data: field.to_vec(),
        }
    }

    pub fn write_to(&self, mut w: impl Write) -> io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&(self.points.len() as u32).to_le_bytes())?;
        w.write_all(&self.layout_code.to_le_bytes())?;
        for p in &self.points {
            w.write_all(&p.to_le_bytes())?;
        }
        w.write_all(&self.extent.to_le_bytes())?;
        w.write_all(&self.time.to_le_bytes())?;
        for v in &self.data {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> io::Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(io::Error::new(io::ErrorKind::InvalidData, "not a snapshot file"));
        }
        let rank = read_u32(&mut r)? as usize;
        let layout_code = read_u32(&mut r)?;
        let points = (0..rank).map(|_| read_u64(&mut r)).collect::<io::Result<Vec<_>>>()?;
        let extent = read_f64(&mut r)?;
        let time = read_f64(&mut r)?;
        let len: u64 = points.iter().product();
        let data = (0..len).map(|_| read_f64(&mut r)).collect::<io::Result<Vec<_>>>()?;
        Ok(Self { layout_code, points, extent, time, data })
    }
}

fn read_u32(r: &mut impl Read) -> io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> io::Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}
