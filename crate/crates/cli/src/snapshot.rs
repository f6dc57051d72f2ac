//! Binary velocity snapshots.
//!
//! Little-endian layout: magic `CHRC`, `u32` version (1), `L_x`, `a`, `b` as
//! `f64`, `N_x`, `N_y` as `u32`, `t` as `f64`, then `u` and `v`, each `N_x * N_y`
//! `f64` values in x-major order.

use std::io::{Read, Write};
use std::path::Path;

use chflow::{ChannelGrid, ScalarField, VectorField};
use ndarray::Array2;
use thiserror::Error;

pub const MAGIC: [u8; 4] = *b"CHRC";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 4 + 4 + 3 * 8 + 2 * 4 + 8;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("snapshot truncated: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("not a snapshot file: magic {0:?}")]
    BadMagic([u8; 4]),
    #[error("unsupported snapshot version {0} (expected {VERSION})")]
    BadVersion(u32),
    #[error("invalid snapshot contents: {0}")]
    Invalid(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub velocity: VectorField,
}

pub fn encode(t: f64, velocity: &VectorField) -> Result<Vec<u8>, SnapshotError> {
    let g = velocity.grid();
    let nx = u32::try_from(g.nx).map_err(|_| SnapshotError::Invalid(format!("N_x = {} too large", g.nx)))?;
    let ny = u32::try_from(g.ny).map_err(|_| SnapshotError::Invalid(format!("N_y = {} too large", g.ny)))?;
    let mut buf = Vec::with_capacity(HEADER_LEN + 16 * g.nx * g.ny);
    buf.extend_from_slice(&MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    for x in [g.lx, g.a, g.b] {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    buf.extend_from_slice(&nx.to_le_bytes());
    buf.extend_from_slice(&ny.to_le_bytes());
    buf.extend_from_slice(&t.to_le_bytes());
    for f in [&velocity.u, &velocity.v] {
        for x in f.values().iter() {
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
    Ok(buf)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take<const N: usize>(&mut self) -> [u8; N] {
        let out: [u8; N] = self.bytes[self.pos..self.pos + N].try_into().expect("length checked");
        self.pos += N;
        out
    }

    fn f64(&mut self) -> f64 {
        f64::from_le_bytes(self.take())
    }

    fn u32(&mut self) -> u32 {
        u32::from_le_bytes(self.take())
    }
}

pub fn decode(bytes: &[u8]) -> Result<Snapshot, SnapshotError> {
    if bytes.len() < 4 {
        return Err(SnapshotError::Truncated { expected: HEADER_LEN, found: bytes.len() });
    }
    let mut c = Cursor { bytes, pos: 0 };
    let magic: [u8; 4] = c.take();
    if magic != MAGIC {
        return Err(SnapshotError::BadMagic(magic));
    }
    if bytes.len() < HEADER_LEN {
        return Err(SnapshotError::Truncated { expected: HEADER_LEN, found: bytes.len() });
    }
    let version = c.u32();
    if version != VERSION {
        return Err(SnapshotError::BadVersion(version));
    }
    let (lx, a, b) = (c.f64(), c.f64(), c.f64());
    let (nx, ny) = (c.u32() as usize, c.u32() as usize);
    let t = c.f64();
    let grid = ChannelGrid::new(lx, a, b, nx, ny).map_err(|e| SnapshotError::Invalid(e.to_string()))?;
    let expected = nx
        .checked_mul(ny)
        .and_then(|n| n.checked_mul(16))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| SnapshotError::Invalid(format!("grid {nx} x {ny} too large")))?;
    if bytes.len() < expected {
        return Err(SnapshotError::Truncated { expected, found: bytes.len() });
    }
    if bytes.len() > expected {
        return Err(SnapshotError::Invalid(format!("{} trailing bytes", bytes.len() - expected)));
    }
    let read_field = |c: &mut Cursor| -> Result<ScalarField, SnapshotError> {
        let vals: Vec<f64> = (0..nx * ny).map(|_| c.f64()).collect();
        let arr = Array2::from_shape_vec((nx, ny), vals).expect("length checked");
        ScalarField::new(grid, arr).map_err(|e| SnapshotError::Invalid(e.to_string()))
    };
    let u = read_field(&mut c)?;
    let v = read_field(&mut c)?;
    let velocity = VectorField::new(u, v).map_err(|e| SnapshotError::Invalid(e.to_string()))?;
    Ok(Snapshot { t, velocity })
}

pub fn write_to(w: &mut impl Write, t: f64, velocity: &VectorField) -> Result<(), SnapshotError> {
    w.write_all(&encode(t, velocity)?)?;
    Ok(())
}

pub fn read_from(r: &mut impl Read) -> Result<Snapshot, SnapshotError> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    decode(&bytes)
}

pub fn write_file(path: &Path, t: f64, velocity: &VectorField) -> Result<(), SnapshotError> {
    std::fs::write(path, encode(t, velocity)?)?;
    Ok(())
}

pub fn read_file(path: &Path) -> Result<Snapshot, SnapshotError> {
    decode(&std::fs::read(path)?)
}
