//! Binary field dumps and legacy VTK export.
//!
//! Dump layout, all little endian:
//!
//! | bytes   | content                       |
//! |---------|-------------------------------|
//! | 0..7    | magic `SPFLD01`               |
//! | 7       | zero                          |
//! | 8..12   | `u32` points per axis `n`     |
//! | 12..20  | `f64` half width `L`          |
//! | 20..24  | reserved, zero                |
//! | 24..    | `n^3` `f64` values, row-major |

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid3};
use crate::scalar::Real;

pub const MAGIC: &[u8; 7] = b"SPFLD01";
pub const HEADER_LEN: usize = 24;

pub fn write_dump<T: Real>(field: &Field<T>, mut out: impl Write) -> Result<()> {
    let g = field.grid();
    let mut header = [0u8; HEADER_LEN];
    header[..7].copy_from_slice(MAGIC);
    let n = u32::try_from(g.n()).map_err(|_| Error::InvalidGrid("n does not fit in u32".into()))?;
    header[8..12].copy_from_slice(&n.to_le_bytes());
    header[12..20].copy_from_slice(&g.half_width().as_f64().to_le_bytes());
    out.write_all(&header)?;
    let mut buf = Vec::with_capacity(8 * field.values().len());
    for v in field.values() {
        buf.extend_from_slice(&v.as_f64().to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_dump<T: Real>(mut input: impl Read) -> Result<Field<T>> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    parse_dump(&bytes)
}

pub fn parse_dump<T: Real>(bytes: &[u8]) -> Result<Field<T>> {
    let bad = |offset: usize, reason: String| Error::Dump { offset: offset as u64, reason };
    if bytes.len() < HEADER_LEN {
        return Err(bad(bytes.len(), format!("header needs {HEADER_LEN} bytes, file has {}", bytes.len())));
    }
    if &bytes[..7] != MAGIC || bytes[7] != 0 {
        return Err(bad(0, "bad magic".into()));
    }
    let n = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let l = f64::from_le_bytes(bytes[12..20].try_into().unwrap());
    let grid = Grid3::new(T::lit(l), n).map_err(|e| bad(8, e.to_string()))?;
    let expected = HEADER_LEN + 8 * grid.len();
    if bytes.len() != expected {
        return Err(bad(
            bytes.len().min(expected),
            format!("expected {expected} bytes for n = {n}, file has {}", bytes.len()),
        ));
    }
    let values = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| T::lit(f64::from_le_bytes(c.try_into().unwrap())))
        .collect::<Vec<_>>();
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(bad(HEADER_LEN + 8 * i, "non-finite value".into()));
    }
    Field::from_values(grid, values)
}

/// Legacy ASCII VTK structured points with one scalar array named `name`.
///
/// VTK orders points with x fastest, so the row-major layout is transposed.
pub fn write_vtk<T: Real>(field: &Field<T>, name: &str, mut out: impl Write) -> Result<()> {
    let g = field.grid();
    let n = g.n();
    let o = g.coord(0).as_f64();
    let h = g.h().as_f64();
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "spflow field")?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET STRUCTURED_POINTS")?;
    writeln!(out, "DIMENSIONS {n} {n} {n}")?;
    writeln!(out, "ORIGIN {o:e} {o:e} {o:e}")?;
    writeln!(out, "SPACING {h:e} {h:e} {h:e}")?;
    writeln!(out, "POINT_DATA {}", g.len())?;
    writeln!(out, "SCALARS {name} double 1")?;
    writeln!(out, "LOOKUP_TABLE default")?;
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                writeln!(out, "{:e}", field.values()[g.index(i, j, k)].as_f64())?;
            }
        }
    }
    Ok(())
}
