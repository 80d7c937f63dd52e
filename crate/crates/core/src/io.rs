//! The `CHQF` binary field format.
//!
//! Layout (little-endian): magic `b"CHQF"`, `u32` version (= 1), `u8`
//! dimension, `u64` points per axis, `f64` half length, then `n^dimension`
//! `f64` values in row-major order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{FieldOf, GridSpec};
use crate::scalar::Scalar;

pub const MAGIC: [u8; 4] = *b"CHQF";
pub const VERSION: u32 = 1;

pub fn write_field<S: Scalar, W: Write>(field: &FieldOf<S>, mut out: W) -> Result<()> {
    let grid = field.grid();
    out.write_all(&MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&[grid.dimension() as u8])?;
    out.write_all(&(grid.points_per_axis() as u64).to_le_bytes())?;
    out.write_all(&grid.half_length().to_le_bytes())?;
    for v in field.values() {
        out.write_all(&v.as_f64().to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

fn read_array<const K: usize, R: Read>(input: &mut R, what: &str) -> Result<[u8; K]> {
    let mut buf = [0u8; K];
    input
        .read_exact(&mut buf)
        .map_err(|_| Error::Format(format!("truncated {what}")))?;
    Ok(buf)
}

pub fn read_field<S: Scalar, R: Read>(mut input: R) -> Result<FieldOf<S>> {
    let magic: [u8; 4] = read_array(&mut input, "magic")?;
    if magic != MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}")));
    }
    let version = u32::from_le_bytes(read_array(&mut input, "version")?);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let [dimension] = read_array::<1, _>(&mut input, "dimension")?;
    let n = u64::from_le_bytes(read_array(&mut input, "point count")?);
    let half_length = f64::from_le_bytes(read_array(&mut input, "half length")?);
    let n = usize::try_from(n).map_err(|_| Error::Format("point count overflows".into()))?;
    let grid = GridSpec::new(dimension as usize, half_length, n)?;
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        values.push(S::lit(f64::from_le_bytes(read_array(
            &mut input, "values",
        )?)));
    }
    let mut trailing = [0u8; 1];
    if input.read(&mut trailing)? != 0 {
        return Err(Error::Format("trailing bytes after values".into()));
    }
    FieldOf::new(grid, values)
}

pub fn save<S: Scalar>(field: &FieldOf<S>, path: impl AsRef<Path>) -> Result<()> {
    write_field(field, BufWriter::new(File::create(path)?))
}

pub fn load<S: Scalar>(path: impl AsRef<Path>) -> Result<FieldOf<S>> {
    read_field(BufReader::new(File::open(path)?))
}
