//! HKF1 field files: magic `HKFIELD1`, `u32` LE `n` and `N`, then `N^(2n)`
//! `f64` LE values in row-major axis order `(x_1, y_1, ..., x_n, y_n)`. A JSON
//! sidecar with the same stem carries the grid metadata.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::grid::{TorusField, TorusGrid};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"HKFIELD1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSidecar {
    pub format: String,
    pub n: usize,
    #[serde(rename = "N")]
    pub points_per_axis: usize,
    pub h: f64,
    pub points: usize,
    pub axes: Vec<String>,
    pub mean_zero: bool,
}

impl FieldSidecar {
    pub fn for_field(u: &TorusField) -> Self {
        let g = u.grid();
        let axes = (1..=g.n()).flat_map(|a| [format!("x{a}"), format!("y{a}")]).collect();
        Self {
            format: "HKF1".into(),
            n: g.n(),
            points_per_axis: g.points_per_axis(),
            h: g.spacing(),
            points: g.len(),
            axes,
            mean_zero: u.mean_zero,
        }
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

pub fn encode_field<W: Write>(mut w: W, u: &TorusField) -> Result<()> {
    let g = u.grid();
    w.write_all(MAGIC)?;
    w.write_all(&(g.n() as u32).to_le_bytes())?;
    w.write_all(&(g.points_per_axis() as u32).to_le_bytes())?;
    for v in u.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_header<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format("truncated HKF1 header".into()),
        _ => Error::Io(e),
    })
}

pub fn decode_field<R: Read>(mut r: R) -> Result<TorusField> {
    let mut magic = [0u8; 8];
    read_header(&mut r, &mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic, not an HKF1 field file".into()));
    }
    let mut word = [0u8; 4];
    read_header(&mut r, &mut word)?;
    let n = u32::from_le_bytes(word) as usize;
    read_header(&mut r, &mut word)?;
    let big_n = u32::from_le_bytes(word) as usize;
    let grid = TorusGrid::new(n, big_n).map_err(|e| Error::Format(e.to_string()))?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != 8 * grid.len() {
        return Err(Error::Format(format!(
            "expected {} values, found {} bytes",
            grid.len(),
            bytes.len()
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    TorusField::new(grid, values).map_err(|e| Error::Format(e.to_string()))
}

/// Writes `path` and its JSON sidecar.
pub fn write_field(path: &Path, u: &TorusField) -> Result<()> {
    encode_field(BufWriter::new(File::create(path)?), u)?;
    let sidecar = serde_json::to_string_pretty(&FieldSidecar::for_field(u))?;
    std::fs::write(sidecar_path(path), sidecar + "\n")?;
    Ok(())
}

/// Reads a field; the sidecar is optional but must agree when present.
pub fn read_field(path: &Path) -> Result<TorusField> {
    let mut u = decode_field(BufReader::new(File::open(path)?))?;
    let side = sidecar_path(path);
    if side.exists() {
        let meta: FieldSidecar = serde_json::from_str(&std::fs::read_to_string(side)?)?;
        let g = u.grid();
        if meta.n != g.n() || meta.points_per_axis != g.points_per_axis() {
            return Err(Error::Format("sidecar disagrees with the field header".into()));
        }
        u.mean_zero = meta.mean_zero;
    }
    Ok(u)
}
