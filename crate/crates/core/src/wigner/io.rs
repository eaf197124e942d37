//! Serialization of Wigner grids.
//!
//! CSV: optional `#` comment lines, then one `x,p,W` row per grid point with
//! `x` varying slowest. Binary: four little-endian `f64` header values
//! `nx, np, dx, dp` followed by the `nx * np` values row-major in `x`.

use std::io::{self, Read, Write};

use super::WignerGrid;
use crate::error::{Error, Result};

pub fn write_wigner_csv<W: Write>(grid: &WignerGrid, comments: &[String], mut out: W) -> io::Result<()> {
    for line in comments {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "x,p,W")?;
    for (i, x) in grid.grid_x.iter().enumerate() {
        for (j, p) in grid.grid_p.iter().enumerate() {
            writeln!(out, "{x:.16e},{p:.16e},{:.16e}", grid.get(i, j))?;
        }
    }
    Ok(())
}

pub fn write_wigner_binary<W: Write>(grid: &WignerGrid, mut out: W) -> io::Result<()> {
    for h in [grid.nx() as f64, grid.np() as f64, grid.dx(), grid.dp()] {
        out.write_all(&h.to_le_bytes())?;
    }
    for v in &grid.values {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Contents of a binary Wigner dump. The absolute grid origin is not stored.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerBinary {
    pub nx: usize,
    pub np: usize,
    pub dx: f64,
    pub dp: f64,
    pub values: Vec<f64>,
}

pub fn read_wigner_binary<R: Read>(mut input: R) -> Result<WignerBinary> {
    let mut bytes = Vec::new();
    input
        .read_to_end(&mut bytes)
        .map_err(|e| Error::Format(format!("reading Wigner dump: {e}")))?;
    if bytes.len() < 32 || bytes.len() % 8 != 0 {
        return Err(Error::Format(format!("Wigner dump has invalid length {}", bytes.len())));
    }
    let words: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    let count = |v: f64, name: &str| -> Result<usize> {
        if v.is_finite() && v >= 1.0 && v.fract() == 0.0 {
            Ok(v as usize)
        } else {
            Err(Error::Format(format!("Wigner dump header {name} = {v} is not a count")))
        }
    };
    let nx = count(words[0], "nx")?;
    let np = count(words[1], "np")?;
    let values = words[4..].to_vec();
    if values.len() != nx * np {
        return Err(Error::Format(format!(
            "Wigner dump holds {} values, header promises {nx} x {np}",
            values.len()
        )));
    }
    Ok(WignerBinary { nx, np, dx: words[2], dp: words[3], values })
}
