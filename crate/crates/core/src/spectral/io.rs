//! Binary field snapshots: one `#` header line of `key=value` pairs followed
//! by little-endian `f64` values, row-major over (horizontal, vertical) index.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};

use super::field::{Field, Parity, Space};
use super::grid::SlabGrid;
use crate::error::{Error, Result};

pub fn write_field<W: Write>(mut w: W, f: &Field) -> Result<()> {
    let g = f.grid();
    writeln!(
        w,
        "# N1={} N2={} parity={} space={} L={:e} h={:e}",
        g.n1(),
        g.n2(),
        f.parity().name(),
        f.space().name(),
        g.l(),
        g.h()
    )?;
    let mut bytes = Vec::with_capacity(8 * f.data().len());
    for v in f.data() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&bytes)?;
    Ok(())
}

pub fn read_field<R: Read>(r: R) -> Result<Field> {
    let mut reader = BufReader::new(r);
    let mut header = String::new();
    reader.read_line(&mut header)?;
    let header = header
        .trim_end()
        .strip_prefix('#')
        .ok_or_else(|| Error::Format("missing '#' header".into()))?;
    let kv: HashMap<&str, &str> = header
        .split_whitespace()
        .filter_map(|tok| tok.split_once('='))
        .collect();
    let get = |key: &str| {
        kv.get(key)
            .copied()
            .ok_or_else(|| Error::Format(format!("header lacks {key}")))
    };
    let num = |key: &str| -> Result<f64> {
        get(key)?
            .parse()
            .map_err(|_| Error::Format(format!("bad value for {key}")))
    };
    let int = |key: &str| -> Result<usize> {
        get(key)?
            .parse()
            .map_err(|_| Error::Format(format!("bad value for {key}")))
    };
    let grid = SlabGrid::new(num("L")?, num("h")?, int("N1")?, int("N2")?)?;
    let parity = match get("parity")? {
        "dirichlet" => Parity::Dirichlet,
        "neumann" => Parity::Neumann,
        other => return Err(Error::Format(format!("unknown parity {other}"))),
    };
    let space = match get("space")? {
        "physical" => Space::Physical,
        "spectral" => Space::Spectral,
        other => return Err(Error::Format(format!("unknown space {other}"))),
    };
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    if bytes.len() != 8 * grid.len() {
        return Err(Error::Format(format!(
            "payload has {} bytes, expected {}",
            bytes.len(),
            8 * grid.len()
        )));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Field::from_data(grid, parity, space, data)
}
