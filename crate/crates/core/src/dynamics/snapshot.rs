//! Snapshot directories: one binary file per field plus a `manifest` of
//! `key=value` lines.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use super::state::{build_a, FlowState, SimConfig};
use super::step::Stepper;
use crate::error::{Error, Result};
use crate::spectral::{read_field, write_field, Field, Parity, VectorField};

/// Extra `key=value` pairs stored alongside the fields.
pub type SnapshotMeta = BTreeMap<String, String>;

const FIELDS: [&str; 5] = ["eta1", "eta2", "u1", "u2", "q"];

pub fn write_snapshot(dir: &Path, state: &FlowState, meta: &SnapshotMeta) -> Result<Vec<String>> {
    fs::create_dir_all(dir)?;
    let fields = [
        &state.eta.c1,
        &state.eta.c2,
        &state.u.c1,
        &state.u.c2,
        &state.q,
    ];
    let mut files = Vec::new();
    for (name, f) in FIELDS.iter().zip(fields) {
        let fname = format!("{name}.bin");
        let mut w = BufWriter::new(File::create(dir.join(&fname))?);
        write_field(&mut w, &f.spectral())?;
        w.flush()?;
        files.push(fname);
    }
    let mut w = BufWriter::new(File::create(dir.join("manifest"))?);
    writeln!(w, "t={:.17e}", state.t)?;
    for (k, v) in meta {
        writeln!(w, "{k}={v}")?;
    }
    w.flush()?;
    files.push("manifest".into());
    Ok(files)
}

/// Load a snapshot and rebuild the derived fields for `cfg`.
pub fn read_snapshot(dir: &Path, cfg: &SimConfig) -> Result<(FlowState, SnapshotMeta)> {
    let text = fs::read_to_string(dir.join("manifest"))?;
    let mut meta: SnapshotMeta = text
        .lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect();
    let t: f64 = meta
        .remove("t")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::Format("snapshot manifest lacks t".into()))?;
    let mut loaded = Vec::new();
    for name in FIELDS {
        let f = read_field(File::open(dir.join(format!("{name}.bin")))?)?;
        if *f.grid() != cfg.grid {
            return Err(Error::GridMismatch(format!(
                "snapshot field {name} is on another grid"
            )));
        }
        loaded.push(f.spectral());
    }
    let expect = [
        Parity::Neumann,
        Parity::Dirichlet,
        Parity::Neumann,
        Parity::Dirichlet,
        Parity::Neumann,
    ];
    for ((f, p), name) in loaded.iter().zip(expect).zip(FIELDS) {
        if f.parity() != p {
            return Err(Error::Format(format!(
                "snapshot field {name} has the wrong parity"
            )));
        }
    }
    let mut it = loaded.into_iter();
    let mut next = || it.next().expect("five fields");
    let eta = VectorField::new(next(), next())?;
    let u = VectorField::new(next(), next())?;
    let q: Field = next();
    let metric = build_a(&eta)?;
    let grid = cfg.grid;
    let mut state = FlowState {
        t,
        eta,
        u,
        q,
        ut: VectorField::zeros(grid, crate::spectral::Space::Spectral),
        metric,
        div_residual: 0.0,
    };
    Stepper::new(cfg)?.reconstruct(&mut state)?;
    Ok((state, meta))
}
