//! File formats: field snapshots, diagnostics CSVs, radial-state and
//! ensemble files. Everything is written with fixed formatting so reruns
//! are bit-for-bit identical. The layouts are documented in docs/formats.md.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::diagnostics::FlowDiagnostics;
use crate::dynamics::{TrajectoryRecord, TrajectorySample};
use crate::error::{Error, Result};
use crate::field::VorticityField;
use crate::grid::Grid;
use crate::meanfield::{MeanFieldState, ThermoPoint};
use crate::particles::VortexEnsemble;

/// 17 significant digits: round-trips f64 exactly and deterministically.
fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

// ---------------------------------------------------------------------
// field snapshots: one JSON header line + n^2 little-endian f64, row-major
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub l: f64,
    pub n: usize,
    pub time: f64,
    pub diagnostics: FlowDiagnostics,
}

pub fn write_snapshot(
    path: &Path,
    field: &VorticityField,
    time: f64,
    diag: &FlowDiagnostics,
) -> Result<()> {
    let header = SnapshotHeader {
        l: field.grid().half_width(),
        n: field.grid().n(),
        time,
        diagnostics: *diag,
    };
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    for &v in field.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<(VorticityField, SnapshotHeader)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut line = String::new();
    r.read_line(&mut line)?;
    let header: SnapshotHeader = serde_json::from_str(line.trim_end())?;
    let grid = Grid::new(header.l, header.n)?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let expected = grid.cell_count() * 8;
    if bytes.len() != expected {
        return Err(Error::SnapshotFormat(format!(
            "expected {expected} payload bytes for a {0}^2 grid, found {1}",
            header.n,
            bytes.len()
        )));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let field = VorticityField::from_values(grid, values)?;
    Ok((field, header))
}

// ---------------------------------------------------------------------
// diagnostics CSV: t,Mx,My,E,I,S,Z2,K,V,a,b,residual
// ---------------------------------------------------------------------

pub const DIAGNOSTICS_CSV_HEADER: &str = "t,Mx,My,E,I,S,Z2,K,V,a,b,residual";

pub fn diagnostics_csv_row(s: &TrajectorySample) -> String {
    let d = &s.diag;
    [
        fmt(s.t),
        fmt(d.m[0]),
        fmt(d.m[1]),
        fmt(d.e),
        fmt(d.i),
        fmt(d.s),
        fmt(d.z2),
        fmt(d.k),
        fmt(d.v),
        fmt(s.mult.a),
        fmt(s.mult.b),
        fmt(s.residual),
    ]
    .join(",")
}

pub fn write_diagnostics_csv(path: &Path, record: &TrajectoryRecord) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{DIAGNOSTICS_CSV_HEADER}")?;
    for s in &record.samples {
        writeln!(w, "{}", diagnostics_csv_row(s))?;
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------
// thermodynamic table CSV: a,b,F,E,I,S
// ---------------------------------------------------------------------

pub fn write_thermo_csv(path: &Path, points: &[ThermoPoint]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "a,b,F,E,I,S")?;
    for p in points {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            fmt(p.a),
            fmt(p.b),
            fmt(p.f),
            fmt(p.e),
            fmt(p.i),
            fmt(p.s)
        )?;
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------
// radial state: one JSON header line + "r,omega,psi" rows
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialHeader {
    pub a: f64,
    pub b: f64,
    pub z: f64,
    pub e: f64,
    pub i: f64,
    pub s: f64,
    pub f: f64,
    pub points: usize,
}

pub fn write_radial_state(path: &Path, st: &MeanFieldState) -> Result<()> {
    let header = RadialHeader {
        a: st.a,
        b: st.b,
        z: st.z,
        e: st.e,
        i: st.i,
        s: st.s,
        f: st.f,
        points: st.r.len(),
    };
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\nr,omega,psi\n")?;
    for k in 0..st.r.len() {
        writeln!(w, "{},{},{}", fmt(st.r[k]), fmt(st.omega[k]), fmt(st.psi[k]))?;
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------
// ensemble snapshot: one JSON header line + "x,y" rows
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleHeader {
    pub n: usize,
    pub delta: f64,
    pub seed: u64,
    pub t: f64,
}

pub fn write_ensemble(path: &Path, e: &VortexEnsemble, t: f64) -> Result<()> {
    let header = EnsembleHeader {
        n: e.len(),
        delta: e.delta(),
        seed: e.seed(),
        t,
    };
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\nx,y\n")?;
    for p in e.positions() {
        writeln!(w, "{},{}", fmt(p[0]), fmt(p[1]))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_ensemble(path: &Path) -> Result<(VortexEnsemble, EnsembleHeader)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut line = String::new();
    r.read_line(&mut line)?;
    let header: EnsembleHeader = serde_json::from_str(line.trim_end())?;
    let mut column_line = String::new();
    r.read_line(&mut column_line)?;
    if column_line.trim_end() != "x,y" {
        return Err(Error::SnapshotFormat(format!(
            "expected 'x,y' column line, found {column_line:?}"
        )));
    }
    let mut positions = Vec::with_capacity(header.n);
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.splitn(2, ',');
        let x: f64 = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::SnapshotFormat(format!("bad ensemble row {line:?}")))?;
        let y: f64 = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::SnapshotFormat(format!("bad ensemble row {line:?}")))?;
        positions.push([x, y]);
    }
    if positions.len() != header.n {
        return Err(Error::SnapshotFormat(format!(
            "ensemble header says {} particles, file holds {}",
            header.n,
            positions.len()
        )));
    }
    let e = VortexEnsemble::from_positions(positions, header.delta, header.seed)?;
    Ok((e, header))
}

// ---------------------------------------------------------------------
// particle trajectory statistics CSV: t,H,b_N,I_emp,E_emp
// ---------------------------------------------------------------------

pub const PARTICLE_CSV_HEADER: &str = "t,H,b_N,I_emp,E_emp";

pub fn particle_csv_row(t: f64, h: f64, b_n: f64, i_emp: f64, e_emp: f64) -> String {
    [fmt(t), fmt(h), fmt(b_n), fmt(i_emp), fmt(e_emp)].join(",")
}
