//! Plain-text and binary exchange formats.
//!
//! A grid field file starts with one JSON header line `{d, n, L, name}`
//! followed by the values in row-major order: one number per line for CSV,
//! little-endian `f64` for binary. Floats are printed in Rust's shortest
//! round-trip form, so writing is deterministic and reading is lossless.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridField, GridSpec};
use crate::littlewood_paley::DyadicPartition;
use crate::parametrix::ParametrixResult;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub d: usize,
    pub n: usize,
    #[serde(rename = "L")]
    pub length: f64,
    pub name: String,
}

impl FieldHeader {
    fn of(spec: &GridSpec, name: &str) -> Self {
        Self { d: spec.dim(), n: spec.n(), length: spec.length(), name: name.to_string() }
    }

    fn spec(&self) -> Result<GridSpec> {
        GridSpec::new(self.d, self.n, self.length)
    }
}

fn header_line(f: &GridField, name: &str) -> Result<String> {
    serde_json::to_string(&FieldHeader::of(&f.spec, name)).map_err(|e| Error::Parse(e.to_string()))
}

fn read_header(r: &mut impl BufRead) -> Result<FieldHeader> {
    let mut line = String::new();
    r.read_line(&mut line)?;
    serde_json::from_str(line.trim()).map_err(|e| Error::Parse(e.to_string()))
}

pub fn write_field_csv(w: &mut impl Write, f: &GridField, name: &str) -> Result<()> {
    writeln!(w, "{}", header_line(f, name)?)?;
    for v in &f.values {
        writeln!(w, "{v}")?;
    }
    Ok(())
}

pub fn read_field_csv(r: &mut impl BufRead) -> Result<(FieldHeader, GridField)> {
    let header = read_header(r)?;
    let mut values = Vec::new();
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        values.push(line.trim().parse::<f64>().map_err(|e| Error::Parse(e.to_string()))?);
    }
    let field = GridField::new(header.spec()?, values)?;
    Ok((header, field))
}

pub fn write_field_binary(w: &mut impl Write, f: &GridField, name: &str) -> Result<()> {
    writeln!(w, "{}", header_line(f, name)?)?;
    for v in &f.values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_field_binary(r: &mut impl BufRead) -> Result<(FieldHeader, GridField)> {
    let header = read_header(r)?;
    let spec = header.spec()?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != 8 * spec.sites() {
        return Err(Error::Parse(format!("expected {} bytes, got {}", 8 * spec.sites(), bytes.len())));
    }
    let values = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8"))).collect();
    let field = GridField::new(spec, values)?;
    Ok((header, field))
}

/// Writes rows of numbers under a header; the first column may be text.
pub fn write_csv<R: AsRef<[String]>>(w: &mut impl Write, columns: &[&str], rows: &[R]) -> Result<()> {
    writeln!(w, "{}", columns.join(","))?;
    for row in rows {
        writeln!(w, "{}", row.as_ref().join(","))?;
    }
    Ok(())
}

/// `i, ξ, ρ_i(ξ)` on every nonnegative axis frequency.
pub fn write_partition_csv(w: &mut impl Write, part: &DyadicPartition) -> Result<()> {
    let rows: Vec<Vec<String>> =
        part.dump().into_iter().map(|(i, xi, r)| vec![i.to_string(), xi.to_string(), r.to_string()]).collect();
    write_csv(w, &["i", "xi", "rho"], &rows)
}

/// Metadata accompanying a kernel export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParametrixMeta {
    pub t: f64,
    pub y: Vec<f64>,
    #[serde(rename = "K_used")]
    pub k_used: usize,
    pub tail_estimate: f64,
    pub term_sup_norms: Vec<f64>,
    pub richardson_gap: f64,
}

impl ParametrixMeta {
    pub fn of(r: &ParametrixResult) -> Self {
        let pos = r.gamma.spec.position(r.y);
        Self {
            t: r.t,
            y: pos[..r.gamma.spec.dim()].to_vec(),
            k_used: r.k_used,
            tail_estimate: r.tail_estimate,
            term_sup_norms: r.term_sup_norms.clone(),
            richardson_gap: r.richardson_gap,
        }
    }
}

/// Columns `x…, gamma, dgamma…` with one row per site.
pub fn write_parametrix_csv(w: &mut impl Write, r: &ParametrixResult) -> Result<()> {
    let spec = r.gamma.spec;
    let d = spec.dim();
    let mut columns: Vec<String> = ["x1", "x2"][..d].iter().map(|s| s.to_string()).collect();
    columns.push("gamma".into());
    columns.extend(["dgamma1", "dgamma2"][..d].iter().map(|s| s.to_string()));
    writeln!(w, "{}", columns.join(","))?;
    for site in 0..spec.sites() {
        let pos = spec.position(site);
        let mut row: Vec<String> = pos[..d].iter().map(|v| v.to_string()).collect();
        row.push(r.gamma.values[site].to_string());
        for c in &r.grad_gamma.components {
            row.push(c.values[site].to_string());
        }
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn write_parametrix_json(w: &mut impl Write, r: &ParametrixResult) -> Result<()> {
    serde_json::to_writer_pretty(&mut *w, &ParametrixMeta::of(r)).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(w)?;
    Ok(())
}
