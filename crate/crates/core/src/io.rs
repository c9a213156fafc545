//! CSV files for paths, lifts and reports, with `key=value` sidecars.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::grid::{GridPath, TimeGrid};

/// Formats like C's `%.12e`, e.g. `1.250000000000e-01`.
pub fn fmt_e12(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{x:.12e}");
    let (mant, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mant}e{sign}{:02}", exp.abs())
}

/// Sidecar file path for `path`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

pub fn write_sidecar(path: &Path, meta: &BTreeMap<String, String>) -> Result<()> {
    let mut f = fs::File::create(sidecar_path(path))?;
    for (k, v) in meta {
        writeln!(f, "{k}={v}")?;
    }
    Ok(())
}

pub fn read_sidecar(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(sidecar_path(path))?;
    let mut meta = BTreeMap::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("bad sidecar line `{line}`")))?;
        meta.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(meta)
}

/// Writes `t,x1..xd` rows.
pub fn write_path_csv(path: &Path, p: &GridPath<f64>, meta: &BTreeMap<String, String>) -> Result<()> {
    let mut out = String::with_capacity(p.len() * (p.dim + 1) * 20);
    out.push('t');
    for i in 1..=p.dim {
        out.push_str(&format!(",x{i}"));
    }
    out.push('\n');
    for k in 0..p.len() {
        out.push_str(&fmt_e12(p.grid.time(k)));
        for v in p.at(k) {
            out.push(',');
            out.push_str(&fmt_e12(*v));
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    let mut meta = meta.clone();
    meta.insert("t_start".into(), fmt_e12(p.grid.t_start));
    meta.insert("t_end".into(), fmt_e12(p.grid.t_end));
    meta.insert("n_steps".into(), p.grid.n_steps.to_string());
    meta.insert("dim".into(), p.dim.to_string());
    write_sidecar(path, &meta)
}

/// Reads a file written by [`write_path_csv`].
pub fn read_path_csv(path: &Path) -> Result<GridPath<f64>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty path file".into()))?;
    let dim = header.split(',').count() - 1;
    let mut times = Vec::new();
    let mut values = Vec::new();
    for line in lines.filter(|l| !l.is_empty()) {
        let mut fields = line.split(',');
        let t = parse_f64(fields.next())?;
        times.push(t);
        for _ in 0..dim {
            values.push(parse_f64(fields.next())?);
        }
    }
    if times.len() < 2 {
        return Err(Error::Parse("path needs at least two rows".into()));
    }
    let grid = TimeGrid::new(times[0], *times.last().unwrap(), times.len() - 1)?;
    GridPath::new(grid, dim, values)
}

fn parse_f64(field: Option<&str>) -> Result<f64> {
    let f = field.ok_or_else(|| Error::Parse("missing field".into()))?;
    f.trim().parse().map_err(|_| Error::Parse(format!("bad number `{f}`")))
}

/// Writes a CSV with a header and already-formatted rows.
pub fn write_rows(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}
