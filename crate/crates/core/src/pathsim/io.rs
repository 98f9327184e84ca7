//! Bundle persistence.
//!
//! CSV has the header `t,G,sigma,Y,drift`; absent paths leave their column empty.
//! Metadata is not kept in CSV, only in the binary form.
//!
//! Binary layout: the 8-byte magic `BSSPATH1`, a little-endian `u32` header length,
//! a JSON header `{n, horizon, seed, meta, columns}`, then each listed column as
//! `⌊nT⌋ + 1` little-endian `f64` values.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{grid_points, PathBundle, PathMeta};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"BSSPATH1";
const COLUMNS: [&str; 4] = ["G", "sigma", "Y", "drift"];

fn columns(b: &PathBundle) -> [Option<&Vec<f64>>; 4] {
    [b.g_path.as_ref(), b.sigma_path.as_ref(), b.y_path.as_ref(), b.drift_path.as_ref()]
}

pub fn write_csv(bundle: &PathBundle, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "G", "sigma", "Y", "drift"])?;
    let cols = columns(bundle);
    for (i, t) in bundle.times().into_iter().enumerate() {
        let mut row = vec![format!("{t}")];
        for c in &cols {
            row.push(c.map(|v| format!("{:e}", v[i])).unwrap_or_default());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a bundle CSV; `n` is recovered from the time column and the seed is unknown (0).
pub fn read_csv(path: impl AsRef<Path>) -> Result<PathBundle> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    let idx = |name: &str| headers.iter().position(|h| h.trim() == name);
    let t_col = idx("t").ok_or_else(|| Error::Data("bundle CSV lacks a t column".into()))?;
    let col_idx: Vec<Option<usize>> = COLUMNS.iter().map(|c| idx(c)).collect();
    let mut times = Vec::new();
    let mut data: Vec<Vec<Option<f64>>> = vec![Vec::new(); 4];
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let parse = |k: usize| -> Result<Option<f64>> {
            match rec.get(k).map(str::trim) {
                None | Some("") => Ok(None),
                Some(s) => s
                    .parse::<f64>()
                    .map(Some)
                    .map_err(|_| Error::Data(format!("row {}: cannot parse {s:?}", row + 2))),
            }
        };
        times.push(parse(t_col)?.ok_or_else(|| Error::Data(format!("row {}: missing t", row + 2)))?);
        for (c, k) in col_idx.iter().enumerate() {
            data[c].push(match k {
                Some(k) => parse(*k)?,
                None => None,
            });
        }
    }
    if times.len() < 3 {
        return Err(Error::Data("bundle CSV needs at least three rows".into()));
    }
    let dt = times[1] - times[0];
    if !(dt > 0.0) {
        return Err(Error::Data("time column must be increasing".into()));
    }
    let n = (1.0 / dt).round() as usize;
    let horizon = (times.len() - 1) as f64 / n as f64;
    let mut out: Vec<Option<Vec<f64>>> = Vec::new();
    for (c, col) in data.into_iter().enumerate() {
        if col.iter().all(Option::is_none) {
            out.push(None);
        } else {
            let v: Option<Vec<f64>> = col.into_iter().collect();
            out.push(Some(v.ok_or_else(|| Error::Data(format!("column {} has empty cells", COLUMNS[c])))?));
        }
    }
    let mut it = out.into_iter();
    Ok(PathBundle {
        n,
        horizon,
        seed: 0,
        g_path: it.next().flatten(),
        sigma_path: it.next().flatten(),
        y_path: it.next().flatten(),
        drift_path: it.next().flatten(),
        meta: PathMeta { method: "csv".into(), ..Default::default() },
    })
}

#[derive(Serialize, Deserialize)]
struct Header {
    n: usize,
    horizon: f64,
    seed: u64,
    meta: PathMeta,
    columns: Vec<String>,
}

pub fn write_binary(bundle: &PathBundle, path: impl AsRef<Path>) -> Result<()> {
    let cols = columns(bundle);
    let header = Header {
        n: bundle.n,
        horizon: bundle.horizon,
        seed: bundle.seed,
        meta: bundle.meta.clone(),
        columns: COLUMNS.iter().zip(&cols).filter(|(_, c)| c.is_some()).map(|(n, _)| n.to_string()).collect(),
    };
    let json = serde_json::to_vec(&header)?;
    let len = u32::try_from(json.len()).map_err(|_| Error::Data("header too large".into()))?;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&len.to_le_bytes())?;
    w.write_all(&json)?;
    for c in cols.into_iter().flatten() {
        for v in c {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_binary(path: impl AsRef<Path>) -> Result<PathBundle> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Data("not a bundle file (bad magic)".into()));
    }
    let mut len = [0u8; 4];
    r.read_exact(&mut len)?;
    let mut json = vec![0u8; u32::from_le_bytes(len) as usize];
    r.read_exact(&mut json)?;
    let header: Header = serde_json::from_slice(&json)?;
    let points = grid_points(header.n, header.horizon);
    let mut bundle = PathBundle {
        n: header.n,
        horizon: header.horizon,
        seed: header.seed,
        g_path: None,
        sigma_path: None,
        y_path: None,
        drift_path: None,
        meta: header.meta,
    };
    let mut buf = [0u8; 8];
    for name in &header.columns {
        let mut v = Vec::with_capacity(points);
        for _ in 0..points {
            r.read_exact(&mut buf)?;
            v.push(f64::from_le_bytes(buf));
        }
        let slot = match name.as_str() {
            "G" => &mut bundle.g_path,
            "sigma" => &mut bundle.sigma_path,
            "Y" => &mut bundle.y_path,
            "drift" => &mut bundle.drift_path,
            other => return Err(Error::Data(format!("unknown column {other}"))),
        };
        *slot = Some(v);
    }
    Ok(bundle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::KernelSpec;
    use crate::pathsim::{simulate_bss, BssOptions, VolatilityModel};

    fn bundle() -> PathBundle {
        simulate_bss(&KernelSpec::power_law(-0.3), &VolatilityModel::constant(1.5), 32, 1.0, 8, &BssOptions::default())
            .unwrap()
    }

    #[test]
    fn binary_round_trip_is_exact() {
        let b = bundle();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("b.bin");
        write_binary(&b, &p).unwrap();
        assert_eq!(read_binary(&p).unwrap(), b);
    }

    #[test]
    fn csv_round_trip_keeps_values() {
        let b = bundle();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("b.csv");
        write_csv(&b, &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().count(), 34);
        let r = read_csv(&p).unwrap();
        assert_eq!(r.n, 32);
        assert_eq!(r.y_path, b.y_path);
        assert_eq!(r.g_path, b.g_path);
        assert!(r.drift_path.is_none());
    }

    #[test]
    fn bad_magic_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.bin");
        std::fs::write(&p, b"NOTABUNDLE").unwrap();
        assert!(matches!(read_binary(&p), Err(Error::Data(_))));
    }
}
