//! Grid function exchange formats: CSV rows of (index tuple, value) and a
//! raw little-endian binary layout with a `{d, N}` header. Both round-trip
//! bit-exactly.

use crate::grid::{GridError, GridFunction};
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use thiserror::Error;

const RAW_MAGIC: &[u8; 8] = b"WLABGRID";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("bad raw header: {0}")]
    BadHeader(String),
    #[error("grid: {0}")]
    Grid(#[from] GridError),
}

/// Formats a float with 17 significant digits, enough to reproduce any f64
/// exactly on parse.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_csv(f: &GridFunction, writer: impl Write) -> Result<(), IoError> {
    let mut out = BufWriter::new(writer);
    let d = f.dim();
    let header: Vec<String> = (0..d)
        .map(|j| format!("i{j}"))
        .chain(["value".into()])
        .collect();
    writeln!(out, "{}", header.join(","))?;
    for flat in 0..f.len() {
        let mut row = String::new();
        for j in 0..d {
            row.push_str(&f.coord(flat, j).to_string());
            row.push(',');
        }
        row.push_str(&fmt_f64(f.values()[flat]));
        writeln!(out, "{row}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_csv(n: usize, d: usize, reader: impl Read) -> Result<GridFunction, IoError> {
    let buf = BufReader::new(reader);
    let len = n.pow(d as u32);
    let mut values = vec![f64::NAN; len];
    let mut filled = vec![false; len];
    for (lineno, line) in buf.lines().enumerate() {
        let line = line?;
        if lineno == 0 || line.trim().is_empty() {
            continue; // header
        }
        let fields: Vec<&str> = line.trim().split(',').collect();
        if fields.len() != d + 1 {
            return Err(IoError::Parse {
                line: lineno + 1,
                msg: format!("expected {} fields, got {}", d + 1, fields.len()),
            });
        }
        let mut flat = 0usize;
        for &ffield in &fields[..d] {
            let c: usize = ffield.parse().map_err(|e| IoError::Parse {
                line: lineno + 1,
                msg: format!("bad index `{ffield}`: {e}"),
            })?;
            if c >= n {
                return Err(IoError::Parse {
                    line: lineno + 1,
                    msg: format!("index {c} out of range for N={n}"),
                });
            }
            flat = flat * n + c;
        }
        let v: f64 = fields[d].parse().map_err(|e| IoError::Parse {
            line: lineno + 1,
            msg: format!("bad value `{}`: {e}", fields[d]),
        })?;
        values[flat] = v;
        filled[flat] = true;
    }
    if let Some(missing) = filled.iter().position(|&f| !f) {
        return Err(IoError::Parse {
            line: 0,
            msg: format!("missing entry for flat index {missing}"),
        });
    }
    Ok(GridFunction::from_values(n, d, values)?)
}

pub fn write_raw(f: &GridFunction, writer: impl Write) -> Result<(), IoError> {
    let mut out = BufWriter::new(writer);
    out.write_all(RAW_MAGIC)?;
    out.write_all(&(f.dim() as u32).to_le_bytes())?;
    out.write_all(&(f.n() as u32).to_le_bytes())?;
    for &v in f.values() {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_raw(reader: impl Read) -> Result<GridFunction, IoError> {
    let mut inp = BufReader::new(reader);
    let mut magic = [0u8; 8];
    inp.read_exact(&mut magic)?;
    if &magic != RAW_MAGIC {
        return Err(IoError::BadHeader("magic mismatch".into()));
    }
    let mut word = [0u8; 4];
    inp.read_exact(&mut word)?;
    let d = u32::from_le_bytes(word) as usize;
    inp.read_exact(&mut word)?;
    let n = u32::from_le_bytes(word) as usize;
    if d == 0 || n == 0 || n.checked_pow(d as u32).is_none() {
        return Err(IoError::BadHeader(format!(
            "implausible shape N={n}, d={d}"
        )));
    }
    let len = n.pow(d as u32);
    let mut values = Vec::with_capacity(len);
    let mut chunk = [0u8; 8];
    for _ in 0..len {
        inp.read_exact(&mut chunk)?;
        values.push(f64::from_le_bytes(chunk));
    }
    Ok(GridFunction::from_values(n, d, values)?)
}

pub fn write_csv_path(f: &GridFunction, path: &Path) -> Result<(), IoError> {
    write_csv(f, std::fs::File::create(path)?)
}

pub fn read_csv_path(n: usize, d: usize, path: &Path) -> Result<GridFunction, IoError> {
    read_csv(n, d, std::fs::File::open(path)?)
}

pub fn write_raw_path(f: &GridFunction, path: &Path) -> Result<(), IoError> {
    write_raw(f, std::fs::File::create(path)?)
}

pub fn read_raw_path(path: &Path) -> Result<GridFunction, IoError> {
    read_raw(std::fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn csv_round_trip_is_bit_exact(values in proptest::collection::vec(-1e12f64..1e12, 16)) {
            let f = GridFunction::from_values(4, 2, values).unwrap();
            let mut buf = Vec::new();
            write_csv(&f, &mut buf).unwrap();
            let g = read_csv(4, 2, buf.as_slice()).unwrap();
            prop_assert_eq!(f.values(), g.values());
        }

        #[test]
        fn raw_round_trip_is_bit_exact(values in proptest::collection::vec(prop::num::f64::NORMAL | prop::num::f64::ZERO, 8)) {
            let f = GridFunction::from_values(8, 1, values).unwrap();
            let mut buf = Vec::new();
            write_raw(&f, &mut buf).unwrap();
            let g = read_raw(buf.as_slice()).unwrap();
            prop_assert_eq!(f.values(), g.values());
            prop_assert_eq!((f.n(), f.dim()), (g.n(), g.dim()));
        }
    }

    #[test]
    fn csv_rejects_malformed_rows() {
        let junk = "i0,value\n0,1.0\nnope,2.0\n";
        assert!(read_csv(2, 1, junk.as_bytes()).is_err());
        let short = "i0,value\n0,1.0\n";
        assert!(read_csv(2, 1, short.as_bytes()).is_err());
    }

    #[test]
    fn raw_rejects_bad_magic() {
        let junk = b"NOTAGRID\x01\x00\x00\x00\x02\x00\x00\x00";
        assert!(read_raw(junk.as_slice()).is_err());
    }
}
