//! Series ingestion and export: long CSV (header t,i,j,value, 1-based
//! indices, cells in any order but each exactly once) and a dense
//! little-endian binary format with a fixed 32-byte header.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use eigenwatch::MatrixSeries;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum DataFormat {
    Csv,
    Binary,
}

impl DataFormat {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "csv" => Ok(DataFormat::Csv),
            "binary" => Ok(DataFormat::Binary),
            other => Err(CliError::Config(format!(
                "unknown data format {other:?}; expected \"csv\" or \"binary\""
            ))),
        }
    }

    /// Guess from a file extension; .csv is CSV, .mcpd or .bin is binary.
    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => Ok(DataFormat::Csv),
            Some("mcpd") | Some("bin") => Ok(DataFormat::Binary),
            _ => Err(CliError::Config(format!(
                "cannot infer data format from {}; pass format explicitly",
                path.display()
            ))),
        }
    }
}

const MAGIC: &[u8; 4] = b"MCPD";
const BINARY_VERSION: u16 = 1;
const HEADER_LEN: usize = 32;
const MAX_CELLS: u64 = 100_000_000;

pub fn ingest(path: &Path, format: DataFormat) -> Result<MatrixSeries> {
    match format {
        DataFormat::Csv => read_csv(path),
        DataFormat::Binary => read_binary(path),
    }
}

pub fn export(series: &MatrixSeries, path: &Path, format: DataFormat) -> Result<()> {
    match format {
        DataFormat::Csv => write_csv(series, path),
        DataFormat::Binary => write_binary(series, path),
    }
}

fn read_csv(path: &Path) -> Result<MatrixSeries> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut lines = text.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((_, line)) if line.trim().is_empty() => continue,
            Some((no, line)) => break (no + 1, line),
            None => return Err(CliError::Format("format error: empty file".into())),
        }
    };
    let header_fields: Vec<&str> = header.1.split(',').map(str::trim).collect();
    if header_fields != ["t", "i", "j", "value"] {
        return Err(CliError::Format(format!(
            "format error at line {}: header must be t,i,j,value",
            header.0
        )));
    }

    struct Cell {
        t: usize,
        i: usize,
        j: usize,
        value: f64,
        line: usize,
    }
    let mut cells: Vec<Cell> = Vec::new();
    let (mut t_max, mut i_max, mut j_max) = (0usize, 0usize, 0usize);
    for (no, line) in lines {
        let line_no = no + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(CliError::Format(format!(
                "format error at line {line_no}: expected 4 comma-separated fields"
            )));
        }
        let index = |s: &str, name: &str| -> Result<usize> {
            let v: usize = s.parse().map_err(|_| {
                CliError::Format(format!(
                    "format error at line {line_no}: {name} = {s:?} is not a positive integer"
                ))
            })?;
            if v == 0 {
                return Err(CliError::Format(format!(
                    "format error at line {line_no}: {name} must be 1-based"
                )));
            }
            Ok(v)
        };
        let t = index(fields[0], "t")?;
        let i = index(fields[1], "i")?;
        let j = index(fields[2], "j")?;
        let value: f64 = fields[3].parse().map_err(|_| {
            CliError::Format(format!(
                "format error at line {line_no}: value {:?} is not a number",
                fields[3]
            ))
        })?;
        if !value.is_finite() {
            return Err(CliError::Domain(format!(
                "non-finite value at line {line_no} (t={t}, i={i}, j={j})"
            )));
        }
        t_max = t_max.max(t);
        i_max = i_max.max(i);
        j_max = j_max.max(j);
        cells.push(Cell {
            t,
            i,
            j,
            value,
            line: line_no,
        });
    }
    if cells.is_empty() {
        return Err(CliError::Format("format error: no data rows".into()));
    }
    let total = t_max as u64 * i_max as u64 * j_max as u64;
    if total > MAX_CELLS {
        return Err(CliError::Format(format!(
            "format error: implied dimensions {t_max}x{i_max}x{j_max} exceed {MAX_CELLS} cells"
        )));
    }

    let mut data = vec![0.0_f64; total as usize];
    let mut seen = vec![0usize; total as usize];
    let flat = |t: usize, i: usize, j: usize| ((t - 1) * i_max + (i - 1)) * j_max + (j - 1);
    for cell in &cells {
        let slot = flat(cell.t, cell.i, cell.j);
        if seen[slot] != 0 {
            return Err(CliError::Format(format!(
                "format error at line {}: duplicate cell (t={}, i={}, j={})",
                cell.line, cell.t, cell.i, cell.j
            )));
        }
        seen[slot] = cell.line;
        data[slot] = cell.value;
    }
    for t in 1..=t_max {
        for i in 1..=i_max {
            for j in 1..=j_max {
                if seen[flat(t, i, j)] == 0 {
                    return Err(CliError::Format(format!(
                        "format error: missing cell (t={t}, i={i}, j={j})"
                    )));
                }
            }
        }
    }
    Ok(MatrixSeries::from_flat(t_max, i_max, j_max, data)?)
}

fn write_csv(series: &MatrixSeries, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut out = BufWriter::new(file);
    let (p1, p2) = series.dims();
    let write = |out: &mut BufWriter<fs::File>| -> std::io::Result<()> {
        writeln!(out, "t,i,j,value")?;
        for t in 0..series.len() {
            let obs = series.obs(t);
            for i in 0..p1 {
                for j in 0..p2 {
                    writeln!(out, "{},{},{},{}", t + 1, i + 1, j + 1, obs[[i, j]])?;
                }
            }
        }
        out.flush()
    };
    write(&mut out).map_err(|e| CliError::io(path, e))
}

fn read_binary(path: &Path) -> Result<MatrixSeries> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    if bytes.len() < HEADER_LEN {
        return Err(CliError::Format(format!(
            "format error: file is {} bytes, below the {HEADER_LEN}-byte header",
            bytes.len()
        )));
    }
    if &bytes[0..4] != MAGIC {
        return Err(CliError::Format("format error: bad magic, not an MCPD file".into()));
    }
    let version = u16::from_le_bytes(bytes[4..6].try_into().unwrap());
    if version != BINARY_VERSION {
        return Err(CliError::Format(format!(
            "format error: unsupported MCPD version {version}"
        )));
    }
    let p1 = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
    let p2 = u32::from_le_bytes(bytes[10..14].try_into().unwrap()) as usize;
    let t_len = u64::from_le_bytes(bytes[14..22].try_into().unwrap());
    if p1 == 0 || p2 == 0 || t_len == 0 {
        return Err(CliError::Format(format!(
            "format error: header declares empty dimensions T={t_len}, p1={p1}, p2={p2}"
        )));
    }
    let total = t_len * p1 as u64 * p2 as u64;
    if total > MAX_CELLS {
        return Err(CliError::Format(format!(
            "format error: header implies {total} cells, above the {MAX_CELLS} limit"
        )));
    }
    let expected = HEADER_LEN as u64 + total * 8;
    if bytes.len() as u64 != expected {
        return Err(CliError::Format(format!(
            "format error: payload is {} bytes, header implies {expected}",
            bytes.len()
        )));
    }
    let mut data = Vec::with_capacity(total as usize);
    for chunk in bytes[HEADER_LEN..].chunks_exact(8) {
        let v = f64::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            let idx = data.len();
            let j = idx % p2;
            let i = (idx / p2) % p1;
            let t = idx / (p1 * p2);
            return Err(CliError::Domain(format!(
                "non-finite value at cell (t={}, i={}, j={})",
                t + 1,
                i + 1,
                j + 1
            )));
        }
        data.push(v);
    }
    Ok(MatrixSeries::from_flat(t_len as usize, p1, p2, data)?)
}

fn write_binary(series: &MatrixSeries, path: &Path) -> Result<()> {
    let (p1, p2) = series.dims();
    let mut bytes = Vec::with_capacity(HEADER_LEN + series.len() * p1 * p2 * 8);
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&BINARY_VERSION.to_le_bytes());
    bytes.extend_from_slice(&(p1 as u32).to_le_bytes());
    bytes.extend_from_slice(&(p2 as u32).to_le_bytes());
    bytes.extend_from_slice(&(series.len() as u64).to_le_bytes());
    bytes.resize(HEADER_LEN, 0);
    for t in 0..series.len() {
        let obs = series.obs(t);
        for i in 0..p1 {
            for j in 0..p2 {
                bytes.extend_from_slice(&obs[[i, j]].to_le_bytes());
            }
        }
    }
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}
