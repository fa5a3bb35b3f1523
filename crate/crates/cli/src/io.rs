use std::fs::{self, File};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use crosstraffic::pipeline::{read_jsonl, write_jsonl, CrossTrafficProfile};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Context, Result};

/// Writes through a temporary file in the same directory, so readers never
/// see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).context(format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).context(format!("writing {}", path.display()))?;
    tmp.write_all(bytes).context(format!("writing {}", path.display()))?;
    tmp.persist(path)
        .map_err(|e| CliError::from(e.error))
        .context(format!("writing {}", path.display()))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn read_profiles(path: &Path) -> Result<Vec<CrossTrafficProfile>> {
    let file = File::open(path).context(format!("opening {}", path.display()))?;
    read_jsonl(BufReader::new(file)).context(format!("reading {}", path.display()))
}

pub fn write_profiles(path: &Path, profiles: &[CrossTrafficProfile]) -> Result<()> {
    let mut raw = Vec::new();
    write_jsonl(&mut raw, profiles)?;
    write_atomic(path, &raw)
}

pub fn write_jsonl_values<T: Serialize>(path: &Path, values: &[T]) -> Result<()> {
    let mut raw = Vec::new();
    for v in values {
        serde_json::to_writer(&mut raw, v)?;
        raw.push(b'\n');
    }
    write_atomic(path, &raw)
}

fn csv_reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).context(format!("opening {}", path.display()))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn parse_field(path: &Path, row: usize, field: &str) -> Result<f64> {
    field.parse::<f64>().map_err(|_| {
        CliError::invalid(format!("{}: row {}: `{field}` is not a number", path.display(), row + 1))
    })
}

/// Every number of a headerless CSV, row by row.
pub fn read_series(path: &Path) -> Result<Vec<f64>> {
    Ok(read_matrix_rows(path)?.into_iter().flatten().collect())
}

fn read_matrix_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (i, rec) in csv_reader(path)?.records().enumerate() {
        let rec = rec.context(format!("reading {}", path.display()))?;
        let row: Vec<f64> = rec
            .iter()
            .filter(|f| !f.is_empty())
            .map(|f| parse_field(path, i, f))
            .collect::<Result<_>>()?;
        if !row.is_empty() {
            rows.push(row);
        }
    }
    Ok(rows)
}

/// Rows of a headerless CSV; all rows must have the same width.
pub fn read_matrix(path: &Path) -> Result<Vec<Vec<f64>>> {
    let rows = read_matrix_rows(path)?;
    if let Some(first) = rows.first() {
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != first.len()) {
            return Err(CliError::invalid(format!(
                "{}: row {} has {} columns, expected {}",
                path.display(),
                i + 1,
                r.len(),
                first.len()
            )));
        }
    }
    Ok(rows)
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).context(format!("hashing {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}
