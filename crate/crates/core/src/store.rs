//! Plain-file intermediate stores. JSON files wrap their payload with the
//! run's config hash; CSV files carry it on a leading `# config_hash=` line.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::analysis::Normalization;
use crate::error::{Error, Result};
use crate::som::{Placement, SomGrid};
use crate::timbre::TimbreVector;

pub const HASH_COMMENT: &str = "# config_hash=";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stamped<T> {
    pub config_hash: String,
    pub data: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimbreRecord {
    pub id: String,
    pub group: String,
    pub vector: TimbreVector,
    pub frame_count: usize,
    pub usable_frames: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TonalRecord {
    pub id: String,
    pub group: String,
    pub octave_base_cents: f64,
    pub total_frames: usize,
    pub melody_notes: usize,
    pub bins: Vec<f64>,
}

/// A piece left out of one of the stores, with the reason.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exclusion {
    pub id: String,
    pub stage: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationRecord {
    pub features: Vec<String>,
    pub normalization: Normalization,
}

/// Grid plus what is needed to rebuild its training vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRecord {
    pub kind: String,
    pub grid: SomGrid,
}

/// A placement with its piece's group label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementRow {
    pub id: String,
    pub group: String,
    pub row: usize,
    pub col: usize,
    pub correlation: f64,
}

impl PlacementRow {
    pub fn placement(&self) -> Placement {
        Placement {
            id: self.id.clone(),
            row: self.row,
            col: self.col,
            correlation: self.correlation,
        }
    }
}

fn create(path: &Path) -> Result<File> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    let mut f = create(path)?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Store(format!("{}: {e}", path.display())))
}

pub fn write_stamped<T: Serialize>(path: &Path, hash: &str, data: &T) -> Result<()> {
    #[derive(Serialize)]
    struct Out<'a, T> {
        config_hash: &'a str,
        data: &'a T,
    }
    write_json(path, &Out { config_hash: hash, data })
}

fn check_hash(path: &Path, found: &str, expected: &str) -> Result<()> {
    if found != expected {
        return Err(Error::ConfigMismatch {
            path: path.to_path_buf(),
            found: found.to_owned(),
            expected: expected.to_owned(),
        });
    }
    Ok(())
}

/// Reads a stamped JSON store and rejects it if the hash differs.
pub fn read_stamped<T: DeserializeOwned>(path: &Path, expected_hash: &str) -> Result<T> {
    let s: Stamped<T> = read_json(path)?;
    check_hash(path, &s.config_hash, expected_hash)?;
    Ok(s.data)
}

/// Writes serde rows to CSV after the hash comment line.
pub fn write_csv<T: Serialize>(path: &Path, hash: &str, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut f = create(path)?;
    writeln!(f, "{HASH_COMMENT}{hash}").map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(f);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Like [`write_csv`] for rows that are plain string cells.
pub fn write_csv_records(path: &Path, hash: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut f = create(path)?;
    writeln!(f, "{HASH_COMMENT}{hash}").map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(f);
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Hash from a CSV file's comment line, if present.
pub fn csv_hash(path: &Path) -> Result<Option<String>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut first = String::new();
    BufReader::new(f)
        .read_line(&mut first)
        .map_err(|e| Error::io(path, e))?;
    Ok(first.trim_end().strip_prefix(HASH_COMMENT).map(str::to_owned))
}

pub fn read_csv<T: DeserializeOwned>(path: &Path, expected_hash: &str) -> Result<Vec<T>> {
    match csv_hash(path)? {
        Some(h) => check_hash(path, &h, expected_hash)?,
        None => return Err(Error::Store(format!("{} has no config hash line", path.display()))),
    }
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(f);
    r.deserialize()
        .map(|row| row.map_err(|e| Error::Store(format!("{}: {e}", path.display()))))
        .collect()
}

/// Optional float as an empty CSV cell.
pub fn opt_cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}
