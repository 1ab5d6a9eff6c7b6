use std::fs;
use std::path::{Path, PathBuf};

use growthlab::ingest::{aggregate, parse_events};
use growthlab::table::{read_histograms, read_snapshots, HISTOGRAM_HEADER, SNAPSHOT_HEADER};
use growthlab::{DailySnapshot, EventFormat};

use crate::Failure;

/// Parsed input: full per-user histograms, or `(P, F)` totals only.
pub enum Loaded {
    Days(Vec<DailySnapshot>),
    Totals(Vec<(f64, f64)>),
}

impl Loaded {
    pub fn growth_points(&self) -> Vec<(f64, f64)> {
        match self {
            Loaded::Days(days) => days.iter().map(|d| (d.population as f64, d.total_activity)).collect(),
            Loaded::Totals(pts) => pts.clone(),
        }
    }

    pub fn days(self, what: &str) -> Result<Vec<DailySnapshot>, Failure> {
        match self {
            Loaded::Days(d) => Ok(d),
            Loaded::Totals(_) => Err(Failure::Data(format!(
                "{what} needs per-user activity; give an events file or a histogram table"
            ))),
        }
    }
}

pub struct Input {
    /// File that was actually read.
    pub path: PathBuf,
    pub bytes: Vec<u8>,
    pub data: Loaded,
}

/// A directory stands for the richest table a `simulate` run left in it.
fn resolve(path: &Path) -> Result<PathBuf, Failure> {
    if !path.is_dir() {
        return Ok(path.to_path_buf());
    }
    for name in ["histograms.tsv", "events.csv", "snapshots.tsv"] {
        let p = path.join(name);
        if p.is_file() {
            return Ok(p);
        }
    }
    Err(Failure::Data(format!("{} holds no histograms.tsv, events.csv or snapshots.tsv", path.display())))
}

pub fn load(path: &Path) -> Result<Input, Failure> {
    let path = resolve(path)?;
    let bytes = fs::read(&path).map_err(|e| Failure::Data(format!("cannot read {}: {e}", path.display())))?;
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
    let data = match ext.as_str() {
        "csv" => Loaded::Days(aggregate(&parse_events(&bytes[..], EventFormat::Csv)?)),
        "jsonl" | "ndjson" => Loaded::Days(aggregate(&parse_events(&bytes[..], EventFormat::Jsonl)?)),
        "tsv" => {
            let header = bytes.split(|&b| b == b'\n').next().unwrap_or_default();
            let header = String::from_utf8_lossy(header);
            match header.trim_end() {
                h if h == HISTOGRAM_HEADER => Loaded::Days(read_histograms(&bytes[..])?),
                h if h == SNAPSHOT_HEADER => Loaded::Totals(
                    read_snapshots(&bytes[..])?
                        .into_iter()
                        .map(|r| (r.population as f64, r.total_activity))
                        .collect(),
                ),
                other => {
                    return Err(Failure::Data(format!(
                        "{}: unrecognised table header {other:?}",
                        path.display()
                    )))
                }
            }
        }
        _ => {
            return Err(Failure::Usage(format!(
                "{}: input must be .csv, .jsonl or .tsv",
                path.display()
            )))
        }
    };
    Ok(Input { path, bytes, data })
}
