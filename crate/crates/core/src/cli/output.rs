use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::hilbert::io::ArrayRecord;

/// Array output format.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Bin,
    #[default]
    Json,
}

/// A named array produced by a command.
pub struct Artifact {
    pub name: String,
    pub record: ArrayRecord,
}

impl Artifact {
    pub fn new(name: impl Into<String>, record: ArrayRecord) -> Self {
        Artifact { name: name.into(), record }
    }
}

/// Long-format CSV: one index column per axis, then `re,im`.
pub fn record_csv(r: &ArrayRecord) -> String {
    let mut s = String::new();
    for k in 0..r.dims.len() {
        let _ = write!(s, "i{k},");
    }
    s.push_str("re,im\n");
    let mut idx = vec![0usize; r.dims.len()];
    for v in &r.data {
        for i in &idx {
            let _ = write!(s, "{i},");
        }
        let _ = writeln!(s, "{:e},{:e}", v.re, v.im);
        for k in (0..idx.len()).rev() {
            idx[k] += 1;
            if idx[k] < r.dims[k] {
                break;
            }
            idx[k] = 0;
        }
    }
    s
}

fn record_json(r: &ArrayRecord) -> Value {
    json!({
        "dims": r.dims,
        "grid_weights": r.grid.weights(),
        "re": r.data.iter().map(|v| v.re).collect::<Vec<_>>(),
        "im": r.data.iter().map(|v| v.im).collect::<Vec<_>>(),
    })
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Config(format!("cannot create output directory {}: {e}", dir.display())))
}

/// Write arrays and the report. Returns the files written.
///
/// With an output directory, arrays go to `<name>.bin` / `<name>.csv` (or
/// into the report for JSON) and the report to `report.json`. Without one,
/// the report is printed to stdout; binary and CSV arrays then need a
/// directory.
pub fn emit(report: &mut Value, artifacts: &[Artifact], format: Format, out: Option<&Path>) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    match (format, out) {
        (Format::Json, _) => {
            let arrays: serde_json::Map<String, Value> =
                artifacts.iter().map(|a| (a.name.clone(), record_json(&a.record))).collect();
            if !arrays.is_empty() {
                report["arrays"] = Value::Object(arrays);
            }
        }
        (_, None) if !artifacts.is_empty() => {
            return Err(Error::Config("--out is required for csv and bin output".into()));
        }
        (Format::Bin, Some(dir)) => {
            ensure_dir(dir)?;
            for a in artifacts {
                let p = dir.join(format!("{}.bin", a.name));
                a.record.save(&p)?;
                written.push(p);
            }
        }
        (Format::Csv, Some(dir)) => {
            ensure_dir(dir)?;
            for a in artifacts {
                let p = dir.join(format!("{}.csv", a.name));
                fs::write(&p, record_csv(&a.record))?;
                written.push(p);
            }
        }
        _ => {}
    }
    if !written.is_empty() {
        report["files"] = json!(written.iter().map(|p| p.file_name().unwrap().to_string_lossy()).collect::<Vec<_>>());
    }
    let text = serde_json::to_string_pretty(report)?;
    match out {
        Some(dir) => {
            ensure_dir(dir)?;
            let p = dir.join("report.json");
            fs::write(&p, text + "\n")?;
            written.push(p);
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            match writeln!(stdout, "{text}") {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(e.into()),
                _ => {}
            }
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::Grid;
    use num_complex::Complex64;

    #[test]
    fn csv_indexes_row_major() {
        let g = Grid::uniform(2).unwrap();
        let data = (0..8).map(|k| Complex64::new(k as f64, 0.0)).collect();
        let r = ArrayRecord::new(vec![2, 2, 2], g, data).unwrap();
        let csv = record_csv(&r);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "i0,i1,i2,re,im");
        assert_eq!(lines.len(), 9);
        assert!(lines[6].starts_with("1,0,1,5e0"));
    }
}
