//! CSV artifacts. Numbers are written with 17 significant digits and `\n`
//! line endings so that reruns are byte-identical.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Full-precision rendering of a float.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write `header` and `rows` to `path`, creating parent directories.
pub fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: AsRef<[String]>,
{
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        writeln!(w, "{}", row.as_ref().join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Column-oriented view of a CSV file with a header line.
#[derive(Debug, Clone)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    path: String,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut lines = text.lines();
        let origin = path.display().to_string();
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| Error::Parse { path: origin.clone(), message: "empty file".into() })?
            .split(',')
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let row: Vec<String> = line.split(',').map(str::to_string).collect();
            if row.len() != header.len() {
                return Err(Error::Parse {
                    path: origin,
                    message: format!("line {} has {} fields, expected {}", i + 2, row.len(), header.len()),
                });
            }
            rows.push(row);
        }
        Ok(Table { header, rows, path: origin })
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let c = self.header.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
            path: self.path.clone(),
            message: format!("missing column {name}"),
        })?;
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r[c].parse::<f64>().map_err(|e| Error::Parse {
                    path: self.path.clone(),
                    message: format!("line {}: {e}", i + 2),
                })
            })
            .collect()
    }
}
