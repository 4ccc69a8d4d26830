//! Small CSV helpers shared by the subcommands.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

/// Writes `rows` under `header` to `path` and returns the path.
pub fn write_csv(path: PathBuf, header: &[String], rows: &[Vec<String>]) -> Result<PathBuf> {
    let mut w =
        csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

pub fn to_csv_string(header: &[String], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

/// Numeric table keyed by `pvs_id`, one map per value column.
pub struct KeyedTable {
    pub columns: Vec<String>,
    pub rows: BTreeMap<String, Vec<Option<f64>>>,
}

impl KeyedTable {
    pub fn read(path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .with_context(|| format!("reading {}", path.display()))?;
        let headers = rdr.headers()?.clone();
        let Some(key) = headers.iter().position(|h| h == "pvs_id") else {
            bail!("{}: missing column `pvs_id`", path.display());
        };
        let columns: Vec<String> = headers
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != key)
            .map(|(_, h)| h.to_string())
            .collect();
        let mut rows = BTreeMap::new();
        for rec in rdr.records() {
            let rec = rec.with_context(|| format!("reading {}", path.display()))?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            let mut values = Vec::with_capacity(columns.len());
            for (i, cell) in rec.iter().enumerate() {
                if i == key {
                    continue;
                }
                values.push(if cell.is_empty() {
                    None
                } else {
                    Some(cell.parse::<f64>().with_context(|| {
                        format!("{}:{line}: `{cell}` is not a number", path.display())
                    })?)
                });
            }
            let id = rec.get(key).unwrap_or_default().to_string();
            if rows.insert(id.clone(), values).is_some() {
                bail!("{}:{line}: duplicate pvs_id `{id}`", path.display());
            }
        }
        Ok(KeyedTable { columns, rows })
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }
}
