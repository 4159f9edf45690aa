//! Artifact writing: manifest first, then tables and JSON documents.

use serde::Serialize;
use serde_json::Value;
use std::fs;
use std::path::{Path, PathBuf};

use torus_pam::Result;

pub const MANIFEST_SCHEMA: &str = "torus-pam-manifest/1";
pub const TABLE_SCHEMA: &str = "torus-pam-table/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub schema: &'static str,
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub seed: u64,
    pub format: Format,
    /// every command parameter after defaults and config merging
    pub args: Value,
}

/// Numeric table with named columns.
#[derive(Debug, Clone, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(columns: &[S]) -> Self {
        Self { columns: columns.iter().map(|c| c.as_ref().to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Number(n) => match n.as_f64() {
            Some(f) if n.is_f64() => format!("{f:e}"),
            _ => n.to_string(),
        },
        other => other.to_string(),
    }
}

pub struct Output {
    pub dir: PathBuf,
    pub format: Format,
    pub written: Vec<PathBuf>,
}

impl Output {
    pub fn create(dir: &Path, format: Format) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), format, written: Vec::new() })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.written.push(p.clone());
        p
    }

    pub fn manifest(&mut self, m: &Manifest) -> Result<()> {
        let p = self.path("manifest.json");
        fs::write(p, serde_json::to_string_pretty(m)? + "\n")?;
        Ok(())
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let p = self.path(&format!("{name}.json"));
        fs::write(&p, serde_json::to_string_pretty(value)? + "\n")?;
        Ok(p)
    }

    pub fn bytes(&mut self, name: &str, data: &[u8]) -> Result<PathBuf> {
        let p = self.path(name);
        fs::write(&p, data)?;
        Ok(p)
    }

    pub fn table(&mut self, name: &str, t: &Table) -> Result<PathBuf> {
        match self.format {
            Format::Json => {
                let doc = serde_json::json!({ "schema": TABLE_SCHEMA, "columns": t.columns, "rows": t.rows });
                self.json(name, &doc)
            }
            Format::Csv => {
                let p = self.path(&format!("{name}.csv"));
                let mut w = csv::Writer::from_path(&p).map_err(|e| torus_pam::Error::Format(e.to_string()))?;
                let wr = |w: &mut csv::Writer<fs::File>, rec: Vec<String>| {
                    w.write_record(rec).map_err(|e| torus_pam::Error::Format(e.to_string()))
                };
                wr(&mut w, t.columns.clone())?;
                for r in &t.rows {
                    wr(&mut w, r.iter().map(cell).collect())?;
                }
                w.flush()?;
                Ok(p)
            }
        }
    }
}
