use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Value};

use crate::failure::Failure;

pub const BUILD_ID: &str = env!("FKOBS_BUILD_ID");

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// A table cell.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl Cell {
    /// 17 significant digits, locale independent.
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => format!("{x:.16e}"),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) if x.is_finite() => json!(x),
            Cell::Num(_) | Cell::Empty => Value::Null,
            Cell::Int(i) => json!(i),
            Cell::Text(s) => json!(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<i64> for Cell {
    fn from(i: i64) -> Self {
        Cell::Int(i)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Num)
    }
}

pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Output directory of one invocation. Every primary file starts with the
/// provenance of the run; wall-clock data goes to a sidecar only, so primary
/// files are byte-identical across reruns.
pub struct Output {
    dir: PathBuf,
    format: Format,
    command: String,
    settings: BTreeMap<String, String>,
    started: SystemTime,
    clock: Instant,
    written: Vec<String>,
}

impl Output {
    pub fn new(dir: &Path, format: Format, command: &str, settings: BTreeMap<String, String>) -> Result<Self, Failure> {
        fs::create_dir_all(dir).map_err(|e| Failure::invalid(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            format,
            command: command.to_string(),
            settings,
            started: SystemTime::now(),
            clock: Instant::now(),
            written: Vec::new(),
        })
    }

    pub fn format(&self) -> Format {
        self.format
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn provenance(&self) -> Value {
        json!({
            "tool": "fkobs",
            "version": env!("CARGO_PKG_VERSION"),
            "build": BUILD_ID,
            "command": self.command,
            "settings": self.settings,
        })
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>, Failure> {
        let path = self.path(name);
        let f = File::create(&path).map_err(|e| Failure::invalid(format!("cannot write {}: {e}", path.display())))?;
        self.written.push(name.to_string());
        Ok(BufWriter::new(f))
    }

    /// Writes `value` wrapped with the provenance block.
    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf, Failure> {
        let doc = json!({ "provenance": self.provenance(), "data": value });
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, &doc)?;
        writeln!(w)?;
        w.flush()?;
        Ok(self.path(name))
    }

    /// Writes a table as `<stem>.csv` or `<stem>.json` per the format flag.
    pub fn table(&mut self, stem: &str, table: &Table) -> Result<PathBuf, Failure> {
        match self.format {
            Format::Json => {
                let rows: Vec<BTreeMap<&str, Value>> = table
                    .rows
                    .iter()
                    .map(|r| table.columns.iter().copied().zip(r.iter().map(Cell::json)).collect())
                    .collect();
                self.json(
                    &format!("{stem}.json"),
                    &json!({ "columns": table.columns, "rows": rows }),
                )
            }
            Format::Csv => {
                let name = format!("{stem}.csv");
                let header = self.csv_header();
                let mut w = self.create(&name)?;
                w.write_all(header.as_bytes())?;
                let mut c = csv::Writer::from_writer(w);
                c.write_record(&table.columns).map_err(csv_err)?;
                for r in &table.rows {
                    c.write_record(r.iter().map(Cell::csv)).map_err(csv_err)?;
                }
                c.flush()?;
                Ok(self.path(&name))
            }
        }
    }

    /// Raw writer for files produced by library routines, preceded by the
    /// provenance as `#` comment lines.
    pub fn raw(&mut self, name: &str) -> Result<BufWriter<File>, Failure> {
        let header = self.csv_header();
        let mut w = self.create(name)?;
        w.write_all(header.as_bytes())?;
        Ok(w)
    }

    fn csv_header(&self) -> String {
        let settings: Vec<String> = self.settings.iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!(
            "# fkobs {} build={} command={}\n# settings: {}\n",
            env!("CARGO_PKG_VERSION"),
            BUILD_ID,
            self.command,
            settings.join(" ")
        )
    }

    /// Timing sidecar `<command>.run.json`.
    pub fn finish(self) -> Result<(), Failure> {
        let started = self
            .started
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let doc = json!({
            "command": self.command,
            "started_unix": started,
            "wall_seconds": self.clock.elapsed().as_secs_f64(),
            "files": self.written,
        });
        let path = self.dir.join(format!("{}.run.json", self.command));
        let mut f =
            File::create(&path).map_err(|e| Failure::invalid(format!("cannot write {}: {e}", path.display())))?;
        serde_json::to_writer_pretty(&mut f, &doc)?;
        writeln!(f)?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Failure {
    Failure::invalid(format!("csv: {e}"))
}
