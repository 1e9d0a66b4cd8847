use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// One CSV field. Floats are written with 17 significant digits so they
/// round-trip exactly.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn render(&self) -> Result<String> {
        match self {
            Cell::Float(x) if x.is_finite() => Ok(format!("{x:.16e}")),
            Cell::Float(x) => Err(Error::InvalidParameter(format!(
                "refusing to write non-finite value {x} to CSV"
            ))),
            Cell::Int(i) => Ok(i.to_string()),
            Cell::Text(s) => Ok(s.clone()),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Float(x) => Some(*x),
            Cell::Int(i) => Some(*i as f64),
            Cell::Text(_) => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<i64> for Cell {
    fn from(x: i64) -> Self {
        Cell::Int(x)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

/// A fixed-schema table.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Table {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let idx = self.header.iter().position(|h| *h == name)?;
        Some(self.rows.iter().map(|r| &r[idx]).collect())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            let rendered = row.iter().map(Cell::render).collect::<Result<Vec<_>>>()?;
            w.write_record(&rendered)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::InvalidParameter(format!("csv buffer: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Writes the table to `dir/name`, creating `dir` if needed.
    pub fn write(&self, dir: &Path, name: &str) -> Result<std::path::PathBuf> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| Error::Io { path, source }
        };
        fs::create_dir_all(dir).map_err(io(dir))?;
        let path = dir.join(name);
        let text = self.to_csv_string()?;
        let mut f = BufWriter::new(File::create(&path).map_err(io(&path))?);
        f.write_all(text.as_bytes()).map_err(io(&path))?;
        f.flush().map_err(io(&path))?;
        Ok(path)
    }
}
