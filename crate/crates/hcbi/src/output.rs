//! CSV tables and artifact files.
//!
//! Floats are written in scientific notation with 17 significant digits,
//! which round-trips every finite `f64` exactly. Rows go straight to a
//! buffered writer, so a table never has to exist as one big string.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Formats a float so that parsing it back gives the same bits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// A cell of an in-memory table.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => fmt_f64(*x),
            Cell::Int(k) => k.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(k: usize) -> Self {
        Cell::Int(k as i64)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Text(if b { "true" } else { "false" }.into())
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.into())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

/// A named table with a header row.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(headers: impl IntoIterator<Item = S>) -> Self {
        Table {
            headers: headers.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(
            row.len(),
            self.headers.len(),
            "row width differs from header"
        );
        self.rows.push(row);
    }
}

/// Row-at-a-time CSV writer.
pub struct CsvSink<W: Write> {
    inner: csv::Writer<W>,
    width: usize,
}

impl CsvSink<BufWriter<File>> {
    pub fn create(path: &Path, headers: &[String]) -> Result<Self> {
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        CsvSink::new(BufWriter::new(f), headers)
    }
}

impl<W: Write> CsvSink<W> {
    pub fn new(w: W, headers: &[String]) -> Result<Self> {
        let mut inner = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        inner.write_record(headers)?;
        Ok(CsvSink {
            inner,
            width: headers.len(),
        })
    }

    pub fn write_floats(&mut self, row: &[f64]) -> Result<()> {
        self.check(row.len())?;
        self.inner.write_record(row.iter().map(|x| fmt_f64(*x)))?;
        Ok(())
    }

    pub fn write_cells(&mut self, row: &[Cell]) -> Result<()> {
        self.check(row.len())?;
        self.inner.write_record(row.iter().map(Cell::render))?;
        Ok(())
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != self.width {
            return Err(Error::Table(format!(
                "row has {len} cells, header has {}",
                self.width
            )));
        }
        Ok(())
    }

    /// Flushes and returns the underlying writer.
    pub fn finish(self) -> Result<W> {
        self.inner
            .into_inner()
            .map_err(|e| Error::Table(format!("flushing csv: {}", e.error())))
    }
}

/// Writes `table` to `path`: headers first, then every row.
pub fn write_csv(table: &Table, path: &Path) -> Result<()> {
    let mut sink = CsvSink::create(path, &table.headers)?;
    for row in &table.rows {
        sink.write_cells(row)?;
    }
    sink.finish()?.flush().map_err(|e| Error::io(path, e))
}

/// Reads a numeric CSV back: headers and rows of floats.
pub fn read_csv_f64(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| {
                s.parse::<f64>().map_err(|e| {
                    Error::Table(format!("{}: cannot parse `{s}`: {e}", path.display()))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((headers, rows))
}

/// Creates the output directory and writes files into it.
pub struct OutputDir {
    pub root: PathBuf,
}

impl OutputDir {
    pub fn create(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
        Ok(OutputDir { root })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write_text(&self, name: &str, text: &str) -> Result<()> {
        let p = self.path(name);
        fs::write(&p, text).map_err(|e| Error::io(&p, e))
    }

    pub fn write_table(&self, name: &str, table: &Table) -> Result<()> {
        write_csv(table, &self.path(name))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [
            0.1,
            1.0 / 3.0,
            f64::MIN_POSITIVE,
            5e-324,
            1.7976931348623157e308,
            -2.5e-7,
        ] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn sink_rejects_ragged_rows() {
        let mut s = CsvSink::new(Vec::new(), &["a".into(), "b".into()]).unwrap();
        assert!(s.write_floats(&[1.0]).is_err());
        s.write_floats(&[1.0, 2.0]).unwrap();
        let bytes = s.finish().unwrap();
        assert_eq!(
            String::from_utf8(bytes).unwrap(),
            "a,b\n1.0000000000000000e0,2.0000000000000000e0\n"
        );
    }
}
