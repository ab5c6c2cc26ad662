use std::fmt::Display;
use std::path::Path;

use super::PipelineError;

/// An output table held as formatted cells, so the CSV and anything
/// derived from it (the GeoJSON properties) see identical values.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: &'static str,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &'static str, header: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Self {
            name,
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len(), "{}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn write(&self, dir: &Path) -> Result<(), PipelineError> {
        let fail = |e: csv::Error| PipelineError::stage("export", format!("{}: {e}", self.name));
        let mut w = csv::Writer::from_path(dir.join(self.name)).map_err(fail)?;
        w.write_record(&self.header).map_err(fail)?;
        for row in &self.rows {
            w.write_record(row).map_err(fail)?;
        }
        w.flush().map_err(|e| fail(e.into()))
    }

    pub fn read(dir: &Path, name: &'static str) -> Result<Self, PipelineError> {
        let path = dir.join(name);
        let fail = |e: csv::Error| PipelineError::input("load", format!("{}: {e}", path.display()));
        let mut rdr = csv::Reader::from_path(&path).map_err(fail)?;
        let header = rdr.headers().map_err(fail)?.iter().map(str::to_string).collect();
        let rows = rdr
            .records()
            .map(|r| r.map(|rec| rec.iter().map(str::to_string).collect()))
            .collect::<Result<_, _>>()
            .map_err(fail)?;
        Ok(Self { name, header, rows })
    }
}

/// Three decimals, the precision used for durations derived from means.
pub fn f3(v: f64) -> String {
    format!("{v:.3}")
}

/// Shortest representation that reads back to the same float.
pub fn full(v: f64) -> String {
    v.to_string()
}

/// Empty cell for a missing value.
pub fn opt<T: Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}
