use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

use super::XpError;

/// One CSV field.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Bool(bool),
    Text(String),
    Empty,
}

impl Cell {
    /// Shortest representation that parses back to the same `f64`.
    fn format_float(x: f64) -> String {
        if x == 0.0 || (1e-4..1e15).contains(&x.abs()) {
            format!("{x}")
        } else if x.is_finite() {
            format!("{x:e}")
        } else {
            format!("{x}")
        }
    }

    pub fn render(&self) -> String {
        match self {
            Cell::Num(x) => Self::format_float(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(x) => Some(*x),
            Cell::Int(n) => Some(*n as f64),
            _ => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<u64> for Cell {
    fn from(n: u64) -> Self {
        Cell::Int(n)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Num)
    }
}

/// Least-squares line through `(ln x, ln y)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Fit {
    /// Name of the abscissa column.
    pub x: String,
    pub slope: f64,
    pub intercept: f64,
    pub points_used: usize,
}

/// Fits `ln y = slope · ln x + intercept` over the given points. Returns
/// `None` unless at least two points are usable and the slope is finite.
pub fn fit_loglog(x_name: &str, points: &[(f64, f64)]) -> Option<Fit> {
    if points.len() < 2 || points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return None;
    }
    let n = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    if !slope.is_finite() {
        return None;
    }
    Some(Fit {
        x: x_name.to_string(),
        slope,
        intercept: my - slope * mx,
        points_used: points.len(),
    })
}

/// A table of sweep points plus the fit and summary values written to the
/// JSON sidecar.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub experiment: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub fit: Option<Fit>,
    pub summary: Map<String, Value>,
}

impl SweepResult {
    pub fn new(experiment: &str, columns: &[&str]) -> Self {
        Self {
            experiment: experiment.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            fit: None,
            summary: Map::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn note(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.summary.insert(key.to_string(), v);
    }

    fn index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric values of a column (`None` entries for non-numeric cells).
    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let i = self.index(name)?;
        Some(self.rows.iter().map(|r| r[i].as_f64()).collect())
    }

    /// Numeric values of a column, panicking on missing or non-numeric
    /// cells. Intended for tests and reports on known tables.
    pub fn floats(&self, name: &str) -> Vec<f64> {
        self.column(name)
            .unwrap_or_else(|| panic!("no column {name}"))
            .into_iter()
            .map(|v| v.unwrap_or_else(|| panic!("non-numeric entry in {name}")))
            .collect()
    }

    pub fn cell(&self, row: usize, name: &str) -> Option<&Cell> {
        let i = self.index(name)?;
        self.rows.get(row).map(|r| &r[i])
    }

    /// RFC-4180 CSV with a header row.
    pub fn to_csv(&self) -> Result<Vec<u8>, XpError> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_writer(Vec::new());
        w.write_record(&self.columns).map_err(XpError::output)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(XpError::output)?;
        }
        w.into_inner().map_err(|e| XpError::output(e.into_error()))
    }

    /// Sidecar document: experiment, fit, tolerances, seed, version and
    /// the experiment's summary values.
    pub fn sidecar(&self, model: &str, seed: u64, tolerances: &impl Serialize) -> Value {
        let mut doc = Map::new();
        doc.insert("experiment".into(), Value::from(self.experiment.clone()));
        doc.insert("model".into(), Value::from(model));
        doc.insert("version".into(), Value::from(env!("CARGO_PKG_VERSION")));
        doc.insert("seed".into(), Value::from(seed));
        doc.insert(
            "tolerances".into(),
            serde_json::to_value(tolerances).unwrap_or(Value::Null),
        );
        doc.insert("columns".into(), Value::from(self.columns.clone()));
        doc.insert("rows".into(), Value::from(self.rows.len()));
        doc.insert(
            "fit".into(),
            serde_json::to_value(&self.fit).unwrap_or(Value::Null),
        );
        doc.insert("summary".into(), Value::Object(self.summary.clone()));
        Value::Object(doc)
    }
}

/// `out.csv` → `out.json`; a path without extension gets `.json` appended.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    if csv_path.extension().is_some_and(|e| e == "json") {
        let mut p = csv_path.as_os_str().to_owned();
        p.push(".sidecar.json");
        return PathBuf::from(p);
    }
    csv_path.with_extension("json")
}

/// Writes the CSV and its sidecar.
pub fn write_outputs(path: &Path, csv_bytes: &[u8], sidecar: &Value) -> Result<PathBuf, XpError> {
    let side = sidecar_path(path);
    let mut text = serde_json::to_string_pretty(sidecar).map_err(XpError::output)?;
    text.push('\n');
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(csv_bytes))
        .map_err(XpError::output)?;
    std::fs::write(&side, text).map_err(XpError::output)?;
    Ok(side)
}
