//! Count-matrix CSV files, grid sidecars, data manifests and the
//! unit-tagged values used in reports.
//!
//! A count CSV holds one tensor as a matrix: one row per flattened party-A
//! cell and one column per flattened party-B cell, both row-major. Blank
//! lines and lines starting with `#` are ignored. The grid of `name.csv`
//! lives in the sidecar `name.grid.json` by default.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dist::{CountTensor, Histogram};
use crate::entropy::LogBase;
use crate::error::{Error, Result};
use crate::grid::{GridSpec, Observable, Party};
use crate::witness::EvaluationMode;

pub const LIBRARY_NAME: &str = env!("CARGO_PKG_NAME");
pub const LIBRARY_VERSION: &str = env!("CARGO_PKG_VERSION");

/// A number with its unit, as written to reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    pub value: f64,
    pub unit: String,
}

impl Quantity {
    pub fn new(value: f64, unit: impl Into<String>) -> Self {
        Self {
            value,
            unit: unit.into(),
        }
    }

    pub fn entropy(value: f64, base: LogBase) -> Self {
        Self::new(value, base.unit())
    }
}

/// Lowercase hex SHA-256 digest.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// `name.csv` -> `name.grid.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("grid.json")
}

pub fn read_grid(path: &Path) -> Result<GridSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        source_name: path.display().to_string(),
        line: e.line(),
        message: e.to_string(),
    })
}

fn parse_field(field: &str, source_name: &str, line: usize, column: usize) -> Result<u64> {
    if let Ok(v) = field.parse::<u64>() {
        return Ok(v);
    }
    let negative = field
        .strip_prefix('-')
        .or_else(|| field.strip_prefix('\u{2212}'))
        .is_some_and(|rest| !rest.is_empty() && rest.chars().all(|c| c.is_ascii_digit()));
    if negative {
        return Err(Error::NegativeCount {
            line,
            column,
            value: field.to_string(),
        });
    }
    Err(Error::Parse {
        source_name: source_name.to_string(),
        line,
        message: format!("column {column}: {field:?} is not a nonnegative integer count"),
    })
}

/// Read a count matrix laid out for `grid`.
pub fn parse_counts<R: Read>(reader: R, source_name: &str, grid: &GridSpec) -> Result<CountTensor> {
    let rows = grid.party_cells(Party::A);
    let cols = grid.party_cells(Party::B);
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut counts = Vec::with_capacity(rows * cols);
    let mut n_rows = 0;
    for record in csv.records() {
        let record = record.map_err(|e| Error::Parse {
            source_name: source_name.to_string(),
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() != cols {
            return Err(Error::Parse {
                source_name: source_name.to_string(),
                line,
                message: format!("row {n_rows} has {} fields, expected {cols}", record.len()),
            });
        }
        for (column, field) in record.iter().enumerate() {
            counts.push(parse_field(field, source_name, line, column)?);
        }
        n_rows += 1;
    }
    if n_rows != rows {
        return Err(Error::ShapeMismatch {
            expected: vec![rows, cols],
            actual: vec![n_rows, cols],
        });
    }
    CountTensor::new(grid.shape(), counts)
}

/// Load one tensor from its CSV and grid sidecar.
pub fn ingest(csv_path: &Path, grid_path: &Path) -> Result<Histogram> {
    let grid = read_grid(grid_path)?;
    let file = File::open(csv_path).map_err(|e| Error::io(csv_path, e))?;
    let counts = parse_counts(file, &csv_path.display().to_string(), &grid)?;
    Histogram::new(counts, grid)
}

/// Write a count tensor as a matrix.
pub fn write_counts<W: Write>(mut out: W, counts: &CountTensor, grid: &GridSpec) -> std::io::Result<()> {
    let cols = grid.party_cells(Party::B);
    for row in counts.counts().chunks_exact(cols) {
        let line: Vec<String> = row.iter().map(u64::to_string).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

/// Write a histogram's CSV and its grid sidecar.
pub fn write_histogram(csv_path: &Path, grid_path: &Path, h: &Histogram) -> Result<()> {
    write_file(csv_path, |w| write_counts(w, h.counts(), h.grid()))?;
    let json = serde_json::to_string_pretty(h.grid())?;
    write_file(grid_path, |w| writeln!(w, "{json}"))
}

/// Write `text` to `path`, or to stdout when `path` is `None`.
pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => write_file(p, |w| w.write_all(text.as_bytes())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Error::io("<stdout>", e))
        }
    }
}

/// One tensor of a data set: a count CSV and its grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorFiles {
    pub counts: PathBuf,
    pub grid: PathBuf,
}

impl TensorFiles {
    /// The CSV with its default sidecar.
    pub fn from_csv(csv: impl Into<PathBuf>) -> Self {
        let counts = csv.into();
        let grid = sidecar_path(&counts);
        Self { counts, grid }
    }
}

/// Index of the tensors making up one measurement. Relative paths are
/// resolved against the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataManifest {
    pub mode: EvaluationMode,
    pub position: Vec<TensorFiles>,
    pub momentum: Vec<TensorFiles>,
    /// Free-form provenance (e.g. the generator's settings).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<serde_json::Value>,
}

/// Position and momentum histograms of one data set.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSet {
    pub position: Vec<Histogram>,
    pub momentum: Vec<Histogram>,
}

impl DataSet {
    /// One tensor per observable is a full joint measurement; one 1-D
    /// tensor per axis is the independent-axes layout.
    pub fn mode(&self) -> EvaluationMode {
        if self.position.len() > 1 {
            EvaluationMode::IndependentAxes
        } else {
            EvaluationMode::FullJoint
        }
    }

    pub fn check(&self) -> Result<()> {
        let (p, m) = (self.position.len(), self.momentum.len());
        if p == 0 || p != m || p > 2 {
            return Err(Error::DimensionMismatch(format!(
                "need one tensor per observable or one per axis (at most 2), got {p} position and {m} momentum"
            )));
        }
        for (hists, obs) in [(&self.position, Observable::Position), (&self.momentum, Observable::Momentum)] {
            if let Some(h) = hists.iter().find(|h| h.grid().observable() != obs) {
                return Err(Error::DimensionMismatch(format!(
                    "{:?} tensor listed as {obs:?}",
                    h.grid().observable()
                )));
            }
        }
        Ok(())
    }

    pub fn with_pseudocount(&self, k: u64) -> Result<Self> {
        let add = |hs: &[Histogram]| -> Result<Vec<Histogram>> {
            hs.iter()
                .map(|h| h.with_counts(h.counts().with_pseudocount(k)?))
                .collect()
        };
        Ok(Self {
            position: add(&self.position)?,
            momentum: add(&self.momentum)?,
        })
    }
}

fn resolve(dir: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        dir.join(p)
    }
}

pub fn read_manifest(path: &Path) -> Result<DataManifest> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        source_name: path.display().to_string(),
        line: e.line(),
        message: e.to_string(),
    })
}

/// Load every tensor listed in a manifest.
pub fn load_manifest(path: &Path) -> Result<DataSet> {
    let manifest = read_manifest(path)?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let load = |files: &[TensorFiles]| -> Result<Vec<Histogram>> {
        files
            .iter()
            .map(|f| ingest(&resolve(dir, &f.counts), &resolve(dir, &f.grid)))
            .collect()
    };
    let data = DataSet {
        position: load(&manifest.position)?,
        momentum: load(&manifest.momentum)?,
    };
    data.check()?;
    if data.mode() != manifest.mode {
        return Err(Error::DimensionMismatch(format!(
            "manifest declares {:?} but lists {} tensor(s) per observable",
            manifest.mode,
            data.position.len()
        )));
    }
    Ok(data)
}

/// Write a data set as CSVs plus `manifest.json` into `dir`.
pub fn write_data_set(dir: &Path, data: &DataSet, generator: Option<serde_json::Value>) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let axis_names = ["x", "y"];
    let write = |hists: &[Histogram], prefix: &str| -> Result<Vec<TensorFiles>> {
        hists
            .iter()
            .enumerate()
            .map(|(i, h)| {
                let name = if hists.len() == 1 {
                    prefix.to_string()
                } else {
                    format!("{prefix}_{}", axis_names[i])
                };
                let files = TensorFiles::from_csv(format!("{name}.csv"));
                write_histogram(&dir.join(&files.counts), &dir.join(&files.grid), h)?;
                Ok(files)
            })
            .collect()
    };
    let manifest = DataManifest {
        mode: data.mode(),
        position: write(&data.position, "position")?,
        momentum: write(&data.momentum, "momentum")?,
        generator,
    };
    let path = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest)?;
    write_file(&path, |w| writeln!(w, "{json}"))?;
    Ok(path)
}
