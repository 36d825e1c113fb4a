//! File formats: plain CSV for matrices and paths, JSON for metadata.
//!
//! * matrices: row-major CSV without a header, or a JSON descriptor
//!   `{p, k, pattern, seed, entries}` with `entries` a list of rows
//! * trajectories: `p` rows by `n + 1` columns of CSV
//! * masked series: a directory with `values.csv`, `mask.csv` (0/1) and
//!   `meta.json` holding `{delta, seed, n, p}`
//! * estimates: `B_hat` as matrix CSV plus a JSON sidecar

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::Estimate;
use crate::linalg::Mat;
use crate::observation::MaskedSeries;
use crate::spectral::BoundReport;
use crate::theory::TailReport;
use crate::var_core::{SupportPattern, TransitionMatrix};

pub fn write_matrix_csv(path: &Path, m: &Mat) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    for row in m.row_iter() {
        w.write_record(row.iter().map(|x| x.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix_csv(path: &Path) -> Result<Mat> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_path(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| Error::InvalidInput(format!("{}: '{s}' is not a number", path.display())))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    rows_to_matrix(rows, &path.display().to_string())
}

fn rows_to_matrix(rows: Vec<Vec<f64>>, what: &str) -> Result<Mat> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if nrows == 0 || ncols == 0 {
        return Err(Error::InvalidInput(format!("{what}: empty matrix")));
    }
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::DimensionMismatch(format!("{what}: ragged rows")));
    }
    Ok(Mat::from_row_iterator(nrows, ncols, rows.into_iter().flatten()))
}

/// JSON form of a transition matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixDescriptor {
    pub p: usize,
    pub k: usize,
    #[serde(default)]
    pub pattern: Option<SupportPattern>,
    #[serde(default)]
    pub seed: Option<u64>,
    pub entries: Vec<Vec<f64>>,
}

impl MatrixDescriptor {
    pub fn from_transition(b: &TransitionMatrix) -> Self {
        MatrixDescriptor {
            p: b.dim(),
            k: b.nnz(),
            pattern: b.pattern,
            seed: b.seed,
            entries: b.entries().row_iter().map(|r| r.iter().copied().collect()).collect(),
        }
    }

    pub fn to_matrix(&self) -> Result<Mat> {
        let m = rows_to_matrix(self.entries.clone(), "matrix descriptor")?;
        if m.shape() != (self.p, self.p) {
            return Err(Error::DimensionMismatch(format!(
                "descriptor says p = {} but entries are {}x{}",
                self.p,
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(m)
    }
}

/// Read a matrix from `.json` (descriptor) or anything else (CSV).
pub fn read_matrix(path: &Path) -> Result<Mat> {
    if path.extension().is_some_and(|e| e == "json") {
        let d: MatrixDescriptor = serde_json::from_str(&fs::read_to_string(path)?)?;
        d.to_matrix()
    } else {
        read_matrix_csv(path)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskMeta {
    pub delta: f64,
    pub seed: u64,
    pub n: usize,
    pub p: usize,
}

pub fn write_masked_series(dir: &Path, ms: &MaskedSeries) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_matrix_csv(&dir.join("values.csv"), ms.values())?;
    let mask = ms.mask().map(|b| if b { 1.0 } else { 0.0 });
    write_matrix_csv(&dir.join("mask.csv"), &mask)?;
    let meta = MaskMeta { delta: ms.delta, seed: ms.seed, n: ms.horizon(), p: ms.dim() };
    write_json(&dir.join("meta.json"), &meta)
}

pub fn read_masked_series(dir: &Path) -> Result<MaskedSeries> {
    let meta: MaskMeta = read_json(&dir.join("meta.json"))?;
    let values = read_matrix_csv(&dir.join("values.csv"))?;
    let raw = read_matrix_csv(&dir.join("mask.csv"))?;
    if values.shape() != (meta.p, meta.n + 1) {
        return Err(Error::DimensionMismatch(format!(
            "values are {}x{}, metadata says {}x{}",
            values.nrows(),
            values.ncols(),
            meta.p,
            meta.n + 1
        )));
    }
    if raw.iter().any(|x| *x != 0.0 && *x != 1.0) {
        return Err(Error::InvalidInput("mask entries must be 0 or 1".into()));
    }
    let mask: DMatrix<bool> = raw.map(|x| x == 1.0);
    MaskedSeries::from_parts(values, mask, meta.delta, meta.seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateMeta {
    pub variant: String,
    pub lambda: f64,
    pub radius: f64,
    pub iterations: usize,
    pub final_objective: f64,
    pub converged: bool,
}

impl From<&Estimate> for EstimateMeta {
    fn from(e: &Estimate) -> Self {
        EstimateMeta {
            variant: e.variant.as_str().to_string(),
            lambda: e.lambda,
            radius: e.radius,
            iterations: e.iterations,
            final_objective: e.final_objective(),
            converged: e.converged,
        }
    }
}

/// Writes `<stem>.csv` and `<stem>.json` into `dir`.
pub fn write_estimate(dir: &Path, stem: &str, e: &Estimate) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_matrix_csv(&dir.join(format!("{stem}.csv")), &e.b_hat)?;
    write_json(&dir.join(format!("{stem}.json")), &EstimateMeta::from(e))
}

pub fn write_bound_report_csv(path: &Path, r: &BoundReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["bound", "lhs", "rhs", "applicable", "satisfied"])?;
    for c in &r.checks {
        w.write_record([
            c.name.clone(),
            c.lhs.to_string(),
            c.rhs.to_string(),
            c.applicable.to_string(),
            c.satisfied.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_tail_csv(path: &Path, r: &TailReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["form", "t", "empirical", "bound"])?;
    for (form, rows) in [("quadratic", &r.quadratic), ("diagonal", &r.diagonal)] {
        for row in rows.iter() {
            w.write_record([form.to_string(), row.t.to_string(), row.empirical.to_string(), row.bound.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}
