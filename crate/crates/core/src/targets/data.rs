use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// A design matrix read from CSV, with the response split off when requested.
#[derive(Clone, Debug)]
pub struct DesignData {
    pub x: DMatrix<f64>,
    pub y: Option<DVector<f64>>,
    pub header: Option<Vec<String>>,
}

impl DesignData {
    pub fn rows(&self) -> usize {
        self.x.nrows()
    }

    pub fn cols(&self) -> usize {
        self.x.ncols()
    }
}

/// Reads a numeric CSV. A first row with any non-numeric cell is taken as a header.
/// With `response_last`, the final column becomes `y`.
pub fn load_design_matrix(path: &Path, response_last: bool) -> Result<DesignData> {
    let file = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Parse { file: file.clone(), line: 0, msg: e.to_string() })?;
    let mut header = None;
    let mut values = Vec::new();
    let mut width = None;
    let mut rows = 0usize;
    for (n, rec) in reader.records().enumerate() {
        let line = n + 1;
        let rec = rec.map_err(|e| Error::Parse { file: file.clone(), line, msg: e.to_string() })?;
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, usize> = rec
            .iter()
            .enumerate()
            .map(|(c, cell)| cell.parse::<f64>().map_err(|_| c))
            .collect();
        let row = match parsed {
            Ok(row) => row,
            Err(_) if line == 1 => {
                header = Some(rec.iter().map(str::to_string).collect::<Vec<_>>());
                width = Some(rec.len());
                continue;
            }
            Err(c) => {
                return Err(Error::Parse {
                    file,
                    line,
                    msg: format!("column {}: `{}` is not a number", c + 1, &rec[c]),
                })
            }
        };
        match width {
            Some(w) if w != row.len() => {
                return Err(Error::Parse {
                    file,
                    line,
                    msg: format!("expected {w} cells, found {}", row.len()),
                })
            }
            _ => width = Some(row.len()),
        }
        values.extend(row);
        rows += 1;
    }
    let cols = width.unwrap_or(0);
    if rows == 0 || cols == 0 {
        return Err(Error::Parse { file, line: 0, msg: "no numeric rows".into() });
    }
    let full = DMatrix::from_row_slice(rows, cols, &values);
    if response_last {
        if cols < 2 {
            return Err(Error::Parse {
                file,
                line: 1,
                msg: "need at least one predictor column besides the response".into(),
            });
        }
        let y = full.column(cols - 1).into_owned();
        let x = full.columns(0, cols - 1).into_owned();
        Ok(DesignData { x, y: Some(y), header })
    } else {
        Ok(DesignData { x: full, y: None, header })
    }
}

/// `n×d` matrix with entries drawn uniformly from `{0, 1, 2}`.
pub fn synth_genotype_matrix(n: usize, d: usize, rng: &mut RngStream) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, d);
    for i in 0..n {
        for j in 0..d {
            m[(i, j)] = rng.below(3) as f64;
        }
    }
    m
}

/// Copies column `signal_col` over `duplicate_col` and sets `y = x_signal + N(0, noise_sd²)`.
pub fn synth_sparse_response(
    x: &DMatrix<f64>,
    signal_col: usize,
    duplicate_col: usize,
    noise_sd: f64,
    rng: &mut RngStream,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let d = x.ncols();
    if signal_col >= d || duplicate_col >= d {
        return Err(Error::InvalidParameter(format!(
            "columns {signal_col} and {duplicate_col} must be below {d}"
        )));
    }
    if !(noise_sd.is_finite() && noise_sd >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "noise_sd must be nonnegative, got {noise_sd}"
        )));
    }
    let mut out = x.clone();
    let signal = x.column(signal_col).into_owned();
    out.set_column(duplicate_col, &signal);
    let y = DVector::from_fn(x.nrows(), |i, _| signal[i] + noise_sd * rng.std_normal());
    Ok((out, y))
}
