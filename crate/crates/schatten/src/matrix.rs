//! Dense row-major matrix, just large enough for this crate's needs:
//! CSV ingest of an input matrix `B`, Gaussian sketch matrices `X`, and
//! small test matrices for the Wick-identity checks. Linear algebra
//! heavier than a product (the symmetric eigensolve) is delegated to
//! `nalgebra` in [`crate::spectrum`].

use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds a matrix from row-major data. `data.len()` must equal `rows * cols`.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidInput(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidInput(format!(
                "matrix data length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Zero matrix.
    ///
    /// # Panics
    /// Panics on zero dimensions; sizes come from validated callers.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    /// Identity matrix.
    ///
    /// # Panics
    /// Panics on dimension zero.
    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    /// Row slice, length `cols`.
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Row-major backing slice.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// True when every entry is finite.
    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Parses the CSV matrix format: one row per line, comma-separated
    /// decimal floats, every row the same length. Blank lines are
    /// ignored. `origin` only labels error messages.
    pub fn from_csv_str(text: &str, origin: &str) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|cell| {
                    cell.trim().parse::<f64>().map_err(|_| Error::Parse {
                        path: origin.into(),
                        message: format!("line {}: invalid number {:?}", lineno + 1, cell.trim()),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            if let Some(first) = rows.first() {
                if row.len() != first.len() {
                    return Err(Error::Parse {
                        path: origin.into(),
                        message: format!(
                            "line {}: expected {} columns, found {}",
                            lineno + 1,
                            first.len(),
                            row.len()
                        ),
                    });
                }
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::Parse {
                path: origin.into(),
                message: "no rows".into(),
            });
        }
        let (r, c) = (rows.len(), rows[0].len());
        let m = Self::new(r, c, rows.into_iter().flatten().collect())?;
        if !m.is_finite() {
            return Err(Error::InvalidInput(format!(
                "{origin}: matrix entries must be finite"
            )));
        }
        Ok(m)
    }

    /// Reads a CSV matrix file. See [`Matrix::from_csv_str`] for the format.
    pub fn load_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_csv_str(&text, &path.display().to_string())
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            for c in 0..self.cols {
                if c > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{}", self.get(r, c))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
