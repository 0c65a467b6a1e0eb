//! Dense column-major matrices and packed symmetric matrices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense real matrix stored column-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidShape(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidShape(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        Self::from_fn(n, n, |i, j| if i == j { values[i] } else { 0.0 })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row slices; convenient for literals in tests.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::InvalidShape("ragged rows".into()));
        }
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::InvalidShape("empty matrix".into()));
        }
        Ok(Self::from_fn(n_rows, n_cols, |i, j| rows[i][j]))
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i + j * self.rows]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i + j * self.rows] = value;
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        crate::tensor::gemm(
            self.rows,
            self.cols,
            other.cols,
            1.0,
            (&self.data, 1, self.rows as isize),
            (&other.data, 1, other.rows as isize),
            0.0,
            (&mut out.data, 1, self.rows as isize),
        );
        Ok(out)
    }

    pub fn scaled(&self, factor: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    /// `selfᵀ · self`.
    pub fn gram(&self) -> SymMatrix {
        let n = self.cols;
        let mut lower = Vec::with_capacity(n * (n + 1) / 2);
        for j in 0..n {
            for i in j..n {
                let dot = self
                    .column(i)
                    .iter()
                    .zip(self.column(j))
                    .map(|(a, b)| a * b)
                    .sum();
                lower.push(dot);
            }
        }
        SymMatrix { n, lower }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Kronecker product of the matrices in the given order, `ms[0] ⊗ ms[1] ⊗ …`.
///
/// To obtain the product matching a mode-`k` unfolding, pass the mode
/// matrices in descending mode order.
pub fn kron(ms: &[&Matrix]) -> Result<Matrix> {
    let (first, rest) = ms
        .split_first()
        .ok_or_else(|| Error::InvalidShape("kron of an empty list".into()))?;
    let mut acc = (*first).clone();
    for b in rest {
        let rows = acc.rows * b.rows;
        let cols = acc.cols * b.cols;
        acc = Matrix::from_fn(rows, cols, |i, j| {
            acc.get(i / b.rows, j / b.cols) * b.get(i % b.rows, j % b.cols)
        });
    }
    Ok(acc)
}

/// Length of the half-vectorisation of an `n × n` symmetric matrix.
#[inline]
pub const fn vech_len(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Symmetric matrix packed as its lower triangle, column by column
/// (the `vech` ordering).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix {
    n: usize,
    lower: Vec<f64>,
}

impl SymMatrix {
    pub fn from_vech(n: usize, lower: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidShape("symmetric matrix of order 0".into()));
        }
        if lower.len() != vech_len(n) {
            return Err(Error::InvalidShape(format!(
                "order-{n} symmetric matrix needs {} packed entries, got {}",
                vech_len(n),
                lower.len()
            )));
        }
        Ok(Self { n, lower })
    }

    pub fn zeros(n: usize) -> Self {
        assert!(n > 0);
        Self {
            n,
            lower: vec![0.0; vech_len(n)],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(values: &[f64]) -> Self {
        let mut s = Self::zeros(values.len());
        for (i, v) in values.iter().enumerate() {
            s.set(i, i, *v);
        }
        s
    }

    /// Packs the lower triangle of a square matrix. The upper triangle is
    /// ignored, so callers are responsible for symmetry.
    pub fn from_lower_of(m: &Matrix) -> Result<Self> {
        if m.rows() != m.cols() {
            return Err(Error::DimensionMismatch(format!(
                "expected a square matrix, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        let n = m.rows();
        let mut lower = Vec::with_capacity(vech_len(n));
        for j in 0..n {
            for i in j..n {
                lower.push(m.get(i, j));
            }
        }
        Ok(Self { n, lower })
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.n
    }

    #[inline]
    fn offset(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        j * self.n - j * (j.saturating_sub(1)) / 2 - j + i
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.lower[self.offset(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let o = self.offset(i, j);
        self.lower[o] = value;
    }

    /// Lower triangle stacked column by column, diagonal included.
    #[inline]
    pub fn vech(&self) -> &[f64] {
        &self.lower
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn scaled(&self, factor: f64) -> SymMatrix {
        SymMatrix {
            n: self.n,
            lower: self.lower.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn sub(&self, other: &SymMatrix) -> Result<SymMatrix> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch(format!(
                "orders {} and {} differ",
                self.n, other.n
            )));
        }
        Ok(SymMatrix {
            n: self.n,
            lower: self
                .lower
                .iter()
                .zip(&other.lower)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn frobenius_norm(&self) -> f64 {
        let mut s = 0.0;
        for j in 0..self.n {
            for i in j..self.n {
                let v = self.get(i, j);
                s += if i == j { v * v } else { 2.0 * v * v };
            }
        }
        s.sqrt()
    }

    /// Spectral norm, i.e. the largest absolute eigenvalue.
    pub fn operator_norm(&self) -> f64 {
        crate::linalg::sym_eigen(self)
            .values
            .iter()
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &SymMatrix) -> f64 {
        assert_eq!(self.n, other.n);
        self.lower
            .iter()
            .zip(&other.lower)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}
