use std::fmt;

use nalgebra::DMatrix;

use crate::error::{check_len, Result};

/// A linear map `ℝ^cols → ℝ^rows` known through its action and the action of
/// its adjoint.
pub trait LinearOperator: Send + Sync + fmt::Debug {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;

    /// `out = A x`
    fn apply(&self, x: &[f64], out: &mut [f64]);

    /// `out = Aᵀ y`
    fn apply_adjoint(&self, y: &[f64], out: &mut [f64]);

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows()];
        self.apply(x, &mut out);
        out
    }

    fn adjoint(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols()];
        self.apply_adjoint(y, &mut out);
        out
    }

    /// Dense materialization, built column by column from `apply`.
    /// Only meant for small operators (certification, tests).
    fn to_dense(&self) -> DMatrix<f64> {
        let (rows, cols) = (self.rows(), self.cols());
        let mut dense = DMatrix::zeros(rows, cols);
        let mut unit = vec![0.0; cols];
        let mut column = vec![0.0; rows];
        for j in 0..cols {
            unit[j] = 1.0;
            self.apply(&unit, &mut column);
            unit[j] = 0.0;
            for (i, v) in column.iter().enumerate() {
                dense[(i, j)] = *v;
            }
        }
        dense
    }
}

/// Explicit dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseOperator {
    matrix: DMatrix<f64>,
}

impl DenseOperator {
    pub fn new(matrix: DMatrix<f64>) -> Self {
        Self { matrix }
    }

    /// Builds from row-major data.
    pub fn from_rows(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        check_len("dense operator data", rows * cols, data.len())?;
        Ok(Self::new(DMatrix::from_row_slice(rows, cols, data)))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

impl LinearOperator for DenseOperator {
    fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        // column-major storage: accumulate column j scaled by x[j]
        for (j, xj) in x.iter().enumerate() {
            if *xj == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.matrix.column(j).iter()) {
                *o += a * xj;
            }
        }
    }

    fn apply_adjoint(&self, y: &[f64], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            *o = self
                .matrix
                .column(j)
                .iter()
                .zip(y)
                .map(|(a, yi)| a * yi)
                .sum();
        }
    }

    fn to_dense(&self) -> DMatrix<f64> {
        self.matrix.clone()
    }
}
