//! Dense row-major embedding matrices.
//!
//! Values are held in `f64` regardless of on-disk precision so that every
//! dot product and norm accumulates in double precision.

use crate::error::{NudgeError, Result};

/// Tolerance on the L2 norm of a row for it to count as unit-norm.
pub const UNIT_NORM_TOL: f64 = 1e-6;

/// Sequential dot product. The accumulation order is fixed (index order) so
/// results are bit-identical across runs and thread counts.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// An `n x d` matrix of embeddings with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    rows: usize,
    dim: usize,
    values: Vec<f64>,
}

impl EmbeddingMatrix {
    pub fn new(rows: usize, dim: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || dim == 0 {
            return Err(NudgeError::EmptyMatrix { rows, dim });
        }
        let expected = rows
            .checked_mul(dim)
            .ok_or_else(|| NudgeError::param("shape", format!("{rows}x{dim} overflows")))?;
        if values.len() != expected {
            return Err(NudgeError::BufferLength {
                expected,
                actual: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(NudgeError::NonFinite {
                row: pos / dim,
                col: pos % dim,
            });
        }
        Ok(Self { rows, dim, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(n * d);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != d {
                return Err(NudgeError::DimensionMismatch {
                    what: if i == 0 { "row 0" } else { "row" },
                    expected: d,
                    actual: r.len(),
                });
            }
            values.extend_from_slice(r);
        }
        Self::new(n, d, values)
    }

    pub fn zeros(rows: usize, dim: usize) -> Result<Self> {
        Self::new(rows, dim, vec![0.0; rows * dim])
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub(crate) fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter_rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn row_norms(&self) -> Vec<f64> {
        self.iter_rows().map(norm).collect()
    }

    /// True when every row has L2 norm within `tol` of one.
    pub fn is_unit_norm(&self, tol: f64) -> bool {
        self.iter_rows().all(|r| (norm(r) - 1.0).abs() <= tol)
    }

    /// Returns a copy with every row scaled to unit L2 norm.
    pub fn normalized(&self) -> Result<Self> {
        let mut out = self.clone();
        for i in 0..out.rows {
            let row = out.row_mut(i);
            let nrm = norm(row);
            if nrm == 0.0 {
                return Err(NudgeError::ZeroRow { row: i });
            }
            row.iter_mut().for_each(|v| *v /= nrm);
        }
        Ok(out)
    }

    /// Elementwise `self + delta`.
    pub fn add(&self, delta: &EmbeddingMatrix) -> Result<Self> {
        self.check_same_shape("delta", delta)?;
        let values = self
            .values
            .iter()
            .zip(&delta.values)
            .map(|(a, b)| a + b)
            .collect();
        Self::new(self.rows, self.dim, values)
    }

    pub(crate) fn check_dim(&self, what: &'static str, other: &EmbeddingMatrix) -> Result<()> {
        if other.dim != self.dim {
            return Err(NudgeError::DimensionMismatch {
                what,
                expected: self.dim,
                actual: other.dim,
            });
        }
        Ok(())
    }

    pub(crate) fn check_same_shape(&self, what: &'static str, other: &EmbeddingMatrix) -> Result<()> {
        self.check_dim(what, other)?;
        if other.rows != self.rows {
            return Err(NudgeError::DimensionMismatch {
                what,
                expected: self.rows,
                actual: other.rows,
            });
        }
        Ok(())
    }
}
