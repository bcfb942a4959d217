//! Per-record sums of labeled training queries.
//!
//! Row `i` is the sum of every training query whose ground truth includes
//! record `i`. It is the (constant) negative gradient of the training
//! similarity loss with respect to `Δ_i`, and the direction every method
//! moves record `i` in.

use crate::error::Result;
use crate::labels::LabelSet;
use crate::matrix::{norm, EmbeddingMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateMatrix {
    sums: Vec<f64>,
    norms: Vec<f64>,
    rows: usize,
    dim: usize,
}

impl AggregateMatrix {
    /// Wraps raw per-record sums (row-major, `rows * dim` values).
    pub fn from_sums(rows: usize, dim: usize, sums: Vec<f64>) -> Self {
        assert_eq!(sums.len(), rows * dim, "aggregate buffer length");
        let norms = sums.chunks_exact(dim).map(norm).collect();
        Self {
            sums,
            norms,
            rows,
            dim,
        }
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
        &self.sums[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn norm(&self, i: usize) -> f64 {
        self.norms[i]
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    /// `G_i / ‖G_i‖`, or the zero vector when `G_i = 0`.
    pub fn unit_row(&self, i: usize) -> Vec<f64> {
        let n = self.norms[i];
        if n > 0.0 {
            self.row(i).iter().map(|v| v / n).collect()
        } else {
            vec![0.0; self.dim]
        }
    }

    /// All unit directions as a row-major buffer (zero rows stay zero).
    pub(crate) fn unit_rows(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.sums.len());
        for i in 0..self.rows {
            out.extend(self.unit_row(i));
        }
        out
    }
}

/// Sums training queries into their labeled records.
///
/// With `weighted`, each query contributes `relevance * Q_j`; otherwise every
/// label contributes `Q_j`. Contributions are accumulated in ascending query
/// order (then record order), so the result does not depend on the order of
/// the label entries.
pub fn compute_aggregates(
    train_queries: &EmbeddingMatrix,
    labels: &LabelSet,
    n: usize,
    weighted: bool,
) -> Result<AggregateMatrix> {
    if n == 0 {
        return Err(crate::NudgeError::param("n", "must be at least 1"));
    }
    labels.check_bounds(train_queries.rows(), n)?;
    let d = train_queries.dim();

    let mut order: Vec<_> = labels.entries().to_vec();
    order.sort_by_key(|l| (l.query, l.record));

    let mut sums = vec![0.0; n * d];
    for l in &order {
        let w = if weighted { l.relevance } else { 1.0 };
        let q = train_queries.row(l.query);
        let g = &mut sums[l.record * d..(l.record + 1) * d];
        for (gk, qk) in g.iter_mut().zip(q) {
            *gk += w * qk;
        }
    }
    Ok(AggregateMatrix::from_sums(n, d, sums))
}
