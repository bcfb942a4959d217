//! Inner-product scoring and the per-query correctness indicator.

use rayon::prelude::*;

use crate::error::Result;
use crate::labels::LabelSet;
use crate::matrix::{dot, EmbeddingMatrix};

/// Dense `n_Q x n` score matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    pub queries: usize,
    pub records: usize,
    pub values: Vec<f64>,
}

impl ScoreMatrix {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.records..(i + 1) * self.records]
    }
}

/// Scores of one query against every record.
pub fn score_row(query: &[f64], data: &EmbeddingMatrix) -> Vec<f64> {
    data.iter_rows().map(|r| dot(query, r)).collect()
}

pub fn score_all(queries: &EmbeddingMatrix, data: &EmbeddingMatrix) -> Result<ScoreMatrix> {
    data.check_dim("queries", queries)?;
    let values = (0..queries.rows())
        .into_par_iter()
        .flat_map_iter(|i| score_row(queries.row(i), data))
        .collect();
    Ok(ScoreMatrix {
        queries: queries.rows(),
        records: data.rows(),
        values,
    })
}

/// Whether a query with the given labels is answered correctly by `scores`.
///
/// Labels are grouped into relevance tiers. Every record of a higher tier
/// must strictly outscore every record of a lower tier, and every labeled
/// record must strictly outscore every unlabeled one. A single label reduces
/// to "the target strictly beats all other records"; ties are incorrect.
/// `labels` must be sorted by record index.
pub fn correct_from_scores(scores: &[f64], labels: &[(usize, f64)]) -> bool {
    if labels.is_empty() {
        return false;
    }
    if let [(target, _)] = labels {
        let s = scores[*target];
        return scores
            .iter()
            .enumerate()
            .all(|(j, &v)| j == *target || s > v);
    }

    // Tiers by relevance, descending: (relevance, min score, max score).
    let mut tiers: Vec<(f64, f64, f64)> = Vec::new();
    let mut by_rel: Vec<(f64, f64)> = labels.iter().map(|&(r, rel)| (rel, scores[r])).collect();
    by_rel.sort_by(|a, b| b.0.total_cmp(&a.0));
    for (rel, s) in by_rel {
        match tiers.last_mut() {
            Some(t) if t.0 == rel => {
                t.1 = t.1.min(s);
                t.2 = t.2.max(s);
            }
            _ => tiers.push((rel, s, s)),
        }
    }
    if tiers.windows(2).any(|w| w[0].1 <= w[1].2) {
        return false;
    }
    let lowest_min = tiers.last().map(|t| t.1).unwrap_or(f64::INFINITY);
    let mut li = 0;
    for (j, &v) in scores.iter().enumerate() {
        if li < labels.len() && labels[li].0 == j {
            li += 1;
            continue;
        }
        if v >= lowest_min {
            return false;
        }
    }
    true
}

/// Per-query correctness flags plus their count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrectnessVector {
    pub flags: Vec<bool>,
    pub count: usize,
}

impl CorrectnessVector {
    pub fn from_flags(flags: Vec<bool>) -> Self {
        let count = flags.iter().filter(|&&c| c).count();
        Self { flags, count }
    }
}

/// Evaluates every query against `data_star`. Labels must be valid for
/// `queries` and `data_star`.
pub fn correctness(
    queries: &EmbeddingMatrix,
    labels: &LabelSet,
    data_star: &EmbeddingMatrix,
) -> Result<CorrectnessVector> {
    data_star.check_dim("queries", queries)?;
    labels.validate(queries.rows(), data_star.rows())?;
    let grouped = labels.by_query(queries.rows());
    let flags = grouped
        .par_iter()
        .enumerate()
        .map(|(i, lab)| correct_from_scores(&score_row(queries.row(i), data_star), lab))
        .collect();
    Ok(CorrectnessVector::from_flags(flags))
}
