//! Seeded train/validation/test split of a labeled query set.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{NudgeError, Result};
use crate::labels::{Label, LabelSet};
use crate::matrix::EmbeddingMatrix;

const FRACTION_TOL: f64 = 1e-9;

/// One partition: its queries, labels re-indexed to local query positions,
/// and the original index of each local query.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub queries: EmbeddingMatrix,
    pub labels: LabelSet,
    pub source: Vec<usize>,
}

/// Partition sizes for `n` queries. Every fraction but the last is floored;
/// the last partition takes the remainder of `round(n · Σf)`.
pub fn split_sizes(n: usize, fractions: &[f64]) -> Result<Vec<usize>> {
    if fractions.is_empty() {
        return Err(NudgeError::param("fractions", "at least one fraction is required"));
    }
    if let Some(f) = fractions.iter().find(|f| !(f.is_finite() && **f > 0.0)) {
        return Err(NudgeError::param("fractions", format!("must be positive, got {f}")));
    }
    let total: f64 = fractions.iter().sum();
    if total > 1.0 + FRACTION_TOL {
        return Err(NudgeError::param("fractions", format!("sum to {total}, more than 1")));
    }
    let used = ((n as f64 * total).round() as usize).min(n);
    let last = fractions.len() - 1;
    let mut sizes: Vec<usize> = fractions[..last]
        .iter()
        .map(|f| (n as f64 * f + FRACTION_TOL).floor() as usize)
        .collect();
    let head: usize = sizes.iter().sum();
    sizes.push(used.saturating_sub(head));
    Ok(sizes)
}

/// Shuffles query indices with a seeded ChaCha8 stream and cuts them into
/// partitions. Each query's labels move with it. Indices inside a
/// partition keep ascending original order.
pub fn split(
    queries: &EmbeddingMatrix,
    labels: &LabelSet,
    fractions: &[f64],
    seed: u64,
) -> Result<Vec<Partition>> {
    labels.check_bounds(queries.rows(), usize::MAX)?;
    let sizes = split_sizes(queries.rows(), fractions)?;
    let mut order: Vec<usize> = (0..queries.rows()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let by_query = labels.by_query(queries.rows());
    let mut start = 0;
    let mut parts = Vec::with_capacity(sizes.len());
    for size in sizes {
        let mut source = order[start..start + size].to_vec();
        source.sort_unstable();
        start += size;

        if source.is_empty() {
            return Err(NudgeError::param(
                "fractions",
                format!("partition {} would be empty with {} queries", parts.len(), queries.rows()),
            ));
        }
        let rows: Vec<Vec<f64>> = source.iter().map(|&q| queries.row(q).to_vec()).collect();
        let entries = source
            .iter()
            .enumerate()
            .flat_map(|(local, &q)| {
                by_query[q]
                    .iter()
                    .map(move |&(r, rel)| Label::with_relevance(local, r, rel))
            })
            .collect();
        parts.push(Partition {
            queries: EmbeddingMatrix::from_rows(&rows)?,
            labels: LabelSet::new(entries)?,
            source,
        });
    }
    Ok(parts)
}
