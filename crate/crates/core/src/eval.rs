//! Retrieval metrics for exact inner-product k-NN.

use rayon::prelude::*;

use crate::error::{NudgeError, Result};
use crate::labels::LabelSet;
use crate::matrix::EmbeddingMatrix;
use crate::score::score_row;

/// Indices of the `k` highest-scoring records, best first. Equal scores are
/// broken by ascending record index.
pub fn top_k(scores: &[f64], k: usize) -> Result<Vec<usize>> {
    if k == 0 || k > scores.len() {
        return Err(NudgeError::param(
            "k",
            format!("must be in [1, {}], got {k}", scores.len()),
        ));
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    let cmp = |a: &usize, b: &usize| scores[*b].total_cmp(&scores[*a]).then(a.cmp(b));
    if k < idx.len() {
        idx.select_nth_unstable_by(k - 1, cmp);
        idx.truncate(k);
    }
    idx.sort_unstable_by(cmp);
    Ok(idx)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub k: usize,
    pub query_count: usize,
    pub recall_at_k: f64,
    pub ndcg_at_k: f64,
    pub recall_at_1: f64,
}

/// Recall@k is `|relevant ∩ top-k| / min(k, |relevant|)`. NDCG@k uses the
/// label relevance as gain and `1/log2(rank + 1)` as discount.
fn query_metrics(ranked: &[usize], relevant: &[(usize, f64)], k: usize) -> (f64, f64, f64) {
    let rel_of = |r: usize| {
        relevant
            .binary_search_by_key(&r, |&(rec, _)| rec)
            .ok()
            .map(|p| relevant[p].1)
    };
    let hits = ranked.iter().filter(|&&r| rel_of(r).is_some()).count();
    let recall = hits as f64 / k.min(relevant.len()) as f64;
    let recall1 = if rel_of(ranked[0]).is_some() { 1.0 } else { 0.0 };

    let discount = |rank: usize| 1.0 / ((rank + 2) as f64).log2();
    let dcg: f64 = ranked
        .iter()
        .enumerate()
        .filter_map(|(p, &r)| rel_of(r).map(|g| g * discount(p)))
        .sum();
    let mut ideal: Vec<f64> = relevant.iter().map(|&(_, g)| g).collect();
    ideal.sort_by(|a, b| b.total_cmp(a));
    let idcg: f64 = ideal.iter().take(k).enumerate().map(|(p, g)| g * discount(p)).sum();
    (recall, dcg / idcg, recall1)
}

/// Mean Recall@k, NDCG@k and Recall@1 over all queries. Every query needs
/// at least one label.
pub fn metrics(
    queries: &EmbeddingMatrix,
    labels: &LabelSet,
    data: &EmbeddingMatrix,
    k: usize,
) -> Result<MetricReport> {
    data.check_dim("queries", queries)?;
    labels.validate(queries.rows(), data.rows())?;
    if k == 0 || k > data.rows() {
        return Err(NudgeError::param(
            "k",
            format!("must be in [1, {}], got {k}", data.rows()),
        ));
    }
    let by_query = labels.by_query(queries.rows());
    let per_query: Vec<(f64, f64, f64)> = (0..queries.rows())
        .into_par_iter()
        .map(|i| {
            let ranked = top_k(&score_row(queries.row(i), data), k)?;
            Ok(query_metrics(&ranked, &by_query[i], k))
        })
        .collect::<Result<_>>()?;

    let nq = per_query.len() as f64;
    let mean = |f: fn(&(f64, f64, f64)) -> f64| per_query.iter().map(f).sum::<f64>() / nq;
    Ok(MetricReport {
        k,
        query_count: per_query.len(),
        recall_at_k: mean(|m| m.0),
        ndcg_at_k: mean(|m| m.1),
        recall_at_1: mean(|m| m.2),
    })
}
