//! NUDGE-M: magnitude-bounded fine-tuning.
//!
//! For a radius γ the training objective `Σ G_i·Δ_i` subject to `‖Δ_i‖ ≤ γ`
//! is maximized row by row by `Δ_i = γ G_i/‖G_i‖`. Plugging that into the
//! validation correctness condition makes every (query, competitor) pair a
//! linear inequality in γ, so each validation query is correct exactly on an
//! open interval of γ. γ* is then a point covered by the most intervals.

use std::time::Instant;

use rayon::prelude::*;

use crate::aggregate::{compute_aggregates, AggregateMatrix};
use crate::error::{NudgeError, Result};
use crate::interval::{max_overlap, ranked_gammas, verify_ranked, Interval, SweepResult, MAX_VERIFIED};
use crate::matrix::{dot, EmbeddingMatrix};
use crate::report::{FineTuneReport, Method, QuerySet};
use crate::score::correctness;

/// Denominators `𝒢_{i,Y} − 𝒢_{i,j}` smaller than this in magnitude count as 0.
pub const DENOMINATOR_EPS: f64 = 1e-12;

/// `Δ_i = γ G_i/‖G_i‖`, with `Δ_i = 0` for rows where `G_i = 0`.
pub fn maxs_m_delta(g: &AggregateMatrix, gamma: f64) -> Result<EmbeddingMatrix> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(NudgeError::param("gamma", format!("must be finite and >= 0, got {gamma}")));
    }
    let mut values = Vec::with_capacity(g.rows() * g.dim());
    for i in 0..g.rows() {
        values.extend(g.unit_row(i).into_iter().map(|u| gamma * u));
    }
    EmbeddingMatrix::new(g.rows(), g.dim(), values)
}

/// The γ-interval on which one validation query is answered correctly.
///
/// `s[j] = q·D_j` and `gq[j] = q·G_j/‖G_j‖` (0 for empty aggregates).
/// Returns the unclipped intersection of the per-competitor half-lines, or
/// `None` when it is empty.
fn query_interval(s: &[f64], gq: &[f64], target: usize) -> Option<Interval> {
    let (s_y, g_y) = (s[target], gq[target]);
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for j in 0..s.len() {
        if j == target {
            continue;
        }
        let den = g_y - gq[j];
        let num = s[j] - s_y;
        if den.abs() < DENOMINATOR_EPS {
            // Ties are infeasible: the target must win strictly.
            if num >= 0.0 {
                return None;
            }
        } else if den > 0.0 {
            lo = lo.max(num / den);
        } else {
            hi = hi.min(num / den);
        }
    }
    Interval::new(lo, hi)
}

/// Per-validation-query open interval `I_i ⊆ (0, ∞)` of radii γ for which
/// the query is answered correctly after applying [`maxs_m_delta`].
/// `None` marks queries with no such γ > 0.
pub fn feasibility_intervals(
    val: QuerySet<'_>,
    data: &EmbeddingMatrix,
    g: &AggregateMatrix,
) -> Result<Vec<Option<Interval>>> {
    val.validate(data, "validation queries")?;
    if g.rows() != data.rows() || g.dim() != data.dim() {
        return Err(NudgeError::DimensionMismatch {
            what: "aggregates",
            expected: data.rows(),
            actual: g.rows(),
        });
    }
    let targets = val.labels.single_targets(val.queries.rows())?;
    let units = g.unit_rows();
    let d = data.dim();

    Ok((0..val.queries.rows())
        .into_par_iter()
        .map(|i| {
            let q = val.queries.row(i);
            let s: Vec<f64> = data.iter_rows().map(|r| dot(q, r)).collect();
            let gq: Vec<f64> = units.chunks_exact(d).map(|u| dot(q, u)).collect();
            query_interval(&s, &gq, targets[i])
                .and_then(|iv| Interval::new(iv.lo.max(0.0), iv.hi))
        })
        .collect())
}

/// Selects γ* from precomputed aggregates and applies it.
pub fn nudge_m_with_aggregates(
    data: &EmbeddingMatrix,
    g: &AggregateMatrix,
    val: QuerySet<'_>,
    report: &mut FineTuneReport,
) -> Result<(EmbeddingMatrix, SweepResult)> {
    let t = Instant::now();
    let before = correctness(val.queries, val.labels, data)?.count;
    report.record_time("validate", t);

    let t = Instant::now();
    let intervals: Vec<Interval> = feasibility_intervals(val, data, g)?.into_iter().flatten().collect();
    report.record_time("intervals", t);

    let t = Instant::now();
    let sweep = max_overlap(&intervals, before);
    let ranked = ranked_gammas(&intervals, before, MAX_VERIFIED);
    report.record_time("sweep", t);

    let t = Instant::now();
    let chosen = verify_ranked(&ranked, before, |gamma| {
        let out = data.add(&maxs_m_delta(g, gamma)?)?;
        Ok::<_, NudgeError>((correctness(val.queries, val.labels, &out)?.count, out))
    })?;
    report.record_time("apply", t);
    // γ = 0 is always available.
    let (gamma, after, out) = chosen.unwrap_or_else(|| (0.0, before, data.clone()));

    report.gamma_star = gamma;
    report.val_correct_before = before;
    report.val_correct_after = after;
    report.selected_count = sweep.correct_count;
    Ok((out, sweep))
}

/// Full NUDGE-M: aggregates training queries, selects γ* on the validation
/// set, and returns `D + Δ(γ*)`.
pub fn nudge_m(
    data: &EmbeddingMatrix,
    train: QuerySet<'_>,
    val: QuerySet<'_>,
    weighted: bool,
) -> Result<(EmbeddingMatrix, FineTuneReport)> {
    train.validate(data, "training queries")?;
    val.validate(data, "validation queries")?;
    val.labels.single_targets(val.queries.rows())?;

    let mut report = FineTuneReport::new(Method::M, data, train.queries.rows(), val.queries.rows());
    report.config.weighted_labels = weighted;

    let t = Instant::now();
    let g = compute_aggregates(train.queries, train.labels, data.rows(), weighted)?;
    report.record_time("aggregate", t);

    let (out, _) = nudge_m_with_aggregates(data, &g, val, &mut report)?;
    Ok((out, report))
}
