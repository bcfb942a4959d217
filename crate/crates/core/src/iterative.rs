//! Iterative variants: normalized-gradient steps with validation
//! checkpointing instead of closed-form γ selection.
//!
//! The training loss `−Σ Q_j·(D_{Y_j} + Δ_{Y_j})` has constant gradient
//! `−G`, so a normalized step moves each record by `α G_i/‖G_i‖`. Without
//! renormalization (IM) the displacement after `k` steps is `kα G_i/‖G_i‖`,
//! which coincides with the magnitude-bounded solution at `γ = kα`. IN
//! renormalizes every row after every step.

use std::time::Instant;

use rayon::prelude::*;

use crate::aggregate::{compute_aggregates, AggregateMatrix};
use crate::error::{NudgeError, Result};
use crate::matrix::{norm, EmbeddingMatrix, UNIT_NORM_TOL};
use crate::report::{FineTuneReport, Method, QuerySet};
use crate::score::correctness;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterativeConfig {
    pub alpha: f64,
    pub iters: usize,
    pub checkpoint_every: usize,
}

impl IterativeConfig {
    pub fn new(alpha: f64, iters: usize, checkpoint_every: usize) -> Result<Self> {
        let cfg = Self {
            alpha,
            iters,
            checkpoint_every,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(NudgeError::param("alpha", format!("must be positive, got {}", self.alpha)));
        }
        if self.iters == 0 {
            return Err(NudgeError::param("iters", "must be at least 1"));
        }
        if self.checkpoint_every == 0 {
            return Err(NudgeError::param("checkpoint_every", "must be at least 1"));
        }
        Ok(())
    }

    /// Step 0, every `checkpoint_every`-th step, and the final step.
    pub fn checkpoints(&self) -> Vec<usize> {
        let mut steps: Vec<usize> = (0..=self.iters).step_by(self.checkpoint_every).collect();
        if steps.last() != Some(&self.iters) {
            steps.push(self.iters);
        }
        steps
    }
}

/// Best checkpoint seen so far; ties keep the earliest step.
struct Best {
    step: usize,
    count: usize,
    data: EmbeddingMatrix,
}

impl Best {
    fn offer(&mut self, step: usize, count: usize, data: &EmbeddingMatrix) {
        if count > self.count {
            *self = Best {
                step,
                count,
                data: data.clone(),
            };
        }
    }
}

fn base_report(method: Method, data: &EmbeddingMatrix, n_val: usize, cfg: &IterativeConfig) -> FineTuneReport {
    let mut report = FineTuneReport::new(method, data, 0, n_val);
    report.config.alpha = Some(cfg.alpha);
    report.config.iters = Some(cfg.iters);
    report.config.checkpoint_every = Some(cfg.checkpoint_every);
    report
}

/// IM: `Δ^(k) = kα G/‖G‖`, checkpointed on validation top-1 count.
///
/// The reported `gamma_star` is `α · best_step`, the radius the chosen
/// checkpoint corresponds to.
pub fn nudge_im(
    data: &EmbeddingMatrix,
    g: &AggregateMatrix,
    val: QuerySet<'_>,
    cfg: &IterativeConfig,
) -> Result<(EmbeddingMatrix, FineTuneReport)> {
    cfg.validate()?;
    val.validate(data, "validation queries")?;
    let mut report = base_report(Method::Im, data, val.queries.rows(), cfg);
    let units = g.unit_rows();

    let t = Instant::now();
    let before = correctness(val.queries, val.labels, data)?.count;
    let mut best = Best {
        step: 0,
        count: before,
        data: data.clone(),
    };
    for step in cfg.checkpoints().into_iter().skip(1) {
        // Constant gradient: the k-th iterate is exactly D + (kα)·u.
        let radius = step as f64 * cfg.alpha;
        let values = data
            .as_slice()
            .iter()
            .zip(&units)
            .map(|(d, u)| d + radius * u)
            .collect();
        let current = EmbeddingMatrix::new(data.rows(), data.dim(), values)?;
        let count = correctness(val.queries, val.labels, &current)?.count;
        best.offer(step, count, &current);
    }
    report.record_time("iterate", t);

    report.gamma_star = best.step as f64 * cfg.alpha;
    report.best_step = Some(best.step);
    report.val_correct_before = before;
    report.val_correct_after = best.count;
    report.selected_count = best.count;
    Ok((best.data, report))
}

/// IN: `D_i ← normalize(D_i + α G_i/‖G_i‖)` every step, checkpointed like IM.
/// Rows with `G_i = 0` never move. `data` is normalized on entry if needed.
pub fn nudge_in(
    data: &EmbeddingMatrix,
    g: &AggregateMatrix,
    val: QuerySet<'_>,
    cfg: &IterativeConfig,
) -> Result<(EmbeddingMatrix, FineTuneReport)> {
    cfg.validate()?;
    val.validate(data, "validation queries")?;
    let mut report = base_report(Method::In, data, val.queries.rows(), cfg);
    let (start, normalized) = if data.is_unit_norm(UNIT_NORM_TOL) {
        (data.clone(), false)
    } else {
        (data.normalized()?, true)
    };
    report.normalized_on_entry = normalized;
    let units = g.unit_rows();
    let moving: Vec<bool> = g.norms().iter().map(|&n| n > 0.0).collect();
    let d = data.dim();

    let t = Instant::now();
    let before = correctness(val.queries, val.labels, &start)?.count;
    let mut best = Best {
        step: 0,
        count: before,
        data: start.clone(),
    };
    let checkpoints = cfg.checkpoints();
    let mut next_cp = 1;
    let mut current = start.into_values();
    for step in 1..=cfg.iters {
        current
            .par_chunks_exact_mut(d)
            .zip(units.par_chunks_exact(d))
            .zip(moving.par_iter())
            .for_each(|((row, u), &mv)| {
                if !mv {
                    return;
                }
                row.iter_mut().zip(u).for_each(|(x, uk)| *x += cfg.alpha * uk);
                let nrm = norm(row);
                if nrm > 0.0 {
                    row.iter_mut().for_each(|x| *x /= nrm);
                }
                debug_assert!((norm(row) - 1.0).abs() <= UNIT_NORM_TOL);
            });
        if checkpoints.get(next_cp) == Some(&step) {
            next_cp += 1;
            let snapshot = EmbeddingMatrix::new(data.rows(), d, current.clone())?;
            let count = correctness(val.queries, val.labels, &snapshot)?.count;
            best.offer(step, count, &snapshot);
        }
    }
    report.record_time("iterate", t);

    report.gamma_star = best.step as f64 * cfg.alpha;
    report.best_step = Some(best.step);
    report.val_correct_before = before;
    report.val_correct_after = best.count;
    report.selected_count = best.count;
    Ok((best.data, report))
}

/// Convenience wrapper computing `G` from a training set first.
pub fn nudge_iterative(
    method: Method,
    data: &EmbeddingMatrix,
    train: QuerySet<'_>,
    val: QuerySet<'_>,
    weighted: bool,
    cfg: &IterativeConfig,
) -> Result<(EmbeddingMatrix, FineTuneReport)> {
    train.validate(data, "training queries")?;
    let started = Instant::now();
    let g = compute_aggregates(train.queries, train.labels, data.rows(), weighted)?;
    let aggregate_ms = started.elapsed().as_secs_f64() * 1e3;
    let (out, mut report) = match method {
        Method::Im => nudge_im(data, &g, val, cfg)?,
        Method::In => nudge_in(data, &g, val, cfg)?,
        other => return Err(NudgeError::param("method", format!("{other} is not iterative"))),
    };
    report.runtime.timings_ms.insert("aggregate".into(), aggregate_ms);
    report.n_train = train.queries.rows();
    report.config.weighted_labels = weighted;
    Ok((out, report))
}
