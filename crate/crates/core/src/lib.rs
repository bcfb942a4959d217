//! Non-parametric fine-tuning of data embeddings for inner-product k-NN
//! retrieval.
//!
//! Given data embeddings `D`, labeled training queries and labeled
//! validation queries, each solver moves every record toward the training
//! queries it answers and picks the step size γ that maximizes validation
//! top-1 accuracy:
//!
//! - [`nudge_m`]: displacement bounded by `‖Δ_i‖ ≤ γ`, exact γ* by interval sweep.
//! - [`nudge_n_exact`] / [`nudge_n_grid`]: displacement bounded and rows kept on
//!   the unit sphere, γ ∈ [0, 4].
//! - [`nudge_iterative`]: fixed-step variants with validation checkpointing.
//!
//! [`finetune`] dispatches on a [`Method`] and is what the `nudge` binary calls.

pub mod aggregate;
pub mod error;
pub mod eval;
pub mod interval;
pub mod io;
pub mod iterative;
pub mod labels;
pub mod matrix;
pub mod nudge_m;
pub mod nudge_n;
pub mod quadratic;
pub mod report;
pub mod score;
pub mod split;

pub use aggregate::{compute_aggregates, AggregateMatrix};
pub use error::{NudgeError, Result};
pub use eval::{metrics, top_k, MetricReport};
pub use interval::{max_overlap, GammaIntervalSet, Interval, SweepResult};
pub use iterative::{nudge_im, nudge_in, nudge_iterative, IterativeConfig};
pub use labels::{Label, LabelSet};
pub use matrix::EmbeddingMatrix;
pub use nudge_m::{maxs_m_delta, nudge_m};
pub use nudge_n::{maxs_n_delta, nudge_n_exact, nudge_n_grid, prepare_geometry, DEFAULT_GRID_POINTS};
pub use quadratic::solve_sqrt_quadratic;
pub use report::{FineTuneReport, Method, QuerySet};
pub use score::{correctness, CorrectnessVector};

/// Everything [`finetune`] needs besides the data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FinetuneOptions {
    pub method: Method,
    pub weighted_labels: bool,
    /// Grid size for [`Method::N`].
    pub grid_points: usize,
    /// Required for [`Method::Im`] and [`Method::In`].
    pub iterative: Option<IterativeConfig>,
}

impl FinetuneOptions {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            weighted_labels: false,
            grid_points: DEFAULT_GRID_POINTS,
            iterative: None,
        }
    }
}

pub fn finetune(
    data: &EmbeddingMatrix,
    train: QuerySet<'_>,
    val: QuerySet<'_>,
    opts: &FinetuneOptions,
) -> Result<(EmbeddingMatrix, FineTuneReport)> {
    let weighted = opts.weighted_labels;
    match opts.method {
        Method::M => nudge_m(data, train, val, weighted),
        Method::N => nudge_n_grid(data, train, val, weighted, opts.grid_points),
        Method::NExact => nudge_n_exact(data, train, val, weighted),
        Method::Im | Method::In => {
            let cfg = opts
                .iterative
                .ok_or_else(|| NudgeError::param("alpha", "iterative methods need alpha, iters and checkpoint_every"))?;
            nudge_iterative(opts.method, data, train, val, weighted, &cfg)
        }
    }
}
