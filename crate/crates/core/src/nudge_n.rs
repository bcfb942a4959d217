//! NUDGE-N: fine-tuning on the unit sphere.
//!
//! Each record may move by `‖Δ_i‖² ≤ γ` while staying unit-norm. With `θ_i`
//! the angle between `G_i` and `D_i` and `Z_i` the unit tangent at `D_i`
//! pointing toward `G_i`, the maximizer of `G_i·(D_i + Δ_i)` is
//!
//! * `D_i + Δ_i = G_i/‖G_i‖` once `cos θ_i ≥ 1 − γ/2` (the target is
//!   reachable), and otherwise
//! * `D_i + Δ_i = (1 − γ/2) D_i + ½√(γ(4−γ)) Z_i`, the farthest point of the
//!   cap in the direction of `G_i`.
//!
//! γ ranges over `[0, 4]`; beyond 4 the bound is inert for unit vectors.
//! Records whose aggregate points away from them (`G_i·D_i < 0`) have `G_i`
//! zeroed and do not move.

use std::time::Instant;

use rayon::prelude::*;

use crate::aggregate::{compute_aggregates, AggregateMatrix};
use crate::error::{NudgeError, Result};
use crate::interval::{
    max_overlap, ranked_gammas, verify_ranked, GammaIntervalSet, Interval, SweepResult, GAMMA_MAX, MAX_VERIFIED,
};
use crate::matrix::{dot, norm, EmbeddingMatrix, UNIT_NORM_TOL};
use crate::quadratic::solve_sqrt_quadratic;
use crate::report::{FineTuneReport, Method, QuerySet};
use crate::score::{correct_from_scores, correctness};

/// `sin θ` below which `G_i` is treated as parallel to `D_i`.
pub const PARALLEL_EPS: f64 = 1e-10;

/// Default number of grid points over `(0, 4]`.
pub const DEFAULT_GRID_POINTS: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    /// `G_i = 0`, either empty or zeroed for negative alignment.
    Zero,
    /// `G_i` parallel to `D_i`: already at the maximizer, `Z_i` undefined.
    Parallel,
    Tangent,
}

/// Per-record quantities needed by the sphere-constrained update.
#[derive(Debug, Clone)]
pub struct SphereGeometry {
    dim: usize,
    kinds: Vec<RowKind>,
    cos_theta: Vec<f64>,
    g_norm: Vec<f64>,
    unit_g: Vec<f64>,
    z: Vec<f64>,
    zeroed: Vec<bool>,
}

impl SphereGeometry {
    pub fn rows(&self) -> usize {
        self.kinds.len()
    }

    pub fn kind(&self, i: usize) -> RowKind {
        self.kinds[i]
    }

    pub fn cos_theta(&self, i: usize) -> f64 {
        self.cos_theta[i]
    }

    pub fn g_norm(&self, i: usize) -> f64 {
        self.g_norm[i]
    }

    /// Whether `G_i` was zeroed because `G_i·D_i < 0`.
    pub fn was_zeroed(&self, i: usize) -> bool {
        self.zeroed[i]
    }

    /// `Z_i`, defined only for [`RowKind::Tangent`] rows.
    pub fn tangent(&self, i: usize) -> Option<&[f64]> {
        (self.kinds[i] == RowKind::Tangent).then(|| &self.z[i * self.dim..(i + 1) * self.dim])
    }

    pub fn unit_g(&self, i: usize) -> &[f64] {
        &self.unit_g[i * self.dim..(i + 1) * self.dim]
    }

    /// `2 − 2 cos θ_i`: the smallest γ at which `G_i/‖G_i‖` is reachable.
    pub fn threshold(&self, i: usize) -> f64 {
        2.0 - 2.0 * self.cos_theta[i]
    }
}

/// Computes `cos θ_i`, `Z_i` and the row classification. `data` must be
/// row-normalized.
pub fn prepare_geometry(data: &EmbeddingMatrix, g: &AggregateMatrix) -> Result<SphereGeometry> {
    if !data.is_unit_norm(UNIT_NORM_TOL) {
        return Err(NudgeError::param("data", "rows must be unit-norm"));
    }
    if g.rows() != data.rows() || g.dim() != data.dim() {
        return Err(NudgeError::DimensionMismatch {
            what: "aggregates",
            expected: data.rows(),
            actual: g.rows(),
        });
    }
    let (n, d) = (data.rows(), data.dim());
    let mut geo = SphereGeometry {
        dim: d,
        kinds: vec![RowKind::Zero; n],
        cos_theta: vec![0.0; n],
        g_norm: vec![0.0; n],
        unit_g: vec![0.0; n * d],
        z: vec![0.0; n * d],
        zeroed: vec![false; n],
    };
    for i in 0..n {
        let (di, gi, gn) = (data.row(i), g.row(i), g.norm(i));
        if gn == 0.0 {
            continue;
        }
        let gd = dot(gi, di);
        if gd < 0.0 {
            geo.zeroed[i] = true;
            continue;
        }
        geo.g_norm[i] = gn;
        geo.cos_theta[i] = (gd / gn).clamp(0.0, 1.0);
        let unit = &mut geo.unit_g[i * d..(i + 1) * d];
        for (u, v) in unit.iter_mut().zip(gi) {
            *u = v / gn;
        }
        // Project out D_i twice for a clean tangent when θ is small.
        let mut r: Vec<f64> = gi.iter().zip(di).map(|(gk, dk)| gk - gd * dk).collect();
        let back = dot(&r, di);
        r.iter_mut().zip(di).for_each(|(rk, dk)| *rk -= back * dk);
        let rn = norm(&r);
        if rn <= PARALLEL_EPS * gn {
            geo.kinds[i] = RowKind::Parallel;
            geo.cos_theta[i] = 1.0;
            continue;
        }
        geo.kinds[i] = RowKind::Tangent;
        for (zk, rk) in geo.z[i * d..(i + 1) * d].iter_mut().zip(&r) {
            *zk = rk / rn;
        }
    }
    Ok(geo)
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(0.0..=GAMMA_MAX).contains(&gamma) {
        return Err(NudgeError::param("gamma", format!("must lie in [0, 4], got {gamma}")));
    }
    Ok(())
}

/// `½√(γ(4−γ))`, the tangent coefficient of the cap boundary point.
#[inline]
fn cap_tangent_coef(gamma: f64) -> f64 {
    0.5 * (gamma * (GAMMA_MAX - gamma)).max(0.0).sqrt()
}

/// The closed-form sphere-constrained update `Δ(γ)`.
///
/// Zero and parallel rows get `Δ_i = 0`: they either carry no signal or
/// already sit at the maximizer.
pub fn maxs_n_delta(geo: &SphereGeometry, data: &EmbeddingMatrix, gamma: f64) -> Result<EmbeddingMatrix> {
    check_gamma(gamma)?;
    let (n, d) = (data.rows(), data.dim());
    let h = cap_tangent_coef(gamma);
    let mut values = vec![0.0; n * d];
    for i in 0..n {
        if geo.kinds[i] != RowKind::Tangent {
            continue;
        }
        let out = &mut values[i * d..(i + 1) * d];
        let di = data.row(i);
        if geo.cos_theta[i] >= 1.0 - gamma / 2.0 {
            for ((o, u), dk) in out.iter_mut().zip(geo.unit_g(i)).zip(di) {
                *o = u - dk;
            }
        } else {
            let z = &geo.z[i * d..(i + 1) * d];
            for ((o, zk), dk) in out.iter_mut().zip(z).zip(di) {
                *o = h * zk - 0.5 * gamma * dk;
            }
        }
    }
    EmbeddingMatrix::new(n, d, values)
}

/// Per-query projections onto every record: `q·D_j`, `q·Z_j`, `q·G_j/‖G_j‖`.
struct Projections {
    s: Vec<f64>,
    z: Vec<f64>,
    g: Vec<f64>,
}

fn project(q: &[f64], data: &EmbeddingMatrix, geo: &SphereGeometry) -> Projections {
    let n = data.rows();
    let mut p = Projections {
        s: Vec::with_capacity(n),
        z: vec![0.0; n],
        g: vec![0.0; n],
    };
    for j in 0..n {
        p.s.push(dot(q, data.row(j)));
        if geo.kinds[j] == RowKind::Tangent {
            p.z[j] = dot(q, geo.tangent(j).unwrap());
            p.g[j] = dot(q, geo.unit_g(j));
        }
    }
    p
}

impl Projections {
    /// `q·(D_j + Δ_j(γ))` without materializing `Δ`.
    #[inline]
    fn score(&self, geo: &SphereGeometry, j: usize, gamma: f64, h: f64) -> f64 {
        if geo.kinds[j] != RowKind::Tangent {
            return self.s[j];
        }
        if geo.cos_theta[j] >= 1.0 - gamma / 2.0 {
            self.g[j]
        } else {
            (1.0 - gamma / 2.0) * self.s[j] + h * self.z[j]
        }
    }

    /// Coefficients `(a, b, c)` of record `j`'s score as
    /// `a√(γ(4−γ)) + bγ + c`, on the side of its threshold containing `mid`.
    fn coefficients(&self, geo: &SphereGeometry, j: usize, mid: f64) -> (f64, f64, f64) {
        match geo.kinds[j] {
            RowKind::Tangent if mid < geo.threshold(j) => (0.5 * self.z[j], -0.5 * self.s[j], self.s[j]),
            RowKind::Tangent => (0.0, 0.0, self.g[j]),
            _ => (0.0, 0.0, self.s[j]),
        }
    }
}

/// `{γ ∈ (0, 4) : q·D*_target(γ) > q·D*_j(γ)}`.
///
/// Each score is piecewise of the form `a√(γ(4−γ)) + bγ + c`, switching at
/// the record's threshold `2 − 2cos θ`. Splitting `(0, 4)` at both records'
/// thresholds leaves pieces on which the difference has that form, each
/// solved exactly and restricted to its piece.
fn pair_set(p: &Projections, geo: &SphereGeometry, target: usize, j: usize) -> GammaIntervalSet {
    let mut cuts = vec![0.0, GAMMA_MAX];
    for r in [target, j] {
        if geo.kinds[r] == RowKind::Tangent {
            let t = geo.threshold(r);
            if t > 0.0 && t < GAMMA_MAX {
                cuts.push(t);
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut pieces = Vec::new();
    for w in cuts.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let (ay, by, cy) = p.coefficients(geo, target, mid);
        let (aj, bj, cj) = p.coefficients(geo, j, mid);
        let sol = solve_sqrt_quadratic(ay - aj, by - bj, cy - cj).restrict(w[0], w[1]);
        pieces.extend_from_slice(sol.intervals());
    }
    GammaIntervalSet::from_intervals(pieces)
}

/// `I_i`: the γ ∈ (0, 4) at which a single-label query is answered correctly.
fn query_set(p: &Projections, geo: &SphereGeometry, target: usize) -> GammaIntervalSet {
    let mut acc = GammaIntervalSet::full();
    for j in 0..p.s.len() {
        if j == target {
            continue;
        }
        acc = acc.intersect(&pair_set(p, geo, target, j));
        if acc.is_empty() {
            break;
        }
    }
    acc
}

/// Per-query exact γ-sets for single-label validation queries.
pub fn gamma_sets(val: QuerySet<'_>, data: &EmbeddingMatrix, geo: &SphereGeometry) -> Result<Vec<GammaIntervalSet>> {
    let targets = val.labels.single_targets(val.queries.rows())?;
    Ok((0..val.queries.rows())
        .into_par_iter()
        .map(|i| query_set(&project(val.queries.row(i), data, geo), geo, targets[i]))
        .collect())
}

/// Normalizes `data` when any row is off the unit sphere. Returns the
/// normalized matrix and whether it changed.
fn ensure_unit(data: &EmbeddingMatrix) -> Result<(EmbeddingMatrix, bool)> {
    if data.is_unit_norm(UNIT_NORM_TOL) {
        Ok((data.clone(), false))
    } else {
        Ok((data.normalized()?, true))
    }
}

/// Shared tail: apply γ*, measure, and guard against regression.
fn finish(
    data: &EmbeddingMatrix,
    geo: &SphereGeometry,
    val: QuerySet<'_>,
    gamma: f64,
    before: usize,
    selected: usize,
    report: &mut FineTuneReport,
) -> Result<EmbeddingMatrix> {
    let t = Instant::now();
    let mut out = data.add(&maxs_n_delta(geo, data, gamma)?)?;
    report.record_time("apply", t);
    let t = Instant::now();
    let mut after = correctness(val.queries, val.labels, &out)?.count;
    report.record_time("validate", t);
    let mut gamma = gamma;
    if after < before {
        gamma = 0.0;
        out = data.clone();
        after = before;
    }
    report.gamma_star = gamma;
    report.val_correct_before = before;
    report.val_correct_after = after;
    report.selected_count = selected;
    Ok(out)
}

struct Prepared {
    data: EmbeddingMatrix,
    geo: SphereGeometry,
    before: usize,
}

fn prepare(
    data: &EmbeddingMatrix,
    train: QuerySet<'_>,
    val: QuerySet<'_>,
    weighted: bool,
    report: &mut FineTuneReport,
) -> Result<Prepared> {
    train.validate(data, "training queries")?;
    val.validate(data, "validation queries")?;
    let (data, normalized) = ensure_unit(data)?;
    report.normalized_on_entry = normalized;
    report.config.weighted_labels = weighted;

    let t = Instant::now();
    let g = compute_aggregates(train.queries, train.labels, data.rows(), weighted)?;
    report.record_time("aggregate", t);
    let t = Instant::now();
    let geo = prepare_geometry(&data, &g)?;
    report.record_time("geometry", t);

    let t = Instant::now();
    let before = correctness(val.queries, val.labels, &data)?.count;
    report.record_time("validate", t);
    Ok(Prepared { data, geo, before })
}

/// NUDGE-N with exact γ* selection over per-query interval sets.
pub fn nudge_n_exact(
    data: &EmbeddingMatrix,
    train: QuerySet<'_>,
    val: QuerySet<'_>,
    weighted: bool,
) -> Result<(EmbeddingMatrix, FineTuneReport)> {
    let mut report = FineTuneReport::new(Method::NExact, data, train.queries.rows(), val.queries.rows());
    val.labels.single_targets(val.queries.rows())?;
    let p = prepare(data, train, val, weighted, &mut report)?;

    let t = Instant::now();
    let sets = gamma_sets(val, &p.data, &p.geo)?;
    report.record_time("intervals", t);

    let t = Instant::now();
    let all: Vec<Interval> = sets.iter().flat_map(|s| s.intervals().iter().copied()).collect();
    let ranked = ranked_gammas(&all, p.before, MAX_VERIFIED);
    report.record_time("sweep", t);

    let t = Instant::now();
    let chosen = verify_ranked(&ranked, p.before, |gamma| {
        let out = p.data.add(&maxs_n_delta(&p.geo, &p.data, gamma)?)?;
        Ok::<_, NudgeError>((correctness(val.queries, val.labels, &out)?.count, out))
    })?;
    report.record_time("apply", t);
    let (gamma, after, out) = chosen.unwrap_or_else(|| (0.0, p.before, p.data.clone()));
    report.gamma_star = gamma;
    report.val_correct_before = p.before;
    report.val_correct_after = after;
    report.selected_count = ranked.first().map_or(p.before, |r| r.1);
    Ok((out, report))
}

/// Maximum-overlap selection over per-query interval sets. A query's own
/// intervals are disjoint, so the stabbing count never counts it twice.
pub fn sweep_sets(sets: &[GammaIntervalSet], count_at_zero: usize) -> SweepResult {
    let all: Vec<Interval> = sets.iter().flat_map(|s| s.intervals().iter().copied()).collect();
    max_overlap(&all, count_at_zero)
}

/// The uniform grid `{4k/points : k = 1..=points}`.
pub fn gamma_grid(points: usize) -> Vec<f64> {
    (1..=points).map(|k| GAMMA_MAX * k as f64 / points as f64).collect()
}

/// Validation-correct count at every γ in `gammas`, using precomputed
/// projections so each γ costs `O(n_V · n)` regardless of `d`.
pub fn grid_counts(
    val: QuerySet<'_>,
    data: &EmbeddingMatrix,
    geo: &SphereGeometry,
    gammas: &[f64],
) -> Vec<usize> {
    let grouped = val.labels.by_query(val.queries.rows());
    let coefs: Vec<f64> = gammas.iter().map(|&g| cap_tangent_coef(g)).collect();
    let per_query: Vec<Vec<bool>> = (0..val.queries.rows())
        .into_par_iter()
        .map(|i| {
            let p = project(val.queries.row(i), data, geo);
            let mut scores = vec![0.0; data.rows()];
            gammas
                .iter()
                .zip(&coefs)
                .map(|(&gamma, &h)| {
                    for (j, s) in scores.iter_mut().enumerate() {
                        *s = p.score(geo, j, gamma, h);
                    }
                    correct_from_scores(&scores, &grouped[i])
                })
                .collect()
        })
        .collect();
    (0..gammas.len())
        .map(|k| per_query.iter().filter(|flags| flags[k]).count())
        .collect()
}

/// NUDGE-N with γ* chosen on a uniform grid over `(0, 4]` (plus γ = 0).
/// Supports multi-label validation through tiered correctness.
pub fn nudge_n_grid(
    data: &EmbeddingMatrix,
    train: QuerySet<'_>,
    val: QuerySet<'_>,
    weighted: bool,
    grid_points: usize,
) -> Result<(EmbeddingMatrix, FineTuneReport)> {
    if grid_points < 2 {
        return Err(NudgeError::param("grid_points", "must be at least 2"));
    }
    let mut report = FineTuneReport::new(Method::N, data, train.queries.rows(), val.queries.rows());
    report.config.grid_points = Some(grid_points);
    let p = prepare(data, train, val, weighted, &mut report)?;

    let t = Instant::now();
    let gammas = gamma_grid(grid_points);
    let counts = grid_counts(val, &p.data, &p.geo, &gammas);
    let (mut best_gamma, mut best) = (0.0, p.before);
    for (&g, &c) in gammas.iter().zip(&counts) {
        if c > best {
            best = c;
            best_gamma = g;
        }
    }
    report.record_time("grid", t);

    let out = finish(&p.data, &p.geo, val, best_gamma, p.before, best, &mut report)?;
    Ok((out, report))
}
