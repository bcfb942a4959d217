//! Brute-force references for the closed-form solvers.
//!
//! Everything here is rebuilt from first principles on top of the core
//! primitives (matrices, aggregates, correctness). Nothing calls into the
//! solver modules, so agreement between the two is meaningful.

use nudge::matrix::dot;
use nudge::{correctness, AggregateMatrix, EmbeddingMatrix, QuerySet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Desk-scale caps; oracle callers assert these.
pub const MAX_N: usize = 64;
pub const MAX_D: usize = 8;
pub const MAX_NV: usize = 20;

#[derive(Debug, Clone, Copy)]
pub struct OracleBudget {
    pub grid_points: usize,
    pub random_samples: usize,
    pub seed: u64,
}

impl Default for OracleBudget {
    fn default() -> Self {
        Self {
            grid_points: 4096,
            random_samples: 100_000,
            seed: 0x5eed,
        }
    }
}

pub fn assert_desk_scale(data: &EmbeddingMatrix, val: QuerySet<'_>) {
    assert!(data.rows() <= MAX_N && data.dim() <= MAX_D && val.queries.rows() <= MAX_NV);
}

fn unit(v: &[f64]) -> Vec<f64> {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter().map(|x| x / n).collect()
    } else {
        vec![0.0; v.len()]
    }
}

/// `Δ_i = γ G_i/‖G_i‖`, written out independently of the solver.
pub fn ball_delta(g: &AggregateMatrix, gamma: f64) -> EmbeddingMatrix {
    let rows: Vec<Vec<f64>> = (0..g.rows())
        .map(|i| unit(g.row(i)).into_iter().map(|u| gamma * u).collect())
        .collect();
    EmbeddingMatrix::from_rows(&rows).unwrap()
}

/// Sphere-constrained maximizer of `G_i·(D_i + Δ)` with `‖D_i + Δ‖ = 1` and
/// `‖Δ‖² ≤ γ`, derived geometrically: the feasible set is a spherical cap
/// around `D_i` of angular radius `φ` with `2 − 2cos φ = γ`. The maximizer is
/// `Ĝ` itself when it lies inside the cap; otherwise the cap boundary point
/// on the great circle from `D_i` toward `Ĝ`. Rows with `G_i·D_i < 0` are
/// treated as having no aggregate.
pub fn sphere_delta(data: &EmbeddingMatrix, g: &AggregateMatrix, gamma: f64) -> EmbeddingMatrix {
    let cos_phi = 1.0 - gamma / 2.0;
    let phi = cos_phi.clamp(-1.0, 1.0).acos();
    let rows: Vec<Vec<f64>> = (0..data.rows())
        .map(|i| {
            let d = data.row(i);
            let gi = g.row(i);
            let dim = d.len();
            if dot(gi, gi) == 0.0 || dot(gi, d) < 0.0 {
                return vec![0.0; dim];
            }
            let gh = unit(gi);
            let c = dot(&gh, d).clamp(-1.0, 1.0);
            let perp: Vec<f64> = (0..dim).map(|k| gh[k] - c * d[k]).collect();
            let pn = dot(&perp, &perp).sqrt();
            if pn <= 1e-10 {
                return vec![0.0; dim];
            }
            if c >= cos_phi {
                return (0..dim).map(|k| gh[k] - d[k]).collect();
            }
            (0..dim)
                .map(|k| phi.cos() * d[k] + phi.sin() * perp[k] / pn - d[k])
                .collect()
        })
        .collect();
    EmbeddingMatrix::from_rows(&rows).unwrap()
}

/// Evaluates validation correctness at every candidate γ after applying
/// `delta(γ)` and returns the best `(γ, count)`. The smallest γ wins ties.
pub fn gamma_grid_oracle(
    data: &EmbeddingMatrix,
    val: QuerySet<'_>,
    candidates: &[f64],
    delta: impl Fn(f64) -> EmbeddingMatrix,
) -> (f64, usize) {
    let mut sorted: Vec<f64> = candidates.to_vec();
    sorted.push(0.0);
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let mut best = (0.0, 0usize);
    let mut first = true;
    for &gamma in &sorted {
        let moved = data.add(&delta(gamma)).unwrap();
        let count = correctness(val.queries, val.labels, &moved).unwrap().count;
        if first || count > best.1 {
            best = (gamma, count);
            first = false;
        }
    }
    best
}

/// Candidate radii for the ball-constrained update: every pairwise score
/// crossing `γ = (S_j − S_Y)/(Ĝ_Y − Ĝ_j)`, the midpoints between
/// consecutive crossings, crossings ± a relative ε, a point past the last
/// crossing, and `extra_grid` uniform points up to twice the last crossing.
pub fn ball_candidates(
    data: &EmbeddingMatrix,
    g: &AggregateMatrix,
    val: QuerySet<'_>,
    extra_grid: usize,
) -> Vec<f64> {
    let units: Vec<Vec<f64>> = (0..g.rows()).map(|i| unit(g.row(i))).collect();
    let mut cross = Vec::new();
    for l in val.labels.entries() {
        let q = val.queries.row(l.query);
        let y = l.record;
        for j in 0..data.rows() {
            if j == y {
                continue;
            }
            let num = dot(q, data.row(j)) - dot(q, data.row(y));
            let den = dot(q, &units[y]) - dot(q, &units[j]);
            if den != 0.0 {
                let r = num / den;
                if r.is_finite() && r > 0.0 {
                    cross.push(r);
                }
            }
        }
    }
    cross.sort_by(f64::total_cmp);
    let mut out = Vec::with_capacity(cross.len() * 4 + extra_grid + 2);
    for &r in &cross {
        out.push(r);
        out.push(r * (1.0 - 1e-9));
        out.push(r * (1.0 + 1e-9));
    }
    for w in cross.windows(2) {
        out.push(0.5 * (w[0] + w[1]));
    }
    let top = cross.last().copied().unwrap_or(1.0);
    if let Some(&first) = cross.first() {
        out.push(0.5 * first);
    }
    out.push(top + 1.0);
    out.push(2.0 * top + 1.0);
    for k in 1..=extra_grid {
        out.push(2.0 * top * k as f64 / extra_grid as f64);
    }
    out
}

/// Candidate radii for the sphere-constrained update on `[0, 4]`: a uniform
/// grid, with every sign change of a (target − competitor) score gap between
/// neighbouring grid points bisected to machine precision and bracketed by
/// points just either side.
pub fn sphere_candidates(
    data: &EmbeddingMatrix,
    g: &AggregateMatrix,
    val: QuerySet<'_>,
    grid_points: usize,
) -> Vec<f64> {
    let grid: Vec<f64> = (0..=grid_points).map(|k| 4.0 * k as f64 / grid_points as f64).collect();
    let pairs: Vec<(usize, usize, usize)> = val
        .labels
        .entries()
        .iter()
        .flat_map(|l| (0..data.rows()).filter(move |&j| j != l.record).map(move |j| (l.query, l.record, j)))
        .collect();

    let gap = |moved: &EmbeddingMatrix, (qi, y, j): (usize, usize, usize)| {
        let q = val.queries.row(qi);
        dot(q, moved.row(y)) - dot(q, moved.row(j))
    };
    let at = |gamma: f64| data.add(&sphere_delta(data, g, gamma)).unwrap();

    let snapshots: Vec<Vec<f64>> = grid
        .iter()
        .map(|&gamma| {
            let moved = at(gamma);
            pairs.iter().map(|&p| gap(&moved, p)).collect()
        })
        .collect();

    let mut out = grid.clone();
    for k in 0..grid_points {
        for (p, &pair) in pairs.iter().enumerate() {
            let (fa, fb) = (snapshots[k][p], snapshots[k + 1][p]);
            if (fa > 0.0) == (fb > 0.0) {
                continue;
            }
            let (mut lo, mut hi) = (grid[k], grid[k + 1]);
            let lo_pos = fa > 0.0;
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if (gap(&at(mid), pair) > 0.0) == lo_pos {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            out.extend([lo, hi, lo - 1e-9, hi + 1e-9]);
        }
    }
    out.retain(|&x| (0.0..=4.0).contains(&x));
    out.sort_by(f64::total_cmp);
    let mids: Vec<f64> = out.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    out.extend(mids);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    /// `‖Δ‖ ≤ γ`.
    Ball,
    /// `‖D + Δ‖ = 1` and `‖Δ‖² ≤ γ`.
    SphereCap,
}

/// Best `G·Δ′` over `samples` random feasible `Δ′`.
///
/// Ball: uniform points in the ball of radius γ (Gaussian direction, radius
/// `γ·U^{1/d}`). Sphere cap: `normalize(D + s·ξ) − D` with Gaussian `ξ` and a
/// random scale `s`, rejected unless `‖Δ′‖² ≤ γ`. Returns 0 when no sample is
/// feasible, which is the value at `Δ′ = 0`.
pub fn feasible_sampler_oracle(
    d_i: &[f64],
    g_i: &[f64],
    gamma: f64,
    constraint: Constraint,
    samples: usize,
    seed: u64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = d_i.len();
    let mut best: f64 = 0.0;
    let mut xi = vec![0.0; dim];
    for _ in 0..samples {
        for x in xi.iter_mut() {
            *x = rng.sample(StandardNormal);
        }
        let delta: Vec<f64> = match constraint {
            Constraint::Ball => {
                let u: f64 = rng.random();
                let r = gamma * u.powf(1.0 / dim as f64);
                unit(&xi).into_iter().map(|x| r * x).collect()
            }
            Constraint::SphereCap => {
                let s: f64 = 2.0 * rng.random::<f64>().powi(2);
                let p: Vec<f64> = d_i.iter().zip(&xi).map(|(d, x)| d + s * x).collect();
                let p = unit(&p);
                let delta: Vec<f64> = p.iter().zip(d_i).map(|(p, d)| p - d).collect();
                if dot(&delta, &delta) > gamma {
                    continue;
                }
                delta
            }
        };
        best = best.max(dot(g_i, &delta));
    }
    best
}
