//! Solution sets of `a·√(γ(4−γ)) + b·γ + c > 0` on `γ ∈ (0, 4)`.
//!
//! Zeros of `f` are among the roots of the squared equation
//! `(a² + b²)γ² + (2bc − 4a²)γ + c² = 0`, whose discriminant factors as
//! `4a²(4a² − 4bc − c²)`. Squaring also admits roots of
//! `a√(γ(4−γ)) = bγ + c`, so each candidate is checked against `f` itself.
//! `f` is continuous with at most one interior extremum, so the sign on
//! each side of the accepted roots follows from `c` (the value at 0⁺) and
//! the sign of `a`.

use crate::interval::{GammaIntervalSet, Interval, GAMMA_MAX};

/// Candidate roots are accepted when `|f(γ)| ≤ ROOT_RESIDUAL_REL · scale`,
/// with `scale` the largest term magnitude on `(0, 4)`.
pub const ROOT_RESIDUAL_REL: f64 = 1e-9;

/// Roots closer than this are the same (tangent) root.
const ROOT_MERGE_EPS: f64 = 1e-12;

#[inline]
pub fn sqrt_quadratic(a: f64, b: f64, c: f64, gamma: f64) -> f64 {
    a * (gamma * (GAMMA_MAX - gamma)).max(0.0).sqrt() + b * gamma + c
}

fn term_scale(a: f64, b: f64, c: f64) -> f64 {
    (2.0 * a.abs()).max(4.0 * b.abs()).max(c.abs())
}

/// Roots of the squared equation, numerically stable form, unfiltered.
fn squared_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let qa = a * a + b * b;
    if qa == 0.0 {
        return Vec::new();
    }
    let inner = 4.0 * a * a - 4.0 * b * c - c * c;
    if inner < 0.0 {
        return Vec::new();
    }
    let qb = 2.0 * b * c - 4.0 * a * a;
    let qc = c * c;
    let sq = 2.0 * a.abs() * inner.sqrt();
    let t = if qb >= 0.0 { -0.5 * (qb + sq) } else { -0.5 * (qb - sq) };
    let mut roots = vec![t / qa];
    if t != 0.0 {
        roots.push(qc / t);
    }
    roots
}

/// Distinct zeros of `f` in the open interval `(0, 4)`, ascending, plus a
/// flag telling whether two candidates collapsed into one tangent root.
pub fn roots_in_domain(a: f64, b: f64, c: f64) -> (Vec<f64>, bool) {
    let scale = term_scale(a, b, c);
    let mut roots: Vec<f64> = squared_roots(a, b, c)
        .into_iter()
        .filter(|&g| g > 0.0 && g < GAMMA_MAX)
        .filter(|&g| sqrt_quadratic(a, b, c, g).abs() <= ROOT_RESIDUAL_REL * scale)
        .collect();
    roots.sort_by(f64::total_cmp);
    let mut merged = false;
    if roots.len() == 2 && roots[1] - roots[0] <= ROOT_MERGE_EPS {
        roots.pop();
        merged = true;
    }
    (roots, merged)
}

fn span(lo: f64, hi: f64) -> Vec<Interval> {
    Interval::new(lo, hi).into_iter().collect()
}

/// Signs checked at segment midpoints; used where the case table does not
/// apply (tangent roots, and combinations the table rules out analytically
/// but rounding can still produce).
fn by_midpoints(a: f64, b: f64, c: f64, roots: &[f64]) -> GammaIntervalSet {
    let mut cuts = vec![0.0];
    cuts.extend_from_slice(roots);
    cuts.push(GAMMA_MAX);
    let pieces = cuts
        .windows(2)
        .filter(|w| sqrt_quadratic(a, b, c, 0.5 * (w[0] + w[1])) > 0.0)
        .flat_map(|w| span(w[0], w[1]))
        .collect();
    GammaIntervalSet::from_intervals(pieces)
}

/// The set of `γ ∈ (0, 4)` with `a√(γ(4−γ)) + bγ + c > 0`.
pub fn solve_sqrt_quadratic(a: f64, b: f64, c: f64) -> GammaIntervalSet {
    let (roots, merged) = roots_in_domain(a, b, c);
    if merged {
        return by_midpoints(a, b, c, &roots);
    }
    let full = || GammaIntervalSet::full();
    let empty = GammaIntervalSet::empty;
    match *roots.as_slice() {
        [] => {
            if c > 0.0 || (c == 0.0 && b > 0.0) || (c == 0.0 && b == 0.0 && a > 0.0) {
                full()
            } else {
                empty()
            }
        }
        [r0, r1] if c < 0.0 => GammaIntervalSet::from_intervals(span(r0, r1)),
        [r0, r1] if c > 0.0 => {
            let mut v = span(0.0, r0);
            v.extend(span(r1, GAMMA_MAX));
            GammaIntervalSet::from_intervals(v)
        }
        [r0] if c > 0.0 || (c == 0.0 && a > 0.0) => GammaIntervalSet::from_intervals(span(0.0, r0)),
        [r0] if c < 0.0 || (c == 0.0 && a < 0.0) => {
            GammaIntervalSet::from_intervals(span(r0, GAMMA_MAX))
        }
        _ => by_midpoints(a, b, c, &roots),
    }
}
