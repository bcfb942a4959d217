//! Open intervals over γ and maximum-overlap (stabbing) selection.

use std::cmp::Ordering;

/// An open interval `(lo, hi)`; either end may be infinite. Always `lo < hi`:
/// an empty interval is represented by its absence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    /// `None` when `(lo, hi)` is empty.
    pub fn new(lo: f64, hi: f64) -> Option<Self> {
        (lo < hi).then_some(Self { lo, hi })
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo < x && x < self.hi
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        Interval::new(self.lo.max(other.lo), self.hi.min(other.hi))
    }
}

/// Outcome of choosing γ by maximum overlap.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub gamma_star: f64,
    /// `max(best stabbing count over γ > 0, count_at_zero)`.
    pub correct_count: usize,
    /// The leftmost region achieving the best stabbing count over γ > 0.
    pub best_region: Option<Interval>,
    pub best_stabbing_count: usize,
    pub count_at_zero: usize,
}

/// Median width of the finite intervals, or 1 when there are none.
fn median_finite_width(intervals: &[Interval]) -> f64 {
    let mut widths: Vec<f64> = intervals
        .iter()
        .filter(|iv| iv.is_bounded())
        .map(Interval::width)
        .collect();
    if widths.is_empty() {
        return 1.0;
    }
    widths.sort_by(f64::total_cmp);
    let m = widths.len() / 2;
    if widths.len() % 2 == 1 {
        widths[m]
    } else {
        0.5 * (widths[m - 1] + widths[m])
    }
}

fn clip_positive(intervals: &[Interval]) -> Vec<Interval> {
    intervals
        .iter()
        .filter_map(|iv| Interval::new(iv.lo.max(0.0), iv.hi))
        .collect()
}

/// Every maximal region of constant stabbing count, left to right.
fn segments(clipped: &[Interval]) -> Vec<(Interval, usize)> {
    // (coordinate, delta): -1 sorts before +1 at equal coordinates.
    let mut events: Vec<(f64, i32)> = Vec::with_capacity(clipped.len() * 2);
    for iv in clipped {
        events.push((iv.lo, 1));
        if iv.hi.is_finite() {
            events.push((iv.hi, -1));
        }
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut out = Vec::new();
    let mut count: i64 = 0;
    let mut k = 0;
    while k < events.len() {
        let x = events[k].0;
        while k < events.len() && events[k].0 == x {
            count += i64::from(events[k].1);
            k += 1;
        }
        let next = events.get(k).map_or(f64::INFINITY, |e| e.0);
        if let Some(region) = Interval::new(x, next) {
            if count > 0 {
                out.push((region, count as usize));
            }
        }
    }
    out
}

fn place(region: Interval, clipped: &[Interval]) -> f64 {
    if region.hi.is_finite() {
        region.lo + 0.5 * (region.hi - region.lo)
    } else {
        region.lo + median_finite_width(clipped)
    }
}

/// Picks a γ ≥ 0 lying in the largest number of the given open intervals.
///
/// Intervals are first clipped to `(0, ∞)`. The endpoints are swept in sorted
/// order (ends before starts at equal coordinates, since intervals are open)
/// and the leftmost region with the highest count wins. Inside that region γ
/// is the midpoint, or `lo + w` when the region is unbounded above, where `w`
/// is the median width of the finite intervals. γ = 0 is scored separately by
/// the caller via `count_at_zero` and wins ties.
pub fn max_overlap(intervals: &[Interval], count_at_zero: usize) -> SweepResult {
    let clipped = clip_positive(intervals);
    let mut best = 0usize;
    let mut best_region = None;
    for (region, c) in segments(&clipped) {
        if c > best {
            best = c;
            best_region = Some(region);
        }
    }

    let (gamma_star, correct_count) = match best_region {
        Some(region) if best > count_at_zero => (place(region, &clipped), best),
        _ => (0.0, count_at_zero),
    };

    SweepResult {
        gamma_star,
        correct_count,
        best_region,
        best_stabbing_count: best,
        count_at_zero,
    }
}

/// Candidate γ values with their stabbing counts, best count first and
/// leftmost first among equal counts. Only regions beating `count_at_zero`
/// are listed; at most `limit` are returned. The first entry is the
/// [`max_overlap`] choice.
///
/// Endpoints of different queries that should coincide can come out a few
/// ulps apart, leaving a sliver whose count is not realized. Callers verify
/// candidates in this order.
pub fn ranked_gammas(intervals: &[Interval], count_at_zero: usize, limit: usize) -> Vec<(f64, usize)> {
    let clipped = clip_positive(intervals);
    let mut segs: Vec<(Interval, usize)> = segments(&clipped)
        .into_iter()
        .filter(|&(_, c)| c > count_at_zero)
        .collect();
    segs.sort_by(|a, b| b.1.cmp(&a.1));
    segs.truncate(limit);
    segs.into_iter().map(|(r, c)| (place(r, &clipped), c)).collect()
}

/// How many [`ranked_gammas`] candidates the exact solvers will measure.
pub const MAX_VERIFIED: usize = 16;

/// Measures candidates in ranked order and keeps the best measured count,
/// stopping once no remaining candidate's stabbing count could beat it.
/// `None` means nothing beat `count_at_zero`.
pub fn verify_ranked<T, E>(
    ranked: &[(f64, usize)],
    count_at_zero: usize,
    mut measure: impl FnMut(f64) -> Result<(usize, T), E>,
) -> Result<Option<(f64, usize, T)>, E> {
    let mut best: Option<(f64, usize, T)> = None;
    for &(gamma, predicted) in ranked {
        let floor = best.as_ref().map_or(count_at_zero, |b| b.1);
        if floor >= predicted {
            break;
        }
        let (count, value) = measure(gamma)?;
        if count > floor {
            best = Some((gamma, count, value));
        }
    }
    Ok(best)
}

/// Sorted, pairwise-disjoint open intervals inside `(0, 4)`.
///
/// Touching intervals `(a, b)`, `(b, c)` are merged into `(a, c)`: the sets
/// built here come from a continuous function of γ, so a shared endpoint is
/// at worst an isolated zero.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GammaIntervalSet {
    intervals: Vec<Interval>,
}

pub const GAMMA_MAX: f64 = 4.0;

impl GammaIntervalSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn full() -> Self {
        Self {
            intervals: vec![Interval { lo: 0.0, hi: GAMMA_MAX }],
        }
    }

    /// Clips to `(0, 4)`, drops empties, sorts, and merges overlaps.
    pub fn from_intervals(mut raw: Vec<Interval>) -> Self {
        raw.retain_mut(|iv| {
            iv.lo = iv.lo.max(0.0);
            iv.hi = iv.hi.min(GAMMA_MAX);
            iv.lo < iv.hi
        });
        raw.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        let mut out: Vec<Interval> = Vec::with_capacity(raw.len());
        for iv in raw {
            match out.last_mut() {
                Some(last) if iv.lo <= last.hi => last.hi = last.hi.max(iv.hi),
                _ => out.push(iv),
            }
        }
        Self { intervals: out }
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.intervals.iter().any(|iv| iv.contains(x))
    }

    /// Restriction to the open window `(lo, hi)`.
    pub fn restrict(&self, lo: f64, hi: f64) -> Self {
        let Some(window) = Interval::new(lo, hi) else {
            return Self::empty();
        };
        Self {
            intervals: self
                .intervals
                .iter()
                .filter_map(|iv| iv.intersect(&window))
                .collect(),
        }
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut all = self.intervals.clone();
        all.extend_from_slice(&other.intervals);
        Self::from_intervals(all)
    }

    /// Two-pointer intersection of sorted disjoint lists.
    pub fn intersect(&self, other: &Self) -> Self {
        let (a, b) = (&self.intervals, &other.intervals);
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            if let Some(iv) = a[i].intersect(&b[j]) {
                out.push(iv);
            }
            match a[i].hi.partial_cmp(&b[j].hi) {
                Some(Ordering::Less) => i += 1,
                Some(Ordering::Greater) => j += 1,
                _ => {
                    i += 1;
                    j += 1;
                }
            }
        }
        Self { intervals: out }
    }
}
