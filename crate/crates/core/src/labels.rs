//! Ground-truth labels: which records answer which query, with optional
//! graded relevance.

use std::collections::HashSet;

use crate::error::{NudgeError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Label {
    pub query: usize,
    pub record: usize,
    pub relevance: f64,
}

impl Label {
    pub fn new(query: usize, record: usize) -> Self {
        Self {
            query,
            record,
            relevance: 1.0,
        }
    }

    pub fn with_relevance(query: usize, record: usize, relevance: f64) -> Self {
        Self {
            query,
            record,
            relevance,
        }
    }
}

/// A validated set of `(query, record, relevance)` entries.
///
/// Construction rejects duplicate pairs and non-positive relevance. Index
/// bounds and query coverage depend on the matrices the labels are used
/// with, so they are checked by [`LabelSet::validate`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabelSet {
    entries: Vec<Label>,
}

impl LabelSet {
    pub fn new(entries: Vec<Label>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(entries.len());
        for l in &entries {
            if !(l.relevance.is_finite() && l.relevance > 0.0) {
                return Err(NudgeError::BadRelevance {
                    query: l.query,
                    record: l.record,
                    relevance: l.relevance,
                });
            }
            if !seen.insert((l.query, l.record)) {
                return Err(NudgeError::DuplicateLabel {
                    query: l.query,
                    record: l.record,
                });
            }
        }
        Ok(Self { entries })
    }

    /// One unit-relevance label per query: `targets[q]` answers query `q`.
    pub fn single(targets: &[usize]) -> Self {
        Self {
            entries: targets
                .iter()
                .enumerate()
                .map(|(q, &r)| Label::new(q, r))
                .collect(),
        }
    }

    pub fn entries(&self) -> &[Label] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn check_bounds(&self, n_queries: usize, n_records: usize) -> Result<()> {
        for l in &self.entries {
            if l.query >= n_queries {
                return Err(NudgeError::IndexOutOfRange {
                    what: "query",
                    index: l.query,
                    bound: n_queries,
                });
            }
            if l.record >= n_records {
                return Err(NudgeError::IndexOutOfRange {
                    what: "record",
                    index: l.record,
                    bound: n_records,
                });
            }
        }
        Ok(())
    }

    /// Bounds check plus "every query has at least one label".
    pub fn validate(&self, n_queries: usize, n_records: usize) -> Result<()> {
        self.check_bounds(n_queries, n_records)?;
        let mut covered = vec![false; n_queries];
        for l in &self.entries {
            covered[l.query] = true;
        }
        if let Some(q) = covered.iter().position(|c| !c) {
            return Err(NudgeError::UnlabeledQuery { query: q });
        }
        Ok(())
    }

    /// Labels grouped by query as `(record, relevance)` lists, records in
    /// ascending order. Assumes bounds were checked.
    pub fn by_query(&self, n_queries: usize) -> Vec<Vec<(usize, f64)>> {
        let mut out = vec![Vec::new(); n_queries];
        for l in &self.entries {
            out[l.query].push((l.record, l.relevance));
        }
        for v in &mut out {
            v.sort_by_key(|&(r, _)| r);
        }
        out
    }

    /// The single target record of every query, or an error naming the first
    /// query that is unlabeled or multi-labeled.
    pub fn single_targets(&self, n_queries: usize) -> Result<Vec<usize>> {
        self.by_query(n_queries)
            .into_iter()
            .enumerate()
            .map(|(q, v)| match v.len() {
                0 => Err(NudgeError::UnlabeledQuery { query: q }),
                1 => Ok(v[0].0),
                count => Err(NudgeError::MultiLabelQuery { query: q, count }),
            })
            .collect()
    }

    pub fn is_single_label(&self, n_queries: usize) -> bool {
        self.by_query(n_queries).iter().all(|v| v.len() == 1)
    }
}
