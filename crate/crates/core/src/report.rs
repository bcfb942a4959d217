use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;

use crate::error::NudgeError;
use crate::labels::LabelSet;
use crate::matrix::EmbeddingMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Method {
    #[serde(rename = "m")]
    M,
    #[serde(rename = "n")]
    N,
    #[serde(rename = "n-exact")]
    NExact,
    #[serde(rename = "im")]
    Im,
    #[serde(rename = "in")]
    In,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::M => "m",
            Method::N => "n",
            Method::NExact => "n-exact",
            Method::Im => "im",
            Method::In => "in",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = NudgeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "m" => Method::M,
            "n" => Method::N,
            "n-exact" => Method::NExact,
            "im" => Method::Im,
            "in" => Method::In,
            other => {
                return Err(NudgeError::param(
                    "method",
                    format!("unknown method {other:?} (expected m, n, n-exact, im or in)"),
                ))
            }
        })
    }
}

/// Effective configuration echoed into every report. Fields that do not
/// apply to the method are `null`.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub weighted_labels: bool,
    pub grid_points: Option<usize>,
    pub alpha: Option<f64>,
    pub iters: Option<usize>,
    pub checkpoint_every: Option<usize>,
}

/// Non-deterministic run details, kept apart so reports can be compared
/// with this section stripped.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Runtime {
    pub threads: usize,
    pub timings_ms: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FineTuneReport {
    pub method: Method,
    pub gamma_star: f64,
    pub val_correct_before: usize,
    pub val_correct_after: usize,
    /// Validation count the γ selector expected at `gamma_star`.
    pub selected_count: usize,
    pub n: usize,
    pub d: usize,
    #[serde(rename = "n_T")]
    pub n_train: usize,
    #[serde(rename = "n_V")]
    pub n_val: usize,
    pub normalized_on_entry: bool,
    /// Checkpoint step chosen by the iterative methods.
    pub best_step: Option<usize>,
    pub config: ConfigEcho,
    pub runtime: Runtime,
}

impl FineTuneReport {
    pub(crate) fn new(method: Method, data: &EmbeddingMatrix, n_train: usize, n_val: usize) -> Self {
        Self {
            method,
            gamma_star: 0.0,
            val_correct_before: 0,
            val_correct_after: 0,
            selected_count: 0,
            n: data.rows(),
            d: data.dim(),
            n_train,
            n_val,
            normalized_on_entry: false,
            best_step: None,
            config: ConfigEcho::default(),
            runtime: Runtime {
                threads: rayon::current_num_threads(),
                timings_ms: BTreeMap::new(),
            },
        }
    }

    pub fn record_time(&mut self, phase: &str, started: Instant) {
        let ms = started.elapsed().as_secs_f64() * 1e3;
        *self.runtime.timings_ms.entry(phase.to_string()).or_insert(0.0) += ms;
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Query embeddings paired with their labels.
#[derive(Debug, Clone, Copy)]
pub struct QuerySet<'a> {
    pub queries: &'a EmbeddingMatrix,
    pub labels: &'a LabelSet,
}

impl<'a> QuerySet<'a> {
    pub fn new(queries: &'a EmbeddingMatrix, labels: &'a LabelSet) -> Self {
        Self { queries, labels }
    }

    pub(crate) fn validate(&self, data: &EmbeddingMatrix, what: &'static str) -> crate::Result<()> {
        data.check_dim(what, self.queries)?;
        self.labels.validate(self.queries.rows(), data.rows())
    }
}
