use serde::Serialize;

use atsp_core::attention::AttentionErrorReport;
use atsp_core::sparsifier::Method;

use crate::config::RunConfig;

pub const SCHEMA_VERSION: u32 = 1;

/// JSON report written by `sparsify` and `verify`.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema: u32,
    pub command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<RunConfig>,
    pub input: InputStats,
    pub output: OutputStats,
    pub attention: AttentionErrorReport,
    pub timings_ms: Timings,
}

#[derive(Clone, Debug, Serialize)]
pub struct InputStats {
    pub n: usize,
    pub d: usize,
    pub nnz: usize,
    pub r_measured: f64,
    /// Radius the run was configured with (declared or measured).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct OutputStats {
    pub m: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Distinct original columns carrying nonzero weight.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nonzero_weights: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selected_indices: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct Timings {
    pub read: f64,
    /// Leverage scores or whitening.
    pub scoring: f64,
    /// Sampling or barrier selection.
    pub selection: f64,
    /// Attention matrices and the error report.
    pub verify: f64,
    pub total: f64,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// The report as JSON without the `timings_ms` field, which is the only
    /// part that varies between identical runs.
    pub fn to_json_without_timings(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("timings_ms");
        }
        serde_json::to_string_pretty(&v).expect("report serializes")
    }
}

pub(crate) fn millis(d: std::time::Duration) -> f64 {
    d.as_secs_f64() * 1e3
}
