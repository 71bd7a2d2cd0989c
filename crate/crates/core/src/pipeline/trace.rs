use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// One model call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    /// 0 for the first request, then one per format re-ask.
    pub attempt: u32,
    pub inputs_digest: String,
    pub raw_response: String,
    /// `null` when the response could not be used.
    pub parsed_result: Value,
    pub warnings: Vec<String>,
}

/// Audit log of one reconstruction. Timings are kept out of the serialized
/// form so replayed traces stay byte-identical.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PipelineTrace {
    pub stage_records: Vec<StageRecord>,
    /// Warnings not tied to a single call, such as skipped stages.
    pub notes: Vec<String>,
    #[serde(skip)]
    pub timings: Vec<(String, Duration)>,
}

impl PipelineTrace {
    pub fn warning_count(&self) -> usize {
        self.notes.len() + self.stage_records.iter().map(|r| r.warnings.len()).sum::<usize>()
    }

    pub fn is_clean(&self) -> bool {
        self.warning_count() == 0
    }

    pub fn records_for<'a>(&'a self, stage: &'a str) -> impl Iterator<Item = &'a StageRecord> + 'a {
        self.stage_records.iter().filter(move |r| r.stage == stage)
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("trace serializes");
        out.push('\n');
        out
    }
}
