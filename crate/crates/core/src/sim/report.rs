use serde::{Deserialize, Serialize};

use crate::protocol::Transcript;

use super::log::MessageCounts;
use super::SimError;

pub const PASS: &str = "PASS";
pub const FAIL: &str = "FAIL";
pub const SKIPPED: &str = "SKIPPED";

/// Summary of one simulated run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub protocol: String,
    pub n: usize,
    pub iota: usize,
    pub mode: String,
    pub seed: u64,
    pub display_re: f64,
    pub display_im: f64,
    pub expected: f64,
    /// `|display − expected|`.
    pub residual: f64,
    pub tolerance: f64,
    pub correct: bool,
    /// `PASS`, `FAIL`, `SubsetTooLarge` or `SKIPPED` when nothing is corrupted.
    pub privacy: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub privacy_detail: Option<String>,
    pub internode: String,
    pub messages: MessageCounts,
    pub verdict: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<f64>,
}

impl Report {
    pub(crate) fn correctness(t: &Transcript, tol: f64) -> (f64, bool) {
        let residual = t.residual.norm();
        let scale = 1.0 + t.expected.abs();
        (residual, residual <= tol * scale && t.display.im.abs() <= tol * scale)
    }

    pub fn passed(&self) -> bool {
        self.verdict == PASS
    }

    pub fn to_text(&self) -> Result<String, SimError> {
        toml::to_string_pretty(self).map_err(|e| SimError::Output(e.to_string()))
    }

    pub fn to_json(&self) -> Result<String, SimError> {
        serde_json::to_string_pretty(self).map_err(|e| SimError::Output(e.to_string()))
    }
}
