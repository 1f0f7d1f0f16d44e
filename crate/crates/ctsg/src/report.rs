//! Evaluation report with a fixed JSON key schema.
//!
//! Keys: `scenario`, `variant`, `fidelity {ed_mean, dtw_mean}`,
//! `coherence {cfid, acd_mean}`, `controllability` (tagged by `kind`:
//! `classifier {acc, weighted_f1}` for interpolation, `detector {acc, auc,
//! flag_rate_generated, flag_rate_validation}` for extrapolation),
//! `counts`, and `config_echo`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{io_err, json_err, CtsgError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityMetrics {
    pub ed_mean: f64,
    pub dtw_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceMetrics {
    pub cfid: f64,
    pub acd_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Controllability {
    /// Interpolation probe: multi-class classifier on generated series.
    Classifier { acc: f64, weighted_f1: f64 },
    /// Extrapolation probe: outlier detector on generated series. `auc` is
    /// absent in validation-only runs (no positive class to rank).
    Detector {
        acc: f64,
        auc: Option<f64>,
        flag_rate_generated: Option<f64>,
        flag_rate_validation: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleCounts {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
    pub generated: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// `"interpolation"` or `"extrapolation"`.
    pub scenario: String,
    /// Which pipeline variant produced this row (`CTS`, `Rand-LR`,
    /// `validation`, ...).
    pub variant: String,
    pub fidelity: FidelityMetrics,
    pub coherence: CoherenceMetrics,
    pub controllability: Controllability,
    pub counts: SampleCounts,
    /// Every knob that shaped the run, echoed verbatim.
    pub config_echo: serde_json::Value,
}

impl EvalReport {
    /// The structural invariants every emitted report satisfies.
    pub fn check(&self) -> Result<()> {
        let finite = self.fidelity.ed_mean.is_finite()
            && self.fidelity.dtw_mean.is_finite()
            && self.coherence.cfid.is_finite()
            && self.coherence.acd_mean.is_finite();
        if !finite {
            return Err(CtsgError::invalid("report contains non-finite metrics"));
        }
        match (&self.controllability, self.scenario.as_str()) {
            (Controllability::Classifier { acc, weighted_f1 }, "interpolation") => {
                if !(acc.is_finite() && weighted_f1.is_finite()) {
                    return Err(CtsgError::invalid("non-finite classifier metrics"));
                }
            }
            (Controllability::Detector { acc, auc, .. }, "extrapolation") => {
                if !acc.is_finite() || auc.map(|v| !v.is_finite()).unwrap_or(false) {
                    return Err(CtsgError::invalid("non-finite detector metrics"));
                }
            }
            _ => {
                return Err(CtsgError::invalid(format!(
                    "controllability block does not match scenario {:?}",
                    self.scenario
                )))
            }
        }
        if self.counts.train == 0 || self.counts.validation == 0 {
            return Err(CtsgError::invalid("report counts must be positive"));
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
            }
        }
        let text = serde_json::to_string_pretty(self).map_err(|e| json_err("report", e))?;
        fs::write(path, text).map_err(|e| io_err(path, e))
    }

    pub fn load(path: &Path) -> Result<EvalReport> {
        let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        let report: EvalReport = serde_json::from_str(&text).map_err(|e| json_err("report", e))?;
        Ok(report)
    }

    /// Controllability headline: classifier accuracy or detector accuracy.
    pub fn controllability_score(&self) -> f64 {
        match &self.controllability {
            Controllability::Classifier { acc, .. } => *acc,
            Controllability::Detector { acc, .. } => *acc,
        }
    }
}
