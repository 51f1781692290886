//! Run configuration shared by the library entry points and the CLI.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::calculus::CalculusOptions;
use crate::error::{Diagnostic, Error, Result};
use crate::operator::DEFAULT_HORIZON;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub tol: f64,
    pub max_panel_depth: usize,
    pub nodes_per_panel: usize,
    /// Number of tail elements enumerated explicitly.
    #[serde(rename = "truncation_K")]
    pub truncation_k: usize,
    pub rank_gap_ratio: f64,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub check_independence: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_panel_depth: 12,
            nodes_per_panel: 8,
            truncation_k: DEFAULT_HORIZON,
            rank_gap_ratio: 10.0,
            seed: 0,
            output_dir: PathBuf::from("out"),
            check_independence: true,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut diags = Vec::new();
        if !(self.tol > 0.0 && self.tol < 1e-3) {
            diags.push(Diagnostic::new("/tol", "tol must lie in (0, 1e-3)"));
        }
        if self.max_panel_depth == 0 {
            diags.push(Diagnostic::new("/max_panel_depth", "must be positive"));
        }
        if self.nodes_per_panel == 0 {
            diags.push(Diagnostic::new("/nodes_per_panel", "must be positive"));
        }
        if self.truncation_k == 0 {
            diags.push(Diagnostic::new("/truncation_K", "must be positive"));
        }
        if !(self.rank_gap_ratio > 1.0) {
            diags.push(Diagnostic::new("/rank_gap_ratio", "must exceed 1"));
        }
        diags
    }

    pub fn from_json(v: &Value) -> Result<RunConfig> {
        let cfg: RunConfig = serde_json::from_value(v.clone())
            .map_err(|e| Error::Schema(vec![Diagnostic::new("", e.to_string())]))?;
        let diags = cfg.validate();
        if diags.is_empty() {
            Ok(cfg)
        } else {
            Err(Error::Schema(diags))
        }
    }

    pub fn calculus_options(&self) -> CalculusOptions {
        CalculusOptions {
            tol: self.tol,
            max_depth: self.max_panel_depth,
            nodes_per_panel: self.nodes_per_panel,
            b: None,
            check_independence: self.check_independence,
            rank_gap_ratio: self.rank_gap_ratio,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        let v = serde_json::to_value(&cfg).unwrap();
        assert_eq!(v["truncation_K"], json!(64));
        assert_eq!(RunConfig::from_json(&v).unwrap(), cfg);
    }

    #[test]
    fn rejects_loose_tolerance_and_unknown_keys() {
        let err = RunConfig::from_json(&json!({"tol": 0.1})).unwrap_err();
        assert!(matches!(err, Error::Schema(d) if d[0].path == "/tol"));
        assert!(RunConfig::from_json(&json!({"tolerance": 1e-9})).is_err());
    }
}
