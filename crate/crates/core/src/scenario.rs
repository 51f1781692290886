//! Spectral-mapping scenarios: an operator, a function and expectations.

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;
use serde_json::Value;

use crate::calculus::CalculusOptions;
use crate::error::{Diagnostic, Error, Result};
use crate::ext::complex_from_json;
use crate::function::MeromFn;
use crate::operator::OperatorModel;
use crate::schema::{validate_schema, SchemaKind};
use crate::verify::{verify_smt, SmtReport, Verdict};

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub notes: String,
    pub operator: OperatorModel,
    pub function: MeromFn,
    pub indices: Vec<usize>,
    /// Points at which Fredholm profiles are cross-checked.
    pub probes: Vec<Complex64>,
    /// Verdicts recorded with the scenario.
    pub expected: BTreeMap<usize, Verdict>,
    /// Whether condition (P) is expected to hold for the function.
    pub condition_p: Option<bool>,
    /// Value at which the factorization suite is run.
    pub factorization_mu: Option<Complex64>,
}

pub fn verdict_from_str(s: &str) -> Option<Verdict> {
    match s {
        "Equal" => Some(Verdict::Equal),
        "LhsSubset" => Some(Verdict::LhsSubset),
        "RhsSubset" => Some(Verdict::RhsSubset),
        "Violation" => Some(Verdict::Violation),
        "Skipped" => Some(Verdict::Skipped),
        _ => None,
    }
}

impl Scenario {
    pub fn from_json(v: &Value) -> Result<Scenario> {
        validate_schema(v, SchemaKind::Scenario).map_err(Error::Schema)?;
        let operator = OperatorModel::from_json(&v["operator"])?;
        let a = operator.region().map_or(0.0, |r| r.halfwidth_a);
        let function = MeromFn::from_json(&v["function"], a)?;
        let indices = match v.get("indices").and_then(|x| x.as_array()) {
            Some(list) => list.iter().filter_map(|i| i.as_u64()).map(|i| i as usize).collect(),
            None => (0..=9).collect(),
        };
        let probes = v
            .get("probes")
            .and_then(|x| x.as_array())
            .map(|list| list.iter().filter_map(complex_from_json).collect())
            .unwrap_or_default();
        let mut expected = BTreeMap::new();
        if let Some(m) = v.get("expected").and_then(|x| x.as_object()) {
            for (k, val) in m {
                if let (Ok(i), Some(verdict)) = (k.parse::<usize>(), val.as_str().and_then(verdict_from_str)) {
                    expected.insert(i, verdict);
                }
            }
        }
        Ok(Scenario {
            name: v["name"].as_str().unwrap_or_default().to_string(),
            notes: v.get("notes").and_then(|n| n.as_str()).unwrap_or_default().to_string(),
            operator,
            function,
            indices,
            probes,
            expected,
            condition_p: v.get("condition_p").and_then(|c| c.as_bool()),
            factorization_mu: v.get("factorization_mu").and_then(complex_from_json),
        })
    }

    pub fn load(path: &Path) -> Result<Scenario> {
        let text = std::fs::read_to_string(path)?;
        Scenario::from_json(&serde_json::from_str(&text)?)
    }

    /// Uses `k` enumerated tail elements for diagonal models.
    pub fn with_horizon(mut self, k: usize) -> Self {
        if let OperatorModel::Diagonal(d) = self.operator {
            self.operator = d.with_horizon(k).into();
        }
        self
    }

    pub fn run(&self, opts: &CalculusOptions) -> Result<SmtReport> {
        verify_smt(&self.operator, &self.function, &self.indices, opts)
    }

    /// Recorded verdicts that the report contradicts, over the requested indices.
    pub fn mismatches(&self, report: &SmtReport) -> Vec<Diagnostic> {
        self.expected
            .iter()
            .filter(|(i, _)| self.indices.contains(i))
            .filter_map(|(&i, &want)| {
                let got = report.entry(i).map(|e| e.verdict)?;
                (got != want).then(|| Diagnostic::new(format!("/expected/{i}"), format!("recorded {want:?}, computed {got:?}")))
            })
            .collect()
    }
}

/// The scenario files shipped with the crate.
pub const BUNDLED: &[(&str, &str)] = &[
    ("dense_square", include_str!("../scenarios/dense_square.json")),
    ("dense_mobius", include_str!("../scenarios/dense_mobius.json")),
    ("dense_vertex_eigenvalue", include_str!("../scenarios/dense_vertex_eigenvalue.json")),
    ("dense_sqrt", include_str!("../scenarios/dense_sqrt.json")),
    ("diag_infinite_atoms", include_str!("../scenarios/diag_infinite_atoms.json")),
    ("diag_browder_gap", include_str!("../scenarios/diag_browder_gap.json")),
    ("diag_sqrt_accumulation", include_str!("../scenarios/diag_sqrt_accumulation.json")),
    ("diag_unbounded", include_str!("../scenarios/diag_unbounded.json")),
    ("diag_isolated_singular", include_str!("../scenarios/diag_isolated_singular.json")),
    ("diag_power_tail", include_str!("../scenarios/diag_power_tail.json")),
];

pub fn bundled() -> Result<Vec<Scenario>> {
    BUNDLED
        .iter()
        .map(|(name, text)| {
            let v: Value = serde_json::from_str(text)?;
            Scenario::from_json(&v).map_err(|e| Error::InvalidArgument(format!("bundled scenario {name}: {e}")))
        })
        .collect()
}
