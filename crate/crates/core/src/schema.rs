//! JSON document validation with JSON-pointer diagnostics.

use serde_json::Value;

use crate::config::RunConfig;
use crate::error::Diagnostic;
use crate::ext::{complex_from_json, format_complex, ExtComplex, MERGE_TOL};
use crate::function::{point_key, validate_function, MeromFn};
use crate::geometry::SingularPoint;
use crate::operator::{validate_operator, OperatorModel};
use crate::scenario::verdict_from_str;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemaKind {
    Operator,
    Function,
    Scenario,
    Config,
}

impl std::str::FromStr for SchemaKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "operator" => Ok(SchemaKind::Operator),
            "function" => Ok(SchemaKind::Function),
            "scenario" => Ok(SchemaKind::Scenario),
            "config" => Ok(SchemaKind::Config),
            other => Err(format!("unknown document kind {other:?}")),
        }
    }
}

/// Structural and semantic checks; `Ok(())` or the full list of problems.
pub fn validate_schema(doc: &Value, kind: SchemaKind) -> Result<(), Vec<Diagnostic>> {
    let diags = match kind {
        SchemaKind::Operator => validate_operator(doc),
        SchemaKind::Function => validate_function_doc(doc),
        SchemaKind::Scenario => validate_scenario(doc),
        SchemaKind::Config => match serde_json::from_value::<RunConfig>(doc.clone()) {
            Ok(cfg) => cfg.validate(),
            Err(e) => vec![Diagnostic::new("", e.to_string())],
        },
    };
    if diags.is_empty() {
        Ok(())
    } else {
        Err(diags)
    }
}

fn prefixed(prefix: &str, diags: Vec<Diagnostic>) -> impl Iterator<Item = Diagnostic> + '_ {
    diags.into_iter().map(move |mut d| {
        d.path = format!("{prefix}{}", d.path);
        d
    })
}

/// A standalone function may list the singular points at which it is evaluated.
fn validate_function_doc(doc: &Value) -> Vec<Diagnostic> {
    let a = doc.get("a").and_then(|a| a.as_f64()).unwrap_or(0.0);
    let mut diags = validate_function(doc, a);
    let mut points = Vec::new();
    if let Some(list) = doc.get("singular_points") {
        match list.as_array() {
            None => diags.push(Diagnostic::new("/singular_points", "expected an array of point keys")),
            Some(arr) => {
                for (k, key) in arr.iter().enumerate() {
                    match key.as_str().and_then(SingularPoint::parse) {
                        Some(d) => points.push(d),
                        None => diags.push(Diagnostic::new(format!("/singular_points/{k}"), "expected \"a\", \"-a\", \"0\" or \"inf\"")),
                    }
                }
            }
        }
    }
    if diags.is_empty() && !points.is_empty() {
        if let Ok(f) = MeromFn::from_json(doc, a) {
            diags.extend(missing_limits(&f, &points, a));
        }
    }
    diags
}

fn missing_limits(f: &MeromFn, points: &[SingularPoint], a: f64) -> Vec<Diagnostic> {
    points
        .iter()
        .filter(|d| f.local_at(d.location(a)).is_none())
        .map(|&d| {
            let key = point_key(d, a);
            Diagnostic::new(format!("/limits/{key}"), format!("missing limit at singular point {key} of the spectrum"))
        })
        .collect()
}

fn validate_scenario(doc: &Value) -> Vec<Diagnostic> {
    let Some(obj) = doc.as_object() else {
        return vec![Diagnostic::new("", "scenario must be an object")];
    };
    let mut diags = Vec::new();
    if !obj.get("name").is_some_and(|n| n.is_string()) {
        diags.push(Diagnostic::new("/name", "missing scenario name"));
    }
    let op_doc = obj.get("operator");
    let fn_doc = obj.get("function");
    match op_doc {
        None => diags.push(Diagnostic::new("/operator", "missing operator")),
        Some(v) => diags.extend(prefixed("/operator", validate_operator(v))),
    }
    let a = op_doc.and_then(|o| o.get("a")).and_then(|a| a.as_f64()).unwrap_or(0.0);
    match fn_doc {
        None => diags.push(Diagnostic::new("/function", "missing function")),
        Some(v) => diags.extend(prefixed("/function", validate_function(v, a))),
    }
    if let Some(list) = obj.get("indices") {
        match list.as_array() {
            None => diags.push(Diagnostic::new("/indices", "expected an array")),
            Some(arr) => {
                for (k, i) in arr.iter().enumerate() {
                    if !i.as_u64().is_some_and(|i| i <= 9) {
                        diags.push(Diagnostic::new(format!("/indices/{k}"), "index must be an integer in 0..=9"));
                    }
                }
            }
        }
    }
    if let Some(list) = obj.get("probes") {
        match list.as_array() {
            None => diags.push(Diagnostic::new("/probes", "expected an array")),
            Some(arr) => {
                for (k, p) in arr.iter().enumerate() {
                    if complex_from_json(p).is_none() {
                        diags.push(Diagnostic::new(format!("/probes/{k}"), "expected a complex number"));
                    }
                }
            }
        }
    }
    if let Some(m) = obj.get("expected") {
        match m.as_object() {
            None => diags.push(Diagnostic::new("/expected", "expected an object keyed by index")),
            Some(m) => {
                for (k, v) in m {
                    let path = format!("/expected/{k}");
                    if !k.parse::<usize>().is_ok_and(|i| i <= 9) {
                        diags.push(Diagnostic::new(path.clone(), "key must be an index in 0..=9"));
                    }
                    if v.as_str().and_then(verdict_from_str).is_none() {
                        diags.push(Diagnostic::new(path, "unknown verdict"));
                    }
                }
            }
        }
    }
    if let Some(c) = obj.get("condition_p") {
        if !c.is_boolean() {
            diags.push(Diagnostic::new("/condition_p", "expected a boolean"));
        }
    }
    if let Some(mu) = obj.get("factorization_mu") {
        if complex_from_json(mu).is_none() {
            diags.push(Diagnostic::new("/factorization_mu", "expected a complex number"));
        }
    }
    if !diags.is_empty() {
        return diags;
    }
    let (Ok(op), Ok(f)) = (
        OperatorModel::from_json(op_doc.expect("checked")),
        MeromFn::from_json(fn_doc.expect("checked"), a),
    ) else {
        return diags;
    };
    if let Ok(meta) = op.meta() {
        diags.extend(prefixed("/function", missing_limits(&f, &meta.m_a, a)));
    }
    let spec = op.spectrum();
    for (q, _) in f.poles() {
        if spec.contains(q, MERGE_TOL) && !op.point_spectrum().contains(q, MERGE_TOL) {
            diags.push(Diagnostic::new(
                "/function/poles",
                format!("pole {} lies on the non-eigenvalue part of the spectrum", format_complex(q)),
            ));
        }
        if let Some(r) = op.region() {
            if r.singular_at(ExtComplex::Finite(q), MERGE_TOL).is_some() {
                diags.push(Diagnostic::new(
                    "/function/poles",
                    format!("pole {} sits at a singular point of the region", format_complex(q)),
                ));
            }
        }
    }
    diags
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn omega_above_right_angle_is_reported() {
        let doc = json!({"kind": "dense", "matrix": [[1.0]], "omega": 2.0});
        let diags = validate_schema(&doc, SchemaKind::Operator).unwrap_err();
        assert_eq!(diags[0].path, "/omega");
        assert!(diags[0].message.contains("exceeds pi/2"));
    }

    #[test]
    fn missing_limit_at_declared_point() {
        let doc = json!({"kind": "expr", "expr": "z^(1/2)", "singular_points": ["0", "inf"], "limits": {"0": 0.0}});
        let diags = validate_schema(&doc, SchemaKind::Function).unwrap_err();
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].path, "/limits/inf");
    }

    #[test]
    fn bundled_scenarios_validate() {
        for (name, text) in crate::scenario::BUNDLED {
            let v: Value = serde_json::from_str(text).unwrap();
            assert_eq!(validate_schema(&v, SchemaKind::Scenario), Ok(()), "{name}");
        }
    }

    #[test]
    fn config_kind_parses() {
        assert!(validate_schema(&json!({"tol": 1e-10}), SchemaKind::Config).is_ok());
        let diags = validate_schema(&json!({"nodes_per_panel": 0}), SchemaKind::Config).unwrap_err();
        assert_eq!(diags[0].path, "/nodes_per_panel");
    }
}
