use speccalc::calculus::CalculusOptions;
use speccalc::operator::OperatorModel;
use speccalc::scenario::{bundled, Scenario, BUNDLED};
use speccalc::schema::{validate_schema, SchemaKind};
use speccalc::verify::Verdict;

#[test]
fn bundled_scenarios_load_and_validate() {
    let all = bundled().unwrap();
    assert_eq!(all.len(), BUNDLED.len());
    for ((name, text), s) in BUNDLED.iter().zip(&all) {
        assert_eq!(&s.name, name);
        let doc: serde_json::Value = serde_json::from_str(text).unwrap();
        validate_schema(&doc, SchemaKind::Scenario).unwrap();
        assert_eq!(s.probes.len(), 10, "{name}");
        assert_eq!(s.expected.len(), 10, "{name}");
    }
    assert!(all.iter().filter(|s| s.operator.is_dense()).count() >= 3);
    assert!(all.iter().filter(|s| !s.operator.is_dense()).count() >= 6);
}

#[test]
fn bundled_scenarios_match_their_recorded_verdicts() {
    let opts = CalculusOptions::default();
    for s in bundled().unwrap() {
        let report = s.run(&opts).unwrap();
        assert!(report.all_ok(), "{}:\n{}", s.name, report.table());
        assert!(s.mismatches(&report).is_empty(), "{}: {:?}", s.name, s.mismatches(&report));
        assert!(report.entries.iter().all(|e| e.verdict != Verdict::Violation));
    }
}

#[test]
fn scenario_files_load_from_disk() {
    let dir = tempfile::tempdir().unwrap();
    let (name, text) = BUNDLED[0];
    let path = dir.path().join(format!("{name}.json"));
    std::fs::write(&path, text).unwrap();
    let s = Scenario::load(&path).unwrap();
    assert_eq!(s.name, name);
}

#[test]
fn horizon_limits_enumerated_tail_elements() {
    let s = bundled().unwrap().into_iter().find(|s| s.name == "diag_browder_gap").unwrap();
    let short = s.clone().with_horizon(16);
    let (OperatorModel::Diagonal(a), OperatorModel::Diagonal(b)) = (&s.operator, &short.operator) else {
        panic!("diagonal scenario expected");
    };
    assert_eq!(b.horizon, 16);
    assert_eq!(a.atoms, b.atoms);
    assert_eq!(a.tails, b.tails);
    assert!(short.operator.spectrum().is_subset_of(&s.operator.spectrum(), 0.0));
    assert!(short.operator.spectrum().len() < s.operator.spectrum().len());
}

#[test]
fn broken_scenarios_are_rejected_with_pointers() {
    let mut doc: serde_json::Value = serde_json::from_str(BUNDLED[0].1).unwrap();
    doc["indices"] = serde_json::json!([0, 12]);
    doc["expected"]["3"] = serde_json::json!("Maybe");
    let diags = validate_schema(&doc, SchemaKind::Scenario).unwrap_err();
    let paths: Vec<&str> = diags.iter().map(|d| d.path.as_str()).collect();
    assert!(paths.contains(&"/indices/1"), "{paths:?}");
    assert!(paths.contains(&"/expected/3"), "{paths:?}");
}
