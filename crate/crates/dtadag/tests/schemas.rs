mod common;

use common::run;
use common::schema::Schemas;
use serde_json::{json, Value};

fn assert_valid(schemas: &Schemas, file: &str, value: &Value) {
    let errors = schemas.validate(file, value);
    assert!(errors.is_empty(), "{file}: {errors:#?}");
}

#[test]
fn schema_files_are_published() {
    let schemas = Schemas::load();
    let names: Vec<&str> = schemas.names().collect();
    assert_eq!(
        names,
        ["estimate.schema.json", "finding.schema.json", "report.schema.json"]
    );
}

#[test]
fn exact_reports_conform() {
    let schemas = Schemas::load();
    let (code, out, _) = run(&["demo", "--all", "--format", "json"]);
    assert_eq!(code, 0);
    let reports: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(reports.as_array().unwrap().len(), 5);
    for r in reports.as_array().unwrap() {
        assert_valid(&schemas, "report.schema.json", r);
    }
}

#[test]
fn simulated_reports_conform() {
    let schemas = Schemas::load();
    let (code, out, _) = run(&["demo", "--all", "--n", "500", "--seed", "3", "--format", "json"]);
    assert_eq!(code, 0);
    for r in serde_json::from_str::<Value>(&out).unwrap().as_array().unwrap() {
        assert_valid(&schemas, "report.schema.json", r);
    }
}

#[test]
fn single_scenario_is_one_report() {
    let schemas = Schemas::load();
    let (code, out, _) = run(&["demo", "--scenario", "ptb-imperfect-reference", "--format", "json"]);
    assert_eq!(code, 0);
    assert_valid(&schemas, "report.schema.json", &serde_json::from_str(&out).unwrap());
}

#[test]
fn check_findings_conform() {
    let schemas = Schemas::load();
    let dir = tempfile::tempdir().unwrap();
    for s in dtadag_core::scenario::builtin_scenarios() {
        let path = dir.path().join(format!("{}.json", s.name));
        std::fs::write(&path, dtadag::scenario_file::scenario_to_json(&s)).unwrap();
        let (code, out, _) = run(&["check", path.to_str().unwrap(), "--format", "json"]);
        assert_eq!(code, 1, "{}", s.name);
        let v: Value = serde_json::from_str(&out).unwrap();
        for f in v["findings"].as_array().unwrap() {
            assert_valid(&schemas, "finding.schema.json", f);
        }
    }
}

#[test]
fn analyze_estimates_conform() {
    let schemas = Schemas::load();
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("hpv.csv");
    let data = data.to_str().unwrap();
    let (code, _, _) = run(&[
        "simulate",
        "--scenario",
        "hpv-partial-verification",
        "--n",
        "2000",
        "--out",
        data,
    ]);
    assert_eq!(code, 0);
    let (code, out, _) = run(&[
        "analyze",
        "--data",
        data,
        "--index",
        "PCR",
        "--reference",
        "HPV",
        "--correction",
        "begg-greenes",
        "--format",
        "json",
    ]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    for e in v["estimates"].as_array().unwrap() {
        assert_valid(&schemas, "estimate.schema.json", e);
    }
}

#[test]
fn validator_rejects_violations() {
    let schemas = Schemas::load();
    let (_, out, _) = run(&["demo", "--scenario", "tb-hiv-confounding", "--format", "json"]);
    let good: Value = serde_json::from_str(&out).unwrap();

    let mut extra = good.clone();
    extra["unexpected"] = json!(1);
    assert!(!schemas.validate("report.schema.json", &extra).is_empty());

    let mut out_of_range = good.clone();
    out_of_range["estimates"][0]["se"] = json!(1.5);
    assert!(!schemas.validate("report.schema.json", &out_of_range).is_empty());

    let mut bad_kind = good.clone();
    bad_kind["findings"][0]["kind"] = json!("collider");
    assert!(!schemas.validate("report.schema.json", &bad_kind).is_empty());

    let mut missing = good;
    missing["diagnostics"].as_object_mut().unwrap().remove("notes");
    assert!(!schemas.validate("report.schema.json", &missing).is_empty());
}
