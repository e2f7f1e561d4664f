//! Pinned outputs. Regenerate with `UPDATE_GOLDEN=1 cargo test -p dtadag --test golden`.

mod common;

use std::fs;

use common::{manifest_dir, run};
use dtadag_core::scenario::builtin_scenarios;

fn check_golden(name: &str, args: &[&str]) {
    let (code, out, err) = run(args);
    assert_eq!(code, 0, "{args:?}: {err}");
    let (again, out2, _) = run(args);
    assert_eq!(again, 0);
    assert_eq!(out, out2, "{args:?} is not deterministic");
    let path = manifest_dir().join("tests/golden").join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(&path, &out).unwrap();
        return;
    }
    let expected = fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert!(
        out == expected,
        "{name} differs from the pinned output; rerun with UPDATE_GOLDEN=1 if intended"
    );
}

#[test]
fn demo_all_json() {
    check_golden("demo_all.json", &["demo", "--all", "--format", "json"]);
}

#[test]
fn demo_all_table() {
    check_golden("demo_all.txt", &["demo", "--all"]);
}

#[test]
fn demo_all_csv() {
    check_golden("demo_all.csv", &["demo", "--all", "--format", "csv"]);
}

#[test]
fn simulate_seed_7() {
    for s in builtin_scenarios() {
        check_golden(
            &format!("simulate_{}_n1000_seed7.csv", s.name),
            &["simulate", "--scenario", &s.name, "--n", "1000", "--seed", "7"],
        );
    }
}
