//! Table, JSON and CSV renderings.
//!
//! JSON is canonical: object keys sorted, two-space indent, LF line endings,
//! trailing newline. Numbers in tables use five decimals and `.` as the
//! decimal separator regardless of locale.

use std::fmt::Write as _;

use dtadag_core::estimate::{fmt_metric, AccuracyEstimate, BiasDirection, LcaResult, MetricBias};
use dtadag_core::report::ScenarioReport;
use dtadag_core::{BiasFinding, Path};
use serde::Serialize;

pub fn canonical_json<T: Serialize + ?Sized>(value: &T) -> String {
    // Value's map is a BTreeMap, so keys come out sorted
    let v = serde_json::to_value(value).expect("report types serialize");
    let mut s = serde_json::to_string_pretty(&v).expect("values serialize");
    s.push('\n');
    s
}

/// Left-aligned text columns separated by two spaces.
pub fn aligned(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |cells: Vec<&str>| {
        let mut l = String::new();
        for (i, (cell, w)) in cells.iter().zip(&widths).enumerate() {
            if i > 0 {
                l.push_str("  ");
            }
            let _ = write!(l, "{cell:<w$}");
        }
        out.push_str(l.trim_end());
        out.push('\n');
    };
    line(headers.to_vec());
    for row in rows {
        line(row.iter().map(String::as_str).collect());
    }
    out
}

fn csv_string(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(headers).expect("in-memory write");
    for row in rows {
        w.write_record(row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

fn signed(v: Option<f64>) -> String {
    match v {
        // avoid printing -0.00000
        Some(x) if x.abs() < 5e-6 => "0.00000".to_string(),
        Some(x) => format!("{x:+.5}"),
        None => "-".to_string(),
    }
}

fn direction(m: &MetricBias) -> &'static str {
    match m.direction {
        BiasDirection::Over => "over",
        BiasDirection::Under => "under",
        BiasDirection::None => "none",
        BiasDirection::Undefined => "undefined",
    }
}

fn interval(ci: Option<(f64, f64)>) -> String {
    match ci {
        Some((lo, hi)) => format!("[{lo:.5}, {hi:.5}]"),
        None => "-".to_string(),
    }
}

fn n_effective(e: &AccuracyEstimate) -> String {
    e.n_effective.map_or_else(|| "exact".to_string(), |n| n.to_string())
}

const ESTIMATE_HEADERS: [&str; 7] = ["provenance", "se", "sp", "ppv", "npv", "prevalence", "n"];

fn estimate_row(e: &AccuracyEstimate) -> Vec<String> {
    vec![
        e.provenance.to_string(),
        fmt_metric(e.se),
        fmt_metric(e.sp),
        fmt_metric(e.ppv),
        fmt_metric(e.npv),
        fmt_metric(e.prevalence),
        n_effective(e),
    ]
}

/// Estimates with Wilson intervals where present.
pub fn estimates_table(estimates: &[AccuracyEstimate]) -> String {
    let with_ci = estimates.iter().any(|e| e.ci.is_some());
    if !with_ci {
        let rows: Vec<Vec<String>> = estimates.iter().map(estimate_row).collect();
        return aligned(&ESTIMATE_HEADERS, &rows);
    }
    let rows: Vec<Vec<String>> = estimates
        .iter()
        .map(|e| {
            let mut row = estimate_row(e);
            row.push(interval(e.ci.and_then(|c| c.se)));
            row.push(interval(e.ci.and_then(|c| c.sp)));
            row
        })
        .collect();
    let mut headers = ESTIMATE_HEADERS.to_vec();
    headers.extend(["se 95% CI", "sp 95% CI"]);
    aligned(&headers, &rows)
}

fn estimate_csv_row(prefix: &[String], e: &AccuracyEstimate) -> Vec<String> {
    let opt = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
    let ci = |c: Option<(f64, f64)>| match c {
        Some((lo, hi)) => (lo.to_string(), hi.to_string()),
        None => (String::new(), String::new()),
    };
    let (se_lo, se_hi) = ci(e.ci.and_then(|c| c.se));
    let (sp_lo, sp_hi) = ci(e.ci.and_then(|c| c.sp));
    let mut row = prefix.to_vec();
    row.extend([
        e.provenance.to_string(),
        opt(e.se),
        opt(e.sp),
        opt(e.ppv),
        opt(e.npv),
        opt(e.prevalence),
        n_effective(e),
        se_lo,
        se_hi,
        sp_lo,
        sp_hi,
    ]);
    row
}

const ESTIMATE_CSV_HEADERS: [&str; 11] = [
    "provenance",
    "se",
    "sp",
    "ppv",
    "npv",
    "prevalence",
    "n_effective",
    "se_lo",
    "se_hi",
    "sp_lo",
    "sp_hi",
];

pub fn estimates_csv(estimates: &[AccuracyEstimate]) -> String {
    let rows: Vec<Vec<String>> = estimates.iter().map(|e| estimate_csv_row(&[], e)).collect();
    csv_string(&ESTIMATE_CSV_HEADERS, &rows)
}

fn finding_block(out: &mut String, f: &BiasFinding) {
    let _ = writeln!(out, "- {} ({})", f.kind, f.severity());
    let _ = writeln!(out, "  nodes: {}", f.nodes.join(", "));
    for p in &f.paths {
        let _ = writeln!(out, "  path: {}", p.arrow_string());
    }
    let _ = writeln!(out, "  etiological analog: {}", f.kind.etiological_analog());
    let _ = writeln!(out, "  structure: {}", f.kind.anchor());
    if let Some(a) = &f.adjustment {
        let sets = a.sets();
        if sets.is_empty() {
            let _ = writeln!(out, "  adjustment sets: none with observed nodes");
        } else {
            let shown: Vec<String> = sets
                .iter()
                .map(|s| format!("{{{}}}", s.iter().cloned().collect::<Vec<_>>().join(", ")))
                .collect();
            let _ = writeln!(out, "  adjustment sets: {}", shown.join(" "));
        }
    }
    let _ = writeln!(out, "  {}", f.explanation);
}

pub fn findings_table(findings: &[BiasFinding]) -> String {
    if findings.is_empty() {
        return "no structural bias detected\n".to_string();
    }
    let mut out = String::new();
    for f in findings {
        finding_block(&mut out, f);
    }
    out
}

pub fn findings_csv(findings: &[BiasFinding]) -> String {
    let rows: Vec<Vec<String>> = findings
        .iter()
        .map(|f| {
            vec![
                f.kind.to_string(),
                f.nodes.join(";"),
                f.path_strings().join(";"),
                f.kind.etiological_analog().to_string(),
                f.severity(),
            ]
        })
        .collect();
    csv_string(&["kind", "nodes", "paths", "etiological_analog", "severity"], &rows)
}

fn bias_rows(r: &ScenarioReport) -> Vec<Vec<String>> {
    r.bias_table
        .iter()
        .map(|row| {
            let b = &row.bias;
            vec![
                row.estimate.clone(),
                row.reference.clone(),
                signed(b.se.diff),
                signed(b.sp.diff),
                signed(b.ppv.diff),
                signed(b.npv.diff),
                signed(b.prevalence.diff),
                direction(&b.se).to_string(),
                direction(&b.sp).to_string(),
            ]
        })
        .collect()
}

pub fn report_table(r: &ScenarioReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "== {} ==", r.scenario);
    let _ = writeln!(out, "{}", r.description);
    out.push('\n');
    out.push_str("Findings\n");
    out.push_str(&findings_table(&r.findings));
    out.push('\n');
    out.push_str("Estimates\n");
    out.push_str(&estimates_table(&r.estimates));
    out.push('\n');
    out.push_str("Bias\n");
    out.push_str(&aligned(
        &[
            "estimate",
            "reference",
            "d_se",
            "d_sp",
            "d_ppv",
            "d_npv",
            "d_prev",
            "se",
            "sp",
        ],
        &bias_rows(r),
    ));
    let d = &r.diagnostics;
    if d.conditional_covariance.is_some() || d.verification.is_some() || !d.notes.is_empty() {
        out.push('\n');
        out.push_str("Diagnostics\n");
    }
    if let Some(c) = &d.conditional_covariance {
        let _ = writeln!(
            out,
            "cov({}, {} | {}=1) = {:.5}; cov({}, {} | {}=0) = {:.5}",
            c.tests[0], c.tests[1], c.given, c.given_present, c.tests[0], c.tests[1], c.given, c.given_absent
        );
    }
    if let Some(v) = &d.verification {
        let _ = writeln!(
            out,
            "verified fraction ({}=1): index positive {}, index negative {}",
            v.selection,
            fmt_metric(v.fraction_index_positive),
            fmt_metric(v.fraction_index_negative)
        );
    }
    for note in &d.notes {
        let _ = writeln!(out, "note: {note}");
    }
    out
}

pub fn reports_table(reports: &[ScenarioReport]) -> String {
    reports.iter().map(report_table).collect::<Vec<_>>().join("\n")
}

pub fn reports_csv(reports: &[ScenarioReport]) -> String {
    let rows: Vec<Vec<String>> = reports
        .iter()
        .flat_map(|r| {
            r.estimates
                .iter()
                .map(move |e| estimate_csv_row(std::slice::from_ref(&r.scenario), e))
        })
        .collect();
    let mut headers = vec!["scenario"];
    headers.extend(ESTIMATE_CSV_HEADERS);
    csv_string(&headers, &rows)
}

fn blockers(p: &Path) -> String {
    p.blockers
        .iter()
        .map(|(n, why)| format!("{n} ({})", why.describe()))
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Serialize)]
struct PathJson<'a> {
    path: String,
    status: &'a str,
    backdoor: bool,
    blocked_by: Vec<BlockerJson<'a>>,
}

#[derive(Serialize)]
struct BlockerJson<'a> {
    node: &'a str,
    reason: &'a str,
}

#[derive(Serialize)]
struct PathsJson<'a> {
    from: &'a str,
    to: &'a str,
    given: &'a [String],
    paths: Vec<PathJson<'a>>,
    d_separated: bool,
}

pub fn paths_json(from: &str, to: &str, given: &[String], paths: &[Path], d_separated: bool) -> String {
    let paths = paths
        .iter()
        .map(|p| PathJson {
            path: p.arrow_string(),
            status: if p.is_open() { "open" } else { "blocked" },
            backdoor: p.is_backdoor(),
            blocked_by: p
                .blockers
                .iter()
                .map(|(n, why)| BlockerJson {
                    node: n,
                    reason: why.describe(),
                })
                .collect(),
        })
        .collect();
    canonical_json(&PathsJson {
        from,
        to,
        given,
        paths,
        d_separated,
    })
}

pub fn paths_table(from: &str, to: &str, given: &[String], paths: &[Path], d_separated: bool) -> String {
    let mut out = String::new();
    if paths.is_empty() {
        out.push_str("no paths\n");
    } else {
        let rows: Vec<Vec<String>> = paths
            .iter()
            .map(|p| {
                vec![
                    p.arrow_string(),
                    if p.is_open() { "open" } else { "blocked" }.to_string(),
                    if p.is_backdoor() { "backdoor" } else { "" }.to_string(),
                    blockers(p),
                ]
            })
            .collect();
        out.push_str(&aligned(&["path", "status", "kind", "blocked by"], &rows));
    }
    let given = if given.is_empty() {
        String::new()
    } else {
        format!(" | {}", given.join(", "))
    };
    let _ = writeln!(out, "d-separated({from}, {to}{given}): {d_separated}");
    out
}

pub fn paths_csv(paths: &[Path]) -> String {
    let rows: Vec<Vec<String>> = paths
        .iter()
        .map(|p| {
            vec![
                p.arrow_string(),
                if p.is_open() { "open" } else { "blocked" }.to_string(),
                p.is_backdoor().to_string(),
                blockers(p),
            ]
        })
        .collect();
    csv_string(&["path", "status", "backdoor", "blocked_by"], &rows)
}

pub fn lca_table(fit: &LcaResult, names: &[String]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "latent class fit: prevalence {:.5}, log-likelihood {:.5}, iterations {}, converged {}, restarts agreeing {}",
        fit.prevalence, fit.log_likelihood, fit.iterations, fit.converged, fit.n_restarts_agreeing
    );
    let rows: Vec<Vec<String>> = names
        .iter()
        .zip(&fit.tests)
        .map(|(n, t)| vec![n.clone(), format!("{:.5}", t.se), format!("{:.5}", t.sp)])
        .collect();
    out.push_str(&aligned(&["test", "se", "sp"], &rows));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_keys_sorted() {
        #[derive(Serialize)]
        struct S {
            zeta: u8,
            alpha: u8,
        }
        assert_eq!(
            canonical_json(&S { zeta: 1, alpha: 2 }),
            "{\n  \"alpha\": 2,\n  \"zeta\": 1\n}\n"
        );
    }

    #[test]
    fn aligned_columns() {
        let t = aligned(&["a", "bb"], &[vec!["xxx".into(), "y".into()]]);
        assert_eq!(t, "a    bb\nxxx  y\n");
    }

    #[test]
    fn signed_formatting() {
        assert_eq!(signed(Some(-0.156122)), "-0.15612");
        assert_eq!(signed(Some(0.05102)), "+0.05102");
        assert_eq!(signed(Some(-1e-13)), "0.00000");
        assert_eq!(signed(None), "-");
    }
}
