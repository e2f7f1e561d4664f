//! The `dtadag` command line.
//!
//! Exit codes: 0 success (for `check`: no findings), 1 findings present
//! (`check` only), 2 input or usage error. Nothing is written to standard
//! output when the exit code is 2.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path as FsPath, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use dtadag_core::bias::{detect_biases, target_of, validate_roles, BiasError};
use dtadag_core::estimate::{
    accuracy_from_data, begg_greenes, correct_for_known_reference, lca_em, AccuracyEstimate, Correction, LcaOptions,
    LcaResult, Observations, PatternCounts, Provenance, VerificationData,
};
use dtadag_core::report::{run_scenario, Mode, ScenarioReport};
use dtadag_core::scenario::{builtin_scenario, builtin_scenarios, Scenario};
use dtadag_core::{AnalysisSpec, BayesNet, Dag, NodeRole};
use serde::Serialize;
use thiserror::Error;

use crate::render;
use crate::scenario_file::{load_network, load_scenario, LoadError};
use crate::tabular::{read_patterns, read_table, write_dataset, TableError};

const LONG_HELP: &str = "\
INPUT FORMATS
  DAG file      dag { NAME [role=target|reference|index|covariate|selection|other, latent] ... A -> B ... }
                `#` starts a comment. Nodes are observed unless marked latent.
  Scenario      JSON { name, description, dag, cpts, spec, expected_findings, corrections, known_reference }
                cpts: { NODE: { parents: [...], p1: [P(NODE=1 | parents = i) for i in 0..2^k] } },
                first-listed parent is the most significant bit of i.
                spec: { index, truth_proxy, conditioned: { NODE: 0|1 }, strata: [NODE, ...] }.
  Dataset CSV   header row of column names, cells 0, 1 or blank (missing), LF line endings.
                A blank reference cell means the subject was not verified.
  Pattern CSV   columns t1..tK (0/1) then count; used by `analyze --patterns` for latent class fits.

OUTPUT FORMATS
  table         aligned text, five decimals, `-` for undefined metrics
  json          canonical JSON: sorted keys, two-space indent, LF, trailing newline
  csv           one row per estimate, finding or path

EXIT STATUS
  0  success; for `check`, no structural bias detected
  1  `check` found at least one bias structure (a spectrum effect counts)
  2  invalid input or usage; nothing is written to standard output

BUILT-IN SCENARIOS
  ptb-imperfect-reference, ptb-bacterial-load, chlamydia-spectrum, tb-hiv-confounding,
  hpv-partial-verification";

#[derive(Debug, Parser)]
#[command(
    name = "dtadag",
    version,
    about = "Causal-graph bias audits for diagnostic test accuracy studies",
    after_long_help = LONG_HELP
)]
pub struct Cli {
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Seed for simulation and latent class restarts.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Write output to this file instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate roles and detect bias structures in a design graph.
    Check(CheckArgs),
    /// List every path between two nodes with its open/blocked status.
    Paths(PathsArgs),
    /// Sample a dataset from a scenario (always CSV).
    Simulate(SimulateArgs),
    /// Estimate accuracy from a dataset, optionally with a correction.
    Analyze(AnalyzeArgs),
    /// Run built-in scenarios end to end.
    Demo(DemoArgs),
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// DAG syntax file, or a scenario JSON file.
    pub file: PathBuf,
    /// Index test node (default: the node with role index).
    #[arg(long)]
    pub index: Option<String>,
    /// Node the analysis treats as the target condition (default: the
    /// single reference node, else the target).
    #[arg(long)]
    pub truth_proxy: Option<String>,
    /// Restrict the analysis to NODE=0 or NODE=1 (repeatable).
    #[arg(long, value_name = "NODE=VALUE")]
    pub condition: Vec<String>,
    /// Stratify on NODE (repeatable).
    #[arg(long, value_name = "NODE")]
    pub stratify: Vec<String>,
}

#[derive(Debug, Args)]
pub struct PathsArgs {
    /// DAG syntax file, or a scenario JSON file.
    pub file: PathBuf,
    #[arg(long)]
    pub from: String,
    #[arg(long)]
    pub to: String,
    /// Conditioning node (repeatable).
    #[arg(long, value_name = "NODE")]
    pub given: Vec<String>,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["scenario", "file"]))]
pub struct SimulateArgs {
    /// Built-in scenario name.
    #[arg(long)]
    pub scenario: Option<String>,
    /// Scenario or network JSON file.
    #[arg(long)]
    pub file: Option<PathBuf>,
    /// Number of rows.
    #[arg(long)]
    pub n: usize,
    /// Also write latent columns.
    #[arg(long)]
    pub include_latent: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CorrectionArg {
    None,
    BeggGreenes,
    KnownReference,
    Lca,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("input").required(true).args(["data", "patterns"]))]
pub struct AnalyzeArgs {
    /// Dataset CSV.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Pattern-count CSV (latent class fit only).
    #[arg(long)]
    pub patterns: Option<PathBuf>,
    #[arg(long)]
    pub index: Option<String>,
    /// Column scored as truth.
    #[arg(long)]
    pub reference: Option<String>,
    #[arg(long, value_enum, default_value_t = CorrectionArg::None)]
    pub correction: CorrectionArg,
    /// Known reference sensitivity (known-reference correction).
    #[arg(long)]
    pub ref_se: Option<f64>,
    /// Known reference specificity (known-reference correction).
    #[arg(long)]
    pub ref_sp: Option<f64>,
    /// Additional test column for the latent class fit (repeatable).
    #[arg(long, value_name = "COLUMN")]
    pub test: Vec<String>,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("which").required(true).args(["scenario", "all"]))]
pub struct DemoArgs {
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long)]
    pub all: bool,
    /// Simulate N rows (with --seed) instead of exact enumeration.
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Graph(#[from] dtadag_core::GraphError),
    #[error(transparent)]
    Bias(#[from] BiasError),
    #[error(transparent)]
    Prob(#[from] dtadag_core::prob::ProbError),
    #[error(transparent)]
    Estimate(#[from] dtadag_core::estimate::EstimateError),
    #[error(transparent)]
    Report(#[from] dtadag_core::report::ReportError),
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
}

struct Outcome {
    text: String,
    code: i32,
    warnings: Vec<String>,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Outcome {
            text,
            code: 0,
            warnings: Vec::new(),
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            if code == 0 {
                let _ = stdout.write_all(text.as_bytes());
                return 0;
            }
            let _ = stderr.write_all(text.as_bytes());
            return 2;
        }
    };
    match execute(&cli) {
        Ok(outcome) => {
            for w in &outcome.warnings {
                let _ = writeln!(stderr, "warning: {w}");
            }
            if let Some(path) = &cli.out {
                if let Err(source) = fs::write(path, outcome.text.as_bytes()) {
                    let err = CliError::Write {
                        path: path.display().to_string(),
                        source,
                    };
                    let _ = writeln!(stderr, "error: {err}");
                    return 2;
                }
            } else if stdout.write_all(outcome.text.as_bytes()).is_err() {
                return 2;
            }
            outcome.code
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            2
        }
    }
}

fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Check(a) => check(cli, a),
        Command::Paths(a) => paths(cli, a),
        Command::Simulate(a) => simulate(cli, a),
        Command::Analyze(a) => analyze(cli, a),
        Command::Demo(a) => demo(cli, a),
    }
}

fn read_text(path: &FsPath) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.display().to_string(),
        source,
    })
}

/// A design graph from DAG syntax or a scenario file, with the scenario's
/// analysis when there is one.
fn load_design(path: &FsPath) -> Result<(Dag, Option<AnalysisSpec>, Vec<String>), CliError> {
    let text = read_text(path)?;
    if text.trim_start().starts_with('{') {
        let (s, warnings) = load_scenario(path)?;
        let spec = s.spec.clone();
        Ok((s.net.dag().clone(), Some(spec), warnings))
    } else {
        Ok((Dag::parse(&text)?, None, Vec::new()))
    }
}

fn parse_condition(s: &str) -> Result<(String, u8), CliError> {
    let bad = || CliError::Usage(format!("--condition expects NODE=0 or NODE=1, got `{s}`"));
    let (node, value) = s.split_once('=').ok_or_else(bad)?;
    let value = match value.trim() {
        "0" => 0,
        "1" => 1,
        _ => return Err(bad()),
    };
    Ok((node.trim().to_string(), value))
}

fn single_with_role(dag: &Dag, role: NodeRole) -> Option<String> {
    let mut it = dag.nodes().iter().filter(|n| n.role == role);
    match (it.next(), it.next()) {
        (Some(n), None) => Some(n.name.clone()),
        _ => None,
    }
}

#[derive(Serialize)]
struct CheckJson<'a> {
    roles: &'a str,
    analysis: &'a AnalysisSpec,
    findings: &'a [dtadag_core::BiasFinding],
}

fn check(cli: &Cli, a: &CheckArgs) -> Result<Outcome, CliError> {
    let (dag, file_spec, warnings) = load_design(&a.file)?;
    if let Err(errors) = validate_roles(&dag) {
        let lines: Vec<String> = errors.iter().map(ToString::to_string).collect();
        return Err(CliError::Usage(format!("role check failed: {}", lines.join("; "))));
    }
    let mut spec = match file_spec {
        Some(s) => s,
        None => {
            let index = single_with_role(&dag, NodeRole::IndexTest).expect("roles validated");
            let proxy = single_with_role(&dag, NodeRole::ReferenceTest)
                .unwrap_or_else(|| target_of(&dag).expect("roles validated").to_string());
            AnalysisSpec::new(index, proxy)
        }
    };
    if let Some(i) = &a.index {
        spec.index = i.clone();
    }
    if let Some(p) = &a.truth_proxy {
        spec.truth_proxy = p.clone();
    }
    for c in &a.condition {
        let (node, value) = parse_condition(c)?;
        spec.conditioned.insert(node, value);
    }
    spec.strata.extend(a.stratify.iter().cloned());
    let findings = detect_biases(&dag, &spec)?;
    let text = match cli.format {
        Format::Table => {
            let mut t = String::from("roles: ok\n");
            t.push_str(&format!("analysis: {} scored against {}", spec.index, spec.truth_proxy));
            if !spec.conditioned.is_empty() {
                let c: Vec<String> = spec.conditioned.iter().map(|(k, v)| format!("{k}={v}")).collect();
                t.push_str(&format!(", restricted to {}", c.join(", ")));
            }
            if !spec.strata.is_empty() {
                t.push_str(&format!(
                    ", stratified by {}",
                    spec.strata.iter().cloned().collect::<Vec<_>>().join(", ")
                ));
            }
            t.push_str("\n\n");
            t.push_str(&render::findings_table(&findings));
            t
        }
        Format::Json => render::canonical_json(&CheckJson {
            roles: "ok",
            analysis: &spec,
            findings: &findings,
        }),
        Format::Csv => render::findings_csv(&findings),
    };
    Ok(Outcome {
        text,
        code: if findings.is_empty() { 0 } else { 1 },
        warnings,
    })
}

fn paths(cli: &Cli, a: &PathsArgs) -> Result<Outcome, CliError> {
    let (dag, _, warnings) = load_design(&a.file)?;
    let given: Vec<&str> = a.given.iter().map(String::as_str).collect();
    let paths = dag.paths_given(&a.from, &a.to, &given)?;
    let separated = dag.d_separated(&[&a.from], &[&a.to], &given)?;
    let text = match cli.format {
        Format::Table => render::paths_table(&a.from, &a.to, &a.given, &paths, separated),
        Format::Json => render::paths_json(&a.from, &a.to, &a.given, &paths, separated),
        Format::Csv => render::paths_csv(&paths),
    };
    Ok(Outcome {
        text,
        code: 0,
        warnings,
    })
}

fn unknown_scenario(name: &str) -> CliError {
    let names: Vec<String> = builtin_scenarios().into_iter().map(|s| s.name).collect();
    CliError::Usage(format!("unknown scenario `{name}`; valid names: {}", names.join(", ")))
}

fn simulate(cli: &Cli, a: &SimulateArgs) -> Result<Outcome, CliError> {
    if a.n == 0 {
        return Err(CliError::Usage("--n must be at least 1".into()));
    }
    let mut warnings = Vec::new();
    let (net, spec): (BayesNet, Option<AnalysisSpec>) = if let Some(name) = &a.scenario {
        let s = builtin_scenario(name).ok_or_else(|| unknown_scenario(name))?;
        (s.net, Some(s.spec))
    } else {
        let path = a.file.as_ref().expect("clap enforces one source");
        if read_text(path)?.contains("\"spec\"") {
            let (s, w) = load_scenario(path)?;
            warnings = w;
            (s.net, Some(s.spec))
        } else {
            (load_network(path)?, None)
        }
    };
    let data = net.sample(a.n, cli.seed)?;
    let dag = net.dag();
    let columns: Vec<&str> = data
        .variables()
        .iter()
        .map(String::as_str)
        .filter(|v| a.include_latent || dag.node(v).is_ok_and(|n| n.observed))
        .collect();
    // unverified rows lose their reference result
    let blank = spec.as_ref().and_then(|s| {
        let selection = s
            .conditioned
            .iter()
            .find(|(k, v)| **v == 1 && dag.node(k).is_ok_and(|n| n.role == NodeRole::Selection))?;
        Some((s.truth_proxy.clone(), selection.0.clone()))
    });
    let mut buf = Vec::new();
    write_dataset(
        &data,
        &columns,
        blank.as_ref().map(|(r, v)| (r.as_str(), v.as_str())),
        &mut buf,
    )?;
    Ok(Outcome {
        text: String::from_utf8(buf).expect("CSV is ASCII"),
        code: 0,
        warnings,
    })
}

#[derive(Serialize)]
struct LcaJson<'a> {
    tests: &'a [String],
    fit: &'a LcaResult,
}

#[derive(Serialize)]
struct AnalyzeJson<'a> {
    estimates: &'a [AccuracyEstimate],
    #[serde(skip_serializing_if = "Option::is_none")]
    lca: Option<LcaJson<'a>>,
    notes: &'a [String],
}

fn analyze(cli: &Cli, a: &AnalyzeArgs) -> Result<Outcome, CliError> {
    let mut estimates = Vec::new();
    let mut notes = Vec::new();
    let mut lca: Option<(Vec<String>, LcaResult)> = None;
    let lca_options = LcaOptions {
        seed: cli.seed,
        ..LcaOptions::default()
    };

    if let Some(path) = &a.patterns {
        if a.correction != CorrectionArg::Lca {
            return Err(CliError::Usage("--patterns is only used with --correction lca".into()));
        }
        let file = fs::File::open(path).map_err(|source| CliError::Read {
            path: path.display().to_string(),
            source,
        })?;
        let counts = read_patterns(file)?;
        let names: Vec<String> = (1..=counts.tests()).map(|i| format!("t{i}")).collect();
        let fit = lca_em(&counts, &lca_options)?;
        estimates.extend(fit.estimates());
        lca = Some((names, fit));
    } else {
        let path = a.data.as_ref().expect("clap enforces one input");
        let file = fs::File::open(path).map_err(|source| CliError::Read {
            path: path.display().to_string(),
            source,
        })?;
        let table = read_table(file)?;
        let index = a
            .index
            .as_deref()
            .ok_or_else(|| CliError::Usage("--index is required with --data".into()))?;
        let reference = a
            .reference
            .as_deref()
            .ok_or_else(|| CliError::Usage("--reference is required with --data".into()))?;
        if index == reference {
            return Err(CliError::Usage("--index and --reference must differ".into()));
        }
        if table.blanks(index)? > 0 {
            return Err(CliError::Usage(format!("index column `{index}` has blank cells")));
        }
        let blanks = table.blanks(reference)?;
        if blanks > 0 && a.correction != CorrectionArg::BeggGreenes {
            return Err(CliError::Usage(format!(
                "reference column `{reference}` has {blanks} blank (unverified) cells; only --correction begg-greenes handles partial verification"
            )));
        }
        let verified = table.complete(&[index, reference])?;
        if verified.n_rows() == 0 {
            return Err(CliError::Usage("no rows with both index and reference results".into()));
        }
        let naive = accuracy_from_data(&verified, index, reference)?;
        estimates.push(naive);
        match a.correction {
            CorrectionArg::None => {}
            CorrectionArg::BeggGreenes => {
                let t = table.column(index)?;
                let r = table.column(reference)?;
                let vd = VerificationData::from_observations(
                    t.iter().zip(r).map(|(t, r)| (t.expect("no blank index cells"), *r)),
                );
                let mut est = begg_greenes(&vd)?;
                est.n_effective = Some(table.n_rows() as u64);
                notes.push(format!(
                    "verified fraction: index positive {}, index negative {}",
                    dtadag_core::estimate::fmt_metric(vd.verified_fraction_pos()),
                    dtadag_core::estimate::fmt_metric(vd.verified_fraction_neg())
                ));
                estimates.push(est);
            }
            CorrectionArg::KnownReference => {
                let (Some(se), Some(sp)) = (a.ref_se, a.ref_sp) else {
                    return Err(CliError::Usage("known-reference needs --ref-se and --ref-sp".into()));
                };
                let fit = correct_for_known_reference(&verified.crosstab(index, reference)?, se, sp)?;
                let mut est = fit.to_estimate();
                est.n_effective = Some(verified.n_rows() as u64);
                estimates.push(est);
            }
            CorrectionArg::Lca => {
                let mut names = vec![reference.to_string(), index.to_string()];
                for t in &a.test {
                    if !names.contains(t) {
                        names.push(t.clone());
                    }
                }
                let cols: Vec<&str> = names.iter().map(String::as_str).collect();
                for c in &cols {
                    table.column(c)?;
                }
                if cols.len() < 3 {
                    return Err(dtadag_core::estimate::EstimateError::Underidentified { tests: cols.len() }.into());
                }
                let complete = table.complete(&cols)?;
                let rows: Vec<Vec<u8>> = complete.rows().collect();
                let counts = PatternCounts::from_rows(cols.len(), rows.iter().map(Vec::as_slice))?;
                let fit = lca_em(&counts, &lca_options)?;
                estimates.extend(fit.estimates());
                lca = Some((names, fit));
            }
        }
    }

    let text = match cli.format {
        Format::Table => {
            let mut t = String::new();
            let shown: Vec<AccuracyEstimate> = estimates
                .iter()
                .filter(|e| e.provenance != Provenance::Corrected(Correction::LatentClass))
                .cloned()
                .collect();
            if !shown.is_empty() {
                t.push_str(&render::estimates_table(&shown));
            }
            if let Some((names, fit)) = &lca {
                if !t.is_empty() {
                    t.push('\n');
                }
                t.push_str(&render::lca_table(fit, names));
            }
            for n in &notes {
                t.push_str(&format!("note: {n}\n"));
            }
            t
        }
        Format::Json => render::canonical_json(&AnalyzeJson {
            estimates: &estimates,
            lca: lca.as_ref().map(|(names, fit)| LcaJson { tests: names, fit }),
            notes: &notes,
        }),
        Format::Csv => render::estimates_csv(&estimates),
    };
    Ok(Outcome::ok(text))
}

fn demo(cli: &Cli, a: &DemoArgs) -> Result<Outcome, CliError> {
    let scenarios: Vec<Scenario> = match &a.scenario {
        Some(name) => vec![builtin_scenario(name).ok_or_else(|| unknown_scenario(name))?],
        None => builtin_scenarios(),
    };
    let mode = match a.n {
        Some(0) => return Err(CliError::Usage("--n must be at least 1".into())),
        Some(n) => Mode::Simulate { n, seed: cli.seed },
        None => Mode::Exact,
    };
    let reports: Vec<ScenarioReport> = scenarios
        .iter()
        .map(|s| run_scenario(s, mode))
        .collect::<Result<_, _>>()?;
    let text = match cli.format {
        Format::Table => render::reports_table(&reports),
        Format::Json if a.all => render::canonical_json(&reports),
        Format::Json => render::canonical_json(&reports[0]),
        Format::Csv => render::reports_csv(&reports),
    };
    Ok(Outcome::ok(text))
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn condition_syntax() {
        assert_eq!(parse_condition("V=1").unwrap(), ("V".to_string(), 1));
        assert!(parse_condition("V").is_err());
        assert!(parse_condition("V=2").is_err());
    }
}
