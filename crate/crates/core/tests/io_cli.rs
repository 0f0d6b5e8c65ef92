use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gtep::benders::RunConfig;
use gtep::fixtures::{random_toy, three_bus_case, two_bus_case};
use gtep::investment::TrialPlan;
use gtep::io::{case_to_toml, load_case, parse_case, parse_plan, plan_to_toml, IoError};

fn cases_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("cases")
}

fn toy_text() -> String {
    fs::read_to_string(cases_dir().join("toy.toml")).unwrap()
}

fn gtep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gtep")).args(args).output().unwrap()
}

fn diagnostics(text: &str) -> Vec<gtep::io::Diagnostic> {
    match parse_case(text) {
        Err(e @ IoError::Invalid(_)) => e.diagnostics(),
        other => panic!("expected diagnostics, got {other:?}"),
    }
}

#[test]
fn toy_file_is_the_two_bus_fixture() {
    let (case, _) = load_case(&cases_dir().join("toy.toml")).unwrap();
    assert_eq!(case, two_bus_case());
}

#[test]
fn case_text_round_trips() {
    let cfg = RunConfig {
        gap: 0.05,
        seed: 9,
        ..RunConfig::default()
    };
    for case in [two_bus_case(), three_bus_case(), random_toy(5)] {
        let text = case_to_toml(&case, &cfg);
        let (back, run) = parse_case(&text).unwrap();
        assert_eq!(back, case);
        assert_eq!(run, cfg);
    }
}

#[test]
fn negative_susceptance_names_the_circuit() {
    let text = toy_text().replacen("susceptance = 10.0", "susceptance = -10.0", 1);
    let diags = diagnostics(&text);
    assert_eq!(diags.len(), 1, "{diags:?}");
    let d = &diags[0];
    assert!(d.message.contains("L12"), "{d}");
    let line = d.line.expect("line number");
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[..line].iter().rev().take(8).any(|l| l.contains("id = \"L12\"")), "line {line}");
}

#[test]
fn block_durations_must_sum_to_one() {
    let text = toy_text().replace("blocks = [1.0]", "blocks = [0.97]");
    let diags = diagnostics(&text);
    assert!(diags.iter().any(|d| d.message.contains("block durations must sum to 1")), "{diags:?}");
}

#[test]
fn unknown_keys_and_schemas_are_rejected() {
    let text = toy_text().replacen("stage_hours = 10.0", "stage_hours = 10.0\ncolour = 3", 1);
    assert!(matches!(parse_case(&text), Err(IoError::Parse { line: Some(_), .. })));
    let text = toy_text().replace("gtep-case/1", "gtep-case/9");
    assert!(matches!(parse_case(&text), Err(IoError::Schema { .. })));
}

#[test]
fn plan_text_round_trips() {
    let case = three_bus_case();
    let plan = TrialPlan::from_entries(4, 3, &[(0, 2), (2, 4)]);
    assert_eq!(parse_plan(&plan_to_toml(&plan, &case), &case).unwrap(), plan);
    let bad = "schema = \"gtep-plan/1\"\n[[build]]\nproject = \"nope\"\nstage = 1\n";
    assert!(parse_plan(bad, &case).is_err());
}

#[test]
fn repeated_runs_write_identical_bundles() {
    let dir = tempfile::tempdir().unwrap();
    let case = cases_dir().join("toy.toml");
    let outs: Vec<PathBuf> = ["a", "b"].iter().map(|n| dir.path().join(n)).collect();
    for out in &outs {
        let o = gtep(&["run", case.to_str().unwrap(), "--seed", "1", "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let mut names: Vec<String> = fs::read_dir(&outs[0]).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert!(names.contains(&"summary.toml".to_string()) && names.contains(&"timing.csv".to_string()));
    for name in names.iter().filter(|n| *n != "timing.csv") {
        assert_eq!(fs::read(outs[0].join(name)).unwrap(), fs::read(outs[1].join(name)).unwrap(), "{name}");
    }
}

#[test]
fn validate_reports_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.toml");
    fs::write(&path, toy_text().replace("blocks = [1.0]", "blocks = [0.97]")).unwrap();
    let o = gtep(&["validate", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("block durations must sum to 1"));

    let ok = gtep(&["validate", cases_dir().join("toy.toml").to_str().unwrap()]);
    assert_eq!(ok.status.code(), Some(0));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(gtep(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(gtep(&["run"]).status.code(), Some(1));
    let case = cases_dir().join("toy.toml");
    assert_eq!(gtep(&["run", case.to_str().unwrap(), "--gap", "2"]).status.code(), Some(1));
}

#[test]
fn simulate_matches_the_first_iteration() {
    let dir = tempfile::tempdir().unwrap();
    let case = cases_dir().join("toy.toml");
    let out = dir.path().join("run");
    let o = gtep(&["run", case.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let mut rdr = csv::Reader::from_path(out.join("convergence.csv")).unwrap();
    let col = rdr.headers().unwrap().iter().position(|h| h == "operation_cost").unwrap();
    let first: f64 = rdr.records().next().unwrap().unwrap()[col].parse().unwrap();

    let plan = dir.path().join("empty.toml");
    fs::write(&plan, "schema = \"gtep-plan/1\"\n").unwrap();
    let o = gtep(&["simulate", case.to_str().unwrap(), "--plan", plan.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    let summary: toml::Table = stdout.parse().unwrap();
    let cost = summary["operation_cost"].as_float().unwrap();
    assert!((cost - first).abs() <= 1e-9 * first.abs().max(1.0), "{cost} vs {first}");
}

#[test]
fn fit_inflows_prints_a_model() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("history.csv");
    let model = gtep::inflow::InflowModel {
        periods: 2,
        mean: vec![vec![40.0, 60.0]],
        std_dev: vec![vec![8.0, 12.0]],
        rho: vec![vec![0.3, 0.5]],
        correlation: vec![vec![1.0]],
    };
    let hist = gtep::inflow::simulate(&model, &[40.0], 400, 3).unwrap();
    let mut text = String::from("H1\n");
    for v in &hist[0] {
        text.push_str(&format!("{v}\n"));
    }
    fs::write(&path, text).unwrap();
    let o = gtep(&["fit-inflows", path.to_str().unwrap(), "--periods", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = String::from_utf8(o.stdout).unwrap();
    let doc: toml::Table = out.parse().unwrap();
    assert!(!doc.is_empty());
    assert!(out.contains("H1"));
}
