use gtep::benders::{run, RunConfig};
use gtep::io::parse_case;
use gtep::solver::ReferenceSolver;
use gtep_web::api::{describe_case, fit_inflows, plan_expansion, simulate_plan, EXAMPLE_CASE};
use serde_json::Value;

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn describes_the_example() {
    let v = parse(describe_case(EXAMPLE_CASE).unwrap());
    assert_eq!(v["stages"], 3);
    assert_eq!(v["projects"].as_array().unwrap().len(), 2);
}

#[test]
fn planning_matches_the_library() {
    let (case, cfg) = parse_case(EXAMPLE_CASE).unwrap();
    let cfg = RunConfig { gap: 0.01, max_iterations: 20, seed: 3, workers: 1, ..cfg };
    let direct = run(&case, &cfg, &ReferenceSolver::default()).unwrap();
    let v = parse(plan_expansion(EXAMPLE_CASE, 0.01, 20, 3).unwrap());
    assert_eq!(v["total"].as_f64().unwrap(), direct.total_cost());
    assert_eq!(v["history"].as_array().unwrap().len(), direct.history.len());
    assert_eq!(v["stop"], direct.stop.as_str());
}

#[test]
fn simulation_of_the_best_plan_reproduces_its_cost() {
    let v = parse(plan_expansion(EXAMPLE_CASE, 0.01, 20, 3).unwrap());
    let builds: Vec<(String, u64)> = v["builds"]
        .as_array()
        .unwrap()
        .iter()
        .map(|b| (b["project"].as_str().unwrap().to_string(), b["stage"].as_u64().unwrap()))
        .collect();
    let s = parse(simulate_plan(EXAMPLE_CASE, &serde_json::to_string(&builds).unwrap(), 3).unwrap());
    assert_eq!(s["total"].as_f64().unwrap(), v["upper"].as_f64().unwrap());
    let stage_sum: f64 = s["stage_cost"].as_array().unwrap().iter().map(|c| c.as_f64().unwrap()).sum();
    let op = s["operation"].as_f64().unwrap();
    assert!((stage_sum - op).abs() <= 1e-9 * op.abs().max(1.0));
}

#[test]
fn bad_inputs_are_reported() {
    assert!(simulate_plan(EXAMPLE_CASE, r#"[["nope", 1]]"#, 1).unwrap_err().contains("nope"));
    assert!(simulate_plan(EXAMPLE_CASE, r#"[["P_T2", 9]]"#, 1).is_err());
    assert!(plan_expansion(EXAMPLE_CASE, 1.5, 5, 1).is_err());
    assert!(describe_case("schema = 1").is_err());
}

#[test]
fn fits_a_history() {
    let mut text = String::from("A,B\n");
    for k in 0..40 {
        text.push_str(&format!("{},{}\n", 10.0 + (k % 5) as f64, 20.0 + (k % 3) as f64));
    }
    let v = parse(fit_inflows(&text, 2).unwrap());
    assert!(v["toml"].as_str().unwrap().contains("A"));
    assert!(fit_inflows("A\nx\n", 1).is_err());
}
