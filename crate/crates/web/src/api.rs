//! Text-in, text-out operations behind the wasm exports.

use gtep::benders::{evaluate_plan, run, RunConfig};
use gtep::inflow::fit_ar1;
use gtep::investment::TrialPlan;
use gtep::io::{inflow_to_toml, parse_case, parse_history};
use gtep::model::PlanningCase;
use gtep::solver::ReferenceSolver;
use serde_json::{json, Value};

pub const EXAMPLE_CASE: &str = include_str!("../../core/cases/toy.toml");

fn load(case_text: &str) -> Result<(PlanningCase, RunConfig), String> {
    parse_case(case_text).map_err(|e| e.to_string())
}

fn builds(case: &PlanningCase, plan: &TrialPlan) -> Value {
    plan.builds()
        .into_iter()
        .map(|(p, t)| json!({ "project": case.candidates[p].id, "stage": t, "year": case.horizon.year_of(t) }))
        .collect()
}

pub fn describe_case(case_text: &str) -> Result<String, String> {
    let (case, cfg) = load(case_text)?;
    let projects: Vec<Value> = case
        .candidates
        .iter()
        .map(|c| json!({ "id": c.id, "kind": c.kind.to_string(), "target": c.target, "earliest_stage": c.earliest_stage }))
        .collect();
    Ok(json!({
        "name": case.name,
        "stages": case.horizon.stages,
        "years": (1..=case.horizon.stages).map(|t| case.horizon.year_of(t)).collect::<Vec<_>>(),
        "buses": case.buses.len(),
        "hydros": case.hydros.len(),
        "scenarios": case.scenarios,
        "gap": cfg.gap,
        "projects": projects,
    })
    .to_string())
}

pub fn plan_expansion(case_text: &str, gap: f64, max_iterations: usize, seed: u64) -> Result<String, String> {
    let (case, mut cfg) = load(case_text)?;
    if !(gap > 0.0 && gap < 1.0) {
        return Err("gap must lie in (0, 1)".into());
    }
    cfg.gap = gap;
    cfg.max_iterations = max_iterations.max(1);
    cfg.seed = seed;
    cfg.workers = 1;
    let res = run(&case, &cfg, &ReferenceSolver::default()).map_err(|e| e.to_string())?;
    let history: Vec<Value> = res
        .history
        .iter()
        .map(|r| {
            json!({
                "iteration": r.iteration,
                "lower": r.lower_bound,
                "upper": r.upper_bound,
                "gap": r.gap,
                "investment": r.investment_cost,
                "operation": r.operation_cost,
                "builds": builds(&case, &r.plan),
            })
        })
        .collect();
    Ok(json!({
        "stop": res.stop.as_str(),
        "gap": res.gap,
        "lower": res.lower_bound,
        "upper": res.upper_bound,
        "investment": res.investment_cost,
        "operation": res.operation_cost,
        "total": res.total_cost(),
        "builds": builds(&case, &res.best_plan),
        "history": history,
    })
    .to_string())
}

pub fn simulate_plan(case_text: &str, builds_json: &str, seed: u64) -> Result<String, String> {
    let (case, mut cfg) = load(case_text)?;
    let entries: Vec<(String, usize)> = serde_json::from_str(builds_json).map_err(|e| format!("plan: {e}"))?;
    let (nt, np) = (case.horizon.stages, case.candidates.len());
    let mut pairs = Vec::with_capacity(entries.len());
    for (id, stage) in entries {
        let p = case.candidates.iter().position(|c| c.id == id).ok_or_else(|| format!("unknown project `{id}`"))?;
        if stage < 1 || stage > nt {
            return Err(format!("project `{id}`: stage {stage} outside 1..={nt}"));
        }
        pairs.push((p, stage));
    }
    let plan = TrialPlan::from_entries(nt, np, &pairs);
    cfg.seed = seed;
    cfg.workers = 1;
    let investment = plan.investment_cost(&case).map_err(|e| e.to_string())?;
    let op = evaluate_plan(&case, &plan, &cfg, &ReferenceSolver::default()).map_err(|e| e.to_string())?;
    let sim = &op.simulation;
    let stage_cost: Vec<f64> = (0..nt)
        .map(|t| sim.records.iter().map(|r| r.stages[t].immediate_cost).sum::<f64>() / sim.records.len() as f64)
        .collect();
    let deficit: Vec<f64> = (0..nt)
        .map(|t| {
            sim.records
                .iter()
                .map(|r| {
                    let per_bus = &r.stages[t].dispatch.deficit_mw;
                    per_bus.iter().flat_map(|b| b.iter().enumerate()).map(|(k, mw)| mw * case.horizon.block_hours(k)).sum::<f64>()
                })
                .sum::<f64>()
                / sim.records.len() as f64
        })
        .collect();
    Ok(json!({
        "investment": investment,
        "operation": sim.mean,
        "operation_std_dev": sim.std_dev,
        "lower": sim.lower,
        "total": investment + sim.mean,
        "sddp_iterations": op.iterations,
        "converged": op.converged,
        "stage_cost": stage_cost,
        "deficit_mwh": deficit,
        "builds": builds(&case, &plan),
    })
    .to_string())
}

pub fn fit_inflows(history_csv: &str, periods: usize) -> Result<String, String> {
    let (ids, data) = parse_history(history_csv).map_err(|e| e.to_string())?;
    let report = fit_ar1(&data, periods).map_err(|e| e.to_string())?;
    Ok(json!({
        "toml": inflow_to_toml(&report.model, &ids),
        "warnings": report.warnings,
    })
    .to_string())
}
