mod common;

use common::{deterministic_cost, enumerate_optimum, monotone_plans, rel, Net};
use gtep::benders::{assemble_investment_cut, evaluate_plan, run, RunConfig, StopReason};
use gtep::fixtures::{flat_load, flat_profile, project, random_toy, thermal, three_bus_case, two_bus_case};
use gtep::inflow::InflowModel;
use gtep::investment::TrialPlan;
use gtep::model::{PlanningCase, ProjectKind, Status};
use gtep::operation::CutDualSource;
use gtep::solver::ReferenceSolver;

fn exact() -> RunConfig {
    RunConfig {
        gap: 1e-9,
        ..RunConfig::default()
    }
}

/// Two stages, two buses, two candidate thermals and a candidate line.
fn expansion_toy() -> PlanningCase {
    let mut case = two_bus_case();
    let stages = 2;
    case.horizon.stages = stages;
    case.loads = vec![vec![vec![30.0, 90.0]], vec![vec![35.0, 110.0]]];
    case.renewables[0].production = flat_profile(stages, 1, 1, 10.0);
    case.thermals.push(thermal("T3", 2, 40.0, 60.0, Status::Candidate));
    case.candidates.push(project("P_T3", ProjectKind::Thermal, "T3", 8_000.0));
    case
}

#[test]
fn expansion_toy_matches_enumeration() {
    let case = expansion_toy();
    assert!(gtep::model::validate_case(&case).is_ok());
    let (best, best_plan) = enumerate_optimum(&case);
    let res = run(&case, &exact(), &ReferenceSolver::default()).unwrap();
    assert!(rel(res.total_cost(), best) < 1e-7, "{} vs {best}", res.total_cost());
    assert!(!best_plan.builds().is_empty());
    assert_eq!(res.stop, StopReason::GapReached);
}

#[test]
fn worthless_candidate_gets_zero_coefficients() {
    let mut case = two_bus_case();
    case.candidates.truncate(1);
    case.circuits.retain(|c| c.id != "L12b");
    let t2 = case.thermals.iter_mut().find(|t| t.id == "T2").unwrap();
    t2.variable_cost = 2.0 * case.deficit_cost;
    let solver = ReferenceSolver::default();
    let nt = case.horizon.stages;
    for plan in [TrialPlan::empty(nt, 1), TrialPlan::from_entries(nt, 1, &[(0, 1)])] {
        let op = evaluate_plan(&case, &plan, &RunConfig::default(), &solver).unwrap();
        for source in [CutDualSource::Propagated, CutDualSource::StageLocal] {
            let cut = assemble_investment_cut(&case, &plan, &op.simulation, source, 1).unwrap();
            assert!(cut.coefficients.iter().all(|m| m.abs() < 1e-9), "{:?}", cut.coefficients);
            for t in 0..nt {
                let stage_cost: f64 = op.simulation.records.iter().map(|r| r.stages[t].immediate_cost).sum::<f64>()
                    / op.simulation.records.len() as f64;
                assert!((cut.constants[t] - stage_cost).abs() <= 1e-9 * stage_cost.max(1.0));
            }
        }
    }
}

#[test]
fn stage_local_equals_propagated_for_one_stage() {
    let mut case = two_bus_case();
    case.horizon.stages = 1;
    case.loads.truncate(1);
    case.renewables[0].production.truncate(1);
    let solver = ReferenceSolver::default();
    for plan in [TrialPlan::empty(1, 2), TrialPlan::from_entries(1, 2, &[(0, 1), (1, 1)])] {
        let op = evaluate_plan(&case, &plan, &RunConfig::default(), &solver).unwrap();
        let a = assemble_investment_cut(&case, &plan, &op.simulation, CutDualSource::Propagated, 1).unwrap();
        let b = assemble_investment_cut(&case, &plan, &op.simulation, CutDualSource::StageLocal, 1).unwrap();
        for (x, y) in a.coefficients.iter().zip(&b.coefficients) {
            assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0), "{x} vs {y}");
        }
        for (x, y) in a.constants.iter().zip(&b.constants) {
            assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0));
        }
    }
}

#[test]
fn bounds_are_ordered_and_monotone() {
    let case = three_bus_case();
    let cfg = RunConfig {
        gap: 1e-4,
        max_iterations: 8,
        ..RunConfig::default()
    };
    let res = run(&case, &cfg, &ReferenceSolver::default()).unwrap();
    let tol = |v: f64| 1e-7 * v.abs().max(1.0);
    for rec in &res.history {
        assert!(rec.upper_bound >= rec.lower_bound - tol(rec.upper_bound));
    }
    for w in res.history.windows(2) {
        assert!(w[1].lower_bound >= w[0].lower_bound - tol(w[0].lower_bound));
        assert!(w[1].upper_bound <= w[0].upper_bound + tol(w[0].upper_bound));
    }
    assert!(res.upper_bound >= res.lower_bound - tol(res.upper_bound));
}

#[test]
fn best_plan_resimulates_to_the_upper_bound() {
    let case = three_bus_case();
    let cfg = RunConfig::default();
    let solver = ReferenceSolver::default();
    let res = run(&case, &cfg, &solver).unwrap();
    let again = evaluate_plan(&case, &res.best_plan, &cfg, &solver).unwrap();
    assert_eq!(again.simulation.mean + res.investment_cost, res.upper_bound);
}

#[test]
fn cuts_underestimate_every_plan_of_deterministic_toys() {
    let mut worst: f64 = f64::NEG_INFINITY;
    for seed in 300..312 {
        let case = random_toy(seed);
        let res = run(&case, &exact(), &ReferenceSolver::default()).unwrap();
        let plans = monotone_plans(&case);
        let costs: Vec<f64> = plans.iter().map(|p| deterministic_cost(&case, p, Net::Merged)).collect();
        for rec in &res.history {
            for (p, cost) in plans.iter().zip(&costs) {
                let excess = (rec.cut.evaluate(p) - cost) / cost.abs().max(1.0);
                worst = worst.max(excess);
                assert!(excess <= 1e-4, "toy {seed}: cut {} overestimates plan {:?}", rec.iteration, p.builds());
            }
        }
    }
    assert!(worst.is_finite());
}

#[test]
fn deterministic_inflows_give_zero_spread() {
    let mut case = expansion_toy();
    case.inflows = InflowModel::deterministic(&[vec![30.0]]);
    case.loads = flat_load(2, 1, &[30.0, 90.0]);
    let res = run(&case, &exact(), &ReferenceSolver::default()).unwrap();
    assert!(res.history.iter().all(|r| r.operation_std_dev == 0.0));
}
