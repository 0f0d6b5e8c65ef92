mod common;

use common::{deterministic_cost, rel, tree_cost, Net, Root};
use gtep::fixtures::{bus, flat_load, horizon, hydro, thermal, three_bus_case, two_bus_case};
use gtep::inflow::InflowModel;
use gtep::investment::TrialPlan;
use gtep::model::{PlanningCase, Status};
use gtep::operation::{
    backward_pass, build_stage_lp, run_sddp, solve_stage, sddp_converged, OpeningTree, OperationModel, Openings,
    SddpConfig, StageState, WorkerPool,
};
use gtep::solver::ReferenceSolver;
use proptest::prelude::*;

fn single_bus(stages: usize, load: f64) -> PlanningCase {
    let mut case = two_bus_case();
    case.name = "single-bus".into();
    case.buses = vec![bus(1)];
    case.circuits.clear();
    case.hydros.clear();
    case.renewables.clear();
    case.candidates.clear();
    case.thermals = vec![thermal("T", 1, 200.0, 10.0, Status::Existing)];
    case.loads = flat_load(stages, 1, &[load]);
    case.horizon = horizon(stages, 1.0, vec![1.0]);
    case.inflows = InflowModel::deterministic(&[]);
    case
}

fn stage_one(case: &PlanningCase, plan: &TrialPlan) -> gtep::operation::StageOutcome {
    let model = OperationModel::new(case);
    let state = StageState {
        stage: case.horizon.stages,
        scenario: 0,
        storage: case.hydros.iter().map(|h| h.initial_storage).collect(),
        inflow: case.hydros.iter().map(|h| h.initial_inflow).collect(),
    };
    let (lp, lay) = build_stage_lp(&model, plan, &state, &Openings::none(), &[]).unwrap();
    solve_stage(&model, &ReferenceSolver::default(), &lp, &lay, None).unwrap()
}

fn sddp(case: &PlanningCase, plan: &TrialPlan, iterations: usize) -> gtep::operation::SddpResult {
    let cfg = SddpConfig {
        max_iterations: iterations,
        min_iterations: iterations,
        ..SddpConfig::default()
    };
    run_sddp(&OperationModel::new(case), &ReferenceSolver::default(), plan, &cfg, &WorkerPool::sequential()).unwrap()
}

#[test]
fn single_marginal_unit() {
    let case = single_bus(1, 150.0);
    let out = stage_one(&case, &TrialPlan::empty(1, 0));
    assert!((out.objective - 1500.0).abs() < 1e-9);
    assert!((out.dispatch.marginal_cost[0][0] - 10.0).abs() < 1e-9);
}

/// One bus, a reservoir holding 80 units with no inflow, demand 50 per stage.
fn hydro_only() -> PlanningCase {
    let mut case = single_bus(2, 50.0);
    case.thermals[0].variable_cost = 100.0;
    case.horizon.discount_rate = 0.1;
    let mut h = hydro("H", 1, 100.0, 100.0, 1.0);
    h.max_block_power = 100.0;
    h.initial_storage = 80.0;
    h.initial_inflow = 0.0;
    case.hydros = vec![h];
    case.inflows = InflowModel::deterministic(&[vec![0.0]]);
    case
}

#[test]
fn hydro_only_two_stage_matches_extensive_form() {
    let case = hydro_only();
    let plan = TrialPlan::empty(2, 0);
    let exact = deterministic_cost(&case, &plan, Net::Disjunctive);
    let res = sddp(&case, &plan, 3);
    assert!(rel(res.lower(), exact) < 1e-9, "{} vs {exact}", res.lower());
    assert!(rel(res.simulation.mean, exact) < 1e-9);
    // the shortfall is served in the discounted stage
    assert!(rel(exact, 20.0 * 100.0 / 1.1) < 1e-9, "{exact}");
}

#[test]
fn one_backward_pass_is_exact_when_deterministic() {
    let case = two_bus_case();
    let plan = TrialPlan::from_entries(3, 2, &[(0, 2)]);
    let exact = deterministic_cost(&case, &plan, Net::Disjunctive);
    let model = OperationModel::new(&case);
    let solver = ReferenceSolver::default();
    let workers = WorkerPool::sequential();
    let tree = OpeningTree::new(&model, 1).unwrap();
    let mut pool = gtep::operation::FcfPool::new(3, model.num_classes());
    let first = gtep::operation::forward_pass(&model, &solver, &plan, &pool, &tree, 1, 1, &workers).unwrap();
    backward_pass(&model, &solver, &plan, &first.records, &mut pool, &tree, &workers).unwrap();
    let second = gtep::operation::forward_pass(&model, &solver, &plan, &pool, &tree, 1, 2, &workers).unwrap();
    assert!(rel(second.lower, exact) < 1e-9, "{} vs {exact}", second.lower);
    assert!(rel(second.mean, exact) < 1e-9);
}

#[test]
fn free_thermal_makes_water_worthless() {
    let mut case = two_bus_case();
    for t in case.thermals.iter_mut() {
        t.variable_cost = 0.0;
        t.capacity = 500.0;
    }
    let plan = TrialPlan::from_entries(3, 2, &[(0, 1), (1, 1)]);
    let res = sddp(&case, &plan, 2);
    let planes: Vec<_> = (2..=3).flat_map(|t| res.pool.planes(t, 0).to_vec()).collect();
    assert!(!planes.is_empty());
    for p in planes {
        assert!(p.storage.iter().chain(&p.inflow).all(|v| v.abs() < 1e-9), "{p:?}");
        assert!(p.constant.abs() < 1e-9);
    }
}

#[test]
fn zero_demand_is_free() {
    let mut case = three_bus_case();
    case.loads = flat_load(case.horizon.stages, 2, &[0.0, 0.0, 0.0]);
    for r in case.renewables.iter_mut() {
        for block in r.production.iter_mut().flatten() {
            block.iter_mut().for_each(|v| *v = 0.0);
        }
    }
    let plan = TrialPlan::empty(case.horizon.stages, case.candidates.len());
    let res = sddp(&case, &plan, 2);
    assert_eq!(res.simulation.mean, 0.0);
    for rec in &res.simulation.records {
        assert_eq!(rec.total_cost, 0.0);
        for st in &rec.stages {
            assert!(st.duals.bus_balance.iter().flatten().all(|y| y.abs() < 1e-12), "{:?}", st.duals.bus_balance);
        }
    }
}

#[test]
fn unbuilt_candidates_stay_idle() {
    let case = three_bus_case();
    let plan = TrialPlan::empty(case.horizon.stages, case.candidates.len());
    let res = sddp(&case, &plan, 3);
    for rec in &res.simulation.records {
        for st in &rec.stages {
            let d = &st.dispatch;
            assert!(d.thermal_mw[1].iter().all(|v| v.abs() < 1e-9));
            assert!(d.renewable_mw[0].iter().all(|v| v.abs() < 1e-9));
            assert!(d.flow_mw[3].iter().all(|v| v.abs() < 1e-9));
        }
    }
}

#[test]
fn worker_count_does_not_change_results() {
    let case = three_bus_case();
    let plan = TrialPlan::from_entries(4, 3, &[(0, 2), (2, 1)]);
    let model = OperationModel::new(&case);
    let cfg = SddpConfig {
        max_iterations: 4,
        ..SddpConfig::default()
    };
    let solver = ReferenceSolver::default();
    let one = run_sddp(&model, &solver, &plan, &cfg, &WorkerPool::new(1).unwrap()).unwrap();
    let four = run_sddp(&model, &solver, &plan, &cfg, &WorkerPool::new(4).unwrap()).unwrap();
    assert_eq!(one, four);
}

#[test]
fn convergence_threshold_example() {
    // 400 costs of mean 100 and sample standard deviation 40: stderr 2, threshold 96.08
    let costs: Vec<f64> = (0..400).map(|i| if i % 2 == 0 { 60.0 } else { 140.0 }).collect();
    let sd = (costs.iter().map(|c| (c - 100.0f64).powi(2)).sum::<f64>() / 399.0).sqrt();
    let threshold = 100.0 - 1.96 * sd / 20.0;
    assert!(threshold > 96.0 && threshold < 96.1, "{threshold}");
    assert!(sddp_converged(96.1, &costs, 1.96));
    assert!(!sddp_converged(96.0, &costs, 1.96));
}

/// Three stages, one hydro, two inflow openings per transition.
fn three_stage_stochastic(seed: u64) -> PlanningCase {
    let mut case = two_bus_case();
    let mean = 20.0 + (seed % 7) as f64 * 3.0;
    case.hydros[0].initial_inflow = mean;
    case.hydros[0].initial_storage = 10.0 + (seed % 11) as f64 * 8.0;
    case.inflows = InflowModel {
        periods: 1,
        mean: vec![vec![mean]],
        std_dev: vec![vec![0.3 * mean]],
        rho: vec![vec![0.4]],
        correlation: vec![vec![1.0]],
    };
    case.openings = 2;
    case.scenarios = 3;
    for r in case.renewables.iter_mut() {
        for block in r.production.iter_mut().flatten() {
            *block = vec![block[0]; 3];
        }
    }
    case
}

#[test]
fn plane_slopes_are_subgradients_of_the_stage_value() {
    let case = three_stage_stochastic(3);
    let plan = TrialPlan::from_entries(3, 2, &[(0, 2)]);
    let model = OperationModel::new(&case);
    let solver = ReferenceSolver::default();
    let workers = WorkerPool::sequential();
    let res = sddp(&case, &plan, 3);
    let tree = OpeningTree::new(&model, SddpConfig::default().seed).unwrap();
    let mut pool = res.pool.clone();
    let before = pool.planes(2, 0).len();
    backward_pass(&model, &solver, &plan, &res.simulation.records, &mut pool, &tree, &workers).unwrap();
    let value = |v: f64, a: f64| {
        let state = StageState {
            stage: 2,
            scenario: 0,
            storage: vec![v],
            inflow: vec![a],
        };
        let openings = Openings::condition(&case, 2, &[a], tree.at(2)).unwrap();
        assert_eq!(openings.clamp_events, 0);
        let (lp, lay) = build_stage_lp(&model, &plan, &state, &openings, pool.planes(3, 0)).unwrap();
        solve_stage(&model, &solver, &lp, &lay, None).unwrap().objective
    };
    let h = 1e-4;
    let fresh = &pool.planes(2, 0)[before..];
    assert!(!fresh.is_empty());
    for rec in &res.simulation.records {
        let st = &rec.stages[1].state;
        let (v, a) = (st.storage[0], st.inflow[0]);
        let plane = fresh
            .iter()
            .find(|p| rel(p.evaluate(&[v], &[a]), value(v, a)) < 1e-9)
            .expect("a fresh plane passes through each visited state");
        let f0 = value(v, a);
        for (slope, up, dn) in [
            (plane.storage[0], value(v + h, a), value((v - h).max(0.0), a)),
            (plane.inflow[0], value(v, a + h), value(v, a - h)),
        ] {
            let right = (up - f0) / h;
            let left = (f0 - dn) / h;
            let tol = 1e-5 * f0.abs().max(1.0);
            assert!(slope >= left.min(right) - tol && slope <= left.max(right) + tol, "{slope} vs [{left}, {right}]");
        }
    }
}

#[test]
fn final_stage_objective_is_immediate_cost() {
    let case = two_bus_case();
    let out = stage_one(&case, &TrialPlan::empty(3, 2));
    assert!((out.objective - out.immediate_cost).abs() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn planes_underestimate_the_tree(seed in 0u64..1000, v in 0.0f64..100.0, a in 0.0f64..60.0) {
        let case = three_stage_stochastic(seed);
        let plan = TrialPlan::from_entries(3, 2, &[(1, (seed % 3) as usize + 1)]);
        let res = sddp(&case, &plan, 4);
        let model = OperationModel::new(&case);
        let tree = OpeningTree::new(&model, SddpConfig::default().seed).unwrap();
        let exact = tree_cost(&case, &plan, &Root::initial(&case, &tree.noise), Net::Disjunctive);
        prop_assert!(res.lower() <= exact + 1e-7 * exact.abs().max(1.0));
        for t in 2..=3 {
            let root = Root { stage: t, storage: vec![v], inflow: vec![a], noise: &tree.noise, scenario: 0 };
            let cost = tree_cost(&case, &plan, &root, Net::Disjunctive);
            for p in res.pool.planes(t, 0) {
                prop_assert!(p.evaluate(&[v], &[a]) <= cost + 1e-7 * cost.abs().max(1.0));
            }
        }
    }
}
