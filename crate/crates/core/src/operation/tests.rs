use super::*;
use crate::fixtures::{three_bus_case, two_bus_case};
use crate::investment::TrialPlan;
use crate::solver::ReferenceSolver;

fn full_plan(case: &crate::model::PlanningCase) -> TrialPlan {
    let entries: Vec<(usize, usize)> = case.candidates.iter().enumerate().map(|(p, c)| (p, c.earliest_stage)).collect();
    TrialPlan::from_entries(case.horizon.stages, case.candidates.len(), &entries)
}

#[test]
fn converged_threshold_arithmetic() {
    // mean 100, stderr 2 from four samples with std 4
    let costs = [96.0, 100.0, 104.0, 100.0];
    let (m, sd) = (100.0, (32.0f64 / 3.0).sqrt());
    let stderr = sd / 2.0;
    assert!(sddp_converged(m - 1.96 * stderr + 1e-6, &costs, 1.96));
    assert!(!sddp_converged(m - 1.96 * stderr - 1e-3, &costs, 1.96));
    assert!(sddp_converged(100.0, &[100.0, 100.0], 1.96));
    assert!(!sddp_converged(50.0, &[100.0, 100.0], 1.96));
}

#[test]
fn deterministic_sddp_closes_gap() {
    let case = two_bus_case();
    let model = OperationModel::new(&case);
    let plan = TrialPlan::empty(case.horizon.stages, case.candidates.len());
    let res = run_sddp(&model, &ReferenceSolver::default(), &plan, &SddpConfig::default(), &WorkerPool::sequential()).unwrap();
    assert!(res.converged);
    let sim = &res.simulation;
    assert!((sim.lower - sim.mean).abs() <= 1e-6 * sim.mean.abs().max(1.0), "{} vs {}", sim.lower, sim.mean);
}

#[test]
fn lower_bound_nondecreasing() {
    let case = three_bus_case();
    let model = OperationModel::new(&case);
    let plan = full_plan(&case);
    let cfg = SddpConfig {
        max_iterations: 6,
        min_iterations: 6,
        ..SddpConfig::default()
    };
    let res = run_sddp(&model, &ReferenceSolver::default(), &plan, &cfg, &WorkerPool::sequential()).unwrap();
    for w in res.lower_bounds.windows(2) {
        assert!(w[1] >= w[0] - 1e-6 * w[0].abs().max(1.0), "{:?}", res.lower_bounds);
    }
}

#[test]
fn planes_pass_through_generating_state() {
    let case = three_bus_case();
    let model = OperationModel::new(&case);
    let plan = full_plan(&case);
    let cfg = SddpConfig {
        max_iterations: 2,
        ..SddpConfig::default()
    };
    let workers = WorkerPool::sequential();
    let solver = ReferenceSolver::default();
    let res = run_sddp(&model, &solver, &plan, &cfg, &workers).unwrap();
    let tree = OpeningTree::new(&model, cfg.seed).unwrap();
    let nt = case.horizon.stages;
    for rec in &res.simulation.records {
        for st in &rec.stages[1..] {
            let t = st.state.stage;
            let class = model.class_of(rec.scenario);
            let openings = if t < nt {
                Openings::condition(&case, t, &st.state.inflow, tree.at(t)).unwrap()
            } else {
                Openings::none()
            };
            let (lp, lay) = build_stage_lp(&model, &plan, &st.state, &openings, res.pool.planes(t + 1, class)).unwrap();
            let out = solve_stage(&model, &solver, &lp, &lay, None).unwrap();
            let below = res.pool.value(t, class, &st.state.storage, &st.state.inflow);
            assert!(below <= out.objective + 1e-6 * out.objective.abs().max(1.0));
        }
    }
}
