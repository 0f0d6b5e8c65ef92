//! Benders coordination between the investment master and SDDP operation.

use std::time::Duration;

use thiserror::Error;

use crate::investment::{build_master, solve_master, BendersCut, InvestmentError, TrialPlan};
use crate::model::{ModelError, PlanningCase};
use crate::operation::{run_sddp, CutDualSource, ForwardPass, OperationError, OperationModel, SddpConfig, SddpResult, WorkerPool};
use crate::solver::LpSolver;

#[derive(Debug, Error)]
pub enum BendersError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Investment(#[from] InvestmentError),
    #[error(transparent)]
    Operation(#[from] OperationError),
    #[error("cannot assemble a cut: {0}")]
    Cut(String),
}

impl BendersError {
    /// True for failures of the numerical machinery rather than the data.
    pub fn is_solver_failure(&self) -> bool {
        !matches!(
            self,
            BendersError::Model(_)
                | BendersError::Investment(InvestmentError::Model(_))
                | BendersError::Operation(OperationError::Inflow(_))
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Relative gap `(UB - LB) / UB` at which the loop stops.
    pub gap: f64,
    pub max_iterations: usize,
    pub seed: u64,
    /// Worker threads for SDDP; 1 runs sequentially.
    pub workers: usize,
    pub sddp_max_iterations: usize,
    pub sddp_min_iterations: usize,
    pub confidence_z: f64,
    pub cut_duals: CutDualSource,
    /// Relative optimality gap requested from the master branch and bound.
    pub master_gap: f64,
    pub master_node_limit: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            gap: 0.03,
            max_iterations: 80,
            seed: 42,
            workers: 1,
            sddp_max_iterations: 10,
            sddp_min_iterations: 1,
            confidence_z: 1.96,
            cut_duals: CutDualSource::Propagated,
            master_gap: 1e-9,
            master_node_limit: 200_000,
        }
    }
}

impl RunConfig {
    pub fn sddp(&self) -> SddpConfig {
        SddpConfig {
            max_iterations: self.sddp_max_iterations,
            min_iterations: self.sddp_min_iterations,
            z: self.confidence_z,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    GapReached,
    IterationLimit,
    /// The master proposed a plan it had already evaluated.
    PlanRepeated,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::GapReached => "gap_reached",
            StopReason::IterationLimit => "iteration_limit",
            StopReason::PlanRepeated => "plan_repeated",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub plan: TrialPlan,
    pub investment_cost: f64,
    /// Mean simulated operation cost of the trial plan.
    pub operation_cost: f64,
    pub operation_std_dev: f64,
    /// Master optimum bound at this iteration.
    pub master_bound: f64,
    /// Best lower bound so far.
    pub lower_bound: f64,
    /// Best total cost so far.
    pub upper_bound: f64,
    pub gap: f64,
    pub sddp_iterations: usize,
    pub sddp_converged: bool,
    pub clamp_events: usize,
    pub cut: BendersCut,
    pub wall_time: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanResult {
    pub best_plan: TrialPlan,
    pub investment_cost: f64,
    pub operation_cost: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub gap: f64,
    pub stop: StopReason,
    pub history: Vec<IterationRecord>,
    /// Operation run of the best plan.
    pub operation: SddpResult,
    /// Candidate corridors whose big-M came from the fallback value.
    pub flagged_corridors: Vec<String>,
}

impl PlanResult {
    pub fn total_cost(&self) -> f64 {
        self.investment_cost + self.operation_cost
    }
}

/// Investment cut through the simulated operation cost of `plan`.
pub fn assemble_investment_cut(
    case: &PlanningCase,
    plan: &TrialPlan,
    simulation: &ForwardPass,
    source: CutDualSource,
    iteration: usize,
) -> Result<BendersCut, BendersError> {
    let (nt, np) = (case.horizon.stages, case.candidates.len());
    let records = &simulation.records;
    if records.is_empty() {
        return Err(BendersError::Cut("no simulated scenarios".into()));
    }
    if plan.stages != nt || plan.projects != np {
        return Err(BendersError::Cut("plan dimensions do not match the case".into()));
    }
    let ns = records.len() as f64;
    let mut coefficients = vec![0.0; nt * np];
    let mut stage_cost = vec![0.0; nt];
    for rec in records {
        if rec.stages.len() != nt {
            return Err(BendersError::Cut(format!("scenario {} has {} stages", rec.scenario, rec.stages.len())));
        }
        match source {
            CutDualSource::Propagated => {
                let sens = &rec.stages[0].plan_sensitivity;
                if sens.len() != nt * np {
                    return Err(BendersError::Cut("missing plan sensitivities".into()));
                }
                for (c, s) in coefficients.iter_mut().zip(sens) {
                    *c += s / ns;
                }
            }
            CutDualSource::StageLocal => {
                for (t, st) in rec.stages.iter().enumerate() {
                    if st.stage_terms.len() != np {
                        return Err(BendersError::Cut("missing stage duals".into()));
                    }
                    for p in 0..np {
                        coefficients[t * np + p] += st.stage_terms[p] / ns;
                    }
                }
            }
        }
        for (t, st) in rec.stages.iter().enumerate() {
            stage_cost[t] += st.immediate_cost / ns;
        }
    }
    let constants = (0..nt)
        .map(|t| {
            let linear: f64 = (0..np).map(|p| coefficients[t * np + p] * plan.x[t * np + p]).sum();
            stage_cost[t] - linear
        })
        .collect();
    Ok(BendersCut {
        coefficients,
        constants,
        iteration,
    })
}

/// Runs SDDP for a fixed plan.
pub fn evaluate_plan(
    case: &PlanningCase,
    plan: &TrialPlan,
    cfg: &RunConfig,
    solver: &dyn LpSolver,
) -> Result<SddpResult, BendersError> {
    case.check()?;
    let model = OperationModel::new(case);
    let workers = WorkerPool::new(cfg.workers)?;
    Ok(run_sddp(&model, solver, plan, &cfg.sddp(), &workers)?)
}

pub fn run(case: &PlanningCase, cfg: &RunConfig, solver: &dyn LpSolver) -> Result<PlanResult, BendersError> {
    run_with_observer(case, cfg, solver, |_, _| {})
}

/// Runs the decomposition, calling `observer` after every iteration with its
/// record and the operation run of its trial plan.
pub fn run_with_observer<F>(
    case: &PlanningCase,
    cfg: &RunConfig,
    solver: &dyn LpSolver,
    mut observer: F,
) -> Result<PlanResult, BendersError>
where
    F: FnMut(&IterationRecord, &SddpResult),
{
    case.check()?;
    let model = OperationModel::new(case);
    let workers = WorkerPool::new(cfg.workers)?;
    let sddp_cfg = cfg.sddp();
    let mut cuts: Vec<BendersCut> = Vec::new();
    let mut history: Vec<IterationRecord> = Vec::new();
    let mut evaluated: Vec<(TrialPlan, SddpResult)> = Vec::new();
    let mut lower = f64::NEG_INFINITY;
    let mut best: Option<(f64, f64, usize)> = None;
    let mut stop = StopReason::IterationLimit;

    for m in 1..=cfg.max_iterations.max(1) {
        let start = Stopwatch::start();
        let master = build_master(case, &cuts)?;
        let sol = solve_master(case, &master, solver, cfg.master_gap, cfg.master_node_limit)?;
        lower = lower.max(sol.best_bound);
        let seen = evaluated.iter().position(|(p, _)| *p == sol.plan);
        let slot = match seen {
            Some(i) => i,
            None => {
                let op = run_sddp(&model, solver, &sol.plan, &sddp_cfg, &workers)?;
                evaluated.push((sol.plan.clone(), op));
                evaluated.len() - 1
            }
        };
        let op = &evaluated[slot].1;
        let operation_cost = op.simulation.mean;
        let total = sol.investment_cost + operation_cost;
        if best.is_none_or(|b| total < b.0 + b.1) {
            best = Some((sol.investment_cost, operation_cost, slot));
        }
        let upper = best.map_or(f64::INFINITY, |b| b.0 + b.1);
        let cut = assemble_investment_cut(case, &sol.plan, &op.simulation, cfg.cut_duals, m)?;
        if case.candidates.is_empty() {
            // the trial plan is the only feasible plan
            lower = lower.max(sol.investment_cost + cut.evaluate(&sol.plan));
        }
        let gap = relative_gap(lower, upper);
        let record = IterationRecord {
            iteration: m,
            plan: sol.plan,
            investment_cost: sol.investment_cost,
            operation_cost,
            operation_std_dev: op.simulation.std_dev,
            master_bound: sol.best_bound,
            lower_bound: lower,
            upper_bound: upper,
            gap,
            sddp_iterations: op.iterations,
            sddp_converged: op.converged,
            clamp_events: op.clamp_events,
            cut: cut.clone(),
            wall_time: start.elapsed(),
        };
        observer(&record, op);
        history.push(record);
        if gap <= cfg.gap {
            stop = StopReason::GapReached;
            break;
        }
        if seen.is_some() {
            stop = StopReason::PlanRepeated;
            break;
        }
        cuts.push(cut);
    }

    let (investment_cost, operation_cost, slot) = best.expect("the first iteration always evaluates a plan");
    let (best_plan, operation) = evaluated.swap_remove(slot);
    let upper = investment_cost + operation_cost;
    let topo = &model.topo;
    let flagged_corridors = topo.flagged_corridors().into_iter().map(|k| case.circuits[k].id.clone()).collect();
    Ok(PlanResult {
        best_plan,
        investment_cost,
        operation_cost,
        lower_bound: lower,
        upper_bound: upper,
        gap: relative_gap(lower, upper),
        stop,
        history,
        operation,
        flagged_corridors,
    })
}

/// Wall clock that reads zero where the platform has no monotonic clock.
struct Stopwatch {
    #[cfg(not(all(target_arch = "wasm32", target_os = "unknown")))]
    start: std::time::Instant,
}

impl Stopwatch {
    fn start() -> Self {
        Self {
            #[cfg(not(all(target_arch = "wasm32", target_os = "unknown")))]
            start: std::time::Instant::now(),
        }
    }

    fn elapsed(&self) -> Duration {
        #[cfg(not(all(target_arch = "wasm32", target_os = "unknown")))]
        return self.start.elapsed();
        #[cfg(all(target_arch = "wasm32", target_os = "unknown"))]
        Duration::ZERO
    }
}

/// `max(0, (UB - LB) / UB)`, or 0 when both bounds are zero.
pub fn relative_gap(lower: f64, upper: f64) -> f64 {
    if upper <= 0.0 {
        if lower >= upper - 1e-12 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        ((upper - lower) / upper).max(0.0)
    }
}
