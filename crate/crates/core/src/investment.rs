//! Investment master MILP over candidate-project build decisions.

use thiserror::Error;

use crate::model::{investment_coefficient, LogicKind, ModelError, PlanningCase};
use crate::solver::{
    solve_milp_with, write_lp_format, LinearProgram, LpSolver, LpStatus, MilpRequest, RowSense, SolverError,
};

/// Cumulative build status `x[t][p]`: 1 when project `p` is in service at stage `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialPlan {
    pub stages: usize,
    pub projects: usize,
    /// Row-major `[stage - 1][project]`. Values may be fractional for
    /// LP-relaxation studies.
    pub x: Vec<f64>,
}

impl TrialPlan {
    pub fn empty(stages: usize, projects: usize) -> Self {
        Self {
            stages,
            projects,
            x: vec![0.0; stages * projects],
        }
    }

    /// Plan where each listed project enters service at the given stage.
    pub fn from_entries(stages: usize, projects: usize, entries: &[(usize, usize)]) -> Self {
        let mut plan = Self::empty(stages, projects);
        for &(p, entry) in entries {
            for t in entry.max(1)..=stages {
                plan.set(t, p, 1.0);
            }
        }
        plan
    }

    pub fn get(&self, t: usize, p: usize) -> f64 {
        self.x[(t - 1) * self.projects + p]
    }

    pub fn set(&mut self, t: usize, p: usize, v: f64) {
        self.x[(t - 1) * self.projects + p] = v;
    }

    /// Availability of every project at stage `t`.
    pub fn stage(&self, t: usize) -> &[f64] {
        &self.x[(t - 1) * self.projects..t * self.projects]
    }

    /// First stage with `x >= 0.5`.
    pub fn entry_stage(&self, p: usize) -> Option<usize> {
        (1..=self.stages).find(|&t| self.get(t, p) >= 0.5)
    }

    pub fn is_monotone(&self) -> bool {
        (0..self.projects).all(|p| (2..=self.stages).all(|t| self.get(t, p) >= self.get(t - 1, p)))
    }

    /// Build cost charged at each entry: `sum_t I(t) (x_t - x_{t-1})`.
    pub fn investment_cost(&self, case: &PlanningCase) -> Result<f64, ModelError> {
        let mut total = 0.0;
        for (p, project) in case.candidates.iter().enumerate() {
            let mut prev = 0.0;
            for t in 1..=self.stages {
                let x = self.get(t, p);
                let dx = x - prev;
                if dx != 0.0 {
                    total += investment_coefficient(case, project, t)? * dx;
                }
                prev = x;
            }
        }
        Ok(total)
    }

    /// Builds as `(project index, entry stage)` pairs.
    pub fn builds(&self) -> Vec<(usize, usize)> {
        (0..self.projects).filter_map(|p| self.entry_stage(p).map(|t| (p, t))).collect()
    }
}

/// Investment-space cut `w >= sum coefficients * x + sum constants`.
#[derive(Debug, Clone, PartialEq)]
pub struct BendersCut {
    /// Row-major `[stage - 1][project]`, like `TrialPlan::x`.
    pub coefficients: Vec<f64>,
    /// Per-stage constants.
    pub constants: Vec<f64>,
    pub iteration: usize,
}

impl BendersCut {
    pub fn evaluate(&self, plan: &TrialPlan) -> f64 {
        let lin: f64 = self.coefficients.iter().zip(&plan.x).map(|(m, x)| m * x).sum();
        lin + self.constants.iter().sum::<f64>()
    }
}

#[derive(Debug, Error)]
pub enum InvestmentError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("master problem is infeasible (contradictory logic constraints)")]
    Infeasible,
    #[error("master problem stopped with status {0:?} and no incumbent")]
    NoIncumbent(LpStatus),
}

/// The master MILP and its variable layout.
#[derive(Debug, Clone)]
pub struct MasterProblem {
    pub lp: LinearProgram,
    pub integers: Vec<usize>,
    /// Variable index of `x[t][p]`, row-major like `TrialPlan::x`.
    pub x_index: Vec<usize>,
    pub w_index: usize,
    pub stages: usize,
    pub projects: usize,
}

impl MasterProblem {
    pub fn x_var(&self, t: usize, p: usize) -> usize {
        self.x_index[(t - 1) * self.projects + p]
    }

    /// LP-format text of the master, for debugging.
    pub fn dump(&self) -> String {
        write_lp_format(&self.lp, &self.integers)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MasterSolution {
    pub plan: TrialPlan,
    pub w: f64,
    pub objective: f64,
    /// Proven lower bound on the master optimum.
    pub best_bound: f64,
    pub investment_cost: f64,
    pub nodes: usize,
}

/// `I[t][p]`, zero before the project's earliest stage.
pub fn investment_table(case: &PlanningCase) -> Result<Vec<f64>, ModelError> {
    let (nt, np) = (case.horizon.stages, case.candidates.len());
    let mut out = vec![0.0; nt * np];
    for (p, project) in case.candidates.iter().enumerate() {
        for t in project.earliest_stage..=nt {
            out[(t - 1) * np + p] = investment_coefficient(case, project, t)?;
        }
    }
    Ok(out)
}

pub fn build_master(case: &PlanningCase, cuts: &[BendersCut]) -> Result<MasterProblem, ModelError> {
    let (nt, np) = (case.horizon.stages, case.candidates.len());
    let table = investment_table(case)?;
    let inv = |t: usize, p: usize| table[(t - 1) * np + p];
    let mut lp = LinearProgram::new();
    let mut x_index = Vec::with_capacity(nt * np);
    for t in 1..=nt {
        for (p, project) in case.candidates.iter().enumerate() {
            // I(t) (x_t - x_{t-1}) summed over t
            let cost = if t < project.earliest_stage {
                0.0
            } else if t < nt {
                inv(t, p) - inv(t + 1, p)
            } else {
                inv(t, p)
            };
            let upper = if t < project.earliest_stage { 0.0 } else { 1.0 };
            x_index.push(lp.add_var(format!("x[{t}][{}]", project.id), 0.0, upper, cost));
        }
    }
    let w_index = lp.add_var("w", 0.0, f64::INFINITY, 1.0);
    let x = |t: usize, p: usize| x_index[(t - 1) * np + p];

    for t in 2..=nt {
        for (p, project) in case.candidates.iter().enumerate() {
            lp.add_row(
                format!("mono[{t}][{}]", project.id),
                vec![(x(t, p), 1.0), (x(t - 1, p), -1.0)],
                RowSense::Ge,
                0.0,
            );
        }
    }

    let pos = |id: &str| case.candidates.iter().position(|c| c.id == id).ok_or_else(|| ModelError::UnknownProject(id.into()));
    for (i, logic) in case.logic.iter().enumerate() {
        let ps: Vec<usize> = logic.projects.iter().map(|id| pos(id)).collect::<Result<_, _>>()?;
        match logic.kind {
            LogicKind::Exclusive => {
                lp.add_row(
                    format!("excl[{i}]"),
                    ps.iter().map(|&p| (x(nt, p), 1.0)).collect(),
                    RowSense::Le,
                    1.0,
                );
            }
            LogicKind::Associated | LogicKind::Precedence => {
                let (a, b) = (ps[0], ps[1]);
                let mut coefs = Vec::with_capacity(2 * nt);
                for t in 1..=nt {
                    coefs.push((x(t, a), 1.0));
                    coefs.push((x(t, b), -1.0));
                }
                let sense = if logic.kind == LogicKind::Associated { RowSense::Eq } else { RowSense::Ge };
                lp.add_row(format!("logic[{i}]"), coefs, sense, 0.0);
            }
        }
    }

    for (m, cut) in cuts.iter().enumerate() {
        let mut coefs = vec![(w_index, 1.0)];
        for (k, &mu) in cut.coefficients.iter().enumerate() {
            if mu != 0.0 {
                coefs.push((x_index[k], -mu));
            }
        }
        lp.add_row(format!("cut[{m}]"), coefs, RowSense::Ge, cut.constants.iter().sum());
    }

    Ok(MasterProblem {
        integers: x_index.clone(),
        lp,
        x_index,
        w_index,
        stages: nt,
        projects: np,
    })
}

pub fn solve_master(
    case: &PlanningCase,
    master: &MasterProblem,
    solver: &dyn LpSolver,
    relative_gap: f64,
    node_limit: usize,
) -> Result<MasterSolution, InvestmentError> {
    let mut req = MilpRequest::new(&master.lp, &master.integers);
    req.relative_gap = relative_gap;
    req.node_limit = node_limit;
    let out = solve_milp_with(solver, &req)?;
    let sol = match (out.status, out.solution) {
        (LpStatus::Infeasible, _) => return Err(InvestmentError::Infeasible),
        (_, Some(sol)) => sol,
        (status, None) => return Err(InvestmentError::NoIncumbent(status)),
    };
    let mut plan = TrialPlan::empty(master.stages, master.projects);
    for p in 0..master.projects {
        let mut prev = 0.0f64;
        for t in 1..=master.stages {
            let v = sol.primal[master.x_var(t, p)].round().max(prev);
            plan.set(t, p, v);
            prev = v;
        }
    }
    let investment_cost = plan.investment_cost(case)?;
    let w = sol.primal[master.w_index];
    Ok(MasterSolution {
        objective: sol.objective,
        best_bound: out.best_bound.min(sol.objective),
        plan,
        w,
        investment_cost,
        nodes: out.nodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::two_bus_case;
    use crate::solver::ReferenceSolver;

    #[test]
    fn no_cuts_builds_nothing() {
        let case = two_bus_case();
        let master = build_master(&case, &[]).unwrap();
        let sol = solve_master(&case, &master, &ReferenceSolver::default(), 1e-9, 1000).unwrap();
        assert!(sol.plan.x.iter().all(|&v| v == 0.0));
        assert_eq!(sol.w, 0.0);
        assert!(sol.objective.abs() < 1e-9);
    }

    #[test]
    fn master_objective_matches_plan_cost() {
        let case = two_bus_case();
        let np = case.candidates.len();
        let nt = case.horizon.stages;
        // a cut rewarding every project heavily
        let cut = BendersCut {
            coefficients: vec![-1e12; nt * np],
            constants: vec![1e13; nt],
            iteration: 1,
        };
        let master = build_master(&case, &[cut]).unwrap();
        let sol = solve_master(&case, &master, &ReferenceSolver::default(), 1e-12, 1000).unwrap();
        assert!((sol.objective - (sol.investment_cost + sol.w)).abs() <= 1e-6 * sol.objective.abs());
        assert!(sol.plan.is_monotone());
    }
}
