//! Bundled LP/MILP solver.
//!
//! The reference LP solver is a bounded-variable revised simplex (primal and
//! dual) with a dense Schur-complement factorization of the structural part of
//! the basis. Duals follow the minimize convention `dual_i = d(objective)/d(rhs_i)`:
//! `>=` rows carry nonnegative duals, `<=` rows nonpositive ones.
//!
//! Rows with a single nonzero are folded into variable bounds before the
//! simplex runs; their duals are recovered from the reduced cost of the
//! bounded variable, so callers always see one dual per declared row.

mod lu;
mod lp_format;
mod milp;
mod simplex;

pub use lp_format::write_lp_format;
pub use milp::{solve_milp, solve_milp_with, MilpOutcome, MilpRequest};

use thiserror::Error;

/// Row sense of a linear constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSense {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub name: String,
    pub coefs: Vec<(usize, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
}

/// A minimization LP: `min c'x + offset` subject to rows and variable bounds.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearProgram {
    pub vars: Vec<Variable>,
    pub rows: Vec<Row>,
    pub objective_offset: f64,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64, cost: f64) -> usize {
        self.vars.push(Variable {
            name: name.into(),
            lower,
            upper,
            cost,
        });
        self.vars.len() - 1
    }

    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        coefs: Vec<(usize, f64)>,
        sense: RowSense,
        rhs: f64,
    ) -> usize {
        self.rows.push(Row {
            name: name.into(),
            coefs,
            sense,
            rhs,
        });
        self.rows.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        for (j, v) in self.vars.iter().enumerate() {
            if v.lower.is_nan() || v.upper.is_nan() || !v.cost.is_finite() {
                return Err(SolverError::Malformed(format!("variable {j} has non-finite data")));
            }
            if v.lower > v.upper {
                return Err(SolverError::Malformed(format!(
                    "variable {} ({}) has lower {} > upper {}",
                    j, v.name, v.lower, v.upper
                )));
            }
            if v.lower == f64::INFINITY || v.upper == f64::NEG_INFINITY {
                return Err(SolverError::Malformed(format!("variable {j} has an empty domain")));
            }
        }
        for (i, r) in self.rows.iter().enumerate() {
            if !r.rhs.is_finite() {
                return Err(SolverError::Malformed(format!("row {} ({}) rhs is not finite", i, r.name)));
            }
            for &(j, a) in &r.coefs {
                if j >= self.vars.len() {
                    return Err(SolverError::Malformed(format!(
                        "row {} ({}) references variable {} out of range",
                        i, r.name, j
                    )));
                }
                if !a.is_finite() {
                    return Err(SolverError::Malformed(format!("row {} ({}) has a non-finite coefficient", i, r.name)));
                }
            }
        }
        Ok(())
    }

    /// Row activity `a_i' x` for every row.
    pub fn row_activity(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.coefs.iter().map(|&(j, a)| a * x[j]).sum())
            .collect()
    }

    pub fn objective_at(&self, x: &[f64]) -> f64 {
        self.objective_offset + self.vars.iter().zip(x).map(|(v, xi)| v.cost * xi).sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Iteration cap hit or factorization breakdown.
    NumericalFailure,
    /// MILP search stopped at the node limit; the incumbent is returned.
    NodeLimit,
}

/// Simplex basis status of a variable or of a row's logical variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisStatus {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free variable held at zero.
    Free,
}

/// A basis in terms of the original LP, usable as a warm start for an LP
/// with the same variables and the same leading rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    pub vars: Vec<BasisStatus>,
    pub rows: Vec<BasisStatus>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    pub primal: Vec<f64>,
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub iterations: usize,
    pub basis: Option<Basis>,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    pub(crate) fn failed(status: LpStatus, n: usize, m: usize, iterations: usize) -> Self {
        Self {
            status,
            objective: f64::NAN,
            primal: vec![0.0; n],
            duals: vec![0.0; m],
            reduced_costs: vec![0.0; n],
            iterations,
            basis: None,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("malformed linear program: {0}")]
    Malformed(String),
}

/// Solver tolerances. `feasibility` is absolute on rows and bounds; `objective`
/// is relative on the primal/dual objective gap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub feasibility: f64,
    pub objective: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            feasibility: 1e-7,
            objective: 1e-6,
        }
    }
}

/// Abstract LP solver. Implementations must return duals under the
/// minimize convention documented at module level.
pub trait LpSolver: Send + Sync {
    fn solve(&self, lp: &LinearProgram, warm_start: Option<&Basis>) -> Result<LpSolution, SolverError>;
}

/// The bundled revised simplex solver.
#[derive(Debug, Clone, Copy, Default)]
pub struct ReferenceSolver {
    pub tolerances: Tolerances,
    /// Iteration cap; `None` scales with problem size.
    pub max_iterations: Option<usize>,
}

impl LpSolver for ReferenceSolver {
    fn solve(&self, lp: &LinearProgram, warm_start: Option<&Basis>) -> Result<LpSolution, SolverError> {
        lp.validate()?;
        let sol = simplex::solve(lp, warm_start, self);
        if sol.is_optimal() && !self.certified(lp, &sol) {
            return Ok(LpSolution::failed(LpStatus::NumericalFailure, lp.num_vars(), lp.num_rows(), sol.iterations));
        }
        Ok(sol)
    }
}

impl ReferenceSolver {
    /// Strong duality and feasibility check, scaled by the data magnitude.
    fn certified(&self, lp: &LinearProgram, sol: &LpSolution) -> bool {
        let res = kkt_residuals(lp, sol);
        let scale = lp
            .rows
            .iter()
            .map(|r| r.rhs.abs())
            .chain(lp.vars.iter().flat_map(|v| [v.lower, v.upper]).filter(|b| b.is_finite()).map(f64::abs))
            .fold(1.0f64, f64::max);
        let dual_scale = lp
            .vars
            .iter()
            .map(|v| v.cost.abs())
            .chain(sol.duals.iter().map(|d| d.abs()))
            .fold(1.0f64, f64::max);
        res.primal_infeasibility <= self.tolerances.feasibility * scale
            && res.dual_infeasibility <= self.tolerances.feasibility * dual_scale
            && res.duality_gap <= self.tolerances.objective
    }
}

/// Solves `lp` with the reference solver and default tolerances.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution, SolverError> {
    ReferenceSolver::default().solve(lp, None)
}

/// Optimality-condition residuals of a solution.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KktResiduals {
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub complementarity: f64,
    pub duality_gap: f64,
}

/// Checks primal feasibility, dual sign feasibility, complementary slackness
/// and the primal/dual objective gap (relative) of `sol` against `lp`.
pub fn kkt_residuals(lp: &LinearProgram, sol: &LpSolution) -> KktResiduals {
    let mut res = KktResiduals::default();
    let act = lp.row_activity(&sol.primal);
    let mut dual_obj = lp.objective_offset;
    for (i, r) in lp.rows.iter().enumerate() {
        let y = sol.duals[i];
        let viol = match r.sense {
            RowSense::Le => (act[i] - r.rhs).max(0.0),
            RowSense::Ge => (r.rhs - act[i]).max(0.0),
            RowSense::Eq => (act[i] - r.rhs).abs(),
        };
        res.primal_infeasibility = res.primal_infeasibility.max(viol);
        let sign_viol = match r.sense {
            RowSense::Le => y.max(0.0),
            RowSense::Ge => (-y).max(0.0),
            RowSense::Eq => 0.0,
        };
        res.dual_infeasibility = res.dual_infeasibility.max(sign_viol);
        if r.sense != RowSense::Eq {
            res.complementarity = res.complementarity.max((y * (act[i] - r.rhs)).abs());
        }
        dual_obj += y * r.rhs;
    }
    // reduced costs d = c - A'y
    let mut d: Vec<f64> = lp.vars.iter().map(|v| v.cost).collect();
    for (i, r) in lp.rows.iter().enumerate() {
        for &(j, a) in &r.coefs {
            d[j] -= a * sol.duals[i];
        }
    }
    for (j, v) in lp.vars.iter().enumerate() {
        let x = sol.primal[j];
        res.primal_infeasibility = res
            .primal_infeasibility
            .max((v.lower - x).max(0.0))
            .max((x - v.upper).max(0.0));
        let dj = d[j];
        // attribute the reduced cost to the bound it presses against
        if dj > 0.0 {
            if v.lower.is_finite() {
                dual_obj += dj * v.lower;
                res.complementarity = res.complementarity.max((dj * (x - v.lower)).abs());
            } else {
                res.dual_infeasibility = res.dual_infeasibility.max(dj);
            }
        } else if dj < 0.0 {
            if v.upper.is_finite() {
                dual_obj += dj * v.upper;
                res.complementarity = res.complementarity.max((dj * (v.upper - x)).abs());
            } else {
                res.dual_infeasibility = res.dual_infeasibility.max(-dj);
            }
        }
    }
    let primal_obj = lp.objective_at(&sol.primal);
    res.duality_gap = (primal_obj - dual_obj).abs() / primal_obj.abs().max(1.0);
    res
}
