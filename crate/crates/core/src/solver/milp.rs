//! Best-bound branch and bound over the reference LP solver.

use super::{Basis, LinearProgram, LpSolution, LpSolver, LpStatus, ReferenceSolver, SolverError};

const INTEGRALITY_TOL: f64 = 1e-6;
const HEURISTIC_EVERY: usize = 8;

/// A MILP: `lp` plus the indices of variables that must take integer values.
#[derive(Debug, Clone)]
pub struct MilpRequest<'a> {
    pub lp: &'a LinearProgram,
    pub integers: &'a [usize],
    /// Stop once `(incumbent - bound) / max(|incumbent|, 1)` falls below this.
    pub relative_gap: f64,
    pub node_limit: usize,
    pub warm_start: Option<&'a Basis>,
}

impl<'a> MilpRequest<'a> {
    pub fn new(lp: &'a LinearProgram, integers: &'a [usize]) -> Self {
        Self {
            lp,
            integers,
            relative_gap: 1e-9,
            node_limit: 200_000,
            warm_start: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpOutcome {
    /// `Optimal` when the search closed the gap, `NodeLimit` when it ran out of
    /// nodes (an incumbent may still exist), `Infeasible` when no integer
    /// point exists.
    pub status: LpStatus,
    /// LP solution at the incumbent, with integer variables fixed.
    pub solution: Option<LpSolution>,
    pub best_bound: f64,
    pub gap: f64,
    pub nodes: usize,
}

impl MilpOutcome {
    pub fn objective(&self) -> Option<f64> {
        self.solution.as_ref().map(|s| s.objective)
    }
}

struct Node {
    id: usize,
    bound: f64,
    bounds: Vec<(usize, f64, f64)>,
    basis: Option<Basis>,
}

fn with_bounds(base: &LinearProgram, bounds: &[(usize, f64, f64)]) -> LinearProgram {
    let mut lp = base.clone();
    for &(j, lo, hi) in bounds {
        lp.vars[j].lower = lp.vars[j].lower.max(lo);
        lp.vars[j].upper = lp.vars[j].upper.min(hi);
    }
    lp
}

fn most_fractional(x: &[f64], integers: &[usize]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &j in integers {
        let f = x[j] - x[j].floor();
        let dist = f.min(1.0 - f);
        if dist <= INTEGRALITY_TOL {
            continue;
        }
        let take = match best {
            None => true,
            Some((bj, bd)) => dist > bd + 1e-12 || ((dist - bd).abs() <= 1e-12 && j < bj),
        };
        if take {
            best = Some((j, dist));
        }
    }
    best.map(|(j, _)| j)
}

/// Fixes every integer variable at the rounded value of `x` and solves the
/// remaining LP.
fn fixed_solve(
    solver: &dyn LpSolver,
    base: &LinearProgram,
    bounds: &[(usize, f64, f64)],
    integers: &[usize],
    x: &[f64],
    basis: Option<&Basis>,
) -> Result<Option<LpSolution>, SolverError> {
    let mut lp = with_bounds(base, bounds);
    for &j in integers {
        let v = x[j].round();
        if v < lp.vars[j].lower - INTEGRALITY_TOL || v > lp.vars[j].upper + INTEGRALITY_TOL {
            return Ok(None);
        }
        lp.vars[j].lower = v;
        lp.vars[j].upper = v;
    }
    let sol = solver.solve(&lp, basis)?;
    Ok(sol.is_optimal().then_some(sol))
}

/// Solves a MILP with the reference solver and default settings.
pub fn solve_milp(lp: &LinearProgram, integers: &[usize]) -> Result<MilpOutcome, SolverError> {
    solve_milp_with(&ReferenceSolver::default(), &MilpRequest::new(lp, integers))
}

pub fn solve_milp_with(solver: &dyn LpSolver, req: &MilpRequest<'_>) -> Result<MilpOutcome, SolverError> {
    let base = req.lp;
    base.validate()?;
    let mut incumbent: Option<LpSolution> = None;
    let mut open: Vec<Node> = vec![Node {
        id: 0,
        bound: f64::NEG_INFINITY,
        bounds: Vec::new(),
        basis: req.warm_start.cloned(),
    }];
    let mut next_id = 1;
    let mut nodes = 0;
    let mut global_bound = f64::NEG_INFINITY;

    let gap_of = |inc: f64, bound: f64| {
        if bound == f64::NEG_INFINITY {
            f64::INFINITY
        } else {
            ((inc - bound) / inc.abs().max(1.0)).max(0.0)
        }
    };

    while !open.is_empty() {
        // best bound first, oldest node on ties
        let pick = open
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.bound.total_cmp(&b.1.bound).then(a.1.id.cmp(&b.1.id)))
            .map(|(i, _)| i)
            .expect("open is nonempty");
        global_bound = open[pick].bound;
        if let Some(inc) = &incumbent {
            if gap_of(inc.objective, global_bound) <= req.relative_gap {
                break;
            }
        }
        if nodes >= req.node_limit {
            let inc_obj = incumbent.as_ref().map(|s| s.objective);
            return Ok(MilpOutcome {
                status: LpStatus::NodeLimit,
                gap: inc_obj.map_or(f64::INFINITY, |v| gap_of(v, global_bound)),
                solution: incumbent,
                best_bound: global_bound,
                nodes,
            });
        }
        let node = open.swap_remove(pick);
        nodes += 1;

        let lp = with_bounds(base, &node.bounds);
        let sol = solver.solve(&lp, node.basis.as_ref())?;
        match sol.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded if nodes == 1 => {
                return Ok(MilpOutcome {
                    status: LpStatus::Unbounded,
                    solution: None,
                    best_bound: f64::NEG_INFINITY,
                    gap: f64::INFINITY,
                    nodes,
                })
            }
            status => {
                return Ok(MilpOutcome {
                    status: if status == LpStatus::Unbounded { LpStatus::NumericalFailure } else { status },
                    solution: incumbent,
                    best_bound: global_bound,
                    gap: f64::INFINITY,
                    nodes,
                })
            }
        }
        if let Some(inc) = &incumbent {
            if sol.objective >= inc.objective - req.relative_gap * inc.objective.abs().max(1.0) {
                continue;
            }
        }
        match most_fractional(&sol.primal, req.integers) {
            None => {
                // integral: re-solve with integers pinned to clean up tiny drift
                let pinned = fixed_solve(solver, base, &node.bounds, req.integers, &sol.primal, sol.basis.as_ref())?;
                let cand = pinned.unwrap_or(sol);
                if incumbent.as_ref().is_none_or(|inc| cand.objective < inc.objective) {
                    incumbent = Some(cand);
                }
            }
            Some(j) => {
                if nodes == 1 || nodes % HEURISTIC_EVERY == 0 {
                    if let Some(h) =
                        fixed_solve(solver, base, &node.bounds, req.integers, &sol.primal, sol.basis.as_ref())?
                    {
                        if incumbent.as_ref().is_none_or(|inc| h.objective < inc.objective) {
                            incumbent = Some(h);
                        }
                    }
                }
                let v = sol.primal[j];
                let mut down = node.bounds.clone();
                down.push((j, f64::NEG_INFINITY, v.floor()));
                let mut up = node.bounds;
                up.push((j, v.ceil(), f64::INFINITY));
                for b in [down, up] {
                    open.push(Node {
                        id: next_id,
                        bound: sol.objective,
                        bounds: b,
                        basis: sol.basis.clone(),
                    });
                    next_id += 1;
                }
            }
        }
    }

    match incumbent {
        None => Ok(MilpOutcome {
            status: LpStatus::Infeasible,
            solution: None,
            best_bound: f64::INFINITY,
            gap: f64::INFINITY,
            nodes,
        }),
        Some(inc) => {
            let bound = if open.is_empty() { inc.objective } else { global_bound.min(inc.objective) };
            Ok(MilpOutcome {
                status: LpStatus::Optimal,
                gap: gap_of(inc.objective, bound),
                best_bound: bound,
                solution: Some(inc),
                nodes,
            })
        }
    }
}
