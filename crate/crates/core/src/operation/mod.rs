//! Stochastic hydrothermal operation under a fixed trial plan, solved by SDDP.

mod sddp;
mod stage;

pub use sddp::{
    backward_pass, forward_pass, run_sddp, sddp_converged, ForwardPass, OpeningTree, SddpConfig, SddpResult, WorkerPool,
};
pub use stage::{build_stage_lp, solve_stage, OperationModel, Openings, StageLayout, StageOutcome};

use thiserror::Error;

use crate::inflow::InflowError;
use crate::solver::{LpStatus, SolverError};

#[derive(Debug, Error)]
pub enum OperationError {
    #[error("stage {stage}, scenario {scenario}: stage LP ended with status {status:?}")]
    StageFailed { stage: usize, scenario: usize, status: LpStatus },
    #[error("stage {0} needs inflow openings")]
    MissingOpenings(usize),
    #[error(transparent)]
    Inflow(#[from] InflowError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("worker pool: {0}")]
    Workers(String),
}

/// State at the start of a stage.
#[derive(Debug, Clone, PartialEq)]
pub struct StageState {
    pub stage: usize,
    /// Forward scenario the state belongs to; selects the renewable profile.
    pub scenario: usize,
    pub storage: Vec<f64>,
    /// Inflow arriving during this stage.
    pub inflow: Vec<f64>,
}

/// Cost-to-go underestimator `constant + storage . v + inflow . a` from the
/// start of `stage`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperplane {
    pub stage: usize,
    pub storage: Vec<f64>,
    pub inflow: Vec<f64>,
    pub constant: f64,
    /// Derivative of the plane's value with respect to the trial plan,
    /// row-major `[stage - 1][project]`.
    pub plan_sensitivity: Vec<f64>,
}

impl Hyperplane {
    pub fn evaluate(&self, storage: &[f64], inflow: &[f64]) -> f64 {
        self.constant
            + self.storage.iter().zip(storage).map(|(a, b)| a * b).sum::<f64>()
            + self.inflow.iter().zip(inflow).map(|(a, b)| a * b).sum::<f64>()
    }
}

/// Future cost hyperplanes per stage and renewable profile class.
///
/// Stage `t` planes approximate the cost from the start of stage `t`. The
/// pool for the stage after `T` stays empty. When renewable profiles differ
/// across scenarios, each profile keeps its own planes.
#[derive(Debug, Clone, PartialEq)]
pub struct FcfPool {
    classes: usize,
    planes: Vec<Vec<Vec<Hyperplane>>>,
}

impl FcfPool {
    pub fn new(stages: usize, classes: usize) -> Self {
        let classes = classes.max(1);
        Self {
            classes,
            planes: vec![vec![Vec::new(); classes]; stages + 2],
        }
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    /// Planes approximating the cost-to-go from the start of stage `t`.
    pub fn planes(&self, t: usize, class: usize) -> &[Hyperplane] {
        self.planes.get(t).and_then(|c| c.get(class)).map_or(&[], |v| v.as_slice())
    }

    pub fn push(&mut self, class: usize, plane: Hyperplane) {
        let t = plane.stage;
        self.planes[t][class].push(plane);
    }

    pub fn len(&self) -> usize {
        self.planes.iter().flatten().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Pointwise maximum of the stage-`t` planes, or 0 with none.
    pub fn value(&self, t: usize, class: usize, storage: &[f64], inflow: &[f64]) -> f64 {
        self.planes(t, class)
            .iter()
            .map(|p| p.evaluate(storage, inflow))
            .fold(0.0, f64::max)
    }
}

/// Stage LP duals under the minimize convention (`d objective / d rhs`).
#[derive(Debug, Clone, PartialEq)]
pub struct StageDuals {
    /// Storage balance, per hydro.
    pub storage_balance: Vec<f64>,
    /// Inflow identity rows, `[opening][hydro]`.
    pub inflow: Vec<Vec<f64>>,
    /// Candidate hydro storage cap.
    pub storage_cap: Vec<Option<f64>>,
    /// Candidate hydro turbining cap.
    pub turbining_cap: Vec<Option<f64>>,
    /// Candidate thermal cap per block.
    pub thermal_cap: Vec<Option<Vec<f64>>>,
    /// Bus balance, `[bus][block]`.
    pub bus_balance: Vec<Vec<f64>>,
    /// Candidate disjunctive Kirchhoff rows `(upper, lower)` per block.
    pub kvl_pair: Vec<Option<Vec<(f64, f64)>>>,
    /// Candidate flow limit rows `(upper, lower)` per block.
    pub flow_pair: Vec<Option<Vec<(f64, f64)>>>,
}

/// Physical operation of one stage; block quantities are `[device][block]` in MW.
#[derive(Debug, Clone, PartialEq)]
pub struct Dispatch {
    pub storage_next: Vec<f64>,
    pub turbining: Vec<f64>,
    pub spill: Vec<f64>,
    pub hydro_mw: Vec<Vec<f64>>,
    pub thermal_mw: Vec<Vec<f64>>,
    pub renewable_mw: Vec<Vec<f64>>,
    pub deficit_mw: Vec<Vec<f64>>,
    pub surplus_mw: Vec<Vec<f64>>,
    pub flow_mw: Vec<Vec<f64>>,
    pub angle: Vec<Vec<f64>>,
    pub load_mw: Vec<Vec<f64>>,
    /// Undiscounted bus marginal cost, $/MWh.
    pub marginal_cost: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageRecord {
    pub state: StageState,
    pub objective: f64,
    pub immediate_cost: f64,
    pub duals: StageDuals,
    pub stage_terms: Vec<f64>,
    /// Plan sensitivity of `objective`, including the future-cost planes.
    pub plan_sensitivity: Vec<f64>,
    pub dispatch: Dispatch,
    /// Opening sampled to reach the next stage.
    pub opening: Option<usize>,
    pub clamp_events: usize,
}

/// One simulated scenario path.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardRecord {
    pub scenario: usize,
    pub stages: Vec<StageRecord>,
    pub total_cost: f64,
}

/// How investment cut coefficients are read from the operation solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CutDualSource {
    /// Stage-1 sensitivities that carry later-stage terms through the
    /// future-cost planes.
    #[default]
    Propagated,
    /// Each stage's own forward-pass duals.
    StageLocal,
}

#[cfg(test)]
mod tests;
