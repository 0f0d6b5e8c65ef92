//! Forward simulation, backward recursion and the SDDP driver.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::inflow::sample_noise;
use crate::investment::TrialPlan;
use crate::solver::LpSolver;

use super::stage::{build_stage_lp, solve_stage, OperationModel, Openings, StageOutcome};
use super::{FcfPool, ForwardRecord, Hyperplane, OperationError, StageRecord, StageState};

const TAG_OPENINGS: u64 = 0x6f70_656e;
const TAG_SIMULATION: u64 = 0x7369_6d75;

/// Deterministic seed for stream `index` of purpose `tag`.
pub fn derive_seed(seed: u64, tag: u64, index: u64) -> u64 {
    let mut z = seed ^ tag.rotate_left(17) ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    for _ in 0..2 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^= z >> 31;
    }
    z
}

#[derive(Debug, Clone, PartialEq)]
pub struct SddpConfig {
    /// Cap on backward passes.
    pub max_iterations: usize,
    /// Backward passes before the stopping test applies.
    pub min_iterations: usize,
    /// Normal quantile of the convergence confidence interval.
    pub z: f64,
    pub seed: u64,
}

impl Default for SddpConfig {
    fn default() -> Self {
        Self {
            max_iterations: 10,
            min_iterations: 1,
            z: 1.96,
            seed: 42,
        }
    }
}

/// Order-preserving map that runs on a fixed thread pool when one is configured.
pub struct WorkerPool {
    #[cfg(feature = "parallel")]
    pool: Option<rayon::ThreadPool>,
}

impl std::fmt::Debug for WorkerPool {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WorkerPool").field("workers", &self.workers()).finish()
    }
}

impl WorkerPool {
    /// A pool of `workers` threads; 0 or 1 runs on the calling thread.
    pub fn new(workers: usize) -> Result<Self, OperationError> {
        #[cfg(feature = "parallel")]
        {
            let pool = if workers > 1 {
                Some(
                    rayon::ThreadPoolBuilder::new()
                        .num_threads(workers)
                        .build()
                        .map_err(|e| OperationError::Workers(e.to_string()))?,
                )
            } else {
                None
            };
            Ok(Self { pool })
        }
        #[cfg(not(feature = "parallel"))]
        {
            let _ = workers;
            Ok(Self {})
        }
    }

    pub fn sequential() -> Self {
        Self {
            #[cfg(feature = "parallel")]
            pool: None,
        }
    }

    pub fn workers(&self) -> usize {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            return pool.current_num_threads();
        }
        1
    }

    pub fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            use rayon::prelude::*;
            return pool.install(|| items.par_iter().map(&f).collect());
        }
        items.iter().map(f).collect()
    }
}

/// Standardized inflow noise per transition, `noise[t - 1][opening][hydro]`
/// for the move from stage `t` to `t + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct OpeningTree {
    pub noise: Vec<Vec<Vec<f64>>>,
}

impl OpeningTree {
    pub fn new(model: &OperationModel<'_>, seed: u64) -> Result<Self, OperationError> {
        let case = model.case;
        let noise = (1..case.horizon.stages)
            .map(|t| sample_noise(&case.inflows, case.openings.max(1), derive_seed(seed, TAG_OPENINGS, t as u64)))
            .collect::<Result<_, _>>()?;
        Ok(Self { noise })
    }

    pub fn at(&self, t: usize) -> &[Vec<f64>] {
        self.noise.get(t - 1).map_or(&[], |v| v.as_slice())
    }

    pub fn openings(&self) -> usize {
        self.noise.first().map_or(0, Vec::len)
    }
}

/// Records of one forward pass with their cost statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardPass {
    pub records: Vec<ForwardRecord>,
    /// Mean stage-1 objective.
    pub lower: f64,
    /// Sample mean of the scenario operation costs.
    pub mean: f64,
    /// Sample standard deviation (n - 1) of the scenario operation costs.
    pub std_dev: f64,
    pub clamp_events: usize,
}

impl ForwardPass {
    pub fn costs(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.total_cost).collect()
    }
}

/// Plan sensitivity of a stage objective: its own terms plus the sensitivity
/// carried by the binding future-cost planes.
fn plan_sensitivity(
    model: &OperationModel<'_>,
    out: &StageOutcome,
    t: usize,
    planes: &[Hyperplane],
) -> Vec<f64> {
    let np = model.num_projects();
    let nt = model.case.horizon.stages;
    let mut sens = vec![0.0; nt * np];
    sens[(t - 1) * np..t * np].copy_from_slice(&out.stage_terms);
    for &(h, _, lambda) in &out.fcf_duals {
        if lambda != 0.0 {
            for (s, d) in sens.iter_mut().zip(&planes[h].plan_sensitivity) {
                *s += lambda * d;
            }
        }
    }
    sens
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

fn simulate_scenario(
    model: &OperationModel<'_>,
    solver: &dyn LpSolver,
    plan: &TrialPlan,
    pool: &FcfPool,
    tree: &OpeningTree,
    seed: u64,
    scenario: usize,
) -> Result<ForwardRecord, OperationError> {
    let case = model.case;
    let nt = case.horizon.stages;
    let class = model.class_of(scenario);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = StageState {
        stage: 1,
        scenario,
        storage: case.hydros.iter().map(|h| h.initial_storage).collect(),
        inflow: case.hydros.iter().map(|h| h.initial_inflow).collect(),
    };
    let mut stages = Vec::with_capacity(nt);
    let mut total_cost = 0.0;
    for t in 1..=nt {
        let openings = if t < nt {
            Openings::condition(case, t, &state.inflow, tree.at(t))?
        } else {
            Openings::none()
        };
        let planes = pool.planes(t + 1, class);
        let (lp, lay) = build_stage_lp(model, plan, &state, &openings, planes)?;
        let out = solve_stage(model, solver, &lp, &lay, None)?;
        let opening = (t < nt).then(|| rng.random_range(0..openings.inflows.len()));
        let plan_sensitivity = plan_sensitivity(model, &out, t, planes);
        total_cost += out.immediate_cost;
        let next = opening.map(|l| StageState {
            stage: t + 1,
            scenario,
            storage: out.dispatch.storage_next.clone(),
            inflow: openings.inflows[l].clone(),
        });
        stages.push(StageRecord {
            state: state.clone(),
            objective: out.objective,
            immediate_cost: out.immediate_cost,
            duals: out.duals,
            stage_terms: out.stage_terms,
            plan_sensitivity,
            dispatch: out.dispatch,
            opening,
            clamp_events: openings.clamp_events,
        });
        if let Some(next) = next {
            state = next;
        }
    }
    Ok(ForwardRecord {
        scenario,
        stages,
        total_cost,
    })
}

/// Simulates every scenario under the current pool. `pass_tag` selects the
/// opening sample path.
pub fn forward_pass(
    model: &OperationModel<'_>,
    solver: &dyn LpSolver,
    plan: &TrialPlan,
    pool: &FcfPool,
    tree: &OpeningTree,
    seed: u64,
    pass_tag: u64,
    workers: &WorkerPool,
) -> Result<ForwardPass, OperationError> {
    let scenarios: Vec<usize> = (0..model.case.scenarios.max(1)).collect();
    let records = workers
        .map(&scenarios, |&s| {
            let path_seed = derive_seed(derive_seed(seed, pass_tag, 0), pass_tag, s as u64 + 1);
            simulate_scenario(model, solver, plan, pool, tree, path_seed, s)
        })
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let costs: Vec<f64> = records.iter().map(|r| r.total_cost).collect();
    let (mean, std_dev) = mean_std(&costs);
    let lower = records.iter().map(|r| r.stages[0].objective).sum::<f64>() / records.len() as f64;
    let clamp_events = records.iter().flat_map(|r| &r.stages).map(|s| s.clamp_events).sum();
    Ok(ForwardPass {
        records,
        lower,
        mean,
        std_dev,
        clamp_events,
    })
}

fn state_key(model: &OperationModel<'_>, s: &StageState) -> Vec<u64> {
    let mut key: Vec<u64> = s.storage.iter().chain(&s.inflow).map(|v| v.to_bits()).collect();
    key.push(model.class_of(s.scenario) as u64);
    key
}

/// Adds one hyperplane per distinct visited state for stages `T` down to 2.
/// Returns the number of clamp events met while conditioning openings.
pub fn backward_pass(
    model: &OperationModel<'_>,
    solver: &dyn LpSolver,
    plan: &TrialPlan,
    records: &[ForwardRecord],
    pool: &mut FcfPool,
    tree: &OpeningTree,
    workers: &WorkerPool,
) -> Result<usize, OperationError> {
    let case = model.case;
    let nt = case.horizon.stages;
    let mut clamps = 0;
    for t in (2..=nt).rev() {
        let mut seen = HashSet::new();
        let states: Vec<&StageState> = records
            .iter()
            .filter_map(|r| r.stages.get(t - 1).map(|s| &s.state))
            .filter(|s| seen.insert(state_key(model, s)))
            .collect();
        let snapshot: &FcfPool = pool;
        let planes = workers
            .map(&states, |state| {
                let class = model.class_of(state.scenario);
                let openings = if t < nt {
                    Openings::condition(case, t, &state.inflow, tree.at(t))?
                } else {
                    Openings::none()
                };
                let next = snapshot.planes(t + 1, class);
                let (lp, lay) = build_stage_lp(model, plan, state, &openings, next)?;
                let out = solve_stage(model, solver, &lp, &lay, None)?;
                let plane = hyperplane(model, t, state, &openings, &out, next);
                Ok::<_, OperationError>((class, plane, openings.clamp_events))
            })
            .into_iter()
            .collect::<Result<Vec<_>, _>>()?;
        for (class, plane, c) in planes {
            clamps += c;
            pool.push(class, plane);
        }
    }
    Ok(clamps)
}

/// Hyperplane through the stage objective at `state`.
fn hyperplane(
    model: &OperationModel<'_>,
    t: usize,
    state: &StageState,
    openings: &Openings,
    out: &StageOutcome,
    next: &[Hyperplane],
) -> Hyperplane {
    let storage = out.duals.storage_balance.clone();
    let inflow: Vec<f64> = (0..storage.len())
        .map(|i| {
            storage[i]
                + (0..openings.slopes.len())
                    .map(|l| openings.slopes[l][i] * out.duals.inflow[l][i])
                    .sum::<f64>()
        })
        .collect();
    let at_state = storage.iter().zip(&state.storage).map(|(a, b)| a * b).sum::<f64>()
        + inflow.iter().zip(&state.inflow).map(|(a, b)| a * b).sum::<f64>();
    Hyperplane {
        stage: t,
        constant: out.objective - at_state,
        plan_sensitivity: plan_sensitivity(model, out, t, next),
        storage,
        inflow,
    }
}

/// Statistical stopping test: the lower bound lies above the lower end of
/// the forward cost confidence interval.
pub fn sddp_converged(lower: f64, costs: &[f64], z: f64) -> bool {
    if costs.is_empty() {
        return false;
    }
    let (mean, std_dev) = mean_std(costs);
    let stderr = std_dev / (costs.len() as f64).sqrt();
    lower >= mean - z * stderr - 1e-9 * mean.abs().max(1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SddpResult {
    pub pool: FcfPool,
    /// Backward passes performed.
    pub iterations: usize,
    /// Whether the statistical test passed, as opposed to hitting the cap.
    pub converged: bool,
    /// Lower bound at each training forward pass.
    pub lower_bounds: Vec<f64>,
    /// Forward cost mean at each training forward pass.
    pub forward_means: Vec<f64>,
    /// Final simulation under the trained pool.
    pub simulation: ForwardPass,
    pub clamp_events: usize,
}

impl SddpResult {
    pub fn lower(&self) -> f64 {
        self.simulation.lower
    }
}

/// Trains the future-cost pool for `plan` and simulates the final policy.
pub fn run_sddp(
    model: &OperationModel<'_>,
    solver: &dyn LpSolver,
    plan: &TrialPlan,
    cfg: &SddpConfig,
    workers: &WorkerPool,
) -> Result<SddpResult, OperationError> {
    let tree = OpeningTree::new(model, cfg.seed)?;
    let mut pool = FcfPool::new(model.case.horizon.stages, model.num_classes());
    let mut lower_bounds = Vec::new();
    let mut forward_means = Vec::new();
    let mut clamp_events = 0;
    let mut converged = false;
    let mut iterations = 0;
    for k in 1..=cfg.max_iterations.max(1) {
        let fwd = forward_pass(model, solver, plan, &pool, &tree, cfg.seed, k as u64, workers)?;
        lower_bounds.push(fwd.lower);
        forward_means.push(fwd.mean);
        clamp_events += fwd.clamp_events;
        if model.case.horizon.stages == 1 {
            converged = true;
            break;
        }
        if k > cfg.min_iterations && sddp_converged(fwd.lower, &fwd.costs(), cfg.z) {
            converged = true;
            break;
        }
        clamp_events += backward_pass(model, solver, plan, &fwd.records, &mut pool, &tree, workers)?;
        iterations = k;
    }
    let simulation = forward_pass(model, solver, plan, &pool, &tree, cfg.seed, TAG_SIMULATION, workers)?;
    if !converged {
        converged = sddp_converged(simulation.lower, &simulation.costs(), cfg.z);
    }
    clamp_events += simulation.clamp_events;
    Ok(SddpResult {
        pool,
        iterations,
        converged,
        lower_bounds,
        forward_means,
        simulation,
        clamp_events,
    })
}
