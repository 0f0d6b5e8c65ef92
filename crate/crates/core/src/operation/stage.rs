//! Stage LP assembly and solution extraction.

use crate::inflow::{condition_next, conditioning_slope};
use crate::investment::TrialPlan;
use crate::model::{CaseIndex, PlanningCase, Status};
use crate::network::{add_block_network, BlockNetworkRows, BlockNetworkVars, NetworkTopology};
use crate::solver::{Basis, LinearProgram, LpSolution, LpSolver, RowSense};

use super::{Dispatch, Hyperplane, OperationError, StageDuals, StageState};

/// Case data shared by every stage LP of a run.
#[derive(Debug, Clone)]
pub struct OperationModel<'a> {
    pub case: &'a PlanningCase,
    pub index: CaseIndex,
    pub topo: NetworkTopology,
    /// Whether renewable production differs across scenarios.
    pub profiles_vary: bool,
}

impl<'a> OperationModel<'a> {
    pub fn new(case: &'a PlanningCase) -> Self {
        let profiles_vary = case
            .renewables
            .iter()
            .any(|r| r.production.iter().flatten().any(|b| b.iter().any(|&v| v != b[0])));
        Self {
            case,
            index: CaseIndex::new(case),
            topo: NetworkTopology::new(case),
            profiles_vary,
        }
    }

    pub fn num_projects(&self) -> usize {
        self.case.candidates.len()
    }

    /// Number of future-cost pools: one per renewable profile when profiles
    /// differ, otherwise one.
    pub fn num_classes(&self) -> usize {
        if self.profiles_vary {
            self.case.scenarios.max(1)
        } else {
            1
        }
    }

    pub fn class_of(&self, scenario: usize) -> usize {
        if self.profiles_vary {
            scenario % self.case.scenarios.max(1)
        } else {
            0
        }
    }

    fn availability(plan: &TrialPlan, t: usize, owner: Option<usize>) -> f64 {
        owner.map_or(1.0, |p| plan.get(t, p))
    }
}

/// Conditioned next-stage inflows for each opening plus their slopes.
#[derive(Debug, Clone, PartialEq)]
pub struct Openings {
    /// `[opening][hydro]`.
    pub inflows: Vec<Vec<f64>>,
    /// `d a^l / d a_t`, zero where the clamp was active.
    pub slopes: Vec<Vec<f64>>,
    pub clamp_events: usize,
}

impl Openings {
    pub fn none() -> Self {
        Self {
            inflows: Vec::new(),
            slopes: Vec::new(),
            clamp_events: 0,
        }
    }

    pub fn condition(
        case: &PlanningCase,
        t: usize,
        current: &[f64],
        noise: &[Vec<f64>],
    ) -> Result<Self, OperationError> {
        let mut out = Self::none();
        for xi in noise {
            let c = condition_next(&case.inflows, t, current, xi)?;
            out.clamp_events += c.clamp_count();
            out.slopes.push(
                (0..current.len())
                    .map(|i| if c.clamped[i] { 0.0 } else { conditioning_slope(&case.inflows, t, i) })
                    .collect(),
            );
            out.inflows.push(c.inflows);
        }
        Ok(out)
    }
}

/// Variable and row positions of one stage LP.
#[derive(Debug, Clone, Default)]
pub struct StageLayout {
    pub stage: usize,
    pub scenario: usize,
    pub discount: f64,
    pub block_hours: Vec<f64>,
    pub storage: Vec<usize>,
    pub turbining: Vec<usize>,
    pub spill: Vec<usize>,
    /// `[hydro][block]`.
    pub energy: Vec<Vec<usize>>,
    /// `[thermal][block]`.
    pub thermal: Vec<Vec<usize>>,
    /// `[bus][block]`.
    pub deficit: Vec<Vec<usize>>,
    pub surplus: Vec<Vec<usize>>,
    pub network: Vec<(BlockNetworkVars, BlockNetworkRows)>,
    /// `[opening][hydro]`.
    pub inflow_next: Vec<Vec<usize>>,
    pub alpha: Vec<usize>,
    pub balance_rows: Vec<usize>,
    pub production_rows: Vec<usize>,
    pub storage_cap_rows: Vec<Option<usize>>,
    pub turbining_cap_rows: Vec<Option<usize>>,
    /// `[thermal]` -> per block row.
    pub thermal_cap_rows: Vec<Option<Vec<usize>>>,
    pub inflow_rows: Vec<Vec<usize>>,
    /// `(plane, opening, row)`.
    pub fcf_rows: Vec<(usize, usize, usize)>,
    /// Renewable MW injected, `[renewable][block]`.
    pub renewable_mw: Vec<Vec<f64>>,
    /// `[bus][block]`.
    pub load_mw: Vec<Vec<f64>>,
}

/// Builds the stage-`t` LP at `state`.
///
/// `openings` must be non-empty for `t < T`; `planes` approximate the cost-to-go
/// from stage `t + 1`.
pub fn build_stage_lp(
    model: &OperationModel<'_>,
    plan: &TrialPlan,
    state: &StageState,
    openings: &Openings,
    planes: &[Hyperplane],
) -> Result<(LinearProgram, StageLayout), OperationError> {
    let case = model.case;
    let t = state.stage;
    let nt = case.horizon.stages;
    let nb = case.horizon.num_blocks();
    let nbus = case.buses.len();
    let s = state.scenario % case.scenarios;
    if t < nt && openings.inflows.is_empty() {
        return Err(OperationError::MissingOpenings(t));
    }
    let delta = case.horizon.discount(t);
    let hours: Vec<f64> = (0..nb).map(|b| case.horizon.block_hours(b)).collect();
    let mut lp = LinearProgram::new();
    let mut lay = StageLayout {
        stage: t,
        scenario: state.scenario,
        discount: delta,
        block_hours: hours.clone(),
        ..Default::default()
    };
    let idx = &model.index;

    for h in &case.hydros {
        let candidate = h.status == Status::Candidate;
        let (vmax, umax) = if candidate { (f64::INFINITY, f64::INFINITY) } else { (h.max_storage, h.max_turbining) };
        lay.storage.push(lp.add_var(format!("v[{}]", h.id), 0.0, vmax, 0.0));
        lay.turbining.push(lp.add_var(format!("u[{}]", h.id), 0.0, umax, 0.0));
        lay.spill.push(lp.add_var(format!("s[{}]", h.id), 0.0, f64::INFINITY, 0.0));
        lay.energy.push(
            (0..nb)
                .map(|b| lp.add_var(format!("e[{}][{b}]", h.id), 0.0, h.max_block_power, 0.0))
                .collect(),
        );
    }
    for th in &case.thermals {
        let cap = if th.status == Status::Candidate { f64::INFINITY } else { th.capacity };
        lay.thermal.push(
            (0..nb)
                .map(|b| lp.add_var(format!("g[{}][{b}]", th.id), 0.0, cap, th.variable_cost * hours[b] * delta))
                .collect(),
        );
    }
    for bus in &case.buses {
        lay.deficit.push(
            (0..nb)
                .map(|b| lp.add_var(format!("def[{}][{b}]", bus.id), 0.0, f64::INFINITY, case.deficit_cost * hours[b] * delta))
                .collect(),
        );
        lay.surplus.push(
            (0..nb)
                .map(|b| lp.add_var(format!("sur[{}][{b}]", bus.id), 0.0, f64::INFINITY, 0.0))
                .collect(),
        );
    }

    // storage balance, production, candidate caps
    for (i, h) in case.hydros.iter().enumerate() {
        let mut coefs = vec![(lay.storage[i], 1.0), (lay.turbining[i], 1.0), (lay.spill[i], 1.0)];
        for &up in &idx.upstream[i] {
            coefs.push((lay.turbining[up], -1.0));
            coefs.push((lay.spill[up], -1.0));
        }
        lay.balance_rows.push(lp.add_row(
            format!("wb[{}]", h.id),
            coefs,
            RowSense::Eq,
            state.storage[i] + state.inflow[i],
        ));
        let mut coefs: Vec<(usize, f64)> = (0..nb).map(|b| (lay.energy[i][b], hours[b])).collect();
        coefs.push((lay.turbining[i], -h.production_coefficient));
        lay.production_rows.push(lp.add_row(format!("prod[{}]", h.id), coefs, RowSense::Eq, 0.0));
        if h.status == Status::Candidate {
            let x = OperationModel::availability(plan, t, idx.hydro_project[i]);
            lay.storage_cap_rows.push(Some(lp.add_row(
                format!("vcap[{}]", h.id),
                vec![(lay.storage[i], 1.0)],
                RowSense::Le,
                h.max_storage * x,
            )));
            lay.turbining_cap_rows.push(Some(lp.add_row(
                format!("ucap[{}]", h.id),
                vec![(lay.turbining[i], 1.0)],
                RowSense::Le,
                h.max_turbining * x,
            )));
        } else {
            lay.storage_cap_rows.push(None);
            lay.turbining_cap_rows.push(None);
        }
    }
    for (j, th) in case.thermals.iter().enumerate() {
        if th.status == Status::Candidate {
            let x = OperationModel::availability(plan, t, idx.thermal_project[j]);
            lay.thermal_cap_rows.push(Some(
                (0..nb)
                    .map(|b| {
                        lp.add_row(
                            format!("gcap[{}][{b}]", th.id),
                            vec![(lay.thermal[j][b], 1.0)],
                            RowSense::Le,
                            th.capacity * x,
                        )
                    })
                    .collect(),
            ));
        } else {
            lay.thermal_cap_rows.push(None);
        }
    }

    // network
    lay.renewable_mw = case
        .renewables
        .iter()
        .enumerate()
        .map(|(r, rp)| {
            let x = OperationModel::availability(plan, t, idx.renewable_project[r]);
            (0..nb).map(|b| rp.production[t - 1][b][s] * x).collect()
        })
        .collect();
    lay.load_mw = (0..nbus).map(|n| (0..nb).map(|b| case.loads[t - 1][b][n]).collect()).collect();
    let built: Vec<f64> = (0..case.circuits.len())
        .map(|k| OperationModel::availability(plan, t, idx.circuit_project[k]))
        .collect();
    for b in 0..nb {
        let mut inj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nbus];
        let mut net = vec![0.0; nbus];
        for (n, row) in net.iter_mut().enumerate() {
            *row = lay.load_mw[n][b];
            inj[n].push((lay.deficit[n][b], 1.0));
            inj[n].push((lay.surplus[n][b], -1.0));
        }
        for (i, h) in case.hydros.iter().enumerate() {
            inj[idx.bus[&h.bus]].push((lay.energy[i][b], 1.0));
        }
        for (j, th) in case.thermals.iter().enumerate() {
            inj[idx.bus[&th.bus]].push((lay.thermal[j][b], 1.0));
        }
        for (r, rp) in case.renewables.iter().enumerate() {
            net[idx.bus[&rp.bus]] -= lay.renewable_mw[r][b];
        }
        let blk = add_block_network(&mut lp, &model.topo, &b.to_string(), &inj, &net, &built);
        lay.network.push(blk);
    }

    // openings and future cost
    if t < nt {
        let nl = openings.inflows.len();
        for l in 0..nl {
            let vars: Vec<usize> = (0..case.hydros.len())
                .map(|i| lp.add_var(format!("a[{l}][{i}]"), f64::NEG_INFINITY, f64::INFINITY, 0.0))
                .collect();
            lay.inflow_rows.push(
                vars.iter()
                    .enumerate()
                    .map(|(i, &v)| lp.add_row(format!("ar1[{l}][{i}]"), vec![(v, 1.0)], RowSense::Eq, openings.inflows[l][i]))
                    .collect(),
            );
            lay.inflow_next.push(vars);
            lay.alpha.push(lp.add_var(format!("alpha[{l}]"), 0.0, f64::INFINITY, 1.0 / nl as f64));
        }
        for (h, plane) in planes.iter().enumerate() {
            for l in 0..nl {
                let mut coefs = vec![(lay.alpha[l], 1.0)];
                for i in 0..case.hydros.len() {
                    if plane.storage[i] != 0.0 {
                        coefs.push((lay.storage[i], -plane.storage[i]));
                    }
                    if plane.inflow[i] != 0.0 {
                        coefs.push((lay.inflow_next[l][i], -plane.inflow[i]));
                    }
                }
                let row = lp.add_row(format!("fcf[{h}][{l}]"), coefs, RowSense::Ge, plane.constant);
                lay.fcf_rows.push((h, l, row));
            }
        }
    }
    Ok((lp, lay))
}

/// Everything extracted from one optimal stage LP.
#[derive(Debug, Clone, PartialEq)]
pub struct StageOutcome {
    pub objective: f64,
    pub immediate_cost: f64,
    pub duals: StageDuals,
    /// Objective sensitivity to this stage's availability of each project.
    pub stage_terms: Vec<f64>,
    /// Duals of the future-cost rows, `(plane, opening, dual)`.
    pub fcf_duals: Vec<(usize, usize, f64)>,
    pub dispatch: Dispatch,
    pub basis: Option<Basis>,
}

pub fn solve_stage(
    model: &OperationModel<'_>,
    solver: &dyn LpSolver,
    lp: &LinearProgram,
    lay: &StageLayout,
    warm: Option<&Basis>,
) -> Result<StageOutcome, OperationError> {
    let sol = solver.solve(lp, warm)?;
    if !sol.is_optimal() {
        return Err(OperationError::StageFailed {
            stage: lay.stage,
            scenario: lay.scenario,
            status: sol.status,
        });
    }
    Ok(extract(model, lay, sol))
}

fn extract(model: &OperationModel<'_>, lay: &StageLayout, sol: LpSolution) -> StageOutcome {
    let case = model.case;
    let nb = lay.block_hours.len();
    let y = &sol.duals;
    let x = &sol.primal;
    let alpha_cost: f64 = lay.alpha.iter().map(|&a| x[a]).sum::<f64>() / lay.alpha.len().max(1) as f64;
    let objective = sol.objective;
    let immediate_cost = (objective - alpha_cost).max(0.0);

    let duals = StageDuals {
        storage_balance: lay.balance_rows.iter().map(|&r| y[r]).collect(),
        inflow: lay.inflow_rows.iter().map(|rs| rs.iter().map(|&r| y[r]).collect()).collect(),
        storage_cap: lay.storage_cap_rows.iter().map(|r| r.map(|r| y[r])).collect(),
        turbining_cap: lay.turbining_cap_rows.iter().map(|r| r.map(|r| y[r])).collect(),
        thermal_cap: lay
            .thermal_cap_rows
            .iter()
            .map(|r| r.as_ref().map(|rs| rs.iter().map(|&r| y[r]).collect()))
            .collect(),
        bus_balance: (0..case.buses.len())
            .map(|n| (0..nb).map(|b| y[lay.network[b].1.balance[n]]).collect())
            .collect(),
        kvl_pair: (0..case.circuits.len())
            .map(|k| {
                lay.network[0].1.disjunctive[k]
                    .map(|_| (0..nb).map(|b| lay.network[b].1.disjunctive[k].map_or((0.0, 0.0), |(u, d)| (y[u], y[d]))).collect())
            })
            .collect(),
        flow_pair: (0..case.circuits.len())
            .map(|k| {
                lay.network[0].1.flow_limit[k]
                    .map(|_| (0..nb).map(|b| lay.network[b].1.flow_limit[k].map_or((0.0, 0.0), |(u, d)| (y[u], y[d]))).collect())
            })
            .collect(),
    };

    let idx = &model.index;
    let mut stage_terms = vec![0.0; model.num_projects()];
    for (i, h) in case.hydros.iter().enumerate() {
        if let Some(p) = idx.hydro_project[i] {
            stage_terms[p] += h.max_storage * duals.storage_cap[i].unwrap_or(0.0)
                + h.max_turbining * duals.turbining_cap[i].unwrap_or(0.0);
        }
    }
    for (j, th) in case.thermals.iter().enumerate() {
        if let (Some(p), Some(pi)) = (idx.thermal_project[j], &duals.thermal_cap[j]) {
            stage_terms[p] += pi.iter().map(|v| th.capacity * v).sum::<f64>();
        }
    }
    let s = lay.scenario % case.scenarios;
    for (r, rp) in case.renewables.iter().enumerate() {
        if let Some(p) = idx.renewable_project[r] {
            let n = idx.bus[&rp.bus];
            stage_terms[p] -= (0..nb)
                .map(|b| rp.production[lay.stage - 1][b][s] * duals.bus_balance[n][b])
                .sum::<f64>();
        }
    }
    for k in 0..case.circuits.len() {
        if let (Some(p), Some(kvl), Some(flow)) = (idx.circuit_project[k], &duals.kvl_pair[k], &duals.flow_pair[k]) {
            let m = model.topo.big_m[k].map_or(0.0, |b| b.value);
            let f = model.topo.rating[k];
            stage_terms[p] += (0..nb)
                .map(|b| -m * (kvl[b].0 + kvl[b].1) + f * (flow[b].0 + flow[b].1))
                .sum::<f64>();
        }
    }

    let fcf_duals = lay.fcf_rows.iter().map(|&(h, l, r)| (h, l, y[r])).collect();
    let dispatch = Dispatch {
        storage_next: lay.storage.iter().map(|&v| x[v]).collect(),
        turbining: lay.turbining.iter().map(|&v| x[v]).collect(),
        spill: lay.spill.iter().map(|&v| x[v]).collect(),
        hydro_mw: lay.energy.iter().map(|vs| vs.iter().map(|&v| x[v]).collect()).collect(),
        thermal_mw: lay.thermal.iter().map(|vs| vs.iter().map(|&v| x[v]).collect()).collect(),
        renewable_mw: lay.renewable_mw.clone(),
        deficit_mw: lay.deficit.iter().map(|vs| vs.iter().map(|&v| x[v]).collect()).collect(),
        surplus_mw: lay.surplus.iter().map(|vs| vs.iter().map(|&v| x[v]).collect()).collect(),
        flow_mw: (0..case.circuits.len())
            .map(|k| (0..nb).map(|b| x[lay.network[b].0.flow[k]]).collect())
            .collect(),
        angle: (0..case.buses.len())
            .map(|n| (0..nb).map(|b| x[lay.network[b].0.angle[n]]).collect())
            .collect(),
        load_mw: lay.load_mw.clone(),
        marginal_cost: duals
            .bus_balance
            .iter()
            .map(|row| row.iter().enumerate().map(|(b, pi)| pi / (lay.block_hours[b] * lay.discount)).collect())
            .collect(),
    };
    StageOutcome {
        objective,
        immediate_cost,
        duals,
        stage_terms,
        fcf_duals,
        dispatch,
        basis: sol.basis,
    }
}
