//! Independent oracles shared by the integration tests.
//!
//! Operation problems are assembled here from the case data alone and solved
//! with `microlp`, a solver unrelated to the crate's simplex.

#![allow(dead_code)]

use std::collections::HashMap;

use gtep::fixtures::{bus, circuit, flat_load, horizon, project, thermal};
use gtep::inflow::InflowModel;
use gtep::investment::TrialPlan;
use gtep::model::{PlanningCase, ProjectKind, Status};
use gtep::network::calibrate_big_m;
use microlp::{ComparisonOp, OptimizationDirection, Problem, Variable};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// How candidate circuits enter the oracle network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Net {
    /// Big-M relaxed Kirchhoff rows with availability `x`, as in the model.
    Disjunctive,
    /// Built candidates become ordinary lines, unbuilt ones are dropped.
    /// Requires a binary plan.
    Merged,
}

/// Root of a scenario tree.
#[derive(Debug, Clone)]
pub struct Root<'a> {
    pub stage: usize,
    pub storage: Vec<f64>,
    pub inflow: Vec<f64>,
    /// `noise[t - 1]` lists the openings of the move from `t` to `t + 1`.
    pub noise: &'a [Vec<Vec<f64>>],
    pub scenario: usize,
}

impl<'a> Root<'a> {
    /// Stage 1 at the case's initial conditions.
    pub fn initial(case: &PlanningCase, noise: &'a [Vec<Vec<f64>>]) -> Self {
        Self {
            stage: 1,
            storage: case.hydros.iter().map(|h| h.initial_storage).collect(),
            inflow: case.hydros.iter().map(|h| h.initial_inflow).collect(),
            noise,
            scenario: 0,
        }
    }
}

/// Zero noise for every transition of a deterministic case.
pub fn zero_noise(case: &PlanningCase) -> Vec<Vec<Vec<f64>>> {
    (1..case.horizon.stages).map(|_| vec![vec![0.0; case.hydros.len()]]).collect()
}

/// Conditioned inflow of stage `t + 1`, written directly from the AR(1) recursion.
pub fn ar1_next(m: &InflowModel, t: usize, a: &[f64], xi: &[f64]) -> Vec<f64> {
    let p = (t - 1) % m.periods;
    let q = t % m.periods;
    (0..a.len())
        .map(|i| {
            let z = if m.std_dev[i][p] > 0.0 { (a[i] - m.mean[i][p]) / m.std_dev[i][p] } else { 0.0 };
            let rho = m.rho[i][p];
            let v = m.mean[i][q] + m.std_dev[i][q] * (rho * z + (1.0 - rho * rho).sqrt() * xi[i]);
            v.max(0.0)
        })
        .collect()
}

/// Availability at stage `t` of the device `id` of kind `kind`.
pub fn availability(case: &PlanningCase, plan: &TrialPlan, t: usize, kind: ProjectKind, id: &str) -> f64 {
    case.candidates
        .iter()
        .position(|c| c.kind == kind && c.target == id)
        .map_or(1.0, |p| plan.get(t, p))
}

struct Ctx<'c> {
    case: &'c PlanningCase,
    plan: &'c TrialPlan,
    net: Net,
    pos: HashMap<u32, usize>,
    hydro_pos: HashMap<&'c str, usize>,
    big_m: Vec<f64>,
}

fn add_node(
    lp: &mut Problem,
    ctx: &Ctx<'_>,
    root: &Root<'_>,
    t: usize,
    weight: f64,
    prev: &[Option<Variable>],
    prev_const: &[f64],
    inflow: &[f64],
) {
    let case = ctx.case;
    let h = &case.horizon;
    let delta = (1.0 + h.discount_rate).powi(-(t as i32 - 1));
    let nb = h.blocks.len();
    let nbus = case.buses.len();
    let plan = ctx.plan;
    let le = ComparisonOp::Le;
    let eq = ComparisonOp::Eq;

    let mut v_next = Vec::new();
    let mut turb = Vec::new();
    let mut spill = Vec::new();
    let mut energy = Vec::new();
    for hp in &case.hydros {
        let x = availability(case, plan, t, ProjectKind::Hydro, &hp.id);
        let (vmax, umax) = if hp.status == Status::Candidate {
            (hp.max_storage * x, hp.max_turbining * x)
        } else {
            (hp.max_storage, hp.max_turbining)
        };
        v_next.push(lp.add_var(0.0, (0.0, vmax)));
        turb.push(lp.add_var(0.0, (0.0, umax)));
        spill.push(lp.add_var(0.0, (0.0, f64::INFINITY)));
        let e: Vec<Variable> = (0..nb).map(|_| lp.add_var(0.0, (0.0, hp.max_block_power))).collect();
        energy.push(e);
    }
    for (i, hp) in case.hydros.iter().enumerate() {
        let mut terms = vec![(v_next[i], 1.0), (turb[i], 1.0), (spill[i], 1.0)];
        for up in &hp.upstream {
            let j = ctx.hydro_pos[up.as_str()];
            terms.push((turb[j], -1.0));
            terms.push((spill[j], -1.0));
        }
        if let Some(pv) = prev[i] {
            terms.push((pv, -1.0));
        }
        lp.add_constraint(&terms[..], eq, prev_const[i] + inflow[i]);
        let mut prod: Vec<(Variable, f64)> = (0..nb).map(|b| (energy[i][b], h.stage_hours * h.blocks[b])).collect();
        prod.push((turb[i], -hp.production_coefficient));
        lp.add_constraint(&prod[..], eq, 0.0);
    }

    for b in 0..nb {
        let hours = h.stage_hours * h.blocks[b];
        let mut balance: Vec<Vec<(Variable, f64)>> = vec![Vec::new(); nbus];
        let mut rhs: Vec<f64> = (0..nbus).map(|n| case.loads[t - 1][b][n]).collect();
        for (i, hp) in case.hydros.iter().enumerate() {
            balance[ctx.pos[&hp.bus]].push((energy[i][b], 1.0));
        }
        for th in &case.thermals {
            let cap = if th.status == Status::Candidate {
                th.capacity * availability(case, plan, t, ProjectKind::Thermal, &th.id)
            } else {
                th.capacity
            };
            let g = lp.add_var(weight * delta * hours * th.variable_cost, (0.0, cap));
            balance[ctx.pos[&th.bus]].push((g, 1.0));
        }
        for r in &case.renewables {
            let x = availability(case, plan, t, ProjectKind::Renewable, &r.id);
            rhs[ctx.pos[&r.bus]] -= r.production[t - 1][b][root.scenario % case.scenarios] * x;
        }
        for bal in balance.iter_mut() {
            bal.push((lp.add_var(weight * delta * hours * case.deficit_cost, (0.0, f64::INFINITY)), 1.0));
            bal.push((lp.add_var(0.0, (0.0, f64::INFINITY)), -1.0));
        }
        let theta: Vec<Variable> = (0..nbus)
            .map(|n| {
                if n == 0 {
                    lp.add_var(0.0, (0.0, 0.0))
                } else {
                    lp.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY))
                }
            })
            .collect();
        for (k, c) in case.circuits.iter().enumerate() {
            let (f, to) = (ctx.pos[&c.from_bus], ctx.pos[&c.to_bus]);
            let x = if c.status == Status::Candidate {
                availability(case, plan, t, ProjectKind::Circuit, &c.id)
            } else {
                1.0
            };
            let kvl = |flow: Variable, sign: f64| {
                vec![(flow, sign), (theta[f], -sign * c.susceptance), (theta[to], sign * c.susceptance)]
            };
            let flow = match (c.status, ctx.net) {
                (Status::Existing, _) => {
                    let fl = lp.add_var(0.0, (-c.rating, c.rating));
                    lp.add_constraint(&kvl(fl, 1.0)[..], eq, 0.0);
                    fl
                }
                (Status::Candidate, Net::Merged) => {
                    assert!(x == 0.0 || x == 1.0, "merged network needs a binary plan");
                    if x == 0.0 {
                        continue;
                    }
                    let fl = lp.add_var(0.0, (-c.rating, c.rating));
                    lp.add_constraint(&kvl(fl, 1.0)[..], eq, 0.0);
                    fl
                }
                (Status::Candidate, Net::Disjunctive) => {
                    let fl = lp.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY));
                    let slack = ctx.big_m[k] * (1.0 - x);
                    lp.add_constraint(&kvl(fl, 1.0)[..], le, slack);
                    lp.add_constraint(&kvl(fl, -1.0)[..], le, slack);
                    lp.add_constraint(&[(fl, 1.0)][..], le, c.rating * x);
                    lp.add_constraint(&[(fl, -1.0)][..], le, c.rating * x);
                    fl
                }
            };
            balance[f].push((flow, -1.0));
            balance[to].push((flow, 1.0));
        }
        for n in 0..nbus {
            lp.add_constraint(&balance[n][..], eq, rhs[n]);
        }
    }

    if t < h.stages {
        let openings = &root.noise[t - 1];
        let share = weight / openings.len() as f64;
        let next_prev: Vec<Option<Variable>> = v_next.iter().map(|&v| Some(v)).collect();
        let zeros = vec![0.0; case.hydros.len()];
        for xi in openings {
            let a = ar1_next(&case.inflows, t, inflow, xi);
            add_node(lp, ctx, root, t + 1, share, &next_prev, &zeros, &a);
        }
    }
}

/// Expected discounted operation cost from `root` to the horizon end under
/// `plan`, over the tree spanned by `root.noise`.
pub fn tree_cost(case: &PlanningCase, plan: &TrialPlan, root: &Root<'_>, net: Net) -> f64 {
    let ctx = Ctx {
        case,
        plan,
        net,
        pos: case.buses.iter().enumerate().map(|(i, b)| (b.id, i)).collect(),
        hydro_pos: case.hydros.iter().enumerate().map(|(i, h)| (h.id.as_str(), i)).collect(),
        big_m: (0..case.circuits.len())
            .map(|k| {
                if case.circuits[k].status == Status::Candidate {
                    calibrate_big_m(&case.buses, &case.circuits, k, case.big_m_max).value
                } else {
                    0.0
                }
            })
            .collect(),
    };
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let prev = vec![None; case.hydros.len()];
    add_node(&mut lp, &ctx, root, root.stage, 1.0, &prev, &root.storage, &root.inflow);
    lp.solve().expect("oracle LP solves").objective()
}

/// Deterministic extensive-form operation cost of `plan`.
pub fn deterministic_cost(case: &PlanningCase, plan: &TrialPlan, net: Net) -> f64 {
    let noise = zero_noise(case);
    tree_cost(case, plan, &Root::initial(case, &noise), net)
}

/// Every monotone binary plan that respects the earliest stages.
pub fn monotone_plans(case: &PlanningCase) -> Vec<TrialPlan> {
    assert!(case.logic.is_empty(), "enumeration ignores logic constraints");
    let nt = case.horizon.stages;
    let np = case.candidates.len();
    let choices: Vec<Vec<Option<usize>>> = case
        .candidates
        .iter()
        .map(|c| std::iter::once(None).chain((c.earliest_stage.max(1)..=nt).map(Some)).collect())
        .collect();
    let mut plans = vec![Vec::new()];
    for opts in &choices {
        plans = plans
            .into_iter()
            .flat_map(|prefix: Vec<Option<usize>>| {
                opts.iter().map(move |&o| {
                    let mut p = prefix.clone();
                    p.push(o);
                    p
                })
            })
            .collect();
    }
    plans
        .into_iter()
        .map(|entries| {
            let e: Vec<(usize, usize)> = entries.iter().enumerate().filter_map(|(p, s)| s.map(|s| (p, s))).collect();
            TrialPlan::from_entries(nt, np, &e)
        })
        .collect()
}

/// Minimum total cost over all monotone plans, with the minimizing plan.
pub fn enumerate_optimum(case: &PlanningCase) -> (f64, TrialPlan) {
    monotone_plans(case)
        .into_iter()
        .map(|p| {
            let total = p.investment_cost(case).unwrap() + deterministic_cost(case, &p, Net::Merged);
            (total, p)
        })
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .unwrap()
}

/// One-stage network-only case on a random connected topology with one to
/// three candidate circuits.
pub fn random_network_case(seed: u64) -> PlanningCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nbus: u32 = rng.random_range(3..=5);
    let mut circuits = Vec::new();
    for b in 2..=nbus {
        let to = rng.random_range(1..b);
        circuits.push(circuit(
            &format!("E{b}"),
            b,
            to,
            rng.random_range(2.0..20.0),
            rng.random_range(10.0..60.0),
            Status::Existing,
        ));
    }
    if rng.random_bool(0.5) {
        let (a, b) = (rng.random_range(1..=nbus), rng.random_range(1..=nbus));
        if a != b {
            circuits.push(circuit("Ex", a, b, rng.random_range(2.0..20.0), rng.random_range(10.0..60.0), Status::Existing));
        }
    }
    let mut candidates = Vec::new();
    for c in 0..rng.random_range(1..=3) {
        let a = rng.random_range(1..=nbus);
        let mut b = rng.random_range(1..=nbus);
        if a == b {
            b = a % nbus + 1;
        }
        let id = format!("C{c}");
        circuits.push(circuit(&id, a, b, rng.random_range(2.0..20.0), rng.random_range(10.0..80.0), Status::Candidate));
        candidates.push(project(&format!("P_{id}"), ProjectKind::Circuit, &id, 1000.0));
    }
    let thermals = (0..rng.random_range(2..=3))
        .map(|j| {
            thermal(
                &format!("G{j}"),
                rng.random_range(1..=nbus),
                rng.random_range(30.0..120.0),
                rng.random_range(10.0..80.0),
                Status::Existing,
            )
        })
        .collect();
    let load: Vec<f64> = (0..nbus).map(|_| rng.random_range(0.0..50.0)).collect();
    PlanningCase {
        name: format!("net-{seed}"),
        buses: (1..=nbus).map(bus).collect(),
        circuits,
        hydros: Vec::new(),
        thermals,
        renewables: Vec::new(),
        loads: flat_load(1, 1, &load),
        candidates,
        logic: Vec::new(),
        horizon: horizon(1, 1.0, vec![1.0]),
        scenarios: 1,
        openings: 1,
        deficit_cost: 500.0,
        big_m_max: 1e4,
        inflows: InflowModel::deterministic(&[]),
    }
}

/// Relative difference scaled by `max(1, |b|)`.
pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}
