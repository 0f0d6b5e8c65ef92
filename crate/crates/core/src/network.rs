//! DC network: incidence matrix, reference buses, big-M calibration and the
//! per-block Kirchhoff rows of the stage LP.

use std::collections::HashMap;

use petgraph::algo::dijkstra;
use petgraph::graph::{NodeIndex, UnGraph};
use petgraph::unionfind::UnionFind;

use crate::model::{Bus, Circuit, PlanningCase, Status};
use crate::solver::{LinearProgram, RowSense};

/// Big-M value of one candidate circuit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BigM {
    pub value: f64,
    /// True when the terminals are disconnected in the existing network and
    /// the configured fallback was used.
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkTopology {
    pub bus_ids: Vec<u32>,
    /// Terminal bus positions `(from, to)` of each circuit.
    pub terminals: Vec<(usize, usize)>,
    pub susceptance: Vec<f64>,
    pub rating: Vec<f64>,
    pub candidate: Vec<bool>,
    /// `Some` for candidate circuits.
    pub big_m: Vec<Option<BigM>>,
    /// Bus positions whose angle is fixed at zero.
    pub reference_buses: Vec<usize>,
}

/// `N x K` incidence matrix, `+1` at the from bus and `-1` at the to bus.
pub fn incidence_matrix(buses: &[Bus], circuits: &[Circuit]) -> Vec<Vec<f64>> {
    let pos: HashMap<u32, usize> = buses.iter().enumerate().map(|(i, b)| (b.id, i)).collect();
    let mut s = vec![vec![0.0; circuits.len()]; buses.len()];
    for (k, c) in circuits.iter().enumerate() {
        s[pos[&c.from_bus]][k] = 1.0;
        s[pos[&c.to_bus]][k] = -1.0;
    }
    s
}

/// Lowest-id bus of every connected component of the full network
/// (existing and candidate circuits), as bus positions sorted ascending.
pub fn reference_buses(buses: &[Bus], circuits: &[Circuit]) -> Vec<usize> {
    let pos: HashMap<u32, usize> = buses.iter().enumerate().map(|(i, b)| (b.id, i)).collect();
    let mut uf = UnionFind::<usize>::new(buses.len());
    for c in circuits {
        uf.union(pos[&c.from_bus], pos[&c.to_bus]);
    }
    let mut best: HashMap<usize, usize> = HashMap::new();
    for (i, b) in buses.iter().enumerate() {
        let root = uf.find(i);
        best.entry(root)
            .and_modify(|cur| {
                if b.id < buses[*cur].id {
                    *cur = i;
                }
            })
            .or_insert(i);
    }
    let mut refs: Vec<usize> = best.into_values().collect();
    refs.sort_unstable();
    refs
}

/// Smallest big-M that relaxes the candidate's Kirchhoff row when unbuilt.
pub fn calibrate_big_m(buses: &[Bus], circuits: &[Circuit], candidate: usize, m_max: f64) -> BigM {
    let cand = &circuits[candidate];
    let same_corridor = |c: &Circuit| {
        (c.from_bus == cand.from_bus && c.to_bus == cand.to_bus) || (c.from_bus == cand.to_bus && c.to_bus == cand.from_bus)
    };
    let parallel = circuits
        .iter()
        .filter(|c| c.status == Status::Existing && same_corridor(c))
        .map(|c| c.rating / c.susceptance)
        .fold(f64::INFINITY, f64::min);
    if parallel.is_finite() {
        return BigM {
            value: cand.susceptance * parallel,
            fallback: false,
        };
    }
    let pos: HashMap<u32, usize> = buses.iter().enumerate().map(|(i, b)| (b.id, i)).collect();
    let mut g: UnGraph<(), f64> = UnGraph::with_capacity(buses.len(), circuits.len());
    let nodes: Vec<NodeIndex> = (0..buses.len()).map(|_| g.add_node(())).collect();
    for c in circuits.iter().filter(|c| c.status == Status::Existing) {
        g.add_edge(nodes[pos[&c.from_bus]], nodes[pos[&c.to_bus]], c.rating / c.susceptance);
    }
    let from = nodes[pos[&cand.from_bus]];
    let to = nodes[pos[&cand.to_bus]];
    let dist = dijkstra(&g, from, Some(to), |e| *e.weight());
    match dist.get(&to) {
        Some(&d) => BigM {
            value: cand.susceptance * d,
            fallback: false,
        },
        None => BigM {
            value: m_max,
            fallback: true,
        },
    }
}

impl NetworkTopology {
    pub fn new(case: &PlanningCase) -> Self {
        let pos: HashMap<u32, usize> = case.buses.iter().enumerate().map(|(i, b)| (b.id, i)).collect();
        let circuits = &case.circuits;
        Self {
            bus_ids: case.buses.iter().map(|b| b.id).collect(),
            terminals: circuits.iter().map(|c| (pos[&c.from_bus], pos[&c.to_bus])).collect(),
            susceptance: circuits.iter().map(|c| c.susceptance).collect(),
            rating: circuits.iter().map(|c| c.rating).collect(),
            candidate: circuits.iter().map(|c| c.status == Status::Candidate).collect(),
            big_m: (0..circuits.len())
                .map(|k| {
                    (circuits[k].status == Status::Candidate)
                        .then(|| calibrate_big_m(&case.buses, circuits, k, case.big_m_max))
                })
                .collect(),
            reference_buses: reference_buses(&case.buses, circuits),
        }
    }

    pub fn num_buses(&self) -> usize {
        self.bus_ids.len()
    }

    pub fn num_circuits(&self) -> usize {
        self.terminals.len()
    }

    pub fn flagged_corridors(&self) -> Vec<usize> {
        (0..self.num_circuits())
            .filter(|&k| self.big_m[k].is_some_and(|m| m.fallback))
            .collect()
    }
}

/// Variable indices created for one block's network.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BlockNetworkVars {
    pub flow: Vec<usize>,
    pub angle: Vec<usize>,
}

/// Row indices created for one block's network.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BlockNetworkRows {
    /// Bus balance rows, one per bus.
    pub balance: Vec<usize>,
    /// Kirchhoff voltage equality for existing circuits.
    pub kvl: Vec<Option<usize>>,
    /// `(upper, lower)` one-sided disjunctive rows for candidates.
    pub disjunctive: Vec<Option<(usize, usize)>>,
    /// `(upper, lower)` flow limit rows for candidates.
    pub flow_limit: Vec<Option<(usize, usize)>>,
}

/// Adds the DC network of one block to `lp`.
///
/// `injections[n]` lists `(variable, coefficient)` terms entering the balance
/// of bus `n`; `net_load[n]` is its right-hand side (load minus fixed
/// renewable injection). `built[k]` is the availability of circuit `k`
/// (ignored for existing circuits).
pub fn add_block_network(
    lp: &mut LinearProgram,
    topo: &NetworkTopology,
    tag: &str,
    injections: &[Vec<(usize, f64)>],
    net_load: &[f64],
    built: &[f64],
) -> (BlockNetworkVars, BlockNetworkRows) {
    let nb = topo.num_buses();
    let nk = topo.num_circuits();
    let mut vars = BlockNetworkVars::default();
    let mut rows = BlockNetworkRows::default();
    for k in 0..nk {
        let (lo, hi) = if topo.candidate[k] {
            (f64::NEG_INFINITY, f64::INFINITY)
        } else {
            (-topo.rating[k], topo.rating[k])
        };
        vars.flow.push(lp.add_var(format!("f[{tag}][{k}]"), lo, hi, 0.0));
    }
    for n in 0..nb {
        let (lo, hi) = if topo.reference_buses.binary_search(&n).is_ok() {
            (0.0, 0.0)
        } else {
            (f64::NEG_INFINITY, f64::INFINITY)
        };
        vars.angle.push(lp.add_var(format!("theta[{tag}][{n}]"), lo, hi, 0.0));
    }
    for n in 0..nb {
        let mut coefs = injections[n].clone();
        for k in 0..nk {
            let (f, t) = topo.terminals[k];
            if f == n {
                coefs.push((vars.flow[k], -1.0));
            } else if t == n {
                coefs.push((vars.flow[k], 1.0));
            }
        }
        rows.balance.push(lp.add_row(format!("bal[{tag}][{n}]"), coefs, RowSense::Eq, net_load[n]));
    }
    for k in 0..nk {
        let (f, t) = topo.terminals[k];
        let g = topo.susceptance[k];
        let kvl = vec![(vars.flow[k], 1.0), (vars.angle[f], -g), (vars.angle[t], g)];
        if topo.candidate[k] {
            let m = topo.big_m[k].map_or(0.0, |b| b.value);
            let x = built[k];
            let slack = m * (1.0 - x);
            let up = lp.add_row(format!("disj+[{tag}][{k}]"), kvl.clone(), RowSense::Le, slack);
            let neg: Vec<(usize, f64)> = kvl.iter().map(|&(j, a)| (j, -a)).collect();
            let dn = lp.add_row(format!("disj-[{tag}][{k}]"), neg, RowSense::Le, slack);
            rows.disjunctive.push(Some((up, dn)));
            rows.kvl.push(None);
            let cap = topo.rating[k] * x;
            let fu = lp.add_row(format!("fmax+[{tag}][{k}]"), vec![(vars.flow[k], 1.0)], RowSense::Le, cap);
            let fl = lp.add_row(format!("fmax-[{tag}][{k}]"), vec![(vars.flow[k], -1.0)], RowSense::Le, cap);
            rows.flow_limit.push(Some((fu, fl)));
        } else {
            rows.kvl.push(Some(lp.add_row(format!("kvl[{tag}][{k}]"), kvl, RowSense::Eq, 0.0)));
            rows.disjunctive.push(None);
            rows.flow_limit.push(None);
        }
    }
    (vars, rows)
}
