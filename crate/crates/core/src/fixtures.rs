//! Small ready-made planning cases for examples, tests and the demo.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::inflow::InflowModel;
use crate::model::{
    Bus, CandidateProject, Circuit, Horizon, HydroPlant, LogicConstraint, LogicKind, OvernightCost, PlanningCase,
    ProjectKind, RenewablePlant, Status, ThermalPlant,
};

pub fn bus(id: u32) -> Bus {
    Bus {
        id,
        name: format!("B{id}"),
    }
}

pub fn circuit(id: &str, from: u32, to: u32, susceptance: f64, rating: f64, status: Status) -> Circuit {
    Circuit {
        id: id.into(),
        from_bus: from,
        to_bus: to,
        susceptance,
        rating,
        status,
        label: "230 kV line".into(),
    }
}

pub fn thermal(id: &str, bus: u32, capacity: f64, cost: f64, status: Status) -> ThermalPlant {
    ThermalPlant {
        id: id.into(),
        bus,
        capacity,
        variable_cost: cost,
        status,
        technology: "gas".into(),
    }
}

pub fn hydro(id: &str, bus: u32, max_storage: f64, max_turbining: f64, coefficient: f64) -> HydroPlant {
    HydroPlant {
        id: id.into(),
        bus,
        max_storage,
        max_turbining,
        production_coefficient: coefficient,
        max_block_power: f64::INFINITY,
        upstream: Vec::new(),
        initial_storage: 0.0,
        initial_inflow: 0.0,
        status: Status::Existing,
    }
}

/// Project with a lump-sum cost paid in one year and no discounting effects
/// beyond the horizon rate.
pub fn project(id: &str, kind: ProjectKind, target: &str, total_cost: f64) -> CandidateProject {
    CandidateProject {
        id: id.into(),
        kind,
        target: target.into(),
        overnight_cost: OvernightCost::Total(total_cost),
        payment_schedule: vec![1.0],
        lifetime: 30.0,
        wacc: 0.0,
        earliest_stage: 1,
        capex_multiplier: Vec::new(),
    }
}

pub fn horizon(stages: usize, stage_hours: f64, blocks: Vec<f64>) -> Horizon {
    Horizon {
        stages,
        stage_hours,
        blocks,
        discount_rate: 0.0,
        start_year: 2025,
        stages_per_year: 1,
    }
}

/// Load `mw[bus]` repeated in every stage and block.
pub fn flat_load(stages: usize, blocks: usize, mw: &[f64]) -> Vec<Vec<Vec<f64>>> {
    vec![vec![mw.to_vec(); blocks]; stages]
}

/// Renewable production `mw` in every stage, block and scenario.
pub fn flat_profile(stages: usize, blocks: usize, scenarios: usize, mw: f64) -> Vec<Vec<Vec<f64>>> {
    vec![vec![vec![mw; scenarios]; blocks]; stages]
}

/// Two buses, one existing line, a hydro, an existing and a candidate
/// thermal, a wind farm and a candidate parallel line. Three yearly stages of
/// one 10 h block, deterministic inflows.
pub fn two_bus_case() -> PlanningCase {
    let stages = 3;
    let mut h1 = hydro("H1", 1, 100.0, 50.0, 10.0);
    h1.max_block_power = 80.0;
    h1.initial_storage = 50.0;
    h1.initial_inflow = 30.0;
    PlanningCase {
        name: "two-bus".into(),
        buses: vec![bus(1), bus(2)],
        circuits: vec![
            circuit("L12", 1, 2, 10.0, 50.0, Status::Existing),
            circuit("L12b", 1, 2, 10.0, 50.0, Status::Candidate),
        ],
        hydros: vec![h1],
        thermals: vec![
            thermal("T1", 1, 40.0, 20.0, Status::Existing),
            thermal("T2", 2, 60.0, 30.0, Status::Candidate),
        ],
        renewables: vec![RenewablePlant {
            id: "W1".into(),
            bus: 2,
            capacity: 20.0,
            production: flat_profile(stages, 1, 1, 10.0),
            status: Status::Existing,
            technology: "wind".into(),
        }],
        loads: flat_load(stages, 1, &[20.0, 80.0]),
        candidates: vec![
            project("P_T2", ProjectKind::Thermal, "T2", 20_000.0),
            project("P_L12b", ProjectKind::Circuit, "L12b", 30_000.0),
        ],
        logic: Vec::new(),
        horizon: Horizon {
            discount_rate: 0.1,
            ..horizon(stages, 10.0, vec![1.0])
        },
        scenarios: 1,
        openings: 1,
        deficit_cost: 1000.0,
        big_m_max: 1e4,
        inflows: InflowModel::deterministic(&[vec![30.0]]),
    }
}

/// Three-bus triangle with a cascade of two hydros, stochastic inflows and a
/// candidate wind farm, line and peaker. Two blocks per stage.
pub fn three_bus_case() -> PlanningCase {
    let stages = 4;
    let scenarios = 4;
    let blocks = vec![0.4, 0.6];
    let mut up = hydro("H_up", 1, 120.0, 60.0, 8.0);
    up.max_block_power = 90.0;
    up.initial_storage = 60.0;
    up.initial_inflow = 25.0;
    let mut down = hydro("H_down", 2, 80.0, 70.0, 6.0);
    down.max_block_power = 80.0;
    down.upstream = vec!["H_up".into()];
    down.initial_storage = 40.0;
    down.initial_inflow = 15.0;
    let wind: Vec<Vec<Vec<f64>>> = (0..stages)
        .map(|t| {
            (0..blocks.len())
                .map(|b| (0..scenarios).map(|s| 20.0 + 10.0 * ((t + b + s) % 3) as f64).collect())
                .collect()
        })
        .collect();
    PlanningCase {
        name: "three-bus".into(),
        buses: vec![bus(1), bus(2), bus(3)],
        circuits: vec![
            circuit("L12", 1, 2, 8.0, 60.0, Status::Existing),
            circuit("L23", 2, 3, 8.0, 50.0, Status::Existing),
            circuit("L13", 1, 3, 5.0, 40.0, Status::Existing),
            circuit("L13b", 1, 3, 5.0, 40.0, Status::Candidate),
        ],
        hydros: vec![up, down],
        thermals: vec![
            thermal("T3", 3, 60.0, 45.0, Status::Existing),
            thermal("OCGT", 3, 50.0, 90.0, Status::Candidate),
        ],
        renewables: vec![RenewablePlant {
            id: "W2".into(),
            bus: 2,
            capacity: 40.0,
            production: wind,
            status: Status::Candidate,
            technology: "wind".into(),
        }],
        loads: (0..stages)
            .map(|t| vec![vec![30.0, 40.0, 70.0 + 5.0 * t as f64], vec![20.0, 30.0, 55.0 + 5.0 * t as f64]])
            .collect(),
        candidates: vec![
            project("P_W2", ProjectKind::Renewable, "W2", 60_000.0),
            project("P_L13b", ProjectKind::Circuit, "L13b", 40_000.0),
            project("P_OCGT", ProjectKind::Thermal, "OCGT", 50_000.0),
        ],
        logic: vec![LogicConstraint {
            kind: LogicKind::Exclusive,
            projects: vec!["P_L13b".into(), "P_OCGT".into()],
        }],
        horizon: Horizon {
            discount_rate: 0.08,
            ..horizon(stages, 24.0, blocks)
        },
        scenarios,
        openings: 3,
        deficit_cost: 1000.0,
        big_m_max: 1e4,
        inflows: InflowModel {
            periods: 2,
            mean: vec![vec![25.0, 35.0], vec![15.0, 20.0]],
            std_dev: vec![vec![6.0, 8.0], vec![4.0, 5.0]],
            rho: vec![vec![0.5, 0.4], vec![0.3, 0.6]],
            correlation: vec![vec![1.0, 0.6], vec![0.6, 1.0]],
        },
    }
}

/// Random deterministic toy: 2 or 3 buses on a path, one hydro, an existing
/// thermal, and one to three candidates drawn from a thermal, a line and a
/// solar farm. Two stages, one block, one scenario and opening.
pub fn random_toy(seed: u64) -> PlanningCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stages = 2;
    let nbus: u32 = rng.random_range(2..=3);
    let buses: Vec<Bus> = (1..=nbus).map(bus).collect();
    let mut circuits: Vec<Circuit> = (1..nbus)
        .map(|b| {
            circuit(
                &format!("L{b}{}", b + 1),
                b,
                b + 1,
                rng.random_range(5.0..15.0),
                rng.random_range(20.0..60.0),
                Status::Existing,
            )
        })
        .collect();
    let mut h = hydro("H1", 1, rng.random_range(40.0..120.0), rng.random_range(20.0..60.0), 1.0);
    h.max_block_power = 200.0;
    h.initial_storage = rng.random_range(0.0..h.max_storage);
    let inflow = rng.random_range(0.0..40.0);
    h.initial_inflow = inflow;
    let mut thermals = vec![thermal("T1", 1, rng.random_range(30.0..80.0), rng.random_range(10.0..40.0), Status::Existing)];
    let mut renewables = Vec::new();
    let mut candidates = Vec::new();
    let picks: Vec<bool> = loop {
        let p: Vec<bool> = (0..3).map(|_| rng.random_bool(0.6)).collect();
        if p.iter().any(|&b| b) {
            break p;
        }
    };
    if picks[0] {
        thermals.push(thermal("T2", nbus, rng.random_range(20.0..60.0), rng.random_range(20.0..60.0), Status::Candidate));
        candidates.push(project("P_T2", ProjectKind::Thermal, "T2", rng.random_range(200.0..4000.0)));
    }
    if picks[1] {
        let id = format!("L1{nbus}c");
        circuits.push(circuit(&id, 1, nbus, rng.random_range(5.0..15.0), rng.random_range(10.0..50.0), Status::Candidate));
        candidates.push(project("P_L", ProjectKind::Circuit, &id, rng.random_range(200.0..4000.0)));
    }
    if picks[2] {
        let mw = rng.random_range(5.0..30.0);
        renewables.push(RenewablePlant {
            id: "S1".into(),
            bus: nbus,
            capacity: mw,
            production: flat_profile(stages, 1, 1, mw),
            status: Status::Candidate,
            technology: "solar".into(),
        });
        candidates.push(project("P_S1", ProjectKind::Renewable, "S1", rng.random_range(200.0..4000.0)));
    }
    for c in candidates.iter_mut() {
        c.earliest_stage = rng.random_range(1..=stages);
    }
    let loads = (0..stages)
        .map(|_| vec![(0..nbus).map(|_| rng.random_range(5.0..50.0)).collect()])
        .collect();
    PlanningCase {
        name: format!("toy-{seed}"),
        buses,
        circuits,
        hydros: vec![h],
        thermals,
        renewables,
        loads,
        candidates,
        logic: Vec::new(),
        horizon: Horizon {
            discount_rate: rng.random_range(0.0..0.1),
            ..horizon(stages, 1.0, vec![1.0])
        },
        scenarios: 1,
        openings: 1,
        deficit_cost: 500.0,
        big_m_max: 1e4,
        inflows: InflowModel::deterministic(&[vec![inflow]]),
    }
}
