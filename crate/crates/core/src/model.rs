//! Planning case data model, validation, and investment cost preprocessing.

use std::collections::{HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::inflow::InflowModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Status {
    #[default]
    Existing,
    Candidate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    pub id: u32,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    pub id: String,
    pub from_bus: u32,
    pub to_bus: u32,
    /// Per-unit susceptance, MW per radian.
    pub susceptance: f64,
    /// MW.
    pub rating: f64,
    pub status: Status,
    /// Free-form type label shown in reports, e.g. "230 kV line".
    pub label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HydroPlant {
    pub id: String,
    pub bus: u32,
    /// hm3.
    pub max_storage: f64,
    /// hm3 per stage.
    pub max_turbining: f64,
    /// MWh per hm3.
    pub production_coefficient: f64,
    /// MW.
    pub max_block_power: f64,
    pub upstream: Vec<String>,
    /// hm3 at the start of stage 1.
    pub initial_storage: f64,
    /// hm3 arriving during stage 1.
    pub initial_inflow: f64,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThermalPlant {
    pub id: String,
    pub bus: u32,
    /// MW.
    pub capacity: f64,
    /// $/MWh.
    pub variable_cost: f64,
    pub status: Status,
    pub technology: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenewablePlant {
    pub id: String,
    pub bus: u32,
    /// Nameplate MW, used for $/kW costing and capacity reports.
    pub capacity: f64,
    /// MW indexed `[stage][block][scenario]`.
    pub production: Vec<Vec<Vec<f64>>>,
    pub status: Status,
    pub technology: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProjectKind {
    Hydro,
    Thermal,
    Renewable,
    Circuit,
}

impl fmt::Display for ProjectKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProjectKind::Hydro => "hydro",
            ProjectKind::Thermal => "thermal",
            ProjectKind::Renewable => "renewable",
            ProjectKind::Circuit => "circuit",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OvernightCost {
    PerKw(f64),
    Total(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateProject {
    pub id: String,
    pub kind: ProjectKind,
    pub target: String,
    pub overnight_cost: OvernightCost,
    /// Fraction of the overnight cost paid in each construction year.
    pub payment_schedule: Vec<f64>,
    pub lifetime: f64,
    pub wacc: f64,
    /// First stage (1-based) at which the project may be in service.
    pub earliest_stage: usize,
    /// Per-stage CAPEX factor; empty means 1 everywhere.
    pub capex_multiplier: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogicKind {
    Exclusive,
    Associated,
    /// First project must be built no later than the second.
    Precedence,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogicConstraint {
    pub kind: LogicKind,
    pub projects: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Horizon {
    pub stages: usize,
    pub stage_hours: f64,
    /// Block duration fractions, identical for every stage.
    pub blocks: Vec<f64>,
    pub discount_rate: f64,
    pub start_year: i32,
    pub stages_per_year: usize,
}

impl Horizon {
    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_hours(&self, block: usize) -> f64 {
        self.stage_hours * self.blocks[block]
    }

    /// Present-value factor applied to costs incurred in stage `t` (1-based).
    pub fn discount(&self, t: usize) -> f64 {
        (1.0 + self.discount_rate).powi(-(t as i32 - 1))
    }

    pub fn year_of(&self, t: usize) -> i32 {
        self.start_year + ((t - 1) / self.stages_per_year.max(1)) as i32
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanningCase {
    pub name: String,
    pub buses: Vec<Bus>,
    pub circuits: Vec<Circuit>,
    pub hydros: Vec<HydroPlant>,
    pub thermals: Vec<ThermalPlant>,
    pub renewables: Vec<RenewablePlant>,
    /// MW indexed `[stage][block][bus position]`.
    pub loads: Vec<Vec<Vec<f64>>>,
    pub candidates: Vec<CandidateProject>,
    pub logic: Vec<LogicConstraint>,
    pub horizon: Horizon,
    pub scenarios: usize,
    pub openings: usize,
    /// $/MWh.
    pub deficit_cost: f64,
    /// Fallback big-M for candidate corridors with no existing path.
    pub big_m_max: f64,
    pub inflows: InflowModel,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("unknown project `{0}`")]
    UnknownProject(String),
    #[error("project `{project}` cannot be built at stage {stage} (earliest {earliest})")]
    BeforeEarliest { project: String, stage: usize, earliest: usize },
    #[error("project `{project}` targets unknown device `{target}`")]
    UnknownTarget { project: String, target: String },
    #[error("case failed validation:\n{0}")]
    Invalid(ValidationReport),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Path to the offending field, e.g. `circuit[2].susceptance`.
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation {
            path: path.into(),
            message: message.into(),
        });
    }

    pub fn mentions(&self, needle: &str) -> bool {
        self.violations.iter().any(|v| v.message.contains(needle))
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{}: {}", v.path, v.message)?;
        }
        Ok(())
    }
}

fn positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

fn nonneg(x: f64) -> bool {
    x.is_finite() && x >= 0.0
}

/// Checks every case invariant and returns the full list of violations.
pub fn validate_case(case: &PlanningCase) -> ValidationReport {
    let mut r = ValidationReport::default();
    let h = &case.horizon;

    if h.stages < 1 {
        r.push("horizon.stages", "at least one stage is required");
    }
    if !positive(h.stage_hours) {
        r.push("horizon.stage_hours", "stage hours must be positive");
    }
    if h.blocks.is_empty() {
        r.push("horizon.blocks", "at least one load block is required");
    }
    for (b, &f) in h.blocks.iter().enumerate() {
        if !(f > 0.0 && f <= 1.0) {
            r.push(format!("horizon.blocks[{b}]"), "block duration must lie in (0, 1]");
        }
    }
    if !h.blocks.is_empty() && (h.blocks.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        r.push("horizon.blocks", "block durations must sum to 1");
    }
    if !(h.discount_rate.is_finite() && h.discount_rate > -1.0) {
        r.push("horizon.discount_rate", "discount rate must exceed -1");
    }
    if h.stages_per_year < 1 {
        r.push("horizon.stages_per_year", "stages per year must be at least 1");
    }
    if case.scenarios < 1 {
        r.push("operation.scenarios", "scenario count must be at least 1");
    }
    if case.openings < 1 {
        r.push("operation.openings", "opening count must be at least 1");
    }
    if !nonneg(case.deficit_cost) {
        r.push("operation.deficit_cost", "deficit cost must be nonnegative");
    }
    if !positive(case.big_m_max) {
        r.push("operation.big_m_max", "big-M fallback must be positive");
    }

    let mut bus_ids = HashSet::new();
    for (i, b) in case.buses.iter().enumerate() {
        if !bus_ids.insert(b.id) {
            r.push(format!("bus[{i}].id"), format!("duplicate bus id {}", b.id));
        }
    }
    if case.buses.is_empty() {
        r.push("bus", "at least one bus is required");
    }
    let bus_ok = |id: u32| bus_ids.contains(&id);

    let mut seen = HashSet::new();
    for (i, c) in case.circuits.iter().enumerate() {
        let p = format!("circuit[{i}]");
        if !seen.insert(c.id.clone()) {
            r.push(format!("{p}.id"), format!("duplicate circuit id `{}`", c.id));
        }
        if c.from_bus == c.to_bus {
            r.push(format!("{p}.to"), format!("circuit `{}` is a self-loop circuit", c.id));
        }
        for (field, bus) in [("from", c.from_bus), ("to", c.to_bus)] {
            if !bus_ok(bus) {
                r.push(format!("{p}.{field}"), format!("circuit `{}` references unknown bus {bus}", c.id));
            }
        }
        if !positive(c.susceptance) {
            r.push(format!("{p}.susceptance"), format!("circuit `{}` susceptance must be positive", c.id));
        }
        if !positive(c.rating) {
            r.push(format!("{p}.rating"), format!("circuit `{}` rating must be positive", c.id));
        }
    }

    let mut seen = HashSet::new();
    let hydro_ids: HashMap<&str, usize> = case.hydros.iter().enumerate().map(|(i, h)| (h.id.as_str(), i)).collect();
    for (i, hp) in case.hydros.iter().enumerate() {
        let p = format!("hydro[{i}]");
        if !seen.insert(hp.id.clone()) {
            r.push(format!("{p}.id"), format!("duplicate hydro id `{}`", hp.id));
        }
        if !bus_ok(hp.bus) {
            r.push(format!("{p}.bus"), format!("hydro `{}` references unknown bus {}", hp.id, hp.bus));
        }
        if !nonneg(hp.max_storage) {
            r.push(format!("{p}.max_storage"), "max storage must be nonnegative");
        }
        if !positive(hp.max_turbining) {
            r.push(format!("{p}.max_turbining"), "max turbining must be positive");
        }
        if !positive(hp.production_coefficient) {
            r.push(format!("{p}.production_coefficient"), "production coefficient must be positive");
        }
        if !positive(hp.max_block_power) {
            r.push(format!("{p}.max_block_power"), "max block power must be positive");
        }
        if !(nonneg(hp.initial_storage) && hp.initial_storage <= hp.max_storage) {
            r.push(format!("{p}.initial_storage"), "initial storage must lie in [0, max storage]");
        }
        if hp.status == Status::Candidate && hp.initial_storage != 0.0 {
            r.push(format!("{p}.initial_storage"), "candidate hydro must start empty");
        }
        if !nonneg(hp.initial_inflow) {
            r.push(format!("{p}.initial_inflow"), "initial inflow must be nonnegative");
        }
        for (k, up) in hp.upstream.iter().enumerate() {
            if !hydro_ids.contains_key(up.as_str()) {
                r.push(format!("{p}.upstream[{k}]"), format!("unknown upstream hydro `{up}`"));
            } else if up == &hp.id {
                r.push(format!("{p}.upstream[{k}]"), format!("hydro `{}` lists itself upstream (cyclic cascade)", hp.id));
            }
        }
    }
    if let Some(cycle) = cascade_cycle(case) {
        r.push("hydro", format!("cyclic cascade through {}", cycle.join(" -> ")));
    }

    let mut seen = HashSet::new();
    for (i, t) in case.thermals.iter().enumerate() {
        let p = format!("thermal[{i}]");
        if !seen.insert(t.id.clone()) {
            r.push(format!("{p}.id"), format!("duplicate thermal id `{}`", t.id));
        }
        if !bus_ok(t.bus) {
            r.push(format!("{p}.bus"), format!("thermal `{}` references unknown bus {}", t.id, t.bus));
        }
        if !positive(t.capacity) {
            r.push(format!("{p}.capacity"), "thermal capacity must be positive");
        }
        if !nonneg(t.variable_cost) {
            r.push(format!("{p}.variable_cost"), "variable cost must be nonnegative");
        }
    }

    let mut seen = HashSet::new();
    for (i, rp) in case.renewables.iter().enumerate() {
        let p = format!("renewable[{i}]");
        if !seen.insert(rp.id.clone()) {
            r.push(format!("{p}.id"), format!("duplicate renewable id `{}`", rp.id));
        }
        if !bus_ok(rp.bus) {
            r.push(format!("{p}.bus"), format!("renewable `{}` references unknown bus {}", rp.id, rp.bus));
        }
        if !nonneg(rp.capacity) {
            r.push(format!("{p}.capacity"), "renewable capacity must be nonnegative");
        }
        let dims_ok = rp.production.len() == h.stages
            && rp
                .production
                .iter()
                .all(|st| st.len() == h.blocks.len() && st.iter().all(|b| b.len() == case.scenarios));
        if !dims_ok {
            r.push(
                format!("{p}.production"),
                format!(
                    "production must have shape stages x blocks x scenarios = {} x {} x {}",
                    h.stages,
                    h.blocks.len(),
                    case.scenarios
                ),
            );
        } else if rp.production.iter().flatten().flatten().any(|&v| !nonneg(v)) {
            r.push(format!("{p}.production"), "production values must be nonnegative");
        }
    }

    let loads_ok = case.loads.len() == h.stages
        && case
            .loads
            .iter()
            .all(|st| st.len() == h.blocks.len() && st.iter().all(|b| b.len() == case.buses.len()));
    if !loads_ok {
        r.push("load", "load table must cover every stage, block and bus");
    } else if case.loads.iter().flatten().flatten().any(|&v| !nonneg(v)) {
        r.push("load", "loads must be nonnegative");
    }

    validate_projects(case, &mut r);

    for msg in case.inflows.check(case.hydros.len()) {
        r.push("inflow", msg);
    }
    r
}

fn validate_projects(case: &PlanningCase, r: &mut ValidationReport) {
    let h = &case.horizon;
    let mut ids = HashSet::new();
    let mut targeted: HashSet<(ProjectKind, &str)> = HashSet::new();
    for (i, c) in case.candidates.iter().enumerate() {
        let p = format!("project[{i}]");
        if !ids.insert(c.id.as_str()) {
            r.push(format!("{p}.id"), format!("duplicate project id `{}`", c.id));
        }
        match target_status(case, c.kind, &c.target) {
            None => r.push(format!("{p}.target"), format!("project `{}` targets unknown {} `{}`", c.id, c.kind, c.target)),
            Some(Status::Existing) => r.push(
                format!("{p}.target"),
                format!("project `{}` targets `{}`, which is not flagged candidate", c.id, c.target),
            ),
            Some(Status::Candidate) => {
                if !targeted.insert((c.kind, c.target.as_str())) {
                    r.push(format!("{p}.target"), format!("device `{}` is targeted by more than one project", c.target));
                }
            }
        }
        match c.overnight_cost {
            OvernightCost::PerKw(v) | OvernightCost::Total(v) if !nonneg(v) => {
                r.push(format!("{p}.overnight_cost"), "overnight cost must be nonnegative")
            }
            _ => {}
        }
        if c.payment_schedule.is_empty() || c.payment_schedule.iter().any(|&f| !nonneg(f)) {
            r.push(format!("{p}.payments"), "payment schedule must be a nonempty list of nonnegative fractions");
        } else if (c.payment_schedule.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            r.push(format!("{p}.payments"), "payment fractions must sum to 1");
        }
        if !positive(c.lifetime) {
            r.push(format!("{p}.lifetime"), "lifetime must be positive");
        }
        if !(c.wacc.is_finite() && c.wacc > -1.0) {
            r.push(format!("{p}.wacc"), "wacc must exceed -1");
        }
        if c.earliest_stage < 1 || c.earliest_stage > h.stages {
            r.push(format!("{p}.earliest_stage"), "earliest stage must lie within the horizon");
        }
        if !c.capex_multiplier.is_empty() && c.capex_multiplier.len() != h.stages {
            r.push(format!("{p}.capex_multiplier"), "capex multiplier needs one value per stage");
        }
        if c.capex_multiplier.iter().any(|&m| !positive(m)) {
            r.push(format!("{p}.capex_multiplier"), "capex multipliers must be positive");
        }
    }
    let untargeted = |kind: ProjectKind, id: &str| !targeted.contains(&(kind, id));
    for (i, c) in case.circuits.iter().enumerate() {
        if c.status == Status::Candidate && untargeted(ProjectKind::Circuit, &c.id) {
            r.push(format!("circuit[{i}]"), format!("candidate circuit `{}` has no project", c.id));
        }
    }
    for (i, d) in case.hydros.iter().enumerate() {
        if d.status == Status::Candidate && untargeted(ProjectKind::Hydro, &d.id) {
            r.push(format!("hydro[{i}]"), format!("candidate hydro `{}` has no project", d.id));
        }
    }
    for (i, d) in case.thermals.iter().enumerate() {
        if d.status == Status::Candidate && untargeted(ProjectKind::Thermal, &d.id) {
            r.push(format!("thermal[{i}]"), format!("candidate thermal `{}` has no project", d.id));
        }
    }
    for (i, d) in case.renewables.iter().enumerate() {
        if d.status == Status::Candidate && untargeted(ProjectKind::Renewable, &d.id) {
            r.push(format!("renewable[{i}]"), format!("candidate renewable `{}` has no project", d.id));
        }
    }

    for (i, l) in case.logic.iter().enumerate() {
        let p = format!("logic[{i}]");
        let ok = match l.kind {
            LogicKind::Exclusive => l.projects.len() >= 2,
            LogicKind::Associated | LogicKind::Precedence => l.projects.len() == 2,
        };
        if !ok {
            r.push(
                format!("{p}.projects"),
                "exclusive groups need at least 2 projects; associated and precedence pairs exactly 2",
            );
        }
        for id in &l.projects {
            if !ids.contains(id.as_str()) {
                r.push(format!("{p}.projects"), format!("unknown project `{id}`"));
            }
        }
    }
}

fn target_status(case: &PlanningCase, kind: ProjectKind, target: &str) -> Option<Status> {
    match kind {
        ProjectKind::Hydro => case.hydros.iter().find(|d| d.id == target).map(|d| d.status),
        ProjectKind::Thermal => case.thermals.iter().find(|d| d.id == target).map(|d| d.status),
        ProjectKind::Renewable => case.renewables.iter().find(|d| d.id == target).map(|d| d.status),
        ProjectKind::Circuit => case.circuits.iter().find(|d| d.id == target).map(|d| d.status),
    }
}

/// Returns one upstream cycle of the hydro cascade, if any.
fn cascade_cycle(case: &PlanningCase) -> Option<Vec<String>> {
    let index: HashMap<&str, usize> = case.hydros.iter().enumerate().map(|(i, h)| (h.id.as_str(), i)).collect();
    let adj: Vec<Vec<usize>> = case
        .hydros
        .iter()
        .map(|h| {
            h.upstream
                .iter()
                .filter(|u| *u != &h.id)
                .filter_map(|u| index.get(u.as_str()).copied())
                .collect()
        })
        .collect();
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut color = vec![0u8; adj.len()];
    let mut stack_path = Vec::new();
    fn dfs(v: usize, adj: &[Vec<usize>], color: &mut [u8], path: &mut Vec<usize>) -> Option<Vec<usize>> {
        color[v] = 1;
        path.push(v);
        for &w in &adj[v] {
            if color[w] == 1 {
                let start = path.iter().position(|&p| p == w).unwrap_or(0);
                let mut cyc = path[start..].to_vec();
                cyc.push(w);
                return Some(cyc);
            }
            if color[w] == 0 {
                if let Some(c) = dfs(w, adj, color, path) {
                    return Some(c);
                }
            }
        }
        path.pop();
        color[v] = 2;
        None
    }
    for v in 0..adj.len() {
        if color[v] == 0 {
            if let Some(c) = dfs(v, &adj, &mut color, &mut stack_path) {
                return Some(c.into_iter().map(|i| case.hydros[i].id.clone()).collect());
            }
        }
    }
    None
}

/// Capacity in MW that a $/kW overnight cost applies to.
pub fn project_capacity_mw(case: &PlanningCase, project: &CandidateProject) -> Result<f64, ModelError> {
    let missing = || ModelError::UnknownTarget {
        project: project.id.clone(),
        target: project.target.clone(),
    };
    Ok(match project.kind {
        ProjectKind::Hydro => case.hydros.iter().find(|d| d.id == project.target).ok_or_else(missing)?.max_block_power,
        ProjectKind::Thermal => case.thermals.iter().find(|d| d.id == project.target).ok_or_else(missing)?.capacity,
        ProjectKind::Renewable => case.renewables.iter().find(|d| d.id == project.target).ok_or_else(missing)?.capacity,
        ProjectKind::Circuit => case.circuits.iter().find(|d| d.id == project.target).ok_or_else(missing)?.rating,
    })
}

/// Construction cash flows compounded to the commissioning date: payments at
/// the end of construction years `1..=n`, commissioning at the end of year `n`.
pub fn construction_factor(payment_schedule: &[f64], wacc: f64) -> f64 {
    let n = payment_schedule.len() as i32;
    payment_schedule
        .iter()
        .enumerate()
        .map(|(k, f)| f * (1.0 + wacc).powi(n - (k as i32 + 1)))
        .sum()
}

/// Objective coefficient for having `project` enter service at stage `t`.
pub fn investment_coefficient(case: &PlanningCase, project: &CandidateProject, t: usize) -> Result<f64, ModelError> {
    if t < project.earliest_stage {
        return Err(ModelError::BeforeEarliest {
            project: project.id.clone(),
            stage: t,
            earliest: project.earliest_stage,
        });
    }
    let overnight = match project.overnight_cost {
        OvernightCost::PerKw(c) => c * project_capacity_mw(case, project)? * 1000.0,
        OvernightCost::Total(c) => c,
    };
    let mult = if project.capex_multiplier.is_empty() {
        1.0
    } else {
        project.capex_multiplier[(t - 1).min(project.capex_multiplier.len() - 1)]
    };
    Ok(overnight * mult * construction_factor(&project.payment_schedule, project.wacc) * case.horizon.discount(t))
}

/// Dense index lookups for a validated case.
#[derive(Debug, Clone)]
pub struct CaseIndex {
    pub bus: HashMap<u32, usize>,
    pub hydro: HashMap<String, usize>,
    pub thermal: HashMap<String, usize>,
    pub renewable: HashMap<String, usize>,
    pub circuit: HashMap<String, usize>,
    pub project: HashMap<String, usize>,
    /// Upstream hydro positions for each hydro.
    pub upstream: Vec<Vec<usize>>,
    /// Project position owning each candidate device, per kind.
    pub hydro_project: Vec<Option<usize>>,
    pub thermal_project: Vec<Option<usize>>,
    pub renewable_project: Vec<Option<usize>>,
    pub circuit_project: Vec<Option<usize>>,
}

impl CaseIndex {
    pub fn new(case: &PlanningCase) -> Self {
        fn ids<T>(items: &[T], f: impl Fn(&T) -> &str) -> HashMap<String, usize> {
            items.iter().enumerate().map(|(i, d)| (f(d).to_string(), i)).collect()
        }
        let bus = case.buses.iter().enumerate().map(|(i, b)| (b.id, i)).collect();
        let hydro = ids(&case.hydros, |d| &d.id);
        let thermal = ids(&case.thermals, |d| &d.id);
        let renewable = ids(&case.renewables, |d| &d.id);
        let circuit = ids(&case.circuits, |d| &d.id);
        let project = ids(&case.candidates, |d| &d.id);
        let upstream = case
            .hydros
            .iter()
            .map(|h| h.upstream.iter().filter_map(|u| hydro.get(u).copied()).collect())
            .collect();
        let owner = |kind: ProjectKind, n: usize, pos: &HashMap<String, usize>| {
            let mut v = vec![None; n];
            for (p, c) in case.candidates.iter().enumerate() {
                if c.kind == kind {
                    if let Some(&d) = pos.get(&c.target) {
                        v[d] = Some(p);
                    }
                }
            }
            v
        };
        Self {
            hydro_project: owner(ProjectKind::Hydro, case.hydros.len(), &hydro),
            thermal_project: owner(ProjectKind::Thermal, case.thermals.len(), &thermal),
            renewable_project: owner(ProjectKind::Renewable, case.renewables.len(), &renewable),
            circuit_project: owner(ProjectKind::Circuit, case.circuits.len(), &circuit),
            bus,
            hydro,
            thermal,
            renewable,
            circuit,
            project,
            upstream,
        }
    }
}

impl PlanningCase {
    /// Validates the case, turning violations into an error.
    pub fn check(&self) -> Result<(), ModelError> {
        let report = validate_case(self);
        if report.is_ok() {
            Ok(())
        } else {
            Err(ModelError::Invalid(report))
        }
    }

    pub fn num_stages(&self) -> usize {
        self.horizon.stages
    }

    pub fn num_blocks(&self) -> usize {
        self.horizon.blocks.len()
    }

    pub fn project(&self, id: &str) -> Result<&CandidateProject, ModelError> {
        self.candidates
            .iter()
            .find(|c| c.id == id)
            .ok_or_else(|| ModelError::UnknownProject(id.to_string()))
    }
}
