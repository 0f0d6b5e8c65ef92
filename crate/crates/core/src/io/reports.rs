//! Report bundle: comma-separated tables plus a TOML run summary.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::benders::{IterationRecord, PlanResult, RunConfig};
use crate::model::{investment_coefficient, project_capacity_mw, PlanningCase, ProjectKind};
use crate::operation::ForwardPass;

use super::IoError;

pub const SUMMARY_SCHEMA: &str = "gtep-summary/1";

/// Rectangular table of pre-formatted cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(headers: &[&str]) -> Self {
        Self {
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String, IoError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.headers)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| IoError::Csv(e.into_error().into()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let c = self.headers.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[c].as_str()).collect())
    }
}

fn num(v: f64) -> String {
    format!("{v}")
}

pub fn convergence_table(history: &[IterationRecord]) -> Table {
    let mut t = Table::new(&[
        "iteration",
        "lower_bound",
        "upper_bound",
        "gap",
        "investment_cost",
        "operation_cost",
        "operation_std_dev",
        "sddp_iterations",
        "sddp_converged",
    ]);
    for r in history {
        t.push(vec![
            r.iteration.to_string(),
            num(r.lower_bound),
            num(r.upper_bound),
            num(r.gap),
            num(r.investment_cost),
            num(r.operation_cost),
            num(r.operation_std_dev),
            r.sddp_iterations.to_string(),
            r.sddp_converged.to_string(),
        ]);
    }
    t
}

pub fn timing_table(history: &[IterationRecord]) -> Table {
    let mut t = Table::new(&["iteration", "wall_seconds"]);
    for r in history {
        t.push(vec![r.iteration.to_string(), format!("{:.6}", r.wall_time.as_secs_f64())]);
    }
    t
}

pub fn plan_table(case: &PlanningCase, result: &PlanResult) -> Table {
    let mut t = Table::new(&["project", "kind", "target", "entry_stage", "entry_year", "investment_cost"]);
    for (p, stage) in result.best_plan.builds() {
        let c = &case.candidates[p];
        let cost = investment_coefficient(case, c, stage).unwrap_or(f64::NAN);
        t.push(vec![
            c.id.clone(),
            c.kind.to_string(),
            c.target.clone(),
            stage.to_string(),
            case.horizon.year_of(stage).to_string(),
            num(cost),
        ]);
    }
    t
}

pub fn circuit_table(case: &PlanningCase, result: &PlanResult) -> Table {
    let mut t = Table::new(&["from", "to", "cost", "rating", "type", "entry_year"]);
    for (p, stage) in result.best_plan.builds() {
        let c = &case.candidates[p];
        if c.kind != ProjectKind::Circuit {
            continue;
        }
        let Some(k) = case.circuits.iter().find(|k| k.id == c.target) else {
            continue;
        };
        let name = |id: u32| {
            case.buses
                .iter()
                .find(|b| b.id == id)
                .map_or(id.to_string(), |b| if b.name.is_empty() { id.to_string() } else { b.name.clone() })
        };
        t.push(vec![
            name(k.from_bus),
            name(k.to_bus),
            num(investment_coefficient(case, c, stage).unwrap_or(f64::NAN)),
            num(k.rating),
            k.label.clone(),
            case.horizon.year_of(stage).to_string(),
        ]);
    }
    t
}

fn technology(case: &PlanningCase, kind: ProjectKind, target: &str) -> String {
    let label = match kind {
        ProjectKind::Hydro => Some("hydro".to_string()),
        ProjectKind::Thermal => case.thermals.iter().find(|d| d.id == target).map(|d| d.technology.clone()),
        ProjectKind::Renewable => case.renewables.iter().find(|d| d.id == target).map(|d| d.technology.clone()),
        ProjectKind::Circuit => None,
    };
    match label {
        Some(l) if !l.is_empty() => l,
        _ => kind.to_string(),
    }
}

/// Added and cumulative candidate generation capacity per year and technology.
pub fn capacity_table(case: &PlanningCase, result: &PlanResult) -> Table {
    let mut t = Table::new(&["year", "technology", "added_mw", "cumulative_mw"]);
    let mut techs: BTreeMap<String, ()> = BTreeMap::new();
    let mut added: BTreeMap<(i32, String), f64> = BTreeMap::new();
    for c in &case.candidates {
        if c.kind != ProjectKind::Circuit {
            techs.insert(technology(case, c.kind, &c.target), ());
        }
    }
    for (p, stage) in result.best_plan.builds() {
        let c = &case.candidates[p];
        if c.kind == ProjectKind::Circuit {
            continue;
        }
        let mw = project_capacity_mw(case, c).unwrap_or(0.0);
        *added.entry((case.horizon.year_of(stage), technology(case, c.kind, &c.target))).or_default() += mw;
    }
    let first = case.horizon.year_of(1);
    let last = case.horizon.year_of(case.horizon.stages);
    let mut cumulative: BTreeMap<String, f64> = BTreeMap::new();
    for year in first..=last {
        for tech in techs.keys() {
            let a = added.get(&(year, tech.clone())).copied().unwrap_or(0.0);
            let c = cumulative.entry(tech.clone()).or_default();
            *c += a;
            t.push(vec![year.to_string(), tech.clone(), num(a), num(*c)]);
        }
    }
    t
}

/// Mean energy per device and stage over the simulated scenarios.
pub fn dispatch_table(case: &PlanningCase, sim: &ForwardPass) -> Table {
    let mut t = Table::new(&["stage", "year", "kind", "id", "bus", "energy_mwh", "mean_mw"]);
    let ns = sim.records.len().max(1) as f64;
    let hours: Vec<f64> = (0..case.horizon.num_blocks()).map(|b| case.horizon.block_hours(b)).collect();
    let sh = case.horizon.stage_hours;
    for st in 0..case.horizon.stages {
        let mut rows: Vec<(String, String, u32, f64)> = Vec::new();
        let energy = |pick: &dyn Fn(&crate::operation::Dispatch) -> &Vec<f64>, abs: bool| {
            sim.records
                .iter()
                .map(|r| {
                    pick(&r.stages[st].dispatch)
                        .iter()
                        .zip(&hours)
                        .map(|(mw, h)| if abs { mw.abs() * h } else { mw * h })
                        .sum::<f64>()
                })
                .sum::<f64>()
                / ns
        };
        for (i, h) in case.hydros.iter().enumerate() {
            rows.push(("hydro".into(), h.id.clone(), h.bus, energy(&|d| &d.hydro_mw[i], false)));
        }
        for (j, g) in case.thermals.iter().enumerate() {
            rows.push(("thermal".into(), g.id.clone(), g.bus, energy(&|d| &d.thermal_mw[j], false)));
        }
        for (r, w) in case.renewables.iter().enumerate() {
            rows.push(("renewable".into(), w.id.clone(), w.bus, energy(&|d| &d.renewable_mw[r], false)));
        }
        for (n, b) in case.buses.iter().enumerate() {
            rows.push(("deficit".into(), format!("deficit_{}", b.id), b.id, energy(&|d| &d.deficit_mw[n], false)));
        }
        for (k, c) in case.circuits.iter().enumerate() {
            rows.push(("circuit".into(), c.id.clone(), c.from_bus, energy(&|d| &d.flow_mw[k], true)));
        }
        for (kind, id, bus, e) in rows {
            t.push(vec![
                (st + 1).to_string(),
                case.horizon.year_of(st + 1).to_string(),
                kind,
                id,
                bus.to_string(),
                num(e),
                num(e / sh),
            ]);
        }
    }
    t
}

/// Mean undiscounted bus marginal cost per stage and block.
pub fn marginal_cost_table(case: &PlanningCase, sim: &ForwardPass) -> Table {
    let mut t = Table::new(&["stage", "year", "block", "bus", "marginal_cost"]);
    let ns = sim.records.len().max(1) as f64;
    for st in 0..case.horizon.stages {
        for b in 0..case.horizon.num_blocks() {
            for (n, bus) in case.buses.iter().enumerate() {
                let mc = sim.records.iter().map(|r| r.stages[st].dispatch.marginal_cost[n][b]).sum::<f64>() / ns;
                t.push(vec![
                    (st + 1).to_string(),
                    case.horizon.year_of(st + 1).to_string(),
                    (b + 1).to_string(),
                    bus.id.to_string(),
                    num(mc),
                ]);
            }
        }
    }
    t
}

#[derive(Serialize)]
struct Summary<'a> {
    schema: &'static str,
    case: &'a str,
    seed: u64,
    gap_target: f64,
    iterations: usize,
    stop_reason: &'static str,
    lower_bound: f64,
    upper_bound: f64,
    gap: f64,
    investment_cost: f64,
    operation_cost: f64,
    total_cost: f64,
    flagged_corridors: &'a [String],
    build: Vec<SummaryBuild>,
}

#[derive(Serialize)]
struct SummaryBuild {
    project: String,
    stage: usize,
    year: i32,
}

pub fn summary_toml(case: &PlanningCase, result: &PlanResult, cfg: &RunConfig) -> String {
    let s = Summary {
        schema: SUMMARY_SCHEMA,
        case: &case.name,
        seed: cfg.seed,
        gap_target: cfg.gap,
        iterations: result.history.len(),
        stop_reason: result.stop.as_str(),
        lower_bound: result.lower_bound,
        upper_bound: result.upper_bound,
        gap: result.gap,
        investment_cost: result.investment_cost,
        operation_cost: result.operation_cost,
        total_cost: result.total_cost(),
        flagged_corridors: &result.flagged_corridors,
        build: result
            .best_plan
            .builds()
            .into_iter()
            .map(|(p, stage)| SummaryBuild {
                project: case.candidates[p].id.clone(),
                stage,
                year: case.horizon.year_of(stage),
            })
            .collect(),
    };
    toml::to_string(&s).expect("summaries always serialize")
}

/// Everything `run` writes.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportBundle {
    pub convergence: Table,
    pub plan: Table,
    pub circuits: Table,
    pub capacity: Table,
    pub dispatch: Table,
    pub marginal_cost: Table,
    pub timing: Table,
    pub summary: String,
}

impl ReportBundle {
    pub fn new(case: &PlanningCase, result: &PlanResult, cfg: &RunConfig) -> Self {
        let sim = &result.operation.simulation;
        Self {
            convergence: convergence_table(&result.history),
            plan: plan_table(case, result),
            circuits: circuit_table(case, result),
            capacity: capacity_table(case, result),
            dispatch: dispatch_table(case, sim),
            marginal_cost: marginal_cost_table(case, sim),
            timing: timing_table(&result.history),
            summary: summary_toml(case, result, cfg),
        }
    }

    /// File names and contents, in a fixed order.
    pub fn files(&self) -> Result<Vec<(&'static str, String)>, IoError> {
        Ok(vec![
            ("convergence.csv", self.convergence.to_csv()?),
            ("plan.csv", self.plan.to_csv()?),
            ("circuits.csv", self.circuits.to_csv()?),
            ("capacity.csv", self.capacity.to_csv()?),
            ("dispatch.csv", self.dispatch.to_csv()?),
            ("marginal_cost.csv", self.marginal_cost.to_csv()?),
            ("timing.csv", self.timing.to_csv()?),
            ("summary.toml", self.summary.clone()),
        ])
    }
}

pub fn write_reports(dir: &Path, bundle: &ReportBundle) -> Result<(), IoError> {
    let wrap = |e: std::io::Error| IoError::Io {
        path: dir.display().to_string(),
        source: e,
    };
    std::fs::create_dir_all(dir).map_err(wrap)?;
    for (name, content) in bundle.files()? {
        let path = dir.join(name);
        std::fs::write(&path, content).map_err(|e| IoError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
    }
    Ok(())
}
