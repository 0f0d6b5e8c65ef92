//! TOML case files.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::benders::RunConfig;
use crate::inflow::InflowModel;
use crate::model::{
    validate_case, Bus, CandidateProject, Circuit, Horizon, HydroPlant, LogicConstraint, LogicKind, OvernightCost,
    PlanningCase, ProjectKind, RenewablePlant, Status, ThermalPlant,
};
use crate::operation::CutDualSource;

use super::{locate, Diagnostic, IoError};

pub const CASE_SCHEMA: &str = "gtep-case/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CaseDoc {
    schema: String,
    name: String,
    horizon: HorizonDoc,
    operation: OperationDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    run: Option<RunDoc>,
    #[serde(default)]
    bus: Vec<BusDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    circuit: Vec<CircuitDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    hydro: Vec<HydroDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    thermal: Vec<ThermalDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    renewable: Vec<RenewableDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    load: Vec<LoadDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    project: Vec<ProjectDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    logic: Vec<LogicDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    inflow: Option<InflowDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HorizonDoc {
    stages: usize,
    stage_hours: f64,
    blocks: Vec<f64>,
    #[serde(default)]
    discount_rate: f64,
    #[serde(default = "default_start_year")]
    start_year: i32,
    #[serde(default = "one")]
    stages_per_year: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OperationDoc {
    #[serde(default = "default_branching")]
    scenarios: usize,
    #[serde(default = "default_branching")]
    openings: usize,
    #[serde(default = "default_deficit")]
    deficit_cost: f64,
    #[serde(default = "default_big_m")]
    big_m_max: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    max_iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sddp_max_iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sddp_min_iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    confidence_z: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cut_duals: Option<CutDualsDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    master_gap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    master_node_limit: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum CutDualsDoc {
    Propagated,
    StageLocal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum StatusDoc {
    Existing,
    Candidate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BusDoc {
    id: u32,
    #[serde(default)]
    name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CircuitDoc {
    id: String,
    from: u32,
    to: u32,
    susceptance: f64,
    rating: f64,
    status: StatusDoc,
    #[serde(default)]
    label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HydroDoc {
    id: String,
    bus: u32,
    max_storage: f64,
    max_turbining: f64,
    production_coefficient: f64,
    #[serde(default = "infinity")]
    max_block_power: f64,
    #[serde(default)]
    upstream: Vec<String>,
    #[serde(default)]
    initial_storage: f64,
    #[serde(default)]
    initial_inflow: f64,
    status: StatusDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ThermalDoc {
    id: String,
    bus: u32,
    capacity: f64,
    variable_cost: f64,
    status: StatusDoc,
    #[serde(default)]
    technology: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RenewableDoc {
    id: String,
    bus: u32,
    capacity: f64,
    /// MW `[stage][block][scenario]`.
    production: Vec<Vec<Vec<f64>>>,
    status: StatusDoc,
    #[serde(default)]
    technology: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LoadDoc {
    bus: u32,
    /// MW `[stage][block]`.
    mw: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum KindDoc {
    Hydro,
    Thermal,
    Renewable,
    Circuit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProjectDoc {
    id: String,
    kind: KindDoc,
    target: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    overnight_cost_per_kw: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    overnight_cost_total: Option<f64>,
    #[serde(default = "single_payment")]
    payments: Vec<f64>,
    lifetime: f64,
    #[serde(default)]
    wacc: f64,
    #[serde(default = "one")]
    earliest_stage: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    capex_multiplier: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum LogicKindDoc {
    Exclusive,
    Associated,
    Precedence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LogicDoc {
    kind: LogicKindDoc,
    projects: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InflowDoc {
    #[serde(default = "one")]
    periods: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    correlation: Vec<Vec<f64>>,
    #[serde(default)]
    hydro: Vec<InflowHydroDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InflowHydroDoc {
    id: String,
    mean: Vec<f64>,
    std_dev: Vec<f64>,
    rho: Vec<f64>,
}

fn default_start_year() -> i32 {
    2025
}
fn one() -> usize {
    1
}
fn default_branching() -> usize {
    32
}
fn default_deficit() -> f64 {
    1000.0
}
fn default_big_m() -> f64 {
    1e6
}
fn infinity() -> f64 {
    f64::INFINITY
}
fn single_payment() -> Vec<f64> {
    vec![1.0]
}

fn status(s: StatusDoc) -> Status {
    match s {
        StatusDoc::Existing => Status::Existing,
        StatusDoc::Candidate => Status::Candidate,
    }
}

fn status_doc(s: Status) -> StatusDoc {
    match s {
        Status::Existing => StatusDoc::Existing,
        Status::Candidate => StatusDoc::Candidate,
    }
}

/// Errors found while turning the document into a case, before validation.
#[derive(Default)]
struct Problems(Vec<(String, String)>);

impl Problems {
    fn push(&mut self, path: impl Into<String>, message: impl fmt::Display) {
        self.0.push((path.into(), message.to_string()));
    }
}

fn to_case(doc: CaseDoc, problems: &mut Problems) -> PlanningCase {
    let stages = doc.horizon.stages;
    let nblocks = doc.horizon.blocks.len();
    let bus_pos: HashMap<u32, usize> = doc.bus.iter().enumerate().map(|(i, b)| (b.id, i)).collect();
    let mut loads = vec![vec![vec![0.0; doc.bus.len()]; nblocks]; stages];
    let mut seen_load = HashMap::new();
    for (i, l) in doc.load.iter().enumerate() {
        let path = format!("load[{i}]");
        let Some(&n) = bus_pos.get(&l.bus) else {
            problems.push(format!("{path}.bus"), format!("unknown bus {}", l.bus));
            continue;
        };
        if seen_load.insert(l.bus, i).is_some() {
            problems.push(format!("{path}.bus"), format!("duplicate load for bus {}", l.bus));
            continue;
        }
        if l.mw.len() != stages || l.mw.iter().any(|s| s.len() != nblocks) {
            problems.push(format!("{path}.mw"), format!("expected {stages} stages of {nblocks} blocks"));
            continue;
        }
        for t in 0..stages {
            for b in 0..nblocks {
                loads[t][b][n] = l.mw[t][b];
            }
        }
    }

    let hydros: Vec<HydroPlant> = doc
        .hydro
        .iter()
        .map(|h| HydroPlant {
            id: h.id.clone(),
            bus: h.bus,
            max_storage: h.max_storage,
            max_turbining: h.max_turbining,
            production_coefficient: h.production_coefficient,
            max_block_power: h.max_block_power,
            upstream: h.upstream.clone(),
            initial_storage: h.initial_storage,
            initial_inflow: h.initial_inflow,
            status: status(h.status),
        })
        .collect();

    let inflows = match &doc.inflow {
        None => InflowModel::deterministic(&hydros.iter().map(|h| vec![h.initial_inflow]).collect::<Vec<_>>()),
        Some(inf) => {
            let n = hydros.len();
            let p = inf.periods.max(1);
            let mut model = InflowModel {
                periods: p,
                mean: vec![vec![0.0; p]; n],
                std_dev: vec![vec![0.0; p]; n],
                rho: vec![vec![0.0; p]; n],
                correlation: if inf.correlation.is_empty() {
                    (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
                } else {
                    inf.correlation.clone()
                },
            };
            let mut covered = vec![false; n];
            for (k, ih) in inf.hydro.iter().enumerate() {
                let path = format!("inflow.hydro[{k}]");
                match hydros.iter().position(|h| h.id == ih.id) {
                    None => problems.push(format!("{path}.id"), format!("unknown hydro `{}`", ih.id)),
                    Some(i) => {
                        covered[i] = true;
                        model.mean[i] = ih.mean.clone();
                        model.std_dev[i] = ih.std_dev.clone();
                        model.rho[i] = ih.rho.clone();
                    }
                }
            }
            for (i, c) in covered.iter().enumerate() {
                if !c {
                    problems.push("inflow.hydro", format!("missing inflow parameters for hydro `{}`", hydros[i].id));
                }
            }
            model
        }
    };

    let candidates = doc
        .project
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let overnight_cost = match (p.overnight_cost_per_kw, p.overnight_cost_total) {
                (Some(v), None) => OvernightCost::PerKw(v),
                (None, Some(v)) => OvernightCost::Total(v),
                _ => {
                    problems.push(
                        format!("project[{i}]"),
                        "exactly one of overnight_cost_per_kw and overnight_cost_total is required",
                    );
                    OvernightCost::Total(0.0)
                }
            };
            CandidateProject {
                id: p.id.clone(),
                kind: match p.kind {
                    KindDoc::Hydro => ProjectKind::Hydro,
                    KindDoc::Thermal => ProjectKind::Thermal,
                    KindDoc::Renewable => ProjectKind::Renewable,
                    KindDoc::Circuit => ProjectKind::Circuit,
                },
                target: p.target.clone(),
                overnight_cost,
                payment_schedule: p.payments.clone(),
                lifetime: p.lifetime,
                wacc: p.wacc,
                earliest_stage: p.earliest_stage,
                capex_multiplier: p.capex_multiplier.clone(),
            }
        })
        .collect();

    PlanningCase {
        name: doc.name,
        buses: doc.bus.iter().map(|b| Bus { id: b.id, name: b.name.clone() }).collect(),
        circuits: doc
            .circuit
            .iter()
            .map(|c| Circuit {
                id: c.id.clone(),
                from_bus: c.from,
                to_bus: c.to,
                susceptance: c.susceptance,
                rating: c.rating,
                status: status(c.status),
                label: c.label.clone(),
            })
            .collect(),
        hydros,
        thermals: doc
            .thermal
            .iter()
            .map(|t| ThermalPlant {
                id: t.id.clone(),
                bus: t.bus,
                capacity: t.capacity,
                variable_cost: t.variable_cost,
                status: status(t.status),
                technology: t.technology.clone(),
            })
            .collect(),
        renewables: doc
            .renewable
            .iter()
            .map(|r| RenewablePlant {
                id: r.id.clone(),
                bus: r.bus,
                capacity: r.capacity,
                production: r.production.clone(),
                status: status(r.status),
                technology: r.technology.clone(),
            })
            .collect(),
        loads,
        candidates,
        logic: doc
            .logic
            .iter()
            .map(|l| LogicConstraint {
                kind: match l.kind {
                    LogicKindDoc::Exclusive => LogicKind::Exclusive,
                    LogicKindDoc::Associated => LogicKind::Associated,
                    LogicKindDoc::Precedence => LogicKind::Precedence,
                },
                projects: l.projects.clone(),
            })
            .collect(),
        horizon: Horizon {
            stages,
            stage_hours: doc.horizon.stage_hours,
            blocks: doc.horizon.blocks,
            discount_rate: doc.horizon.discount_rate,
            start_year: doc.horizon.start_year,
            stages_per_year: doc.horizon.stages_per_year,
        },
        scenarios: doc.operation.scenarios,
        openings: doc.operation.openings,
        deficit_cost: doc.operation.deficit_cost,
        big_m_max: doc.operation.big_m_max,
        inflows,
    }
}

fn to_run(doc: Option<&RunDoc>) -> RunConfig {
    let d = RunConfig::default();
    let Some(r) = doc else { return d };
    RunConfig {
        gap: r.gap.unwrap_or(d.gap),
        max_iterations: r.max_iterations.unwrap_or(d.max_iterations),
        seed: r.seed.unwrap_or(d.seed),
        workers: r.workers.unwrap_or(d.workers),
        sddp_max_iterations: r.sddp_max_iterations.unwrap_or(d.sddp_max_iterations),
        sddp_min_iterations: r.sddp_min_iterations.unwrap_or(d.sddp_min_iterations),
        confidence_z: r.confidence_z.unwrap_or(d.confidence_z),
        cut_duals: match r.cut_duals {
            Some(CutDualsDoc::StageLocal) => CutDualSource::StageLocal,
            Some(CutDualsDoc::Propagated) | None => d.cut_duals,
        },
        master_gap: r.master_gap.unwrap_or(d.master_gap),
        master_node_limit: r.master_node_limit.unwrap_or(d.master_node_limit),
    }
}

fn run_doc(cfg: &RunConfig) -> Option<RunDoc> {
    let d = RunConfig::default();
    let pick = |same: bool| !same;
    let doc = RunDoc {
        gap: pick(cfg.gap == d.gap).then_some(cfg.gap),
        max_iterations: pick(cfg.max_iterations == d.max_iterations).then_some(cfg.max_iterations),
        seed: pick(cfg.seed == d.seed).then_some(cfg.seed),
        workers: pick(cfg.workers == d.workers).then_some(cfg.workers),
        sddp_max_iterations: pick(cfg.sddp_max_iterations == d.sddp_max_iterations).then_some(cfg.sddp_max_iterations),
        sddp_min_iterations: pick(cfg.sddp_min_iterations == d.sddp_min_iterations).then_some(cfg.sddp_min_iterations),
        confidence_z: pick(cfg.confidence_z == d.confidence_z).then_some(cfg.confidence_z),
        cut_duals: match cfg.cut_duals {
            CutDualSource::Propagated => None,
            CutDualSource::StageLocal => Some(CutDualsDoc::StageLocal),
        },
        master_gap: pick(cfg.master_gap == d.master_gap).then_some(cfg.master_gap),
        master_node_limit: pick(cfg.master_node_limit == d.master_node_limit).then_some(cfg.master_node_limit),
    };
    (doc != RunDoc::default()).then_some(doc)
}

/// Parses and validates case text.
pub fn parse_case(text: &str) -> Result<(PlanningCase, RunConfig), IoError> {
    let doc: CaseDoc = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((None, None), |s| {
            let (l, c) = super::line_col(text, s.start);
            (Some(l), Some(c))
        });
        IoError::Parse {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    if doc.schema != CASE_SCHEMA {
        return Err(IoError::Schema {
            expected: CASE_SCHEMA,
            found: doc.schema,
        });
    }
    let run = to_run(doc.run.as_ref());
    let mut problems = Problems::default();
    let case = to_case(doc, &mut problems);
    let mut diags: Vec<Diagnostic> = problems
        .0
        .into_iter()
        .map(|(path, message)| Diagnostic {
            line: locate(text, &path),
            path,
            message,
        })
        .collect();
    if diags.is_empty() {
        let report = validate_case(&case);
        diags.extend(report.violations.into_iter().map(|v| Diagnostic {
            line: locate(text, &v.path),
            path: v.path,
            message: v.message,
        }));
    }
    if !(run.gap > 0.0 && run.gap < 1.0) {
        diags.push(Diagnostic {
            line: locate(text, "run.gap"),
            path: "run.gap".into(),
            message: "target gap must lie in (0, 1)".into(),
        });
    }
    if diags.is_empty() {
        Ok((case, run))
    } else {
        Err(IoError::Invalid(diags))
    }
}

pub fn load_case(path: &Path) -> Result<(PlanningCase, RunConfig), IoError> {
    let text = std::fs::read_to_string(path).map_err(|e| IoError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    parse_case(&text)
}

/// Serializes a case and its run defaults to case-file text.
pub fn case_to_toml(case: &PlanningCase, run: &RunConfig) -> String {
    let nb = case.horizon.blocks.len();
    let doc = CaseDoc {
        schema: CASE_SCHEMA.into(),
        name: case.name.clone(),
        horizon: HorizonDoc {
            stages: case.horizon.stages,
            stage_hours: case.horizon.stage_hours,
            blocks: case.horizon.blocks.clone(),
            discount_rate: case.horizon.discount_rate,
            start_year: case.horizon.start_year,
            stages_per_year: case.horizon.stages_per_year,
        },
        operation: OperationDoc {
            scenarios: case.scenarios,
            openings: case.openings,
            deficit_cost: case.deficit_cost,
            big_m_max: case.big_m_max,
        },
        run: run_doc(run),
        bus: case.buses.iter().map(|b| BusDoc { id: b.id, name: b.name.clone() }).collect(),
        circuit: case
            .circuits
            .iter()
            .map(|c| CircuitDoc {
                id: c.id.clone(),
                from: c.from_bus,
                to: c.to_bus,
                susceptance: c.susceptance,
                rating: c.rating,
                status: status_doc(c.status),
                label: c.label.clone(),
            })
            .collect(),
        hydro: case
            .hydros
            .iter()
            .map(|h| HydroDoc {
                id: h.id.clone(),
                bus: h.bus,
                max_storage: h.max_storage,
                max_turbining: h.max_turbining,
                production_coefficient: h.production_coefficient,
                max_block_power: h.max_block_power,
                upstream: h.upstream.clone(),
                initial_storage: h.initial_storage,
                initial_inflow: h.initial_inflow,
                status: status_doc(h.status),
            })
            .collect(),
        thermal: case
            .thermals
            .iter()
            .map(|t| ThermalDoc {
                id: t.id.clone(),
                bus: t.bus,
                capacity: t.capacity,
                variable_cost: t.variable_cost,
                status: status_doc(t.status),
                technology: t.technology.clone(),
            })
            .collect(),
        renewable: case
            .renewables
            .iter()
            .map(|r| RenewableDoc {
                id: r.id.clone(),
                bus: r.bus,
                capacity: r.capacity,
                production: r.production.clone(),
                status: status_doc(r.status),
                technology: r.technology.clone(),
            })
            .collect(),
        load: case
            .buses
            .iter()
            .enumerate()
            .map(|(n, b)| LoadDoc {
                bus: b.id,
                mw: case.loads.iter().map(|st| (0..nb).map(|k| st[k][n]).collect()).collect(),
            })
            .collect(),
        project: case
            .candidates
            .iter()
            .map(|p| {
                let (per_kw, total) = match p.overnight_cost {
                    OvernightCost::PerKw(v) => (Some(v), None),
                    OvernightCost::Total(v) => (None, Some(v)),
                };
                ProjectDoc {
                    id: p.id.clone(),
                    kind: match p.kind {
                        ProjectKind::Hydro => KindDoc::Hydro,
                        ProjectKind::Thermal => KindDoc::Thermal,
                        ProjectKind::Renewable => KindDoc::Renewable,
                        ProjectKind::Circuit => KindDoc::Circuit,
                    },
                    target: p.target.clone(),
                    overnight_cost_per_kw: per_kw,
                    overnight_cost_total: total,
                    payments: p.payment_schedule.clone(),
                    lifetime: p.lifetime,
                    wacc: p.wacc,
                    earliest_stage: p.earliest_stage,
                    capex_multiplier: p.capex_multiplier.clone(),
                }
            })
            .collect(),
        logic: case
            .logic
            .iter()
            .map(|l| LogicDoc {
                kind: match l.kind {
                    LogicKind::Exclusive => LogicKindDoc::Exclusive,
                    LogicKind::Associated => LogicKindDoc::Associated,
                    LogicKind::Precedence => LogicKindDoc::Precedence,
                },
                projects: l.projects.clone(),
            })
            .collect(),
        inflow: Some(InflowDoc {
            periods: case.inflows.periods,
            correlation: case.inflows.correlation.clone(),
            hydro: case
                .hydros
                .iter()
                .enumerate()
                .map(|(i, h)| InflowHydroDoc {
                    id: h.id.clone(),
                    mean: case.inflows.mean[i].clone(),
                    std_dev: case.inflows.std_dev[i].clone(),
                    rho: case.inflows.rho[i].clone(),
                })
                .collect(),
        }),
    };
    toml::to_string(&doc).expect("case documents always serialize")
}

/// `[inflow]` section text for a fitted model.
pub fn inflow_to_toml(model: &InflowModel, hydro_ids: &[String]) -> String {
    #[derive(Serialize)]
    struct Wrapper<'a> {
        inflow: &'a InflowDoc,
    }
    let doc = InflowDoc {
        periods: model.periods,
        correlation: model.correlation.clone(),
        hydro: hydro_ids
            .iter()
            .enumerate()
            .map(|(i, id)| InflowHydroDoc {
                id: id.clone(),
                mean: model.mean[i].clone(),
                std_dev: model.std_dev[i].clone(),
                rho: model.rho[i].clone(),
            })
            .collect(),
    };
    toml::to_string(&Wrapper { inflow: &doc }).expect("inflow sections always serialize")
}
