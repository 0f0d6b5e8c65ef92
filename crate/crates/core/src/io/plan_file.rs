//! Plan files and inflow history tables.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::investment::TrialPlan;
use crate::model::PlanningCase;

use super::{line_col, locate, Diagnostic, IoError};

pub const PLAN_SCHEMA: &str = "gtep-plan/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanDoc {
    schema: String,
    #[serde(default)]
    build: Vec<BuildDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BuildDoc {
    project: String,
    stage: usize,
}

fn read(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|e| IoError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

/// Parses a plan file against `case`: each build names a project and the
/// stage it enters service.
pub fn parse_plan(text: &str, case: &PlanningCase) -> Result<TrialPlan, IoError> {
    let doc: PlanDoc = toml::from_str(text).map_err(|e| {
        let pos = e.span().map(|s| line_col(text, s.start));
        IoError::Parse {
            line: pos.map(|p| p.0),
            column: pos.map(|p| p.1),
            message: e.message().to_string(),
        }
    })?;
    if doc.schema != PLAN_SCHEMA {
        return Err(IoError::Schema {
            expected: PLAN_SCHEMA,
            found: doc.schema,
        });
    }
    let nt = case.horizon.stages;
    let mut diags = Vec::new();
    let mut entries = Vec::new();
    for (i, b) in doc.build.iter().enumerate() {
        let path = format!("build[{i}]");
        let mut fail = |key: &str, message: String| {
            let p = format!("{path}.{key}");
            diags.push(Diagnostic {
                line: locate(text, &p),
                path: p,
                message,
            })
        };
        match case.candidates.iter().position(|c| c.id == b.project) {
            None => fail("project", format!("unknown project `{}`", b.project)),
            Some(p) => {
                let earliest = case.candidates[p].earliest_stage;
                if b.stage < earliest.max(1) || b.stage > nt {
                    fail("stage", format!("stage must lie in {}..={nt}", earliest.max(1)));
                } else if entries.iter().any(|&(q, _)| q == p) {
                    fail("project", format!("project `{}` listed twice", b.project));
                } else {
                    entries.push((p, b.stage));
                }
            }
        }
    }
    if !diags.is_empty() {
        return Err(IoError::Invalid(diags));
    }
    Ok(TrialPlan::from_entries(nt, case.candidates.len(), &entries))
}

pub fn load_plan(path: &Path, case: &PlanningCase) -> Result<TrialPlan, IoError> {
    parse_plan(&read(path)?, case)
}

pub fn plan_to_toml(plan: &TrialPlan, case: &PlanningCase) -> String {
    let doc = PlanDoc {
        schema: PLAN_SCHEMA.into(),
        build: plan
            .builds()
            .into_iter()
            .map(|(p, stage)| BuildDoc {
                project: case.candidates[p].id.clone(),
                stage,
            })
            .collect(),
    };
    toml::to_string(&doc).expect("plan documents always serialize")
}

/// Reads an inflow history: one column per hydro (header = hydro id), one row
/// per consecutive stage. Returns the ids and `history[hydro][k]`.
pub fn read_history(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>), IoError> {
    let file = std::fs::File::open(path).map_err(|e| IoError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    history_from_reader(file)
}

/// Parses inflow history text in the format of [`read_history`].
pub fn parse_history(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>), IoError> {
    history_from_reader(text.as_bytes())
}

fn history_from_reader<R: std::io::Read>(reader: R) -> Result<(Vec<String>, Vec<Vec<f64>>), IoError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let ids: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let mut history = vec![Vec::new(); ids.len()];
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        for (i, field) in rec.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                IoError::Invalid(vec![Diagnostic {
                    line: Some(k + 2),
                    path: ids.get(i).cloned().unwrap_or_default(),
                    message: format!("not a number: `{field}`"),
                }])
            })?;
            history[i].push(v);
        }
    }
    Ok((ids, history))
}
