//! Collections of plans with provenance: which instance, which algorithm,
//! which seed — plus per-plan scores and a text serialization.
//!
//! Ensemble files are CSV with `#`-prefixed metadata lines. The assignment
//! column stores space-separated 1-based district labels (0 = unassigned),
//! one entry per unit in id order.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::constraints::Constraints;
use crate::graph::UnitGraph;
use crate::plan::{District, Plan, PlanError};
use crate::score::{cut_edges, max_deviation};

#[derive(Debug, Error)]
pub enum EnsembleError {
    #[error("{0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error("ensemble is for instance hash {expected:#x}, got graph {got:#x}")]
    InstanceMismatch { expected: u64, got: u64 },
}

fn parse_err(line: usize, message: impl Into<String>) -> EnsembleError {
    EnsembleError::Parse {
        line,
        message: message.into(),
    }
}

/// One recorded plan with the step index it was recorded at and its scores.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanRecord {
    pub step: u64,
    pub plan: Plan,
    pub cut_edges: u32,
    pub deviation: f64,
}

/// A list of plans with provenance. All plans are sized to the same
/// instance, identified by the graph content hash.
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub instance_name: String,
    pub instance_hash: u64,
    pub algorithm: String,
    pub seed: u64,
    pub records: Vec<PlanRecord>,
}

impl Ensemble {
    pub fn new(graph: &UnitGraph, algorithm: impl Into<String>, seed: u64) -> Self {
        Ensemble {
            instance_name: graph.name().to_string(),
            instance_hash: graph.hash(),
            algorithm: algorithm.into(),
            seed,
            records: Vec::new(),
        }
    }

    /// Score and append a plan. The plan must be complete, and `graph`
    /// must be the instance this ensemble was created for.
    pub fn push(
        &mut self,
        step: u64,
        plan: Plan,
        graph: &UnitGraph,
        constraints: &Constraints,
    ) -> Result<(), crate::score::ScoreError> {
        debug_assert_eq!(graph.hash(), self.instance_hash);
        let cut = cut_edges(&plan, graph)?;
        let dev = max_deviation(&plan, graph, constraints)?;
        self.records.push(PlanRecord {
            step,
            plan,
            cut_edges: cut,
            deviation: dev,
        });
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn plans(&self) -> impl Iterator<Item = &Plan> {
        self.records.iter().map(|r| &r.plan)
    }

    pub fn cut_edge_scores(&self) -> Vec<u32> {
        self.records.iter().map(|r| r.cut_edges).collect()
    }
}

/// Serialize to the ensemble CSV format. `extra_metadata` lines land in
/// the header after the standard provenance fields.
pub fn write_ensemble(ensemble: &Ensemble, extra_metadata: &[(String, String)]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# planlab-ensemble 1");
    let _ = writeln!(
        out,
        "# instance {} {:#018x}",
        if ensemble.instance_name.is_empty() {
            "unnamed"
        } else {
            &ensemble.instance_name
        },
        ensemble.instance_hash
    );
    let _ = writeln!(out, "# algorithm {}", ensemble.algorithm);
    let _ = writeln!(out, "# seed {}", ensemble.seed);
    for (key, value) in extra_metadata {
        let _ = writeln!(out, "# {key} {value}");
    }
    out.push_str("record,step,cut_edges,deviation,assignment\n");
    for (i, rec) in ensemble.records.iter().enumerate() {
        let assignment: Vec<String> = (0..rec.plan.num_units() as u32)
            .map(|u| match rec.plan.district_of(u) {
                Some(d) => (d + 1).to_string(),
                None => "0".to_string(),
            })
            .collect();
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            i,
            rec.step,
            rec.cut_edges,
            rec.deviation,
            assignment.join(" ")
        );
    }
    out
}

pub fn read_ensemble(text: &str) -> Result<Ensemble, EnsembleError> {
    let mut ensemble = Ensemble {
        instance_name: String::new(),
        instance_hash: 0,
        algorithm: String::new(),
        seed: 0,
        records: Vec::new(),
    };
    let mut saw_data_header = false;
    let mut k: Option<District> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let tokens: Vec<&str> = comment.split_whitespace().collect();
            match tokens.first() {
                Some(&"instance") if tokens.len() >= 3 => {
                    ensemble.instance_name = tokens[1].to_string();
                    let h = tokens[2].trim_start_matches("0x");
                    ensemble.instance_hash = u64::from_str_radix(h, 16)
                        .map_err(|_| parse_err(line_no, "bad instance hash"))?;
                }
                Some(&"algorithm") => ensemble.algorithm = tokens[1..].join(" "),
                Some(&"seed") if tokens.len() >= 2 => {
                    ensemble.seed = tokens[1]
                        .parse()
                        .map_err(|_| parse_err(line_no, "bad seed"))?;
                }
                Some(&"k") if tokens.len() >= 2 => {
                    k = tokens[1].parse().ok();
                }
                _ => {}
            }
            continue;
        }
        if !saw_data_header {
            if line != "record,step,cut_edges,deviation,assignment" {
                return Err(parse_err(line_no, "expected ensemble column header"));
            }
            saw_data_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(parse_err(line_no, "expected 5 comma-separated fields"));
        }
        let step: u64 = fields[1]
            .parse()
            .map_err(|_| parse_err(line_no, "bad step"))?;
        let cut: u32 = fields[2]
            .parse()
            .map_err(|_| parse_err(line_no, "bad cut_edges"))?;
        let deviation: f64 = fields[3]
            .parse()
            .map_err(|_| parse_err(line_no, "bad deviation"))?;
        let mut labels = Vec::new();
        let mut max_label: u32 = 0;
        for tok in fields[4].split_whitespace() {
            let v: u32 = tok
                .parse()
                .map_err(|_| parse_err(line_no, format!("bad label `{tok}`")))?;
            labels.push(if v == 0 {
                Plan::UNASSIGNED
            } else {
                (v - 1) as District
            });
            max_label = max_label.max(v);
        }
        let plan_k = k.unwrap_or(max_label.max(1) as District);
        let plan = Plan::from_labels(labels, plan_k)?;
        ensemble.records.push(PlanRecord {
            step,
            plan,
            cut_edges: cut,
            deviation,
        });
    }
    if !saw_data_header {
        return Err(parse_err(1, "missing ensemble column header"));
    }
    Ok(ensemble)
}

pub fn save_ensemble(
    path: impl AsRef<Path>,
    ensemble: &Ensemble,
    extra_metadata: &[(String, String)],
) -> Result<(), EnsembleError> {
    fs::write(path, write_ensemble(ensemble, extra_metadata))?;
    Ok(())
}

pub fn load_ensemble(path: impl AsRef<Path>) -> Result<Ensemble, EnsembleError> {
    read_ensemble(&fs::read_to_string(path)?)
}
