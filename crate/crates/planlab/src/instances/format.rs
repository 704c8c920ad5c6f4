//! The instance and plan file formats.
//!
//! Both formats are line-oriented text. Unit ids are 0-based; district
//! labels are written 1-based for human readability, with 0 meaning
//! "unassigned". Adjacency is always explicit in the file — never derived
//! from coordinates.
//!
//! Instance format (version 1):
//!
//! ```text
//! planlab-instance 1
//! name iowa
//! units 99
//! unit 0 14330 x=647.0 y=62.0 name=Allamakee
//! ...
//! edge 0 1
//! ...
//! plan enacted 4 1 1 2 ...     # name, k, then one 1-based label per unit
//! ```
//!
//! `unit` lines carry `id population` followed by optional `x=`, `y=`,
//! `county=`, `name=` fields. Blank lines and `#` comments are ignored.
//!
//! Plan format (version 1): CSV with a `unit,district` header, one row per
//! unit, preceded by `#` metadata lines.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::graph::{GraphError, UnitGraph};
use crate::plan::{District, Plan, PlanError};

pub const INSTANCE_FORMAT_VERSION: u32 = 1;
pub const PLAN_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error("plan has {got} units but instance has {expected}")]
    PlanSize { expected: usize, got: usize },
}

fn parse_err(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Parse {
        line,
        message: message.into(),
    }
}

/// A loaded instance: the graph plus any named reference plans stored in
/// the file (for example `enacted`).
#[derive(Debug, Clone)]
pub struct Instance {
    pub graph: UnitGraph,
    pub reference_plans: BTreeMap<String, Plan>,
}

struct UnitLine {
    id: u32,
    population: u32,
    x: Option<f64>,
    y: Option<f64>,
    county: Option<String>,
    name: Option<String>,
}

fn parse_unit_line(line_no: usize, rest: &[&str]) -> Result<UnitLine, FormatError> {
    if rest.len() < 2 {
        return Err(parse_err(line_no, "unit line needs `unit <id> <population>`"));
    }
    let id: u32 = rest[0]
        .parse()
        .map_err(|_| parse_err(line_no, format!("bad unit id `{}`", rest[0])))?;
    let population: u32 = rest[1]
        .parse()
        .map_err(|_| parse_err(line_no, format!("bad population `{}`", rest[1])))?;
    let mut unit = UnitLine {
        id,
        population,
        x: None,
        y: None,
        county: None,
        name: None,
    };
    for field in &rest[2..] {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| parse_err(line_no, format!("expected key=value, got `{field}`")))?;
        match key {
            "x" => {
                unit.x = Some(value.parse().map_err(|_| {
                    parse_err(line_no, format!("bad x coordinate `{value}`"))
                })?)
            }
            "y" => {
                unit.y = Some(value.parse().map_err(|_| {
                    parse_err(line_no, format!("bad y coordinate `{value}`"))
                })?)
            }
            "county" => unit.county = Some(value.to_string()),
            "name" => unit.name = Some(value.to_string()),
            other => return Err(parse_err(line_no, format!("unknown unit field `{other}`"))),
        }
    }
    Ok(unit)
}

/// Parse an instance from text. Errors carry the offending line number.
pub fn read_instance(text: &str) -> Result<Instance, FormatError> {
    let mut name = String::new();
    let mut declared_units: Option<usize> = None;
    let mut units: Vec<UnitLine> = Vec::new();
    let mut edges: Vec<(u32, u32)> = Vec::new();
    let mut plans: Vec<(usize, String, District, Vec<District>)> = Vec::new();
    let mut saw_header = false;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.split_once('#') {
            Some((before, _)) => before.trim(),
            None => raw.trim(),
        };
        if line.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if !saw_header {
            if tokens.len() != 2 || tokens[0] != "planlab-instance" {
                return Err(parse_err(line_no, "expected header `planlab-instance <version>`"));
            }
            let version: u32 = tokens[1]
                .parse()
                .map_err(|_| parse_err(line_no, "bad version number"))?;
            if version != INSTANCE_FORMAT_VERSION {
                return Err(parse_err(
                    line_no,
                    format!("unsupported instance format version {version}"),
                ));
            }
            saw_header = true;
            continue;
        }
        match tokens[0] {
            "name" => {
                name = tokens[1..].join(" ");
            }
            "units" => {
                let count: usize = tokens
                    .get(1)
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| parse_err(line_no, "bad unit count"))?;
                declared_units = Some(count);
            }
            "unit" => units.push(parse_unit_line(line_no, &tokens[1..])?),
            "edge" => {
                if tokens.len() != 3 {
                    return Err(parse_err(line_no, "edge line needs `edge <a> <b>`"));
                }
                let a: u32 = tokens[1]
                    .parse()
                    .map_err(|_| parse_err(line_no, format!("bad unit id `{}`", tokens[1])))?;
                let b: u32 = tokens[2]
                    .parse()
                    .map_err(|_| parse_err(line_no, format!("bad unit id `{}`", tokens[2])))?;
                edges.push((a, b));
            }
            "plan" => {
                if tokens.len() < 3 {
                    return Err(parse_err(line_no, "plan line needs `plan <name> <k> <labels...>`"));
                }
                let plan_name = tokens[1].to_string();
                let k: District = tokens[2]
                    .parse()
                    .map_err(|_| parse_err(line_no, format!("bad district count `{}`", tokens[2])))?;
                let mut labels = Vec::with_capacity(tokens.len() - 3);
                for t in &tokens[3..] {
                    let v: u32 = t
                        .parse()
                        .map_err(|_| parse_err(line_no, format!("bad district label `{t}`")))?;
                    labels.push(if v == 0 {
                        Plan::UNASSIGNED
                    } else {
                        (v - 1) as District
                    });
                }
                plans.push((line_no, plan_name, k, labels));
            }
            other => return Err(parse_err(line_no, format!("unknown directive `{other}`"))),
        }
    }

    if !saw_header {
        return Err(parse_err(1, "empty instance file"));
    }
    let n = units.len();
    if let Some(declared) = declared_units {
        if declared != n {
            return Err(parse_err(
                1,
                format!("header declares {declared} units but {n} unit lines found"),
            ));
        }
    }

    // Unit ids must be exactly 0..n in order of appearance.
    let mut populations = vec![0u32; n];
    let mut seen = vec![false; n];
    for u in &units {
        if u.id as usize >= n || seen[u.id as usize] {
            return Err(parse_err(
                1,
                format!("unit ids must be a permutation of 0..{n}; problem at id {}", u.id),
            ));
        }
        seen[u.id as usize] = true;
        populations[u.id as usize] = u.population;
    }

    let has_centroids = units.iter().any(|u| u.x.is_some() || u.y.is_some());
    let centroids = if has_centroids {
        let mut cs = vec![(0.0, 0.0); n];
        for u in &units {
            match (u.x, u.y) {
                (Some(x), Some(y)) => cs[u.id as usize] = (x, y),
                _ => {
                    return Err(parse_err(
                        1,
                        format!("unit {} has a partial centroid; x and y are all-or-nothing", u.id),
                    ))
                }
            }
        }
        Some(cs)
    } else {
        None
    };

    let has_counties = units.iter().any(|u| u.county.is_some());
    let counties = if has_counties {
        let mut cs = vec![String::new(); n];
        for u in &units {
            match &u.county {
                Some(c) => cs[u.id as usize] = c.clone(),
                None => {
                    return Err(parse_err(
                        1,
                        format!("unit {} is missing a county label; counties are all-or-nothing", u.id),
                    ))
                }
            }
        }
        Some(cs)
    } else {
        None
    };

    let has_names = units.iter().any(|u| u.name.is_some());
    let unit_names = if has_names {
        let mut ns = vec![String::new(); n];
        for u in &units {
            ns[u.id as usize] = u.name.clone().unwrap_or_default();
        }
        Some(ns)
    } else {
        None
    };

    let mut builder = UnitGraph::builder(populations, edges).name(name);
    if let Some(cs) = centroids {
        builder = builder.centroids(cs);
    }
    if let Some(cs) = counties {
        builder = builder.counties(cs);
    }
    if let Some(ns) = unit_names {
        builder = builder.unit_names(ns);
    }
    let graph = builder.build()?;

    let mut reference_plans = BTreeMap::new();
    for (line_no, plan_name, k, labels) in plans {
        if labels.len() != n {
            return Err(parse_err(
                line_no,
                format!("plan `{plan_name}` has {} labels, expected {n}", labels.len()),
            ));
        }
        let plan = Plan::from_labels(labels, k)?;
        reference_plans.insert(plan_name, plan);
    }

    Ok(Instance {
        graph,
        reference_plans,
    })
}

/// Serialize an instance (graph plus reference plans) to format version 1.
pub fn write_instance(instance: &Instance) -> String {
    let graph = &instance.graph;
    let mut out = String::new();
    let _ = writeln!(out, "planlab-instance {INSTANCE_FORMAT_VERSION}");
    if !graph.name().is_empty() {
        let _ = writeln!(out, "name {}", graph.name());
    }
    let _ = writeln!(out, "units {}", graph.num_units());
    for unit in 0..graph.num_units() as u32 {
        let _ = write!(out, "unit {} {}", unit, graph.population(unit));
        if let Some((x, y)) = graph.centroid(unit) {
            let _ = write!(out, " x={x} y={y}");
        }
        if let Some(counties) = graph.counties() {
            let _ = write!(out, " county={}", graph.county_name(counties[unit as usize]));
        }
        if let Some(name) = graph.unit_name(unit) {
            if !name.is_empty() {
                let _ = write!(out, " name={name}");
            }
        }
        out.push('\n');
    }
    for &(a, b) in graph.edges() {
        let _ = writeln!(out, "edge {a} {b}");
    }
    for (name, plan) in &instance.reference_plans {
        let _ = write!(out, "plan {} {}", name, plan.k());
        for unit in 0..plan.num_units() as u32 {
            match plan.district_of(unit) {
                Some(d) => {
                    let _ = write!(out, " {}", d + 1);
                }
                None => out.push_str(" 0"),
            }
        }
        out.push('\n');
    }
    out
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<Instance, FormatError> {
    read_instance(&fs::read_to_string(path)?)
}

/// Serialize a plan as `unit,district` CSV (districts 1-based, 0 for
/// unassigned). `metadata` lines are emitted as leading `# key value`
/// comments.
pub fn write_plan(plan: &Plan, metadata: &[(String, String)]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# planlab-plan {PLAN_FORMAT_VERSION}");
    let _ = writeln!(out, "# k {}", plan.k());
    for (key, value) in metadata {
        let _ = writeln!(out, "# {key} {value}");
    }
    out.push_str("unit,district\n");
    for unit in 0..plan.num_units() as u32 {
        match plan.district_of(unit) {
            Some(d) => {
                let _ = writeln!(out, "{},{}", unit, d + 1);
            }
            None => {
                let _ = writeln!(out, "{unit},0");
            }
        }
    }
    out
}

/// Parse a plan file. `expected_units`, when given, is enforced against
/// the row count.
pub fn read_plan(text: &str, expected_units: Option<usize>) -> Result<Plan, FormatError> {
    let mut k: Option<District> = None;
    let mut rows: Vec<(u32, u32)> = Vec::new();
    let mut saw_data_header = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let tokens: Vec<&str> = comment.split_whitespace().collect();
            if tokens.first() == Some(&"k") {
                k = Some(
                    tokens
                        .get(1)
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| parse_err(line_no, "bad k metadata"))?,
                );
            }
            continue;
        }
        if !saw_data_header {
            if line != "unit,district" {
                return Err(parse_err(line_no, "expected `unit,district` header"));
            }
            saw_data_header = true;
            continue;
        }
        let (u, d) = line
            .split_once(',')
            .ok_or_else(|| parse_err(line_no, "expected `unit,district` row"))?;
        let unit: u32 = u
            .trim()
            .parse()
            .map_err(|_| parse_err(line_no, format!("bad unit id `{u}`")))?;
        let district: u32 = d
            .trim()
            .parse()
            .map_err(|_| parse_err(line_no, format!("bad district label `{d}`")))?;
        rows.push((unit, district));
    }
    if !saw_data_header {
        return Err(parse_err(1, "missing `unit,district` header"));
    }
    let n = rows.len();
    if let Some(expected) = expected_units {
        if n != expected {
            return Err(FormatError::PlanSize {
                expected,
                got: n,
            });
        }
    }
    let mut labels = vec![Plan::UNASSIGNED; n];
    let mut seen = vec![false; n];
    let mut max_label: u32 = 0;
    for (unit, district) in rows {
        if unit as usize >= n || seen[unit as usize] {
            return Err(parse_err(
                1,
                format!("unit ids must be a permutation of 0..{n}; problem at id {unit}"),
            ));
        }
        seen[unit as usize] = true;
        if district > 0 {
            labels[unit as usize] = (district - 1) as District;
            max_label = max_label.max(district);
        }
    }
    let k = k.unwrap_or(max_label.max(1) as District);
    Ok(Plan::from_labels(labels, k)?)
}

pub fn save_plan(
    path: impl AsRef<Path>,
    plan: &Plan,
    metadata: &[(String, String)],
) -> Result<(), FormatError> {
    fs::write(path, write_plan(plan, metadata))?;
    Ok(())
}

pub fn load_plan(path: impl AsRef<Path>, expected_units: Option<usize>) -> Result<Plan, FormatError> {
    read_plan(&fs::read_to_string(path)?, expected_units)
}
