//! Plan scoring and validity predicates: cut edges, district populations,
//! population deviation, contiguity, and the aggregate report.
//!
//! All functions here are pure; the same plan and graph always score the
//! same way regardless of how the plan was produced.

use thiserror::Error;

use crate::constraints::Constraints;
use crate::graph::UnitGraph;
use crate::plan::{District, Plan};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScoreError {
    #[error("incomplete plan")]
    IncompletePlan,
    #[error("plan has {got} units but graph has {expected}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("district {0} is empty")]
    EmptyDistrict(District),
    #[error("degenerate instance: total population is zero")]
    DegenerateInstance,
}

fn check_sized(plan: &Plan, graph: &UnitGraph) -> Result<(), ScoreError> {
    if plan.num_units() != graph.num_units() {
        return Err(ScoreError::SizeMismatch {
            expected: graph.num_units(),
            got: plan.num_units(),
        });
    }
    Ok(())
}

fn check_complete(plan: &Plan, graph: &UnitGraph) -> Result<(), ScoreError> {
    check_sized(plan, graph)?;
    if !plan.is_complete() {
        return Err(ScoreError::IncompletePlan);
    }
    Ok(())
}

/// Number of adjacent unit pairs assigned to different districts.
pub fn cut_edges(plan: &Plan, graph: &UnitGraph) -> Result<u32, ScoreError> {
    check_complete(plan, graph)?;
    let labels = plan.labels();
    let count = graph
        .edges()
        .iter()
        .filter(|&&(a, b)| labels[a as usize] != labels[b as usize])
        .count();
    Ok(count as u32)
}

/// Population of each district, indexed by label. Sums to the graph total
/// for every complete plan.
pub fn district_populations(plan: &Plan, graph: &UnitGraph) -> Result<Vec<u64>, ScoreError> {
    check_complete(plan, graph)?;
    let mut pops = vec![0u64; plan.k() as usize];
    for (unit, &label) in plan.labels().iter().enumerate() {
        pops[label as usize] += graph.population(unit as u32) as u64;
    }
    Ok(pops)
}

/// Max over districts of |pop − ideal| / ideal, with ideal = total / k.
pub fn max_deviation(plan: &Plan, graph: &UnitGraph, constraints: &Constraints) -> Result<f64, ScoreError> {
    check_complete(plan, graph)?;
    if graph.total_population() == 0 {
        return Err(ScoreError::DegenerateInstance);
    }
    let ideal = constraints.ideal(graph);
    let pops = district_populations(plan, graph)?;
    Ok(pops
        .iter()
        .map(|&p| (p as f64 - ideal).abs() / ideal)
        .fold(0.0, f64::max))
}

/// True iff the units labeled `district` induce a connected subgraph.
/// The plan may be partial; only the labeled units are considered.
pub fn is_contiguous(plan: &Plan, graph: &UnitGraph, district: District) -> Result<bool, ScoreError> {
    check_sized(plan, graph)?;
    let labels = plan.labels();
    let members: Vec<u32> = plan.district_units(district);
    if members.is_empty() {
        return Err(ScoreError::EmptyDistrict(district));
    }
    let mut seen = vec![false; graph.num_units()];
    let mut stack = vec![members[0]];
    seen[members[0] as usize] = true;
    let mut count = 1usize;
    while let Some(u) = stack.pop() {
        for &v in graph.neighbors(u) {
            if labels[v as usize] == district && !seen[v as usize] {
                seen[v as usize] = true;
                count += 1;
                stack.push(v);
            }
        }
    }
    Ok(count == members.len())
}

/// Units with at least one neighbor in a different district; exactly the
/// endpoints of the cut edges. Sorted by unit id.
pub fn boundary_units(plan: &Plan, graph: &UnitGraph) -> Result<Vec<u32>, ScoreError> {
    check_complete(plan, graph)?;
    let labels = plan.labels();
    let mut on_boundary = vec![false; graph.num_units()];
    for &(a, b) in graph.edges() {
        if labels[a as usize] != labels[b as usize] {
            on_boundary[a as usize] = true;
            on_boundary[b as usize] = true;
        }
    }
    Ok(on_boundary
        .iter()
        .enumerate()
        .filter(|&(_, &x)| x)
        .map(|(i, _)| i as u32)
        .collect())
}

/// Everything `validate` measures about a plan. Invalidity is data, not an
/// error: incomplete plans come back with `valid == false` and the
/// complete-plan-only scores omitted.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreReport {
    pub cut_edges: Option<u32>,
    pub district_populations: Vec<u64>,
    pub max_deviation: Option<f64>,
    /// Per-district contiguity; empty districts report `false`.
    pub contiguous: Vec<bool>,
    pub complete: bool,
    pub valid: bool,
}

/// Score a plan against constraints. Never errors: any defect (incomplete
/// plan, size or k mismatch, empty district, discontiguity, imbalance)
/// is reported through the flags.
pub fn validate(plan: &Plan, graph: &UnitGraph, constraints: &Constraints) -> ScoreReport {
    let k = plan.k() as usize;
    let sized = plan.num_units() == graph.num_units();
    let complete = sized && plan.is_complete();

    let mut pops = vec![0u64; k];
    if sized {
        for (unit, &label) in plan.labels().iter().enumerate() {
            if label != Plan::UNASSIGNED {
                pops[label as usize] += graph.population(unit as u32) as u64;
            }
        }
    }

    let mut contiguous = vec![false; k];
    if sized {
        for d in 0..plan.k() {
            contiguous[d as usize] = is_contiguous(plan, graph, d).unwrap_or(false);
        }
    }

    let cut = if complete {
        cut_edges(plan, graph).ok()
    } else {
        None
    };
    let deviation = if complete && graph.total_population() > 0 {
        max_deviation(plan, graph, constraints).ok()
    } else {
        None
    };

    let all_feasible = pops.iter().all(|&p| constraints.district_feasible(p, graph));
    let contiguity_ok = !constraints.require_contiguity || contiguous.iter().all(|&c| c);
    let valid = complete
        && plan.k() == constraints.k
        && deviation.is_some()
        && all_feasible
        && contiguity_ok;

    ScoreReport {
        cut_edges: cut,
        district_populations: pops,
        max_deviation: deviation,
        contiguous,
        complete,
        valid,
    }
}
