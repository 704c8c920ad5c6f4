//! Plan-to-plan random walks: flip step, swap step, recombination step,
//! and a chain runner that records states into an [`Ensemble`].
//!
//! Every step function takes a valid plan and returns a valid plan; a
//! proposal that would violate contiguity or the population window is a
//! self-loop (the input plan comes back unchanged). Self-loops count as
//! steps, so a chain has a fixed length regardless of rejection rate.
//!
//! The runner reports acceptance counts but no convergence diagnostics,
//! and all steps are accepted whenever valid; weighted or Metropolis-style
//! acceptance targeting a chosen distribution is an extension point, not
//! implemented here.

use rand::prelude::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use thiserror::Error;

use crate::constraints::Constraints;
use crate::ensemble::Ensemble;
use crate::graph::UnitGraph;
use crate::plan::{District, Plan};
use crate::score::{boundary_units, is_contiguous, validate};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    /// Reassign one boundary unit to a neighboring district.
    Flip,
    /// Exchange the labels of the two endpoints of a cut edge.
    Swap,
    /// Merge two adjacent districts and re-partition them with a random
    /// spanning tree cut.
    Recombination,
}

impl StepKind {
    pub fn name(&self) -> &'static str {
        match self {
            StepKind::Flip => "flip",
            StepKind::Swap => "swap",
            StepKind::Recombination => "recom",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ChainConfig {
    pub steps: u64,
    pub kind: StepKind,
    pub constraints: Constraints,
    pub seed: u64,
    pub record_every: u64,
}

#[derive(Debug, Error)]
pub enum ChainError {
    #[error("chain start plan is invalid")]
    InvalidStart,
    #[error("record_every must be >= 1 and <= steps")]
    BadRecordInterval,
}

/// Retry budget for re-drawing spanning trees inside one recombination
/// step before self-looping.
pub const RECOM_TREE_RETRIES: u32 = 100;

fn district_pops(plan: &Plan, graph: &UnitGraph) -> Vec<u64> {
    let mut pops = vec![0u64; plan.k() as usize];
    for (unit, &label) in plan.labels().iter().enumerate() {
        pops[label as usize] += graph.population(unit as u32) as u64;
    }
    pops
}

/// One flip step: pick a uniform random boundary unit, reassign it to a
/// uniform random neighboring district, keep the move iff the plan stays
/// contiguous and population-feasible. Plans with no boundary (k=1)
/// self-loop.
pub fn flip_step(
    plan: &Plan,
    graph: &UnitGraph,
    constraints: &Constraints,
    rng: &mut impl Rng,
) -> Plan {
    let boundary = match boundary_units(plan, graph) {
        Ok(b) => b,
        Err(_) => return plan.clone(),
    };
    let Some(&unit) = boundary.choose(rng) else {
        return plan.clone(); // k=1 or no cut edges
    };
    let labels = plan.labels();
    let from = labels[unit as usize];
    let mut neighbor_districts: Vec<District> = Vec::new();
    for &v in graph.neighbors(unit) {
        let d = labels[v as usize];
        if d != from && !neighbor_districts.contains(&d) {
            neighbor_districts.push(d);
        }
    }
    let Some(&to) = neighbor_districts.choose(rng) else {
        return plan.clone();
    };

    // The donor district must stay nonempty and contiguous; the unit
    // joins `to` through an adjacent member, so `to` stays contiguous.
    let mut pops = district_pops(plan, graph);
    let p = graph.population(unit) as u64;
    if pops[from as usize] == p {
        return plan.clone(); // would empty the donor
    }
    pops[from as usize] -= p;
    pops[to as usize] += p;
    if !constraints.district_feasible(pops[from as usize], graph)
        || !constraints.district_feasible(pops[to as usize], graph)
    {
        return plan.clone();
    }

    let mut next = plan.clone();
    next.assign(unit, to).expect("label in range");
    if constraints.require_contiguity && !is_contiguous(&next, graph, from).unwrap_or(false) {
        return plan.clone();
    }
    next
}

/// One swap step: pick a uniform random cut edge and exchange its
/// endpoints' labels; accept iff the result is valid.
pub fn swap_step(
    plan: &Plan,
    graph: &UnitGraph,
    constraints: &Constraints,
    rng: &mut impl Rng,
) -> Plan {
    let labels = plan.labels();
    let cut: Vec<(u32, u32)> = graph
        .edges()
        .iter()
        .copied()
        .filter(|&(a, b)| labels[a as usize] != labels[b as usize])
        .collect();
    let Some(&(a, b)) = cut.choose(rng) else {
        return plan.clone(); // k=1
    };
    let (da, db) = (labels[a as usize], labels[b as usize]);

    let mut pops = district_pops(plan, graph);
    let (pa, pb) = (graph.population(a) as u64, graph.population(b) as u64);
    pops[da as usize] = pops[da as usize] - pa + pb;
    pops[db as usize] = pops[db as usize] - pb + pa;
    if !constraints.district_feasible(pops[da as usize], graph)
        || !constraints.district_feasible(pops[db as usize], graph)
    {
        return plan.clone();
    }

    let mut next = plan.clone();
    next.assign(a, db).expect("label in range");
    next.assign(b, da).expect("label in range");
    if constraints.require_contiguity
        && (!is_contiguous(&next, graph, da).unwrap_or(false)
            || !is_contiguous(&next, graph, db).unwrap_or(false))
    {
        return plan.clone();
    }
    next
}

/// Uniform spanning tree of the subgraph induced by `units`, by Wilson's
/// loop-erased random walk. Returns `parent` indices into `units`
/// (root's parent is itself). `None` if the subgraph is disconnected.
fn wilson_spanning_tree(
    units: &[u32],
    graph: &UnitGraph,
    rng: &mut impl Rng,
) -> Option<Vec<usize>> {
    let m = units.len();
    let mut index_of = vec![usize::MAX; graph.num_units()];
    for (i, &u) in units.iter().enumerate() {
        index_of[u as usize] = i;
    }
    let mut parent = vec![usize::MAX; m];
    let mut in_tree = vec![false; m];
    let root = rng.random_range(0..m);
    in_tree[root] = true;
    parent[root] = root;

    let mut next = vec![usize::MAX; m];
    for start in 0..m {
        if in_tree[start] {
            continue;
        }
        // Random walk from `start` until the tree is hit, remembering only
        // the last exit from each node (loop erasure).
        let mut u = start;
        let mut steps = 0u64;
        let cap = 1_000_000u64.max((m as u64) * (m as u64) * 64);
        while !in_tree[u] {
            let nbrs: Vec<usize> = graph.neighbors(units[u])
                .iter()
                .map(|&v| index_of[v as usize])
                .filter(|&i| i != usize::MAX)
                .collect();
            if nbrs.is_empty() {
                return None;
            }
            next[u] = *nbrs.choose(rng).unwrap();
            u = next[u];
            steps += 1;
            if steps > cap {
                return None; // effectively disconnected
            }
        }
        // Retrace the loop-erased path and attach it.
        let mut v = start;
        while !in_tree[v] {
            in_tree[v] = true;
            parent[v] = next[v];
            v = next[v];
        }
    }
    Some(parent)
}

/// One recombination step: merge a uniform random pair of adjacent
/// districts, re-partition the union by cutting a uniform random
/// population-feasible edge of a uniform random spanning tree. Districts
/// outside the pair are untouched. Self-loops after the retry budget.
pub fn recom_step(
    plan: &Plan,
    graph: &UnitGraph,
    constraints: &Constraints,
    rng: &mut impl Rng,
) -> Plan {
    if plan.k() < 2 {
        return plan.clone();
    }
    let labels = plan.labels();
    let mut pairs: Vec<(District, District)> = Vec::new();
    for &(a, b) in graph.edges() {
        let (da, db) = (labels[a as usize], labels[b as usize]);
        if da != db {
            let pair = (da.min(db), da.max(db));
            if !pairs.contains(&pair) {
                pairs.push(pair);
            }
        }
    }
    pairs.sort_unstable();
    let Some(&(da, db)) = pairs.choose(rng) else {
        return plan.clone();
    };

    let units: Vec<u32> = (0..graph.num_units() as u32)
        .filter(|&u| labels[u as usize] == da || labels[u as usize] == db)
        .collect();
    let total: u64 = units.iter().map(|&u| graph.population(u) as u64).sum();
    let (lo, hi) = constraints.population_bounds(graph);
    let slack = crate::constraints::POP_EPS * constraints.ideal(graph).max(1.0);
    let feasible = |p: f64| p >= lo - slack && p <= hi + slack;

    for _ in 0..RECOM_TREE_RETRIES {
        let Some(parent) = wilson_spanning_tree(&units, graph, rng) else {
            return plan.clone(); // merged region disconnected; nothing to do
        };
        let m = units.len();
        // Subtree populations by processing nodes deepest-first.
        let mut order: Vec<usize> = Vec::with_capacity(m);
        let mut depth = vec![0usize; m];
        for (i, slot) in depth.iter_mut().enumerate() {
            let mut d = 0;
            let mut v = i;
            while parent[v] != v {
                v = parent[v];
                d += 1;
            }
            *slot = d;
            order.push(i);
        }
        order.sort_by_key(|&i| std::cmp::Reverse(depth[i]));
        let mut subtree_pop: Vec<u64> = units
            .iter()
            .map(|&u| graph.population(u) as u64)
            .collect();
        for &i in &order {
            if parent[i] != i {
                subtree_pop[parent[i]] += subtree_pop[i];
            }
        }
        // Tree edges whose removal leaves two feasible halves.
        let feasible_cuts: Vec<usize> = (0..m)
            .filter(|&i| parent[i] != i)
            .filter(|&i| {
                feasible(subtree_pop[i] as f64) && feasible((total - subtree_pop[i]) as f64)
            })
            .collect();
        let Some(&cut_at) = feasible_cuts.choose(rng) else {
            continue; // fresh tree
        };
        // The child side of the cut edge.
        let mut in_child = vec![false; m];
        in_child[cut_at] = true;
        // Mark descendants: repeatedly propagate along parent pointers.
        for &i in order.iter().rev() {
            if parent[i] != i && in_child[parent[i]] {
                in_child[i] = true;
            }
        }
        let child_units: Vec<u32> = (0..m).filter(|&i| in_child[i]).map(|i| units[i]).collect();
        // Deterministic label mapping: the side holding the smallest unit
        // id keeps the smaller district label.
        let min_unit = *units.iter().min().unwrap();
        let child_has_min = child_units.contains(&min_unit);
        let (child_label, other_label) = if child_has_min { (da, db) } else { (db, da) };
        let mut next = plan.clone();
        for &u in &units {
            let lab = if in_child[index_in(&units, u)] {
                child_label
            } else {
                other_label
            };
            next.assign(u, lab).expect("label in range");
        }
        return next;
    }
    plan.clone()
}

fn index_in(units: &[u32], u: u32) -> usize {
    units.binary_search(&u).expect("unit belongs to merged region")
}

/// Apply one step of `kind`; the returned plan is always valid if the
/// input was.
pub fn step(
    kind: StepKind,
    plan: &Plan,
    graph: &UnitGraph,
    constraints: &Constraints,
    rng: &mut impl Rng,
) -> Plan {
    match kind {
        StepKind::Flip => flip_step(plan, graph, constraints, rng),
        StepKind::Swap => swap_step(plan, graph, constraints, rng),
        StepKind::Recombination => recom_step(plan, graph, constraints, rng),
    }
}

/// Run a random walk of `config.steps` steps from `start`, recording the
/// start and every `record_every`-th state. Returns the recorded ensemble;
/// acceptance statistics land in the ensemble's algorithm descriptor.
pub fn run_chain(
    start: &Plan,
    config: &ChainConfig,
    graph: &UnitGraph,
) -> Result<Ensemble, ChainError> {
    if !validate(start, graph, &config.constraints).valid {
        return Err(ChainError::InvalidStart);
    }
    if config.record_every == 0 || (config.steps > 0 && config.record_every > config.steps) {
        return Err(ChainError::BadRecordInterval);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut ensemble = Ensemble::new(
        graph,
        format!(
            "chain kind={} steps={} record_every={}",
            config.kind.name(),
            config.steps,
            config.record_every
        ),
        config.seed,
    );
    let mut current = start.clone();
    ensemble
        .push(0, current.clone(), graph, &config.constraints)
        .expect("start is valid");
    let mut accepted = 0u64;
    for s in 1..=config.steps {
        let next = step(config.kind, &current, graph, &config.constraints, &mut rng);
        if next != current {
            accepted += 1;
        }
        current = next;
        if s % config.record_every == 0 {
            ensemble
                .push(s, current.clone(), graph, &config.constraints)
                .expect("chain states stay valid");
        }
    }
    ensemble.algorithm = format!(
        "{} accepted={} self_loops={}",
        ensemble.algorithm,
        accepted,
        config.steps - accepted
    );
    Ok(ensemble)
}
