//! Metaheuristic optimizers over the chain neighborhoods: hill climbing,
//! simulated annealing, tabu search, and an evolutionary algorithm with
//! common-refinement crossover.
//!
//! All optimizers carry a best-ever contract: the returned plan is valid
//! and scores no worse than the start. Runs are deterministic given the
//! rng seed.

use std::collections::{HashSet, VecDeque};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::chains::{self, StepKind};
use crate::constraints::Constraints;
use crate::graph::UnitGraph;
use crate::optimize::{Objective, OptimizeError};
use crate::plan::{District, Plan};
use crate::samplers::{merge_regions_until, rebalance, regions_to_plan, Region};
use crate::score::{boundary_units, is_contiguous, validate};

use super::AnnealSchedule;

/// Result of a metaheuristic run.
#[derive(Debug, Clone)]
pub struct OptimizeRun {
    pub best: Plan,
    pub best_objective: f64,
    /// Objective of the current state after each accepted move (hill
    /// climb, annealing, tabu) or the per-generation population minimum
    /// (evolutionary).
    pub trace: Vec<f64>,
    pub steps: u64,
}

const SCAN_TREES_PER_PAIR: u32 = 8;
const STALE_BEFORE_SCAN: u32 = 64;
const TABU_CANDIDATES: usize = 32;

fn check_start(
    start: &Plan,
    graph: &UnitGraph,
    constraints: &Constraints,
    objective: &Objective,
) -> Result<f64, OptimizeError> {
    objective.check(graph)?;
    if !validate(start, graph, constraints).valid {
        return Err(OptimizeError::InvalidStart);
    }
    Ok(objective.evaluate(start, graph, constraints)?)
}

/// Deterministic scan of the full flip neighborhood for a strictly
/// improving valid move; the swap scan is analogous. Recombination has no
/// finite proposal list, so its "scan" tries a bounded number of trees per
/// adjacent district pair.
fn scan_improving(
    kind: StepKind,
    plan: &Plan,
    objective_value: f64,
    graph: &UnitGraph,
    constraints: &Constraints,
    objective: &Objective,
    rng: &mut ChaCha8Rng,
) -> Option<(Plan, f64)> {
    let mut best: Option<(Plan, f64)> = None;
    let consider = |candidate: Plan, obj: f64, best: &mut Option<(Plan, f64)>| {
        if obj < objective_value - 1e-12 && best.as_ref().is_none_or(|(_, b)| obj < *b) {
            *best = Some((candidate, obj));
        }
    };
    match kind {
        StepKind::Flip => {
            let labels = plan.labels();
            for unit in boundary_units(plan, graph).unwrap_or_default() {
                let from = labels[unit as usize];
                let mut targets: Vec<District> = Vec::new();
                for &v in graph.neighbors(unit) {
                    let d = plan.labels()[v as usize];
                    if d != from && !targets.contains(&d) {
                        targets.push(d);
                    }
                }
                for to in targets {
                    let mut next = plan.clone();
                    next.assign(unit, to).expect("label in range");
                    if validate(&next, graph, constraints).valid {
                        if let Ok(obj) = objective.evaluate(&next, graph, constraints) {
                            consider(next, obj, &mut best);
                        }
                    }
                }
            }
        }
        StepKind::Swap => {
            let labels = plan.labels();
            for &(a, b) in graph.edges() {
                let (da, db) = (labels[a as usize], labels[b as usize]);
                if da == db {
                    continue;
                }
                let mut next = plan.clone();
                next.assign(a, db).expect("label in range");
                next.assign(b, da).expect("label in range");
                if validate(&next, graph, constraints).valid {
                    if let Ok(obj) = objective.evaluate(&next, graph, constraints) {
                        consider(next, obj, &mut best);
                    }
                }
            }
        }
        StepKind::Recombination => {
            for _ in 0..SCAN_TREES_PER_PAIR {
                let next = chains::recom_step(plan, graph, constraints, rng);
                if next != *plan {
                    if let Ok(obj) = objective.evaluate(&next, graph, constraints) {
                        consider(next, obj, &mut best);
                    }
                }
            }
        }
    }
    best
}

/// Strict hill climbing: propose random neighborhood steps, accept only
/// strict improvements; stop at `max_steps` or when a full neighborhood
/// scan finds no improvement.
pub fn hill_climb(
    start: &Plan,
    graph: &UnitGraph,
    constraints: &Constraints,
    objective: &Objective,
    neighborhood: StepKind,
    max_steps: u64,
    rng: &mut ChaCha8Rng,
) -> Result<OptimizeRun, OptimizeError> {
    let start_obj = check_start(start, graph, constraints, objective)?;
    let mut current = start.clone();
    let mut current_obj = start_obj;
    let mut trace = vec![current_obj];
    let mut steps = 0u64;
    let mut stale = 0u32;

    while steps < max_steps {
        steps += 1;
        let candidate = chains::step(neighborhood, &current, graph, constraints, rng);
        let mut improved = false;
        if candidate != current {
            let obj = objective.evaluate(&candidate, graph, constraints)?;
            if obj < current_obj - 1e-12 {
                current = candidate;
                current_obj = obj;
                trace.push(current_obj);
                improved = true;
            }
        }
        if improved {
            stale = 0;
            continue;
        }
        stale += 1;
        if stale >= STALE_BEFORE_SCAN {
            match scan_improving(
                neighborhood,
                &current,
                current_obj,
                graph,
                constraints,
                objective,
                rng,
            ) {
                Some((plan, obj)) => {
                    current = plan;
                    current_obj = obj;
                    trace.push(current_obj);
                    stale = 0;
                }
                None => break, // local optimum
            }
        }
    }
    Ok(OptimizeRun {
        best: current,
        best_objective: current_obj,
        trace,
        steps,
    })
}

/// Simulated annealing with geometric cooling: improving moves always
/// accepted, worsening moves with probability exp(−Δ/T). Returns the best
/// plan ever visited, not the final state.
pub fn simulated_annealing(
    start: &Plan,
    graph: &UnitGraph,
    constraints: &Constraints,
    objective: &Objective,
    schedule: &AnnealSchedule,
    neighborhood: StepKind,
    rng: &mut ChaCha8Rng,
) -> Result<OptimizeRun, OptimizeError> {
    schedule.check()?;
    let start_obj = check_start(start, graph, constraints, objective)?;
    let mut current = start.clone();
    let mut current_obj = start_obj;
    let mut best = current.clone();
    let mut best_obj = current_obj;
    let mut trace = vec![current_obj];
    let mut temperature = schedule.initial_temperature;
    let mut steps = 0u64;

    for _ in 0..schedule.epochs {
        for _ in 0..schedule.steps_per_temperature {
            steps += 1;
            let candidate = chains::step(neighborhood, &current, graph, constraints, rng);
            if candidate == current {
                continue;
            }
            let obj = objective.evaluate(&candidate, graph, constraints)?;
            let delta = obj - current_obj;
            let accept = delta <= 0.0 || rng.random::<f64>() < (-delta / temperature).exp();
            if accept {
                current = candidate;
                current_obj = obj;
                trace.push(current_obj);
                if current_obj < best_obj {
                    best = current.clone();
                    best_obj = current_obj;
                }
            }
        }
        temperature *= schedule.cooling_factor;
    }
    Ok(OptimizeRun {
        best,
        best_objective: best_obj,
        trace,
        steps,
    })
}

/// Tabu search: move to the best non-tabu sampled neighbor even when it is
/// worse; the tabu list holds the canonical hashes of the last `tenure`
/// visited states. Terminates early when no non-tabu neighbor can be
/// found. Returns the best plan ever visited.
#[allow(clippy::too_many_arguments)]
pub fn tabu_search(
    start: &Plan,
    graph: &UnitGraph,
    constraints: &Constraints,
    objective: &Objective,
    tenure: usize,
    max_steps: u64,
    neighborhood: StepKind,
    rng: &mut ChaCha8Rng,
) -> Result<OptimizeRun, OptimizeError> {
    let start_obj = check_start(start, graph, constraints, objective)?;
    let tenure = tenure.max(1);
    let mut current = start.clone();
    let mut current_obj = start_obj;
    let mut best = current.clone();
    let mut best_obj = current_obj;
    let mut trace = vec![current_obj];
    let mut steps = 0u64;

    let mut tabu_order: VecDeque<u64> = VecDeque::new();
    let mut tabu_set: HashSet<u64> = HashSet::new();
    let remember = |hash: u64, order: &mut VecDeque<u64>, set: &mut HashSet<u64>| {
        if set.insert(hash) {
            order.push_back(hash);
            if order.len() > tenure {
                if let Some(old) = order.pop_front() {
                    set.remove(&old);
                }
            }
        }
    };
    remember(current.partition_hash(), &mut tabu_order, &mut tabu_set);

    while steps < max_steps {
        steps += 1;
        // Sampled candidates first, deterministic scan as a fallback.
        let mut pool: Vec<(f64, Plan)> = Vec::new();
        for _ in 0..TABU_CANDIDATES {
            let candidate = chains::step(neighborhood, &current, graph, constraints, rng);
            if candidate == current || tabu_set.contains(&candidate.partition_hash()) {
                continue;
            }
            let obj = objective.evaluate(&candidate, graph, constraints)?;
            pool.push((obj, candidate));
        }
        if pool.is_empty() {
            if let Some(pair) = scan_non_tabu(
                neighborhood,
                &current,
                graph,
                constraints,
                objective,
                &tabu_set,
                rng,
            )? {
                pool.push(pair);
            }
        }
        let Some((obj, next)) = pool
            .into_iter()
            .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
        else {
            break; // no non-tabu neighbor reachable
        };
        current = next;
        current_obj = obj;
        trace.push(current_obj);
        remember(current.partition_hash(), &mut tabu_order, &mut tabu_set);
        if current_obj < best_obj {
            best = current.clone();
            best_obj = current_obj;
        }
    }
    Ok(OptimizeRun {
        best,
        best_objective: best_obj,
        trace,
        steps,
    })
}

/// Deterministic-ish full scan for any valid non-tabu neighbor (used when
/// sampling keeps hitting tabu states). Returns the best by objective.
fn scan_non_tabu(
    kind: StepKind,
    plan: &Plan,
    graph: &UnitGraph,
    constraints: &Constraints,
    objective: &Objective,
    tabu: &HashSet<u64>,
    rng: &mut ChaCha8Rng,
) -> Result<Option<(f64, Plan)>, OptimizeError> {
    let mut best: Option<(f64, Plan)> = None;
    let consider = |candidate: Plan, best: &mut Option<(f64, Plan)>| -> Result<(), OptimizeError> {
        if tabu.contains(&candidate.partition_hash()) {
            return Ok(());
        }
        let obj = objective.evaluate(&candidate, graph, constraints)?;
        if best.as_ref().is_none_or(|(b, _)| obj < *b) {
            *best = Some((obj, candidate));
        }
        Ok(())
    };
    match kind {
        StepKind::Flip => {
            let labels = plan.labels();
            for unit in boundary_units(plan, graph).unwrap_or_default() {
                let from = labels[unit as usize];
                let mut targets: Vec<District> = Vec::new();
                for &v in graph.neighbors(unit) {
                    let d = labels[v as usize];
                    if d != from && !targets.contains(&d) {
                        targets.push(d);
                    }
                }
                for to in targets {
                    let mut next = plan.clone();
                    next.assign(unit, to).expect("label in range");
                    if validate(&next, graph, constraints).valid {
                        consider(next, &mut best)?;
                    }
                }
            }
        }
        StepKind::Swap => {
            let labels = plan.labels();
            for &(a, b) in graph.edges() {
                let (da, db) = (labels[a as usize], labels[b as usize]);
                if da == db {
                    continue;
                }
                let mut next = plan.clone();
                next.assign(a, db).expect("label in range");
                next.assign(b, da).expect("label in range");
                if validate(&next, graph, constraints).valid {
                    consider(next, &mut best)?;
                }
            }
        }
        StepKind::Recombination => {
            for _ in 0..(SCAN_TREES_PER_PAIR * 8) {
                let next = chains::recom_step(plan, graph, constraints, rng);
                if next != *plan {
                    consider(next, &mut best)?;
                }
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone)]
pub struct EvolveConfig {
    pub generations: u32,
    /// Mutation step applied to every parent each generation; `None`
    /// disables mutation.
    pub mutation: Option<StepKind>,
    /// Crossover children attempted per generation.
    pub crossovers_per_generation: u32,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        EvolveConfig {
            generations: 50,
            mutation: Some(StepKind::Flip),
            crossovers_per_generation: 8,
        }
    }
}

/// Evolutionary search: mutation (one chain step) plus common-refinement
/// crossover, elitist truncation selection. Returns the best plan ever in
/// the population; the trace is the per-generation population minimum.
pub fn evolutionary(
    population: &[Plan],
    graph: &UnitGraph,
    constraints: &Constraints,
    objective: &Objective,
    config: &EvolveConfig,
    rng: &mut ChaCha8Rng,
) -> Result<OptimizeRun, OptimizeError> {
    objective.check(graph)?;
    if population.len() < 2 {
        return Err(OptimizeError::PopulationTooSmall);
    }
    let k = population[0].k();
    for p in population {
        if p.k() != k || p.num_units() != population[0].num_units() {
            return Err(OptimizeError::MismatchedPlans);
        }
        if !validate(p, graph, constraints).valid {
            return Err(OptimizeError::InvalidStart);
        }
    }
    let size = population.len();
    let mut pool: Vec<(f64, Plan)> = population
        .iter()
        .map(|p| Ok((objective.evaluate(p, graph, constraints)?, p.clone())))
        .collect::<Result<_, OptimizeError>>()?;
    pool.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut best = pool[0].1.clone();
    let mut best_obj = pool[0].0;
    let mut trace = vec![best_obj];
    let mut steps = 0u64;

    for _ in 0..config.generations {
        let mut children: Vec<(f64, Plan)> = Vec::new();
        if let Some(kind) = config.mutation {
            for (_, parent) in pool.iter() {
                steps += 1;
                let child = chains::step(kind, parent, graph, constraints, rng);
                if child != *parent {
                    let obj = objective.evaluate(&child, graph, constraints)?;
                    children.push((obj, child));
                }
            }
        }
        for _ in 0..config.crossovers_per_generation {
            steps += 1;
            let a = rng.random_range(0..pool.len());
            let mut b = rng.random_range(0..pool.len());
            if a == b {
                b = (b + 1) % pool.len();
            }
            if let Some(child) = crossover(&pool[a].1, &pool[b].1, graph, constraints, rng)? {
                let obj = objective.evaluate(&child, graph, constraints)?;
                children.push((obj, child));
            }
        }
        pool.extend(children);
        pool.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        pool.truncate(size);
        if pool[0].0 < best_obj {
            best_obj = pool[0].0;
            best = pool[0].1.clone();
        }
        trace.push(pool[0].0);
    }
    Ok(OptimizeRun {
        best,
        best_objective: best_obj,
        trace,
        steps,
    })
}

/// Common-refinement crossover: overlay the two parents, take connected
/// components of the label-pair regions, merge adjacent regions (random
/// region, centroid-closest neighbor) back down to k, then rebalance.
/// `Ok(None)` when merging or rebalancing fails.
pub fn crossover(
    parent_a: &Plan,
    parent_b: &Plan,
    graph: &UnitGraph,
    constraints: &Constraints,
    rng: &mut ChaCha8Rng,
) -> Result<Option<Plan>, OptimizeError> {
    if parent_a.k() != parent_b.k() || parent_a.num_units() != parent_b.num_units() {
        return Err(OptimizeError::MismatchedPlans);
    }
    if graph.centroids().is_none() {
        return Err(OptimizeError::MissingCentroids);
    }
    let regions = common_refinement(parent_a, parent_b, graph);
    let k = constraints.k as usize;
    if regions.len() < k {
        return Ok(None);
    }
    let Some(merged) = merge_regions_until(regions, k, graph, rng) else {
        return Ok(None);
    };
    let plan = regions_to_plan(&merged, graph, constraints.k);
    // The merged regions are contiguous by construction.
    debug_assert!((0..constraints.k).all(|d| is_contiguous(&plan, graph, d).unwrap_or(false)));
    let budget = 8 * graph.num_units() as u64;
    let plan = match rebalance(&plan, graph, constraints, budget, rng) {
        Ok(p) => p,
        Err(_) => return Ok(None),
    };
    Ok(validate(&plan, graph, constraints).valid.then_some(plan))
}

/// Connected components of the overlay of two plans: units in the same
/// region share both parents' labels and are connected within the region.
pub fn common_refinement(parent_a: &Plan, parent_b: &Plan, graph: &UnitGraph) -> Vec<Region> {
    let la = parent_a.labels();
    let lb = parent_b.labels();
    let n = graph.num_units();
    let mut region_id = vec![usize::MAX; n];
    let mut regions: Vec<Region> = Vec::new();
    for start in 0..n as u32 {
        if region_id[start as usize] != usize::MAX {
            continue;
        }
        let id = regions.len();
        let mut members = Vec::new();
        let mut stack = vec![start];
        region_id[start as usize] = id;
        while let Some(u) = stack.pop() {
            members.push(u);
            for &v in graph.neighbors(u) {
                if region_id[v as usize] == usize::MAX
                    && la[v as usize] == la[u as usize]
                    && lb[v as usize] == lb[u as usize]
                {
                    region_id[v as usize] = id;
                    stack.push(v);
                }
            }
        }
        members.sort_unstable();
        let pop = members.iter().map(|&u| graph.population(u) as u64).sum();
        let centroid = region_centroid_of(&members, graph);
        regions.push(Region {
            members,
            pop,
            centroid,
        });
    }
    regions
}

fn region_centroid_of(members: &[u32], graph: &UnitGraph) -> (f64, f64) {
    let centroids = graph.centroids().expect("caller checked");
    let total: u64 = members.iter().map(|&u| graph.population(u) as u64).sum();
    let (mut sx, mut sy) = (0.0, 0.0);
    if total > 0 {
        for &u in members {
            let w = graph.population(u) as f64;
            let (x, y) = centroids[u as usize];
            sx += w * x;
            sy += w * y;
        }
        (sx / total as f64, sy / total as f64)
    } else {
        for &u in members {
            let (x, y) = centroids[u as usize];
            sx += x;
            sy += y;
        }
        let n = members.len() as f64;
        (sx / n, sy / n)
    }
}
