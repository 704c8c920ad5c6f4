//! From-scratch random plan generators: random-unit assignment with
//! rejection, district-by-district and whole-plan flood fill with variant
//! spread/seed policies, and iterative merging with rebalancing.
//!
//! Every generator either returns a plan that passes [`validate`] or
//! signals rejection; rejection is a value, not an error. Errors are
//! reserved for configuration problems (for example a bounding-box policy
//! on a graph without centroids).

use rand::prelude::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use thiserror::Error;

use crate::constraints::{Constraints, POP_EPS};
use crate::graph::UnitGraph;
use crate::plan::{District, Plan};
use crate::score::{is_contiguous, validate};

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("policy requires centroids but the graph has none")]
    MissingCentroids,
    #[error("policy requires county labels but the graph has none")]
    MissingCounties,
    #[error("zone seeding needs exactly k={k} nonempty zones, got {got}")]
    BadZones { k: District, got: usize },
    #[error("zone labels must cover every unit ({expected} entries, got {got})")]
    ZoneShape { expected: usize, got: usize },
    #[error("{0}")]
    InvalidInput(String),
}

/// How flood fill grows districts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FloodFillMode {
    /// Grow one district to completion before seeding the next.
    DistrictByDistrict,
    /// Seed all k districts first, then grow a random underpopulated
    /// district one unit at a time.
    WholePlan,
}

/// How the next unit to annex is chosen among the candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpreadRule {
    Uniform,
    /// Prefer candidates whose centroid lies in the axis-aligned bounding
    /// box of the growing district; fall back to uniform when none does.
    BoundingBox,
    /// Prefer candidates in a county the district already touches; fall
    /// back to uniform when none does.
    CountyPreserving,
}

/// Where district seeds come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SeedRule {
    Uniform,
    /// Seeds drawn from units on the outer boundary of the instance,
    /// taken to be units of non-maximal degree. Exact on grids.
    Boundary,
    /// One seed per predefined zone; district d seeds inside zone d.
    Zones(Vec<u16>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FloodFillPolicy {
    pub mode: FloodFillMode,
    pub spread_rule: SpreadRule,
    pub seed_rule: SeedRule,
    /// Growth attempts per `flood_fill` call before giving up. 1 means a
    /// single attempt, which is what acceptance-rate measurements use.
    pub max_restarts: u32,
}

impl Default for FloodFillPolicy {
    fn default() -> Self {
        FloodFillPolicy {
            mode: FloodFillMode::DistrictByDistrict,
            spread_rule: SpreadRule::Uniform,
            seed_rule: SeedRule::Uniform,
            max_restarts: 1,
        }
    }
}

impl FloodFillPolicy {
    pub fn whole_plan() -> Self {
        FloodFillPolicy {
            mode: FloodFillMode::WholePlan,
            ..Default::default()
        }
    }

    pub fn bounding_box() -> Self {
        FloodFillPolicy {
            spread_rule: SpreadRule::BoundingBox,
            ..Default::default()
        }
    }

    pub fn county_preserving() -> Self {
        FloodFillPolicy {
            spread_rule: SpreadRule::CountyPreserving,
            ..Default::default()
        }
    }

    fn check(&self, graph: &UnitGraph, constraints: &Constraints) -> Result<(), SamplerError> {
        match self.spread_rule {
            SpreadRule::BoundingBox if graph.centroids().is_none() => {
                return Err(SamplerError::MissingCentroids)
            }
            SpreadRule::CountyPreserving if graph.counties().is_none() => {
                return Err(SamplerError::MissingCounties)
            }
            _ => {}
        }
        if let SeedRule::Zones(zones) = &self.seed_rule {
            if zones.len() != graph.num_units() {
                return Err(SamplerError::ZoneShape {
                    expected: graph.num_units(),
                    got: zones.len(),
                });
            }
            let mut counts = std::collections::BTreeMap::new();
            for &z in zones {
                *counts.entry(z).or_insert(0usize) += 1;
            }
            let nonempty = counts.len();
            let covers = (0..constraints.k).all(|d| counts.contains_key(&d));
            if nonempty != constraints.k as usize || !covers {
                return Err(SamplerError::BadZones {
                    k: constraints.k,
                    got: nonempty,
                });
            }
        }
        Ok(())
    }
}

/// A randomized plan generator. `Ok(None)` is a rejection.
pub trait PlanGenerator {
    fn generate(
        &self,
        graph: &UnitGraph,
        constraints: &Constraints,
        rng: &mut ChaCha8Rng,
    ) -> Result<Option<Plan>, SamplerError>;

    fn describe(&self) -> String;
}

/// Assign every unit an independent uniform district label. Always
/// completes; almost never valid on instances of any size.
pub fn random_assignment(graph: &UnitGraph, k: District, rng: &mut impl Rng) -> Plan {
    let labels = (0..graph.num_units())
        .map(|_| rng.random_range(0..k))
        .collect();
    Plan::from_labels(labels, k).expect("labels drawn in range")
}

pub struct RandomAssignment;

impl PlanGenerator for RandomAssignment {
    fn generate(
        &self,
        graph: &UnitGraph,
        constraints: &Constraints,
        rng: &mut ChaCha8Rng,
    ) -> Result<Option<Plan>, SamplerError> {
        Ok(Some(random_assignment(graph, constraints.k, rng)))
    }

    fn describe(&self) -> String {
        "random-assignment".to_string()
    }
}

/// Outcome of a rejection-sampling run: every stored plan passes
/// [`validate`]; `successes == plans.len() <= attempts`.
#[derive(Debug, Clone)]
pub struct SampleRun {
    pub seed: u64,
    pub attempts: u64,
    pub successes: u64,
    pub plans: Vec<Plan>,
}

impl SampleRun {
    pub fn acceptance_rate(&self) -> f64 {
        if self.attempts == 0 {
            0.0
        } else {
            self.successes as f64 / self.attempts as f64
        }
    }
}

/// Draw from `generator` up to `max_attempts` times, keeping the plans
/// that validate. Zero successes is a flagged-but-ordinary outcome.
pub fn rejection_sample(
    generator: &dyn PlanGenerator,
    graph: &UnitGraph,
    constraints: &Constraints,
    max_attempts: u64,
    seed: u64,
) -> Result<SampleRun, SamplerError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut run = SampleRun {
        seed,
        attempts: 0,
        successes: 0,
        plans: Vec::new(),
    };
    for _ in 0..max_attempts {
        run.attempts += 1;
        if let Some(plan) = generator.generate(graph, constraints, &mut rng)? {
            if validate(&plan, graph, constraints).valid {
                run.successes += 1;
                run.plans.push(plan);
            }
        }
    }
    Ok(run)
}

/// Keep drawing until `target` valid plans are collected or `max_attempts`
/// is spent.
pub fn sample_until(
    generator: &dyn PlanGenerator,
    graph: &UnitGraph,
    constraints: &Constraints,
    target: u64,
    max_attempts: u64,
    seed: u64,
) -> Result<SampleRun, SamplerError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut run = SampleRun {
        seed,
        attempts: 0,
        successes: 0,
        plans: Vec::new(),
    };
    while run.successes < target && run.attempts < max_attempts {
        run.attempts += 1;
        if let Some(plan) = generator.generate(graph, constraints, &mut rng)? {
            if validate(&plan, graph, constraints).valid {
                run.successes += 1;
                run.plans.push(plan);
            }
        }
    }
    Ok(run)
}

/// Units eligible as seeds under a seed rule. For `Boundary`, units of
/// non-maximal degree (the outer rim of a grid).
fn seed_pool(graph: &UnitGraph, seed_rule: &SeedRule, district: District) -> Vec<u32> {
    match seed_rule {
        SeedRule::Uniform => (0..graph.num_units() as u32).collect(),
        SeedRule::Boundary => {
            let max_deg = (0..graph.num_units() as u32)
                .map(|u| graph.degree(u))
                .max()
                .unwrap_or(0);
            let pool: Vec<u32> = (0..graph.num_units() as u32)
                .filter(|&u| graph.degree(u) < max_deg)
                .collect();
            if pool.is_empty() {
                (0..graph.num_units() as u32).collect()
            } else {
                pool
            }
        }
        SeedRule::Zones(zones) => (0..graph.num_units() as u32)
            .filter(|&u| zones[u as usize] == district)
            .collect(),
    }
}

struct Growth<'a> {
    graph: &'a UnitGraph,
    labels: Vec<District>,
    pops: Vec<u64>,
    hi: f64,
    slack: f64,
}

impl<'a> Growth<'a> {
    fn new(graph: &'a UnitGraph, constraints: &Constraints) -> Self {
        let (_, hi) = constraints.population_bounds(graph);
        Growth {
            graph,
            labels: vec![Plan::UNASSIGNED; graph.num_units()],
            pops: vec![0; constraints.k as usize],
            hi,
            slack: POP_EPS * constraints.ideal(graph).max(1.0),
        }
    }

    fn assign(&mut self, unit: u32, d: District) {
        debug_assert_eq!(self.labels[unit as usize], Plan::UNASSIGNED);
        self.labels[unit as usize] = d;
        self.pops[d as usize] += self.graph.population(unit) as u64;
    }

    fn fits(&self, unit: u32, d: District) -> bool {
        (self.pops[d as usize] + self.graph.population(unit) as u64) as f64 <= self.hi + self.slack
    }

    /// Unassigned neighbors of district `d` that fit its remaining
    /// capacity, deduplicated, in id order.
    fn fitting_candidates(&self, d: District) -> Vec<u32> {
        let mut out = Vec::new();
        let mut seen = vec![false; self.graph.num_units()];
        for (unit, &label) in self.labels.iter().enumerate() {
            if label != d {
                continue;
            }
            for &v in self.graph.neighbors(unit as u32) {
                if self.labels[v as usize] == Plan::UNASSIGNED && !seen[v as usize] {
                    seen[v as usize] = true;
                    if self.fits(v, d) {
                        out.push(v);
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Apply the spread rule to pick one candidate.
    fn choose_spread(
        &self,
        d: District,
        candidates: &[u32],
        rule: SpreadRule,
        rng: &mut ChaCha8Rng,
    ) -> u32 {
        debug_assert!(!candidates.is_empty());
        match rule {
            SpreadRule::Uniform => *candidates.choose(rng).unwrap(),
            SpreadRule::BoundingBox => {
                let centroids = self.graph.centroids().expect("checked by policy");
                let mut min_x = f64::INFINITY;
                let mut max_x = f64::NEG_INFINITY;
                let mut min_y = f64::INFINITY;
                let mut max_y = f64::NEG_INFINITY;
                for (unit, &label) in self.labels.iter().enumerate() {
                    if label == d {
                        let (x, y) = centroids[unit];
                        min_x = min_x.min(x);
                        max_x = max_x.max(x);
                        min_y = min_y.min(y);
                        max_y = max_y.max(y);
                    }
                }
                let eps = 1e-9;
                let inside: Vec<u32> = candidates
                    .iter()
                    .copied()
                    .filter(|&u| {
                        let (x, y) = centroids[u as usize];
                        x >= min_x - eps && x <= max_x + eps && y >= min_y - eps && y <= max_y + eps
                    })
                    .collect();
                if inside.is_empty() {
                    *candidates.choose(rng).unwrap()
                } else {
                    *inside.choose(rng).unwrap()
                }
            }
            SpreadRule::CountyPreserving => {
                let counties = self.graph.counties().expect("checked by policy");
                let mut district_counties = vec![false; self.graph.num_counties()];
                for (unit, &label) in self.labels.iter().enumerate() {
                    if label == d {
                        district_counties[counties[unit] as usize] = true;
                    }
                }
                let inside: Vec<u32> = candidates
                    .iter()
                    .copied()
                    .filter(|&u| district_counties[counties[u as usize] as usize])
                    .collect();
                if inside.is_empty() {
                    *candidates.choose(rng).unwrap()
                } else {
                    *inside.choose(rng).unwrap()
                }
            }
        }
    }

    fn unassigned(&self) -> Vec<u32> {
        self.labels
            .iter()
            .enumerate()
            .filter(|&(_, &l)| l == Plan::UNASSIGNED)
            .map(|(i, _)| i as u32)
            .collect()
    }

    fn into_plan(self, k: District) -> Plan {
        Plan::from_labels(self.labels, k).expect("growth labels in range")
    }
}

fn flood_fill_once(
    graph: &UnitGraph,
    constraints: &Constraints,
    policy: &FloodFillPolicy,
    rng: &mut ChaCha8Rng,
) -> Option<Plan> {
    let k = constraints.k;
    let (lo, _) = constraints.population_bounds(graph);
    let mut g = Growth::new(graph, constraints);
    let slack = g.slack;

    match policy.mode {
        FloodFillMode::DistrictByDistrict => {
            for d in 0..k {
                // Seed from the unassigned part of the seed pool.
                let pool: Vec<u32> = seed_pool(graph, &policy.seed_rule, d)
                    .into_iter()
                    .filter(|&u| g.labels[u as usize] == Plan::UNASSIGNED)
                    .collect();
                let &seed = pool.choose(rng)?;
                if !g.fits(seed, d) {
                    return None;
                }
                g.assign(seed, d);
                // Grow while any candidate fits under the upper bound.
                loop {
                    let candidates = g.fitting_candidates(d);
                    if candidates.is_empty() {
                        break;
                    }
                    let chosen = g.choose_spread(d, &candidates, policy.spread_rule, rng);
                    g.assign(chosen, d);
                }
                if (g.pops[d as usize] as f64) < lo - slack {
                    return None; // stuck below the lower bound
                }
            }
            if !g.unassigned().is_empty() {
                return None; // leftovers cannot form districts
            }
        }
        FloodFillMode::WholePlan => {
            for d in 0..k {
                let pool: Vec<u32> = seed_pool(graph, &policy.seed_rule, d)
                    .into_iter()
                    .filter(|&u| g.labels[u as usize] == Plan::UNASSIGNED)
                    .collect();
                let &seed = pool.choose(rng)?;
                if !g.fits(seed, d) {
                    return None;
                }
                g.assign(seed, d);
            }
            // Grow a random underpopulated district until none remains.
            loop {
                let under: Vec<District> = (0..k)
                    .filter(|&d| (g.pops[d as usize] as f64) < lo - slack)
                    .collect();
                if under.is_empty() {
                    break;
                }
                let &d = under.choose(rng).unwrap();
                let candidates = g.fitting_candidates(d);
                if candidates.is_empty() {
                    // An underpopulated district that cannot grow can
                    // never recover: units only leave the pool.
                    return None;
                }
                let chosen = g.choose_spread(d, &candidates, policy.spread_rule, rng);
                g.assign(chosen, d);
            }
            // Absorb leftovers into any district with capacity.
            while !g.unassigned().is_empty() {
                let growable: Vec<District> =
                    (0..k).filter(|&d| !g.fitting_candidates(d).is_empty()).collect();
                let &d = growable.choose(rng)?;
                let candidates = g.fitting_candidates(d);
                let chosen = g.choose_spread(d, &candidates, policy.spread_rule, rng);
                g.assign(chosen, d);
            }
        }
    }

    let plan = g.into_plan(k);
    validate(&plan, graph, constraints).valid.then_some(plan)
}

/// Grow a plan by flood fill under `policy`. `Ok(None)` is a rejection
/// (the growth got stuck `max_restarts` times).
pub fn flood_fill(
    graph: &UnitGraph,
    constraints: &Constraints,
    policy: &FloodFillPolicy,
    rng: &mut ChaCha8Rng,
) -> Result<Option<Plan>, SamplerError> {
    policy.check(graph, constraints)?;
    for _ in 0..policy.max_restarts.max(1) {
        if let Some(plan) = flood_fill_once(graph, constraints, policy, rng) {
            return Ok(Some(plan));
        }
    }
    Ok(None)
}

pub struct FloodFill {
    pub policy: FloodFillPolicy,
}

impl PlanGenerator for FloodFill {
    fn generate(
        &self,
        graph: &UnitGraph,
        constraints: &Constraints,
        rng: &mut ChaCha8Rng,
    ) -> Result<Option<Plan>, SamplerError> {
        flood_fill(graph, constraints, &self.policy, rng)
    }

    fn describe(&self) -> String {
        format!(
            "flood-fill mode={:?} spread={:?} seeds={}",
            self.policy.mode,
            self.policy.spread_rule,
            match &self.policy.seed_rule {
                SeedRule::Uniform => "uniform".to_string(),
                SeedRule::Boundary => "boundary".to_string(),
                SeedRule::Zones(_) => "zones".to_string(),
            }
        )
    }
}

/// A contiguous group of units being merged toward k districts.
#[derive(Debug, Clone)]
pub(crate) struct Region {
    pub members: Vec<u32>,
    pub pop: u64,
    /// Population-weighted centroid; unweighted mean when the region has
    /// zero total population.
    pub centroid: (f64, f64),
}

impl Region {
    fn min_unit(&self) -> u32 {
        *self.members.iter().min().unwrap()
    }
}

fn region_centroid(members: &[u32], graph: &UnitGraph) -> (f64, f64) {
    let centroids = graph.centroids().expect("centroids required");
    let total_pop: u64 = members.iter().map(|&u| graph.population(u) as u64).sum();
    if total_pop > 0 {
        let (mut sx, mut sy) = (0.0, 0.0);
        for &u in members {
            let w = graph.population(u) as f64;
            let (x, y) = centroids[u as usize];
            sx += w * x;
            sy += w * y;
        }
        (sx / total_pop as f64, sy / total_pop as f64)
    } else {
        let n = members.len() as f64;
        let (mut sx, mut sy) = (0.0, 0.0);
        for &u in members {
            let (x, y) = centroids[u as usize];
            sx += x;
            sy += y;
        }
        (sx / n, sy / n)
    }
}

/// Merge regions until `k` remain: pick a random region, merge it with its
/// centroid-closest adjacent region (ties broken by smaller minimum unit
/// id). Returns `None` when fewer than `k` regions would remain reachable
/// (disconnected leftovers).
pub(crate) fn merge_regions_until(
    mut regions: Vec<Region>,
    k: usize,
    graph: &UnitGraph,
    rng: &mut ChaCha8Rng,
) -> Option<Vec<Region>> {
    // region index per unit, rebuilt as regions merge
    let mut region_of: Vec<usize> = vec![usize::MAX; graph.num_units()];
    for (i, r) in regions.iter().enumerate() {
        for &u in &r.members {
            region_of[u as usize] = i;
        }
    }
    let mut alive: Vec<bool> = vec![true; regions.len()];
    let mut alive_count = regions.len();

    while alive_count > k {
        // Regions that still have a neighbor to merge with.
        let neighbors_of = |idx: usize, regions: &[Region], region_of: &[usize]| -> Vec<usize> {
            let mut out = Vec::new();
            for &u in &regions[idx].members {
                for &v in graph.neighbors(u) {
                    let r = region_of[v as usize];
                    if r != idx && !out.contains(&r) {
                        out.push(r);
                    }
                }
            }
            out.sort_unstable();
            out
        };
        let mergeable: Vec<usize> = (0..regions.len())
            .filter(|&i| alive[i] && !neighbors_of(i, &regions, &region_of).is_empty())
            .collect();
        if mergeable.is_empty() {
            return None;
        }
        let &a = mergeable.choose(rng).unwrap();
        let nbrs = neighbors_of(a, &regions, &region_of);
        let (ax, ay) = regions[a].centroid;
        let mut best: Option<(f64, u32, usize)> = None;
        for &b in &nbrs {
            let (bx, by) = regions[b].centroid;
            let d2 = (ax - bx).powi(2) + (ay - by).powi(2);
            let key = (d2, regions[b].min_unit());
            if best.is_none_or(|(bd, bm, _)| key < (bd, bm)) {
                best = Some((d2, regions[b].min_unit(), b));
            }
        }
        let (_, _, b) = best.unwrap();

        // Merge b into a.
        let b_members = std::mem::take(&mut regions[b].members);
        for &u in &b_members {
            region_of[u as usize] = a;
        }
        let b_pop = regions[b].pop;
        regions[a].members.extend(b_members);
        regions[a].pop += b_pop;
        regions[a].centroid = region_centroid(&regions[a].members, graph);
        alive[b] = false;
        alive_count -= 1;
    }

    let mut out: Vec<Region> = regions
        .into_iter()
        .zip(alive)
        .filter(|(_, a)| *a)
        .map(|(r, _)| r)
        .collect();
    out.sort_by_key(Region::min_unit);
    Some(out)
}

pub(crate) fn regions_to_plan(regions: &[Region], graph: &UnitGraph, k: District) -> Plan {
    let mut plan = Plan::new_unassigned(graph.num_units(), k).expect("k >= 1");
    for (d, region) in regions.iter().enumerate() {
        for &u in &region.members {
            plan.assign(u, d as District).expect("label in range");
        }
    }
    plan
}

/// Merge units into k aggregates (each merge joins a random aggregate with
/// its centroid-closest neighbor), then rebalance populations. Requires
/// centroids.
pub fn iterative_merge(
    graph: &UnitGraph,
    constraints: &Constraints,
    rng: &mut ChaCha8Rng,
) -> Result<Option<Plan>, SamplerError> {
    if graph.centroids().is_none() {
        return Err(SamplerError::MissingCentroids);
    }
    let k = constraints.k as usize;
    if k > graph.num_units() {
        return Err(SamplerError::InvalidInput(format!(
            "k={k} exceeds {} units",
            graph.num_units()
        )));
    }
    let singletons: Vec<Region> = (0..graph.num_units() as u32)
        .map(|u| Region {
            members: vec![u],
            pop: graph.population(u) as u64,
            centroid: graph.centroid(u).unwrap(),
        })
        .collect();
    let Some(regions) = merge_regions_until(singletons, k, graph, rng) else {
        return Ok(None);
    };
    let plan = regions_to_plan(&regions, graph, constraints.k);
    let budget = 8 * graph.num_units() as u64;
    let plan = match rebalance(&plan, graph, constraints, budget, rng) {
        Ok(p) => p,
        Err(_) => return Ok(None),
    };
    Ok(validate(&plan, graph, constraints).valid.then_some(plan))
}

pub struct IterativeMerge;

impl PlanGenerator for IterativeMerge {
    fn generate(
        &self,
        graph: &UnitGraph,
        constraints: &Constraints,
        rng: &mut ChaCha8Rng,
    ) -> Result<Option<Plan>, SamplerError> {
        iterative_merge(graph, constraints, rng)
    }

    fn describe(&self) -> String {
        "iterative-merge".to_string()
    }
}

/// Rebalance failure: the move budget ran out or no contiguity-preserving
/// improving move exists. Carries the best plan reached.
#[derive(Debug, Error)]
#[error("rebalance failed after {moves} moves (stuck: {stuck})")]
pub struct RebalanceFailure {
    pub best_effort: Plan,
    pub moves: u64,
    pub stuck: bool,
}

/// Move single boundary units from overpopulated toward underpopulated
/// districts until the plan meets the deviation bound or the budget runs
/// out. Each move strictly reduces the total squared deviation, keeps the
/// donor district contiguous and nonempty, and ties are broken uniformly
/// at random.
pub fn rebalance(
    plan: &Plan,
    graph: &UnitGraph,
    constraints: &Constraints,
    budget: u64,
    rng: &mut ChaCha8Rng,
) -> Result<Plan, RebalanceFailure> {
    let k = plan.k();
    let ideal = constraints.ideal(graph);
    let mut current = plan.clone();
    let mut pops = vec![0i64; k as usize];
    for (unit, &label) in current.labels().iter().enumerate() {
        assert!(label != Plan::UNASSIGNED, "rebalance requires a complete plan");
        pops[label as usize] += graph.population(unit as u32) as i64;
    }
    let mut district_sizes = vec![0usize; k as usize];
    for &label in current.labels() {
        district_sizes[label as usize] += 1;
    }

    let feasible = |pops: &[i64]| {
        pops.iter().all(|&p| {
            let dev = (p as f64 - ideal).abs() / ideal.max(f64::MIN_POSITIVE);
            dev <= constraints.deviation + POP_EPS
        })
    };
    let tie_eps = 1e-9 * (ideal * ideal).max(1.0);

    let mut moves = 0u64;
    loop {
        if graph.total_population() > 0 && feasible(&pops) {
            return Ok(current);
        }
        if moves >= budget {
            return Err(RebalanceFailure {
                best_effort: current,
                moves,
                stuck: false,
            });
        }

        // All strictly improving single-unit boundary moves, best first.
        let labels = current.labels();
        let mut candidates: Vec<(f64, u32, District)> = Vec::new();
        for (unit, &a) in labels.iter().enumerate() {
            if district_sizes[a as usize] <= 1 {
                continue;
            }
            let p = graph.population(unit as u32) as i64;
            let mut targets: Vec<District> = Vec::new();
            for &v in graph.neighbors(unit as u32) {
                let b = labels[v as usize];
                if b != a && !targets.contains(&b) {
                    targets.push(b);
                }
            }
            for b in targets {
                let (pa, pb) = (pops[a as usize] as f64, pops[b as usize] as f64);
                let before = (pa - ideal).powi(2) + (pb - ideal).powi(2);
                let after = (pa - p as f64 - ideal).powi(2) + (pb + p as f64 - ideal).powi(2);
                let delta = after - before;
                if delta < -tie_eps {
                    candidates.push((delta, unit as u32, b));
                }
            }
        }
        candidates.sort_by(|x, y| x.partial_cmp(y).unwrap());

        // Take the best delta whose move preserves donor contiguity;
        // gather its ties and pick one at random.
        let mut chosen: Option<(u32, District)> = None;
        let mut best_delta = f64::INFINITY;
        let mut pool: Vec<(u32, District)> = Vec::new();
        for &(delta, unit, b) in &candidates {
            if !pool.is_empty() && delta > best_delta + tie_eps {
                break;
            }
            let a = current.labels()[unit as usize];
            current.assign(unit, b).expect("label in range");
            let donor_ok = is_contiguous(&current, graph, a).unwrap_or(false);
            let receiver_ok = is_contiguous(&current, graph, b).unwrap_or(false);
            current.assign(unit, a).expect("label in range");
            if donor_ok && receiver_ok {
                if pool.is_empty() {
                    best_delta = delta;
                }
                pool.push((unit, b));
            }
        }
        if let Some(&(unit, b)) = pool.choose(rng) {
            chosen = Some((unit, b));
        }
        let Some((unit, b)) = chosen else {
            return Err(RebalanceFailure {
                best_effort: current,
                moves,
                stuck: true,
            });
        };

        let a = current.labels()[unit as usize];
        let p = graph.population(unit) as i64;
        current.assign(unit, b).expect("label in range");
        pops[a as usize] -= p;
        pops[b as usize] += p;
        district_sizes[a as usize] -= 1;
        district_sizes[b as usize] += 1;
        moves += 1;
    }
}
