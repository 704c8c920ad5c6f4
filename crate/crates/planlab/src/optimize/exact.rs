//! Exact cut-edge minimization by specialized branch-and-bound, plus the
//! deviation-allowance Pareto sweep.
//!
//! The search assigns units one at a time (descending degree order) under
//! a canonical-labeling rule that breaks district symmetry: the first
//! branched unit goes to district 0 and a new district may only be opened
//! in first-unit order. Bounding combines the cut edges already decided
//! with a per-undecided-unit relaxation: a unit with decided neighbors in
//! several districts must cut all but its largest same-district group,
//! whichever label it eventually takes. Population windows are enforced on
//! partial assignments.
//!
//! Contiguity is not part of the constraint set, mirroring the cut-edge
//! integer program it implements. By default discontiguous candidates are
//! rejected when they would become incumbents, and subtrees that can no
//! longer complete contiguously are pruned (same optimum, smaller tree).
//! With `allow_discontiguous` the solver optimizes over all balanced
//! assignments and simply reports whether the winner is contiguous.

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::chains;
use crate::constraints::{Constraints, POP_EPS};
use crate::graph::UnitGraph;
use crate::optimize::{OptimizeError, ParetoPoint, SolveStatus};
use crate::plan::{District, Plan};
use crate::samplers::{flood_fill, FloodFillPolicy};
use crate::score::{cut_edges, validate};

pub const MAX_EXACT_UNITS: usize = 128;

/// Interface for exact cut-edge minimizers, so an external integer-program
/// solver can be dropped in behind the same contract. The in-house
/// branch-and-bound is the only implementation; no external adapter is
/// provided.
pub trait ExactSolver {
    fn minimize_cut_edges(
        &self,
        graph: &UnitGraph,
        constraints: &Constraints,
        options: &ExactOptions,
    ) -> Result<ExactResult, OptimizeError>;
}

/// The built-in branch-and-bound solver behind [`exact_min_cut_edges`].
#[derive(Debug, Clone, Copy, Default)]
pub struct BranchAndBound;

impl ExactSolver for BranchAndBound {
    fn minimize_cut_edges(
        &self,
        graph: &UnitGraph,
        constraints: &Constraints,
        options: &ExactOptions,
    ) -> Result<ExactResult, OptimizeError> {
        exact_min_cut_edges(graph, constraints, options)
    }
}

#[derive(Debug, Clone)]
pub struct ExactOptions {
    pub time_budget: Duration,
    pub node_budget: u64,
    /// Starting incumbent; ignored when it fails validation under the
    /// run's contiguity mode.
    pub warm_start: Option<Plan>,
    /// Recombination steps spent improving the warm start before the tree
    /// search begins (0 disables). Capped at half the time budget.
    pub warm_start_steps: u64,
    /// Accept discontiguous incumbents (the raw integer-program
    /// semantics). Default rejects them.
    pub allow_discontiguous: bool,
    pub seed: u64,
}

impl Default for ExactOptions {
    fn default() -> Self {
        ExactOptions {
            time_budget: Duration::from_secs(300),
            node_budget: u64::MAX,
            warm_start: None,
            warm_start_steps: 3_000,
            allow_discontiguous: false,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExactResult {
    pub plan: Option<Plan>,
    pub cut_edges: Option<u32>,
    pub status: SolveStatus,
    /// Sound lower bound on the minimum; equals the optimum when proven.
    pub lower_bound: u32,
    pub nodes: u64,
    pub elapsed: Duration,
    /// True when the returned plan is contiguous in every district.
    pub contiguous: bool,
}

struct Solver {
    k: usize,
    lo: f64,
    hi: f64,
    slack: f64,
    /// Units in branching order (descending degree, ascending id).
    order: Vec<u32>,
    neighbor_masks: Vec<u128>,
    pops: Vec<u64>,
    total_pop: u64,
    full_mask: u128,
    prune_contiguity: bool,
    deadline: Instant,
    node_budget: u64,

    // Mutable search state.
    labels: Vec<District>,
    district_masks: Vec<u128>,
    district_pops: Vec<u64>,
    used: usize,
    assigned_mask: u128,
    assigned_pop: u64,
    cut: u32,
    /// Per-unit count of decided neighbors, per district.
    nbr_counts: Vec<Vec<u32>>,
    decided_deg: Vec<u32>,
    /// Current relaxation term for each undecided unit.
    unit_lb: Vec<u32>,
    sum_lb: u64,

    incumbent: Option<(u32, Vec<District>)>,
    nodes: u64,
    aborted: bool,
    /// Minimum bound among subtrees left unexplored by an abort.
    open_bound: Option<u32>,
}

impl Solver {
    fn new(
        graph: &UnitGraph,
        constraints: &Constraints,
        options: &ExactOptions,
        deadline: Instant,
    ) -> Self {
        let n = graph.num_units();
        let k = constraints.k as usize;
        let (lo, hi) = constraints.population_bounds(graph);
        let mut order: Vec<u32> = (0..n as u32).collect();
        order.sort_by_key(|&u| (std::cmp::Reverse(graph.degree(u)), u));
        let neighbor_masks = (0..n as u32)
            .map(|u| {
                graph
                    .neighbors(u)
                    .iter()
                    .fold(0u128, |m, &v| m | (1u128 << v))
            })
            .collect();
        Solver {

            k,
            lo,
            hi,
            slack: POP_EPS * constraints.ideal(graph).max(1.0),
            order,
            neighbor_masks,
            pops: graph.populations().iter().map(|&p| p as u64).collect(),
            total_pop: graph.total_population(),
            full_mask: if n == 128 {
                u128::MAX
            } else {
                (1u128 << n) - 1
            },
            prune_contiguity: constraints.require_contiguity && !options.allow_discontiguous,
            deadline,
            node_budget: options.node_budget,
            labels: vec![Plan::UNASSIGNED; n],
            district_masks: vec![0; k],
            district_pops: vec![0; k],
            used: 0,
            assigned_mask: 0,
            assigned_pop: 0,
            cut: 0,
            nbr_counts: vec![vec![0; k]; n],
            decided_deg: vec![0; n],
            unit_lb: vec![0; n],
            sum_lb: 0,
            incumbent: None,
            nodes: 0,
            aborted: false,
            open_bound: None,
        }
    }

    fn incumbent_value(&self) -> u32 {
        self.incumbent.as_ref().map_or(u32::MAX, |(v, _)| *v)
    }

    fn offer_incumbent(&mut self, value: u32, labels: Vec<District>) {
        if value < self.incumbent_value() {
            self.incumbent = Some((value, labels));
        }
    }

    fn out_of_budget(&self) -> bool {
        self.nodes >= self.node_budget
            || (self.nodes.is_multiple_of(4096) && Instant::now() >= self.deadline)
    }

    fn note_open_bound(&mut self, bound: u32) {
        self.open_bound = Some(self.open_bound.map_or(bound, |b| b.min(bound)));
    }

    /// Sealed-component contiguity pruning, identical in spirit to the
    /// enumeration search. Only meaningful in contiguous mode.
    fn district_completable(&self, mask: u128, pop: u64) -> bool {
        let undecided = self.full_mask & !self.assigned_mask;
        let mut remaining = mask;
        while remaining != 0 {
            let seed = remaining & remaining.wrapping_neg();
            let mut comp = seed;
            loop {
                let mut nbrs = 0u128;
                let mut bits = comp;
                while bits != 0 {
                    let u = bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    nbrs |= self.neighbor_masks[u];
                }
                let grown = comp | (nbrs & mask);
                if grown == comp {
                    if nbrs & undecided == 0 {
                        if comp != mask {
                            return false;
                        }
                        if (pop as f64) < self.lo - self.slack {
                            return false;
                        }
                    }
                    break;
                }
                comp = grown;
            }
            remaining &= !comp;
        }
        true
    }

    fn population_prune(&self, next_slot: usize) -> bool {
        let remaining_units = (self.order.len() - next_slot) as u64;
        let unopened = self.k - self.used;
        if unopened as u64 > remaining_units {
            return true;
        }
        let remaining_pop = (self.total_pop - self.assigned_pop) as f64;
        let mut deficit = unopened as f64 * self.lo;
        let mut capacity = unopened as f64 * self.hi;
        for d in 0..self.used {
            let p = self.district_pops[d] as f64;
            if p < self.lo {
                deficit += self.lo - p;
            }
            capacity += (self.hi - p).max(0.0);
        }
        deficit > remaining_pop + self.slack || remaining_pop > capacity + self.slack
    }

    fn assign(&mut self, unit: usize, d: usize) {
        let bit = 1u128 << unit;
        self.labels[unit] = d as District;
        if d == self.used {
            self.used += 1;
        }
        self.district_masks[d] |= bit;
        self.district_pops[d] += self.pops[unit];
        self.assigned_mask |= bit;
        self.assigned_pop += self.pops[unit];
        self.cut += self.decided_deg[unit] - self.nbr_counts[unit][d];
        self.sum_lb -= self.unit_lb[unit] as u64;
        // Update the relaxation for undecided neighbors.
        let mut bits = self.neighbor_masks[unit] & !self.assigned_mask;
        while bits != 0 {
            let v = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            self.sum_lb -= self.unit_lb[v] as u64;
            self.nbr_counts[v][d] += 1;
            self.decided_deg[v] += 1;
            let max_same = *self.nbr_counts[v].iter().max().unwrap();
            self.unit_lb[v] = self.decided_deg[v] - max_same;
            self.sum_lb += self.unit_lb[v] as u64;
        }
    }

    fn unassign(&mut self, unit: usize, d: usize, opened: bool) {
        let bit = 1u128 << unit;
        let mut bits = self.neighbor_masks[unit] & !self.assigned_mask;
        while bits != 0 {
            let v = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            self.sum_lb -= self.unit_lb[v] as u64;
            self.nbr_counts[v][d] -= 1;
            self.decided_deg[v] -= 1;
            let max_same = *self.nbr_counts[v].iter().max().unwrap();
            self.unit_lb[v] = self.decided_deg[v] - max_same;
            self.sum_lb += self.unit_lb[v] as u64;
        }
        self.sum_lb += self.unit_lb[unit] as u64;
        self.cut -= self.decided_deg[unit] - self.nbr_counts[unit][d];
        self.assigned_pop -= self.pops[unit];
        self.assigned_mask &= !bit;
        self.district_pops[d] -= self.pops[unit];
        self.district_masks[d] &= !bit;
        if opened {
            self.used -= 1;
        }
        self.labels[unit] = Plan::UNASSIGNED;
    }

    /// Bound every untried child `d..max_label` of the current node; used
    /// when an abort unwinds so the reported lower bound stays sound.
    fn bound_open_children(&mut self, unit: usize, from_label: usize, max_label: usize) {
        let unit_pop = self.pops[unit];
        for d in from_label..max_label {
            if (self.district_pops[d] + unit_pop) as f64 > self.hi + self.slack {
                continue;
            }
            let child_bound = self.cut + self.decided_deg[unit] - self.nbr_counts[unit][d];
            self.note_open_bound(child_bound);
        }
    }

    fn dfs(&mut self, slot: usize) {
        if slot == self.order.len() {
            // Bound pruning guarantees cut < incumbent here; population
            // prunes guarantee feasibility, and in contiguous mode the
            // sealed-component prune guarantees contiguity.
            self.offer_incumbent(self.cut, self.labels.clone());
            return;
        }
        let unit = self.order[slot] as usize;
        let unit_pop = self.pops[unit];
        let max_label = (self.used + 1).min(self.k);

        for d in 0..max_label {
            if (self.district_pops[d] + unit_pop) as f64 > self.hi + self.slack {
                continue;
            }
            self.nodes += 1;
            if self.out_of_budget() {
                self.aborted = true;
            }
            if self.aborted {
                self.bound_open_children(unit, d, max_label);
                return;
            }

            let opened = d == self.used;
            self.assign(unit, d);

            let bound = self.cut as u64 + self.sum_lb;
            let mut prune = bound >= self.incumbent_value() as u64;
            if !prune {
                prune = self.population_prune(slot + 1);
            }
            if !prune && self.prune_contiguity {
                // Check the changed district and the districts of the
                // unit's decided neighbors.
                let mut checked = [usize::MAX; 8];
                let mut len = 0usize;
                let mut check = |x: usize, solver: &Solver, prune: &mut bool| {
                    if checked[..len].contains(&x) || len >= checked.len() {
                        return;
                    }
                    checked[len] = x;
                    len += 1;
                    if !solver
                        .district_completable(solver.district_masks[x], solver.district_pops[x])
                    {
                        *prune = true;
                    }
                };
                check(d, self, &mut prune);
                if !prune {
                    let mut bits = self.neighbor_masks[unit] & self.assigned_mask;
                    while bits != 0 && !prune {
                        let v = bits.trailing_zeros() as usize;
                        bits &= bits - 1;
                        check(self.labels[v] as usize, self, &mut prune);
                    }
                }
            }

            if !prune {
                self.dfs(slot + 1);
            }
            self.unassign(unit, d, opened);
            if self.aborted {
                self.bound_open_children(unit, d + 1, max_label);
                return;
            }
        }
    }
}

/// Grow any valid plan under `constraints`: flood fill first, iterative
/// merging as the fallback (it rebalances, so it tolerates loose windows
/// far better on county graphs).
fn any_valid_plan(
    graph: &UnitGraph,
    constraints: &Constraints,
    rng: &mut ChaCha8Rng,
) -> Option<Plan> {
    let policy = FloodFillPolicy {
        max_restarts: 400,
        ..Default::default()
    };
    if let Ok(Some(plan)) = flood_fill(graph, constraints, &policy, rng) {
        return Some(plan);
    }
    if graph.centroids().is_some() {
        for _ in 0..200 {
            if let Ok(Some(plan)) = crate::samplers::iterative_merge(graph, constraints, rng) {
                return Some(plan);
            }
        }
    }
    None
}

/// Population feasibility of a complete plan under `constraints`
/// (contiguity is preserved by every walk used here).
fn within_window(plan: &Plan, graph: &UnitGraph, constraints: &Constraints) -> bool {
    let mut pops = vec![0u64; plan.k() as usize];
    for (unit, &label) in plan.labels().iter().enumerate() {
        pops[label as usize] += graph.population(unit as u32) as u64;
    }
    pops.iter().all(|&p| constraints.district_feasible(p, graph))
}

/// Deviation allowances used to ladder down toward tight windows: a walk
/// at a looser window occasionally visits plans feasible at the next
/// tighter one, which then seed the next tier.
const WARM_LADDER: [f64; 7] = [0.25, 0.10, 0.05, 0.02, 0.01, 0.005, 0.002];

fn build_warm_start(
    graph: &UnitGraph,
    constraints: &Constraints,
    options: &ExactOptions,
    initial: Option<Plan>,
    deadline: Instant,
) -> Option<Plan> {
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut best: Option<(u32, Plan)> = None;
    let offer = |plan: &Plan, graph: &UnitGraph, best: &mut Option<(u32, Plan)>| {
        if let Ok(c) = cut_edges(plan, graph) {
            if best.as_ref().is_none_or(|(b, _)| c < *b) {
                *best = Some((c, plan.clone()));
            }
        }
    };
    if let Some(plan) = &initial {
        offer(plan, graph, &mut best);
    }
    if options.warm_start_steps == 0 {
        return best.map(|(_, p)| p);
    }

    let mut tiers: Vec<f64> = WARM_LADDER
        .iter()
        .copied()
        .filter(|&d| d > constraints.deviation)
        .collect();
    tiers.push(constraints.deviation);
    let steps_per_tier = (options.warm_start_steps / tiers.len() as u64).max(1);

    // A target-feasible plan is feasible at every tier, so the initial
    // plan (when present) can seed the whole ladder.
    let mut carry: Option<Plan> = initial.or_else(|| best.clone().map(|(_, p)| p));
    for (i, &deviation) in tiers.iter().enumerate() {
        let Ok(tier) = Constraints::new(constraints.k, deviation, true) else {
            continue;
        };
        if carry.is_none() {
            carry = any_valid_plan(graph, &tier, &mut rng);
        }
        let Some(start) = carry.clone() else {
            continue;
        };
        let next_tier = tiers
            .get(i + 1)
            .and_then(|&d| Constraints::new(constraints.k, d, true).ok());
        // Greedy-leaning recombination walk at this tier: drift toward
        // lower cut counts; remember the best target-feasible plan and
        // the best plan feasible at the next tier.
        let mut current = start.clone();
        let mut cur_cut = cut_edges(&current, graph).unwrap_or(u32::MAX);
        let mut next_seed: Option<(u32, Plan)> = match &next_tier {
            Some(t) if within_window(&start, graph, t) => Some((cur_cut, start)),
            _ => None,
        };
        for step in 0..steps_per_tier {
            if step % 64 == 0 && Instant::now() >= deadline {
                break;
            }
            let next = chains::recom_step(&current, graph, &tier, &mut rng);
            if next == current {
                continue;
            }
            let next_cut = cut_edges(&next, graph).unwrap_or(u32::MAX);
            if within_window(&next, graph, constraints) {
                offer(&next, graph, &mut best);
            }
            if let Some(t) = &next_tier {
                if within_window(&next, graph, t)
                    && next_seed.as_ref().is_none_or(|(c, _)| next_cut < *c)
                {
                    next_seed = Some((next_cut, next.clone()));
                }
            }
            if next_cut <= cur_cut + 2 {
                current = next;
                cur_cut = next_cut;
            }
        }
        carry = next_seed.map(|(_, p)| p);
        if Instant::now() >= deadline {
            break;
        }
    }
    best.map(|(_, p)| p)
}

/// Minimize cut edges exactly. Returns the best plan found with its
/// status; `ProvenOptimal` means the search tree was exhausted within
/// budget.
pub fn exact_min_cut_edges(
    graph: &UnitGraph,
    constraints: &Constraints,
    options: &ExactOptions,
) -> Result<ExactResult, OptimizeError> {
    let n = graph.num_units();
    if n > MAX_EXACT_UNITS {
        return Err(OptimizeError::TooLarge {
            units: n,
            max: MAX_EXACT_UNITS,
        });
    }
    let started = Instant::now();
    let deadline = started + options.time_budget;

    let mut solver = Solver::new(graph, constraints, options, deadline);

    // Incumbent from the caller's warm start or an internal one. In
    // contiguous mode a discontiguous warm start is rejected.
    let accepts = |plan: &Plan| -> bool {
        let report = validate(plan, graph, constraints);
        if !report.complete || plan.k() != constraints.k {
            return false;
        }
        let balanced = report
            .district_populations
            .iter()
            .all(|&p| constraints.district_feasible(p, graph));
        let contiguity_ok = if solver.prune_contiguity {
            report.contiguous.iter().all(|&c| c)
        } else {
            true
        };
        balanced && contiguity_ok
    };
    // The warm-start walk gets at most half the time budget; the tree
    // search takes whatever remains.
    let warm_deadline = started + options.time_budget / 2;
    let initial = options.warm_start.clone().filter(|p| accepts(p));
    let warm =
        build_warm_start(graph, constraints, options, initial, warm_deadline).filter(|p| accepts(p));
    if let Some(plan) = warm {
        let value = cut_edges(&plan, graph)?;
        solver.offer_incumbent(value, plan.labels().to_vec());
    }

    solver.dfs(0);

    let elapsed = started.elapsed();
    let nodes = solver.nodes;
    let aborted = solver.aborted;
    let open_bound = solver.open_bound;
    let incumbent = solver.incumbent.take();

    let (plan, value) = match incumbent {
        Some((value, labels)) => (
            Some(Plan::from_labels(labels, constraints.k).expect("labels in range")),
            Some(value),
        ),
        None => (None, None),
    };
    let status = match (&plan, aborted) {
        (Some(_), false) => SolveStatus::ProvenOptimal,
        (Some(_), true) => SolveStatus::Incumbent,
        (None, false) => SolveStatus::Infeasible,
        (None, true) => SolveStatus::LowerBoundOnly,
    };
    let lower_bound = match status {
        SolveStatus::ProvenOptimal => value.unwrap(),
        SolveStatus::Infeasible => 0,
        _ => {
            let open = open_bound.unwrap_or(0);
            value.map_or(open, |v| open.min(v))
        }
    };
    let contiguous = plan.as_ref().is_some_and(|p| {
        (0..constraints.k).all(|d| crate::score::is_contiguous(p, graph, d).unwrap_or(false))
    });
    Ok(ExactResult {
        plan,
        cut_edges: value,
        status,
        lower_bound,
        nodes,
        elapsed,
        contiguous,
    })
}

/// Run the exact solver at each deviation allowance (ascending), warm
/// starting every run with the previous incumbent. Proven-optimal values
/// are non-increasing; warm starts keep incumbents non-increasing too.
pub fn pareto_sweep(
    graph: &UnitGraph,
    k: District,
    deviations: &[f64],
    require_contiguity: bool,
    budget_each: Duration,
    base: &ExactOptions,
) -> Result<Vec<ParetoPoint>, OptimizeError> {
    if deviations.windows(2).any(|w| w[0] > w[1]) {
        return Err(OptimizeError::UnsortedDeviations);
    }
    let mut points = Vec::with_capacity(deviations.len());
    let mut carry: Option<Plan> = base.warm_start.clone();
    for &deviation in deviations {
        let constraints = Constraints::new(k, deviation, require_contiguity)
            .map_err(|_| OptimizeError::UnsortedDeviations)?;
        let options = ExactOptions {
            time_budget: budget_each,
            warm_start: carry.clone(),
            ..base.clone()
        };
        let result = exact_min_cut_edges(graph, &constraints, &options)?;
        if let Some(plan) = &result.plan {
            carry = Some(plan.clone());
        }
        points.push(ParetoPoint {
            deviation,
            cut_edges: result.cut_edges,
            status: result.status,
            lower_bound: result.lower_bound,
        });
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumerate::{enumerate_plans, EnumerateOptions};
    use crate::instances::{make_grid, GridSpec};
    use crate::testutil::grid;

    fn options_fast() -> ExactOptions {
        ExactOptions {
            time_budget: Duration::from_secs(300),
            ..Default::default()
        }
    }

    #[test]
    fn proves_three_by_three() {
        let g = grid(3);
        let c = Constraints::new(3, 0.0, true).unwrap();
        let r = exact_min_cut_edges(&g, &c, &options_fast()).unwrap();
        assert_eq!(r.status, SolveStatus::ProvenOptimal);
        assert_eq!(r.cut_edges, Some(6));
        assert_eq!(r.lower_bound, 6);
        assert!(r.contiguous);
        let plan = r.plan.unwrap();
        assert!(validate(&plan, &g, &c).valid);
    }

    #[test]
    fn proven_minima_match_enumeration_oracle() {
        for (n, k) in [(2usize, 2u16), (3, 3), (4, 4), (5, 5)] {
            let g = grid(n);
            let c = Constraints::new(k, 0.0, true).unwrap();
            let oracle = enumerate_plans(&g, &c, &EnumerateOptions::default()).unwrap();
            let oracle_min = *oracle.cut_edge_histogram.keys().next().unwrap();
            let r = exact_min_cut_edges(&g, &c, &options_fast()).unwrap();
            assert_eq!(r.status, SolveStatus::ProvenOptimal, "n={n}");
            assert_eq!(r.cut_edges, Some(oracle_min), "n={n}");
        }
    }

    #[test]
    fn budget_exhaustion_reports_incumbent() {
        let g = grid(5);
        let c = Constraints::new(5, 0.0, true).unwrap();
        let options = ExactOptions {
            node_budget: 2_000,
            warm_start_steps: 200,
            ..options_fast()
        };
        let r = exact_min_cut_edges(&g, &c, &options).unwrap();
        if let Some(value) = r.cut_edges {
            assert!(r.lower_bound <= value);
            assert!(matches!(
                r.status,
                SolveStatus::Incumbent | SolveStatus::ProvenOptimal
            ));
        } else {
            assert!(matches!(
                r.status,
                SolveStatus::LowerBoundOnly | SolveStatus::Infeasible
            ));
        }
    }

    #[test]
    fn infeasible_when_population_cannot_balance() {
        // Total 5 into k=2 at deviation 0: no integer split works.
        let g = UnitGraph::new(vec![1, 1, 1, 1, 1], vec![(0, 1), (1, 2), (2, 3), (3, 4)])
            .unwrap();
        let c = Constraints::new(2, 0.0, true).unwrap();
        let r = exact_min_cut_edges(&g, &c, &options_fast()).unwrap();
        assert_eq!(r.status, SolveStatus::Infeasible);
        assert_eq!(r.cut_edges, None);
    }

    #[test]
    fn warm_start_is_honored() {
        let g = grid(4);
        let c = Constraints::new(4, 0.0, true).unwrap();
        let quad = {
            let mut labels = vec![0u16; 16];
            for r in 0..4 {
                for col in 0..4 {
                    labels[r * 4 + col] = ((r / 2) * 2 + col / 2) as u16;
                }
            }
            Plan::from_labels(labels, 4).unwrap()
        };
        let options = ExactOptions {
            warm_start: Some(quad),
            ..options_fast()
        };
        let r = exact_min_cut_edges(&g, &c, &options).unwrap();
        assert_eq!(r.status, SolveStatus::ProvenOptimal);
        assert_eq!(r.cut_edges, Some(8));
    }

    #[test]
    fn pareto_sweep_is_monotone_on_4x4() {
        let g = make_grid(&GridSpec::uniform(4, 4)).unwrap();
        let points = pareto_sweep(
            &g,
            4,
            &[0.0, 0.1, 0.25],
            true,
            Duration::from_secs(120),
            &ExactOptions::default(),
        )
        .unwrap();
        assert_eq!(points.len(), 3);
        for p in &points {
            assert_eq!(p.status, SolveStatus::ProvenOptimal);
            assert!(p.lower_bound <= p.cut_edges.unwrap());
        }
        for w in points.windows(2) {
            assert!(w[1].cut_edges.unwrap() <= w[0].cut_edges.unwrap());
        }
        assert_eq!(points[0].cut_edges, Some(8));
    }

    #[test]
    fn unsorted_deviations_rejected() {
        let g = grid(3);
        assert!(matches!(
            pareto_sweep(
                &g,
                3,
                &[0.2, 0.1],
                true,
                Duration::from_secs(1),
                &ExactOptions::default()
            ),
            Err(OptimizeError::UnsortedDeviations)
        ));
    }
}
