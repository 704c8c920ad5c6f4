//! Exhaustive, deterministic enumeration of all valid plans on small
//! instances. This is the ground-truth oracle for every sampler and
//! optimizer in the crate.
//!
//! Plans are counted up to district relabeling: the search assigns units
//! in id order under a restricted-growth rule (district 0 contains unit 0;
//! a new district may only be opened with the lowest-id unassigned unit),
//! so each unlabeled partition is visited exactly once, in a fixed order.
//! Pruning discards partial assignments whose districts can no longer be
//! completed contiguously or within the population window.
//!
//! Instances are capped at 64 units (bitmask representation) and by a
//! configurable node budget; both guards exist because enumeration on
//! anything larger than desk-scale grids is hopeless.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};

use thiserror::Error;

use crate::constraints::{Constraints, POP_EPS};
use crate::graph::UnitGraph;
use crate::plan::{District, Plan};

/// Enough for the 6×6 four-district benchmark (~21M nodes) with slack,
/// while refusing 10×10-scale searches.
pub const DEFAULT_NODE_BUDGET: u64 = 500_000_000;

pub const MAX_ENUMERABLE_UNITS: usize = 64;

#[derive(Debug, Error)]
pub enum EnumerateError {
    #[error("instance has {units} units; enumeration supports at most {MAX_ENUMERABLE_UNITS}")]
    TooManyUnits { units: usize },
    #[error("combinatorial explosion guard: node budget {budget} exceeded")]
    BudgetExceeded {
        budget: u64,
        /// Work completed before the guard fired, flagged `complete: false`.
        partial: Box<EnumerationResult>,
    },
    #[error("enumeration did not run to completion")]
    Incomplete,
}

/// Compact storage for a list of same-shape plans (one byte per unit).
#[derive(Debug, Clone)]
pub struct PlanList {
    num_units: usize,
    k: District,
    data: Vec<u8>,
}

impl PlanList {
    fn new(num_units: usize, k: District) -> Self {
        PlanList {
            num_units,
            k,
            data: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.data
            .len()
            .checked_div(self.num_units)
            .unwrap_or_default()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn k(&self) -> District {
        self.k
    }

    pub fn labels(&self, index: usize) -> &[u8] {
        &self.data[index * self.num_units..(index + 1) * self.num_units]
    }

    pub fn plan(&self, index: usize) -> Plan {
        let labels = self
            .labels(index)
            .iter()
            .map(|&l| l as District)
            .collect();
        Plan::from_labels(labels, self.k).expect("stored plan is well-formed")
    }

    fn push(&mut self, labels: &[District]) {
        self.data.extend(labels.iter().map(|&l| l as u8));
    }

    fn append(&mut self, other: &PlanList) {
        self.data.extend_from_slice(&other.data);
    }
}

#[derive(Debug, Clone)]
pub struct EnumerationResult {
    /// Number of distinct unlabeled partitions visited.
    pub count: u64,
    /// Exact histogram: cut-edge score → number of plans.
    pub cut_edge_histogram: BTreeMap<u32, u64>,
    /// Stored plans in visit order, when collection was requested.
    pub plans: Option<PlanList>,
    pub nodes_visited: u64,
    /// False only on the partial result attached to a budget error.
    pub complete: bool,
    pub graph_hash: u64,
    pub constraints: Constraints,
}

impl EnumerationResult {
    fn empty(graph: &UnitGraph, constraints: &Constraints, collect: bool) -> Self {
        EnumerationResult {
            count: 0,
            cut_edge_histogram: BTreeMap::new(),
            plans: collect.then(|| PlanList::new(graph.num_units(), constraints.k)),
            nodes_visited: 0,
            complete: false,
            graph_hash: graph.hash(),
            constraints: *constraints,
        }
    }

    fn merge(&mut self, other: EnumerationResult) {
        self.count += other.count;
        for (score, n) in other.cut_edge_histogram {
            *self.cut_edge_histogram.entry(score).or_insert(0) += n;
        }
        if let (Some(mine), Some(theirs)) = (self.plans.as_mut(), other.plans.as_ref()) {
            mine.append(theirs);
        }
        self.nodes_visited += other.nodes_visited;
    }
}

/// The exact cut-edge histogram over all enumerated plans.
/// Errors if the enumeration did not complete.
pub fn cut_edge_distribution(result: &EnumerationResult) -> Result<&BTreeMap<u32, u64>, EnumerateError> {
    if !result.complete {
        return Err(EnumerateError::Incomplete);
    }
    Ok(&result.cut_edge_histogram)
}

#[derive(Debug, Clone, Copy)]
pub struct EnumerateOptions {
    /// Store every plan (one byte per unit per plan) instead of counting only.
    pub collect: bool,
    pub node_budget: u64,
    pub threads: usize,
}

impl Default for EnumerateOptions {
    fn default() -> Self {
        EnumerateOptions {
            collect: false,
            node_budget: DEFAULT_NODE_BUDGET,
            threads: 1,
        }
    }
}

struct SearchCtx<'a> {
    neighbor_masks: &'a [u64],
    pops: &'a [u64],
    total_pop: u64,
    full_mask: u64,
    n: usize,
    k: usize,
    lo: f64,
    hi: f64,
    slack: f64,
    collect: bool,
    budget: &'a AtomicU64,
}

const BUDGET_CHUNK: u64 = 1 << 14;

/// Reserve another chunk of the shared node budget. Returns false once the
/// budget is exhausted; never underflows under contention.
fn refill_budget(shared: &AtomicU64, local: &mut u64) -> bool {
    if *local > 0 {
        return true;
    }
    let mut current = shared.load(Ordering::Relaxed);
    loop {
        if current == 0 {
            return false;
        }
        let take = current.min(BUDGET_CHUNK);
        match shared.compare_exchange_weak(
            current,
            current - take,
            Ordering::Relaxed,
            Ordering::Relaxed,
        ) {
            Ok(_) => {
                *local = take;
                return true;
            }
            Err(seen) => current = seen,
        }
    }
}

#[derive(Clone)]
struct SearchState {
    labels: Vec<District>,
    district_masks: Vec<u64>,
    district_pops: Vec<u64>,
    used: usize,
    assigned_mask: u64,
    assigned_pop: u64,
    cut: u32,
    next_unit: usize,
}

impl SearchState {
    fn root(n: usize, k: usize) -> Self {
        SearchState {
            labels: vec![Plan::UNASSIGNED; n],
            district_masks: vec![0; k],
            district_pops: vec![0; k],
            used: 0,
            assigned_mask: 0,
            assigned_pop: 0,
            cut: 0,
            next_unit: 0,
        }
    }
}

/// Check the district for sealed components. A component is sealed when
/// none of its units has an undecided neighbor; a sealed component can
/// never merge with the rest of its district or grow its population.
fn district_completable(ctx: &SearchCtx, mask: u64, pop: u64, undecided: u64) -> bool {
    let whole = mask;
    let mut remaining = mask;
    while remaining != 0 {
        // Flood one component by bitmask expansion.
        let seed = remaining & remaining.wrapping_neg();
        let mut comp = seed;
        loop {
            let mut frontier_nbrs = 0u64;
            let mut bits = comp;
            while bits != 0 {
                let u = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                frontier_nbrs |= ctx.neighbor_masks[u];
            }
            let grown = comp | (frontier_nbrs & whole);
            if grown == comp {
                // Sealed iff no undecided neighbor.
                if frontier_nbrs & undecided == 0 {
                    let is_whole_district = comp == whole;
                    if !is_whole_district {
                        return false; // split district can never reconnect
                    }
                    if (pop as f64) < ctx.lo - ctx.slack {
                        return false; // done growing but underpopulated
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

fn prune(ctx: &SearchCtx, state: &SearchState, touched: &[usize]) -> bool {
    let remaining_units = (ctx.n - state.next_unit) as u64;
    let unopened = ctx.k - state.used;
    if unopened as u64 > remaining_units {
        return true;
    }
    let remaining_pop = (ctx.total_pop - state.assigned_pop) as f64;
    // Every underpopulated district still needs population, and so does
    // every district not yet opened.
    let mut deficit = unopened as f64 * ctx.lo;
    let mut capacity = unopened as f64 * ctx.hi;
    for d in 0..state.used {
        let p = state.district_pops[d] as f64;
        if p < ctx.lo {
            deficit += ctx.lo - p;
        }
        capacity += (ctx.hi - p).max(0.0);
    }
    if deficit > remaining_pop + ctx.slack {
        return true;
    }
    if remaining_pop > capacity + ctx.slack {
        return true;
    }
    let undecided = ctx.full_mask & !state.assigned_mask;
    for &d in touched {
        if !district_completable(ctx, state.district_masks[d], state.district_pops[d], undecided) {
            return true;
        }
    }
    false
}

enum DfsOutcome {
    Done,
    BudgetExceeded,
}

fn dfs(
    ctx: &SearchCtx,
    state: &mut SearchState,
    local_budget: &mut u64,
    out: &mut EnumerationResult,
) -> DfsOutcome {
    if state.next_unit == ctx.n {
        out.count += 1;
        *out.cut_edge_histogram.entry(state.cut).or_insert(0) += 1;
        if ctx.collect {
            if let Some(plans) = out.plans.as_mut() {
                plans.push(&state.labels);
            }
        }
        return DfsOutcome::Done;
    }

    let unit = state.next_unit;
    let unit_pop = ctx.pops[unit];
    let nbr = ctx.neighbor_masks[unit];
    let max_label = (state.used + 1).min(ctx.k);

    for d in 0..max_label {
        if (state.district_pops[d] + unit_pop) as f64 > ctx.hi + ctx.slack {
            continue;
        }
        // Each expanded (unit, district) node costs one budget unit.
        if !refill_budget(ctx.budget, local_budget) {
            return DfsOutcome::BudgetExceeded;
        }
        *local_budget -= 1;
        out.nodes_visited += 1;

        let decided_nbrs = (nbr & state.assigned_mask).count_ones();
        let same_nbrs = (nbr & state.district_masks[d]).count_ones();
        let cut_delta = decided_nbrs - same_nbrs;

        let opened_new = d == state.used;
        state.labels[unit] = d as District;
        state.district_masks[d] |= 1 << unit;
        state.district_pops[d] += unit_pop;
        if opened_new {
            state.used += 1;
        }
        state.assigned_mask |= 1 << unit;
        state.assigned_pop += unit_pop;
        state.cut += cut_delta;
        state.next_unit += 1;

        // Re-examine the changed district plus the districts of the unit's
        // already-decided neighbors: only they can have newly sealed
        // components now that `unit` is no longer undecided.
        let mut touched = [0usize; 5];
        let mut touched_len = 0usize;
        let push_touched = |x: usize, buf: &mut [usize; 5], len: &mut usize| {
            if !buf[..*len].contains(&x) && *len < buf.len() {
                buf[*len] = x;
                *len += 1;
            }
        };
        push_touched(d, &mut touched, &mut touched_len);
        let mut bits = nbr & state.assigned_mask;
        while bits != 0 {
            let v = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            push_touched(state.labels[v] as usize, &mut touched, &mut touched_len);
        }

        let pruned = prune(ctx, state, &touched[..touched_len]);
        let outcome = if pruned {
            DfsOutcome::Done
        } else {
            dfs(ctx, state, local_budget, out)
        };

        state.next_unit -= 1;
        state.cut -= cut_delta;
        state.assigned_pop -= unit_pop;
        state.assigned_mask &= !(1 << unit);
        if opened_new {
            state.used -= 1;
        }
        state.district_pops[d] -= unit_pop;
        state.district_masks[d] &= !(1 << unit);
        state.labels[unit] = Plan::UNASSIGNED;

        if matches!(outcome, DfsOutcome::BudgetExceeded) {
            return DfsOutcome::BudgetExceeded;
        }
    }
    DfsOutcome::Done
}

/// Collect the frontier of search states at `depth` units assigned, in
/// deterministic branch order, for parallel exploration.
fn collect_branches(
    ctx: &SearchCtx,
    state: &mut SearchState,
    depth: usize,
    out: &mut Vec<SearchState>,
) {
    if state.next_unit == depth {
        out.push(state.clone());
        return;
    }
    let unit = state.next_unit;
    let unit_pop = ctx.pops[unit];
    let nbr = ctx.neighbor_masks[unit];
    let max_label = (state.used + 1).min(ctx.k);
    for d in 0..max_label {
        if (state.district_pops[d] + unit_pop) as f64 > ctx.hi + ctx.slack {
            continue;
        }
        let decided_nbrs = (nbr & state.assigned_mask).count_ones();
        let same_nbrs = (nbr & state.district_masks[d]).count_ones();
        let cut_delta = decided_nbrs - same_nbrs;
        let opened_new = d == state.used;

        state.labels[unit] = d as District;
        state.district_masks[d] |= 1 << unit;
        state.district_pops[d] += unit_pop;
        if opened_new {
            state.used += 1;
        }
        state.assigned_mask |= 1 << unit;
        state.assigned_pop += unit_pop;
        state.cut += cut_delta;
        state.next_unit += 1;

        if !prune(ctx, state, &[d]) {
            collect_branches(ctx, state, depth, out);
        }

        state.next_unit -= 1;
        state.cut -= cut_delta;
        state.assigned_pop -= unit_pop;
        state.assigned_mask &= !(1 << unit);
        if opened_new {
            state.used -= 1;
        }
        state.district_pops[d] -= unit_pop;
        state.district_masks[d] &= !(1 << unit);
        state.labels[unit] = Plan::UNASSIGNED;
    }
}

/// Visit every complete, contiguous, population-feasible partition of the
/// graph into `constraints.k` unlabeled districts exactly once, in a
/// deterministic order independent of thread count.
pub fn enumerate_plans(
    graph: &UnitGraph,
    constraints: &Constraints,
    options: &EnumerateOptions,
) -> Result<EnumerationResult, EnumerateError> {
    let n = graph.num_units();
    if n > MAX_ENUMERABLE_UNITS {
        return Err(EnumerateError::TooManyUnits { units: n });
    }
    let k = constraints.k as usize;
    let (lo, hi) = constraints.population_bounds(graph);
    let slack = POP_EPS * constraints.ideal(graph).max(1.0);

    let neighbor_masks: Vec<u64> = (0..n as u32)
        .map(|u| {
            graph
                .neighbors(u)
                .iter()
                .fold(0u64, |m, &v| m | (1 << v))
        })
        .collect();
    let pops: Vec<u64> = graph.populations().iter().map(|&p| p as u64).collect();
    let budget = AtomicU64::new(options.node_budget);

    let ctx = SearchCtx {
        neighbor_masks: &neighbor_masks,
        pops: &pops,
        total_pop: graph.total_population(),
        full_mask: if n == 64 { u64::MAX } else { (1u64 << n) - 1 },
        n,
        k,
        lo,
        hi,
        slack,
        collect: options.collect,
        budget: &budget,
    };

    let threads = options.threads.max(1);
    let mut result = EnumerationResult::empty(graph, constraints, options.collect);

    let exceeded = if threads == 1 || n < 4 {
        let mut state = SearchState::root(n, k);
        let mut local = 0u64;
        matches!(
            dfs(&ctx, &mut state, &mut local, &mut result),
            DfsOutcome::BudgetExceeded
        )
    } else {
        // Split at a shallow depth, then explore branches in a worker pool.
        // Results merge in branch order, so output is thread-count
        // invariant.
        let depth = (n / 3).clamp(2, 12);
        let mut branches = Vec::new();
        collect_branches(&ctx, &mut SearchState::root(n, k), depth, &mut branches);
        let next = AtomicU64::new(0);
        let mut slots: Vec<std::sync::Mutex<Option<(EnumerationResult, bool)>>> = Vec::new();
        slots.resize_with(branches.len(), || std::sync::Mutex::new(None));
        std::thread::scope(|scope| {
            for _ in 0..threads {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed) as usize;
                    if i >= branches.len() {
                        break;
                    }
                    let mut local = EnumerationResult::empty(graph, constraints, options.collect);
                    let mut state = branches[i].clone();
                    let mut local_budget = 0u64;
                    let exceeded = matches!(
                        dfs(&ctx, &mut state, &mut local_budget, &mut local),
                        DfsOutcome::BudgetExceeded
                    );
                    *slots[i].lock().unwrap() = Some((local, exceeded));
                });
            }
        });
        let mut exceeded = false;
        for slot in slots {
            let (local, ex) = slot
                .into_inner()
                .unwrap()
                .expect("every branch produced a result");
            exceeded |= ex;
            result.merge(local);
        }
        exceeded
    };

    result.complete = !exceeded;
    if exceeded {
        return Err(EnumerateError::BudgetExceeded {
            budget: options.node_budget,
            partial: Box::new(result),
        });
    }
    Ok(result)
}
