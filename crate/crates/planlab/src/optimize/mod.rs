//! Plan optimization: four metaheuristics over the chain neighborhoods,
//! an exact branch-and-bound cut-edge minimizer, and the
//! deviation-vs-cut-edges Pareto sweep.

mod exact;
mod local;

pub use exact::{
    exact_min_cut_edges, pareto_sweep, BranchAndBound, ExactOptions, ExactResult, ExactSolver,
    MAX_EXACT_UNITS,
};
pub use local::{
    crossover, evolutionary, hill_climb, simulated_annealing, tabu_search, EvolveConfig,
    OptimizeRun,
};

use thiserror::Error;

use crate::constraints::Constraints;
use crate::graph::UnitGraph;
use crate::plan::Plan;
use crate::score::{cut_edges, max_deviation, ScoreError};

#[derive(Debug, Error)]
pub enum OptimizeError {
    #[error("start plan is invalid under the given constraints")]
    InvalidStart,
    #[error("objective weights must be nonnegative with at least one positive")]
    BadObjective,
    #[error("weighted objective includes county splits but the graph has no counties")]
    MissingCounties,
    #[error("population must contain at least two plans")]
    PopulationTooSmall,
    #[error("plans disagree on k or unit count")]
    MismatchedPlans,
    #[error("graph has no centroids (required by the crossover merge policy)")]
    MissingCentroids,
    #[error("annealing schedule is invalid: {0}")]
    BadSchedule(&'static str),
    #[error("instance has {units} units; the exact solver supports at most {max}")]
    TooLarge { units: usize, max: usize },
    #[error("deviations must be sorted ascending")]
    UnsortedDeviations,
    #[error(transparent)]
    Score(#[from] ScoreError),
}

/// What a metaheuristic minimizes.
#[derive(Debug, Clone, PartialEq)]
pub enum Objective {
    CutEdges,
    /// Nonnegative weights over the three plan scores; at least one must
    /// be positive. County splits require county labels on the graph.
    WeightedSum {
        cut_edges: f64,
        population_deviation: f64,
        county_splits: f64,
    },
}

impl Objective {
    pub fn check(&self, graph: &UnitGraph) -> Result<(), OptimizeError> {
        match self {
            Objective::CutEdges => Ok(()),
            Objective::WeightedSum {
                cut_edges: a,
                population_deviation: b,
                county_splits: c,
            } => {
                if !(*a >= 0.0 && *b >= 0.0 && *c >= 0.0) || (*a == 0.0 && *b == 0.0 && *c == 0.0)
                {
                    return Err(OptimizeError::BadObjective);
                }
                if *c > 0.0 && graph.counties().is_none() {
                    return Err(OptimizeError::MissingCounties);
                }
                Ok(())
            }
        }
    }

    pub fn evaluate(
        &self,
        plan: &Plan,
        graph: &UnitGraph,
        constraints: &Constraints,
    ) -> Result<f64, ScoreError> {
        match self {
            Objective::CutEdges => Ok(cut_edges(plan, graph)? as f64),
            Objective::WeightedSum {
                cut_edges: a,
                population_deviation: b,
                county_splits: c,
            } => {
                let mut value = 0.0;
                if *a > 0.0 {
                    value += a * cut_edges(plan, graph)? as f64;
                }
                if *b > 0.0 {
                    value += b * max_deviation(plan, graph, constraints)?;
                }
                if *c > 0.0 {
                    value += c * county_splits(plan, graph).unwrap_or(0) as f64;
                }
                Ok(value)
            }
        }
    }
}

/// Number of counties whose units span more than one district. `None`
/// when the graph has no county labels.
pub fn county_splits(plan: &Plan, graph: &UnitGraph) -> Option<u32> {
    let counties = graph.counties()?;
    let mut seen: Vec<Option<crate::plan::District>> = vec![None; graph.num_counties()];
    let mut split = vec![false; graph.num_counties()];
    for (unit, &county) in counties.iter().enumerate() {
        let label = plan.district_of(unit as u32)?;
        match seen[county as usize] {
            None => seen[county as usize] = Some(label),
            Some(first) if first != label => split[county as usize] = true,
            _ => {}
        }
    }
    Some(split.iter().filter(|&&s| s).count() as u32)
}

/// Geometric cooling schedule. Temperature after epoch e is
/// `initial * cooling^e`, strictly decreasing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnealSchedule {
    pub initial_temperature: f64,
    pub cooling_factor: f64,
    pub steps_per_temperature: u32,
    pub epochs: u32,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        AnnealSchedule {
            initial_temperature: 2.0,
            cooling_factor: 0.99,
            steps_per_temperature: 100,
            epochs: 400,
        }
    }
}

impl AnnealSchedule {
    pub fn check(&self) -> Result<(), OptimizeError> {
        let t = self.initial_temperature;
        if !t.is_finite() || t <= 0.0 {
            return Err(OptimizeError::BadSchedule("initial temperature must be > 0"));
        }
        let f = self.cooling_factor;
        if !f.is_finite() || f <= 0.0 || f >= 1.0 {
            return Err(OptimizeError::BadSchedule("cooling factor must be in (0, 1)"));
        }
        if self.steps_per_temperature == 0 {
            return Err(OptimizeError::BadSchedule("steps per temperature must be >= 1"));
        }
        if self.epochs == 0 {
            return Err(OptimizeError::BadSchedule("epochs must be >= 1"));
        }
        Ok(())
    }
}

/// Solver status for exact results and Pareto points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// The search tree was exhausted: the value is the global minimum.
    ProvenOptimal,
    /// Best feasible plan found within budget; the bound may be loose.
    Incumbent,
    /// Budget ran out before any feasible plan was found.
    LowerBoundOnly,
    /// The search tree was exhausted without any feasible plan.
    Infeasible,
}

impl SolveStatus {
    pub fn name(&self) -> &'static str {
        match self {
            SolveStatus::ProvenOptimal => "proven_optimal",
            SolveStatus::Incumbent => "incumbent",
            SolveStatus::LowerBoundOnly => "lower_bound",
            SolveStatus::Infeasible => "infeasible",
        }
    }
}

/// One point of the deviation → minimum-cut-edges frontier.
#[derive(Debug, Clone, PartialEq)]
pub struct ParetoPoint {
    pub deviation: f64,
    pub cut_edges: Option<u32>,
    pub status: SolveStatus,
    pub lower_bound: u32,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{make_grid, GridSpec};
    use crate::testutil::quadrant_plan_6x6;

    #[test]
    fn objective_validation() {
        let g = make_grid(&GridSpec::uniform(3, 3)).unwrap();
        assert!(Objective::CutEdges.check(&g).is_ok());
        let zero = Objective::WeightedSum {
            cut_edges: 0.0,
            population_deviation: 0.0,
            county_splits: 0.0,
        };
        assert!(matches!(zero.check(&g), Err(OptimizeError::BadObjective)));
        let needs_counties = Objective::WeightedSum {
            cut_edges: 1.0,
            population_deviation: 0.0,
            county_splits: 1.0,
        };
        assert!(matches!(
            needs_counties.check(&g),
            Err(OptimizeError::MissingCounties)
        ));
    }

    #[test]
    fn county_split_counting() {
        let g = make_grid(&GridSpec::uniform(6, 6).with_county_blocks(3, 3)).unwrap();
        // Quadrants align exactly with the 3x3 county blocks: no splits.
        assert_eq!(county_splits(&quadrant_plan_6x6(), &g), Some(0));
        // A single-district plan splits nothing either.
        assert_eq!(county_splits(&crate::plan::Plan::single_district(36), &g), Some(0));
        // Column stripes of width 2 split two of the four 3x3 blocks... each
        // block spans columns 0-2 or 3-5, stripes are 0-1/2-3/4-5: blocks
        // left (cols 0-2) mix stripes 0 and 1, right blocks mix 1 and 2.
        let stripes =
            crate::plan::Plan::from_labels((0..36).map(|i| ((i % 6) / 2) as u16).collect(), 3)
                .unwrap();
        assert_eq!(county_splits(&stripes, &g), Some(4));
    }

    #[test]
    fn schedule_validation() {
        assert!(AnnealSchedule::default().check().is_ok());
        let bad = AnnealSchedule {
            cooling_factor: 1.0,
            ..Default::default()
        };
        assert!(bad.check().is_err());
    }
}
