//! Validity requirements shared by all generators and optimizers:
//! district count, population-deviation tolerance, and contiguity.

use thiserror::Error;

use crate::graph::UnitGraph;
use crate::plan::District;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConstraintError {
    #[error("district count must be at least 1")]
    ZeroDistricts,
    #[error("deviation must be nonnegative and finite")]
    BadDeviation,
}

/// Comparisons against the population window use a small relative slack so
/// that integer populations landing exactly on a real-valued bound (for
/// example deviation 0 with an integer ideal) are not rejected by rounding.
pub const POP_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constraints {
    pub k: District,
    /// Max allowed value of |district population − ideal| / ideal,
    /// where ideal = total population / k.
    pub deviation: f64,
    pub require_contiguity: bool,
}

impl Constraints {
    pub fn new(k: District, deviation: f64, require_contiguity: bool) -> Result<Self, ConstraintError> {
        if k == 0 {
            return Err(ConstraintError::ZeroDistricts);
        }
        if !deviation.is_finite() || deviation < 0.0 {
            return Err(ConstraintError::BadDeviation);
        }
        Ok(Constraints {
            k,
            deviation,
            require_contiguity,
        })
    }

    /// Ideal district population: total / k, real-valued.
    pub fn ideal(&self, graph: &UnitGraph) -> f64 {
        graph.total_population() as f64 / self.k as f64
    }

    /// The feasibility window `(lower, upper)` = ((1−d)·ideal, (1+d)·ideal).
    pub fn population_bounds(&self, graph: &UnitGraph) -> (f64, f64) {
        let ideal = self.ideal(graph);
        ((1.0 - self.deviation) * ideal, (1.0 + self.deviation) * ideal)
    }

    /// A district of population `pop` is feasible iff |pop − ideal| ≤ d·ideal.
    pub fn district_feasible(&self, pop: u64, graph: &UnitGraph) -> bool {
        let (lo, hi) = self.population_bounds(graph);
        let slack = POP_EPS * self.ideal(graph).max(1.0);
        let p = pop as f64;
        p >= lo - slack && p <= hi + slack
    }
}
