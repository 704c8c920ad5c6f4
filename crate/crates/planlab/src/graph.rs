//! The immutable geography: units with populations, adjacency edges, and
//! optional centroids / county labels.
//!
//! A [`UnitGraph`] is constructed once, validated, and then shared read-only
//! by every algorithm. Adjacency is explicit data — it is never inferred
//! from coordinates, so questions like "do corner-touching counties count
//! as neighbors?" are settled by the instance file, not by code.

use thiserror::Error;

use crate::hash::Fnv1a;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("graph must contain at least one unit")]
    Empty,
    #[error("edge ({0}, {1}) is a self-loop")]
    SelfLoop(u32, u32),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(u32, u32),
    #[error("edge ({0}, {1}) references unknown unit {2}")]
    DanglingEdge(u32, u32, u32),
    #[error("expected {expected} {what} entries, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("centroid for unit {0} is not finite")]
    BadCentroid(u32),
}

/// Immutable unit graph: dense unit ids `0..n`, undirected edges, and
/// per-unit attributes. Populations are nonnegative integers; centroids
/// are all-or-nothing.
#[derive(Debug, Clone)]
pub struct UnitGraph {
    name: String,
    populations: Vec<u32>,
    edges: Vec<(u32, u32)>,
    neighbors: Vec<Vec<u32>>,
    centroids: Option<Vec<(f64, f64)>>,
    counties: Option<Vec<u32>>,
    county_names: Vec<String>,
    unit_names: Option<Vec<String>>,
    total_population: u64,
    hash: u64,
}

impl UnitGraph {
    /// Build a graph from per-unit populations and an undirected edge list.
    /// Edges are normalized to `(min, max)` and sorted; self-loops,
    /// duplicates, and dangling endpoints are rejected.
    pub fn new(populations: Vec<u32>, edges: Vec<(u32, u32)>) -> Result<Self, GraphError> {
        UnitGraphBuilder::new(populations, edges).build()
    }

    pub fn builder(populations: Vec<u32>, edges: Vec<(u32, u32)>) -> UnitGraphBuilder {
        UnitGraphBuilder::new(populations, edges)
    }

    pub fn num_units(&self) -> usize {
        self.populations.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(a, b)` pairs with `a < b`, sorted lexicographically.
    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn neighbors(&self, unit: u32) -> &[u32] {
        &self.neighbors[unit as usize]
    }

    pub fn degree(&self, unit: u32) -> usize {
        self.neighbors[unit as usize].len()
    }

    pub fn population(&self, unit: u32) -> u32 {
        self.populations[unit as usize]
    }

    pub fn populations(&self) -> &[u32] {
        &self.populations
    }

    pub fn total_population(&self) -> u64 {
        self.total_population
    }

    pub fn centroids(&self) -> Option<&[(f64, f64)]> {
        self.centroids.as_deref()
    }

    pub fn centroid(&self, unit: u32) -> Option<(f64, f64)> {
        self.centroids.as_ref().map(|c| c[unit as usize])
    }

    /// County id per unit, if county labels were provided.
    pub fn counties(&self) -> Option<&[u32]> {
        self.counties.as_deref()
    }

    pub fn county_name(&self, county: u32) -> &str {
        &self.county_names[county as usize]
    }

    pub fn num_counties(&self) -> usize {
        self.county_names.len()
    }

    pub fn unit_name(&self, unit: u32) -> Option<&str> {
        self.unit_names.as_ref().map(|v| v[unit as usize].as_str())
    }

    pub fn unit_names(&self) -> Option<&[String]> {
        self.unit_names.as_deref()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Stable content hash (name excluded) used to detect instance
    /// mismatches between ensembles, oracles, and plan files.
    pub fn hash(&self) -> u64 {
        self.hash
    }

    /// True iff the whole graph is connected (ignoring labels).
    pub fn is_connected(&self) -> bool {
        let n = self.num_units();
        if n == 0 {
            return false;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0u32];
        seen[0] = true;
        let mut count = 1usize;
        while let Some(u) = stack.pop() {
            for &v in self.neighbors(u) {
                if !seen[v as usize] {
                    seen[v as usize] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == n
    }

    fn compute_hash(&mut self) {
        let mut h = Fnv1a::new();
        h.write_usize(self.populations.len());
        for &p in &self.populations {
            h.write_u64(p as u64);
        }
        h.write_usize(self.edges.len());
        for &(a, b) in &self.edges {
            h.write_u64(((a as u64) << 32) | b as u64);
        }
        if let Some(cs) = &self.centroids {
            for &(x, y) in cs {
                h.write_u64(x.to_bits());
                h.write_u64(y.to_bits());
            }
        }
        if let Some(cs) = &self.counties {
            for &c in cs {
                h.write_u64(c as u64);
            }
        }
        self.hash = h.finish();
    }
}

pub struct UnitGraphBuilder {
    populations: Vec<u32>,
    edges: Vec<(u32, u32)>,
    name: String,
    centroids: Option<Vec<(f64, f64)>>,
    counties: Option<Vec<String>>,
    unit_names: Option<Vec<String>>,
}

impl UnitGraphBuilder {
    pub fn new(populations: Vec<u32>, edges: Vec<(u32, u32)>) -> Self {
        UnitGraphBuilder {
            populations,
            edges,
            name: String::new(),
            centroids: None,
            counties: None,
            unit_names: None,
        }
    }

    pub fn name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Coordinates for every unit. All-or-nothing: supplying centroids for
    /// a subset of units is a length mismatch.
    pub fn centroids(mut self, centroids: Vec<(f64, f64)>) -> Self {
        self.centroids = Some(centroids);
        self
    }

    pub fn counties(mut self, counties: Vec<String>) -> Self {
        self.counties = Some(counties);
        self
    }

    pub fn unit_names(mut self, names: Vec<String>) -> Self {
        self.unit_names = Some(names);
        self
    }

    pub fn build(self) -> Result<UnitGraph, GraphError> {
        let n = self.populations.len();
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let mut edges: Vec<(u32, u32)> = Vec::with_capacity(self.edges.len());
        for &(a, b) in &self.edges {
            if a == b {
                return Err(GraphError::SelfLoop(a, b));
            }
            let bad = if a as usize >= n {
                Some(a)
            } else if b as usize >= n {
                Some(b)
            } else {
                None
            };
            if let Some(u) = bad {
                return Err(GraphError::DanglingEdge(a, b, u));
            }
            edges.push((a.min(b), a.max(b)));
        }
        edges.sort_unstable();
        if let Some(w) = edges.windows(2).find(|w| w[0] == w[1]) {
            return Err(GraphError::DuplicateEdge(w[0].0, w[0].1));
        }

        let mut neighbors = vec![Vec::new(); n];
        for &(a, b) in &edges {
            neighbors[a as usize].push(b);
            neighbors[b as usize].push(a);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }

        if let Some(cs) = &self.centroids {
            if cs.len() != n {
                return Err(GraphError::LengthMismatch {
                    what: "centroid",
                    expected: n,
                    got: cs.len(),
                });
            }
            for (i, &(x, y)) in cs.iter().enumerate() {
                if !x.is_finite() || !y.is_finite() {
                    return Err(GraphError::BadCentroid(i as u32));
                }
            }
        }
        if let Some(names) = &self.unit_names {
            if names.len() != n {
                return Err(GraphError::LengthMismatch {
                    what: "unit name",
                    expected: n,
                    got: names.len(),
                });
            }
        }

        let (counties, county_names) = match self.counties {
            Some(labels) => {
                if labels.len() != n {
                    return Err(GraphError::LengthMismatch {
                        what: "county",
                        expected: n,
                        got: labels.len(),
                    });
                }
                let mut names: Vec<String> = Vec::new();
                let mut ids = Vec::with_capacity(n);
                for label in labels {
                    let id = match names.iter().position(|x| *x == label) {
                        Some(i) => i,
                        None => {
                            names.push(label);
                            names.len() - 1
                        }
                    };
                    ids.push(id as u32);
                }
                (Some(ids), names)
            }
            None => (None, Vec::new()),
        };

        let total_population = self.populations.iter().map(|&p| p as u64).sum();
        let mut graph = UnitGraph {
            name: self.name,
            populations: self.populations,
            edges,
            neighbors,
            centroids: self.centroids,
            counties,
            county_names,
            unit_names: self.unit_names,
            total_population,
            hash: 0,
        };
        graph.compute_hash();
        Ok(graph)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_self_loop() {
        let err = UnitGraph::new(vec![1, 1], vec![(0, 0)]).unwrap_err();
        assert_eq!(err, GraphError::SelfLoop(0, 0));
    }

    #[test]
    fn rejects_duplicate_edges_regardless_of_orientation() {
        let err = UnitGraph::new(vec![1, 1], vec![(0, 1), (1, 0)]).unwrap_err();
        assert_eq!(err, GraphError::DuplicateEdge(0, 1));
    }

    #[test]
    fn rejects_dangling_edge() {
        let err = UnitGraph::new(vec![1, 1], vec![(0, 5)]).unwrap_err();
        assert_eq!(err, GraphError::DanglingEdge(0, 5, 5));
    }

    #[test]
    fn centroids_are_all_or_nothing() {
        let err = UnitGraph::builder(vec![1, 1, 1], vec![(0, 1)])
            .centroids(vec![(0.0, 0.0)])
            .build()
            .unwrap_err();
        assert!(matches!(err, GraphError::LengthMismatch { .. }));
    }

    #[test]
    fn adjacency_is_sorted_and_symmetric() {
        let g = UnitGraph::new(vec![1; 4], vec![(2, 0), (0, 1), (3, 2)]).unwrap();
        assert_eq!(g.neighbors(0), &[1, 2]);
        assert_eq!(g.neighbors(2), &[0, 3]);
        assert_eq!(g.num_edges(), 3);
        assert_eq!(g.total_population(), 4);
    }

    #[test]
    fn hash_ignores_name_but_not_structure() {
        let a = UnitGraph::builder(vec![1, 2], vec![(0, 1)])
            .name("a")
            .build()
            .unwrap();
        let b = UnitGraph::builder(vec![1, 2], vec![(0, 1)])
            .name("b")
            .build()
            .unwrap();
        let c = UnitGraph::builder(vec![2, 1], vec![(0, 1)])
            .name("a")
            .build()
            .unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn connectivity_of_whole_graph() {
        let g = UnitGraph::new(vec![1; 3], vec![(0, 1)]).unwrap();
        assert!(!g.is_connected());
        let g = UnitGraph::new(vec![1; 3], vec![(0, 1), (1, 2)]).unwrap();
        assert!(g.is_connected());
    }
}
