//! Instance construction: grid generators, the instance/plan file formats,
//! and the bundled county geographies.

mod data;
mod format;

pub use data::{arkansas, iowa};
pub use format::{
    load_instance, load_plan, read_instance, read_plan, save_plan, write_instance, write_plan,
    FormatError, Instance,
};

use thiserror::Error;

use crate::graph::{GraphError, UnitGraph};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GridError {
    #[error("grid must have at least one row and one column")]
    ZeroDimension,
    #[error("population matrix is {got} entries, expected {expected}")]
    PopulationShape { expected: usize, got: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridAdjacency {
    /// 4-neighbor adjacency; the default everywhere.
    Rook,
    /// 8-neighbor adjacency; available behind a flag, never the default.
    Queen,
}

/// Specification of a rectangular grid instance. Unit ids are row-major,
/// centroids sit at integer lattice points `(col, row)`.
#[derive(Debug, Clone)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
    pub adjacency: GridAdjacency,
    /// `None` gives every cell population 1; otherwise a row-major matrix.
    pub populations: Option<Vec<u32>>,
    /// Optional county labels built from blocks of `(block_rows, block_cols)`
    /// cells, so county-aware samplers can run on synthetic grids.
    pub county_blocks: Option<(usize, usize)>,
}

impl GridSpec {
    pub fn uniform(rows: usize, cols: usize) -> Self {
        GridSpec {
            rows,
            cols,
            adjacency: GridAdjacency::Rook,
            populations: None,
            county_blocks: None,
        }
    }

    pub fn queen(mut self) -> Self {
        self.adjacency = GridAdjacency::Queen;
        self
    }

    pub fn with_populations(mut self, populations: Vec<u32>) -> Self {
        self.populations = Some(populations);
        self
    }

    pub fn with_county_blocks(mut self, block_rows: usize, block_cols: usize) -> Self {
        self.county_blocks = Some((block_rows, block_cols));
        self
    }
}

/// Build the grid graph. A rook `r x c` grid has `2rc - r - c` edges.
pub fn make_grid(spec: &GridSpec) -> Result<UnitGraph, GridError> {
    if spec.rows == 0 || spec.cols == 0 {
        return Err(GridError::ZeroDimension);
    }
    let (rows, cols) = (spec.rows, spec.cols);
    let n = rows * cols;
    let populations = match &spec.populations {
        Some(p) => {
            if p.len() != n {
                return Err(GridError::PopulationShape {
                    expected: n,
                    got: p.len(),
                });
            }
            p.clone()
        }
        None => vec![1; n],
    };

    let id = |r: usize, c: usize| (r * cols + c) as u32;
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                edges.push((id(r, c), id(r, c + 1)));
            }
            if r + 1 < rows {
                edges.push((id(r, c), id(r + 1, c)));
            }
            if spec.adjacency == GridAdjacency::Queen {
                if r + 1 < rows && c + 1 < cols {
                    edges.push((id(r, c), id(r + 1, c + 1)));
                }
                if r + 1 < rows && c > 0 {
                    edges.push((id(r, c), id(r + 1, c - 1)));
                }
            }
        }
    }

    let centroids: Vec<(f64, f64)> = (0..rows)
        .flat_map(|r| (0..cols).map(move |c| (c as f64, r as f64)))
        .collect();

    let mut builder = UnitGraph::builder(populations, edges)
        .name(format!("grid-{rows}x{cols}"))
        .centroids(centroids);

    if let Some((br, bc)) = spec.county_blocks {
        let (br, bc) = (br.max(1), bc.max(1));
        let counties: Vec<String> = (0..rows)
            .flat_map(|r| (0..cols).map(move |c| format!("block-{}-{}", r / br, c / bc)))
            .collect();
        builder = builder.counties(counties);
    }

    Ok(builder.build()?)
}

/// Quadrant zone labels for a grid: 0..4 by (top/bottom, left/right) half.
/// Used as the zone-seeded flood fill's predefined zones.
pub fn quadrant_zones(rows: usize, cols: usize) -> Vec<u16> {
    (0..rows)
        .flat_map(|r| {
            (0..cols).map(move |c| {
                let top = r < rows.div_ceil(2);
                let left = c < cols.div_ceil(2);
                match (top, left) {
                    (true, true) => 0,
                    (true, false) => 1,
                    (false, true) => 2,
                    (false, false) => 3,
                }
            })
        })
        .collect()
}
