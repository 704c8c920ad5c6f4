//! Ensemble analytics: cut-edge histograms, per-edge cut frequencies, and
//! sampler-vs-oracle divergence statistics (total variation and a
//! chi-square goodness-of-fit test).

use std::collections::BTreeMap;

use thiserror::Error;

use crate::ensemble::Ensemble;
use crate::enumerate::EnumerationResult;
use crate::graph::UnitGraph;
use crate::stats::chi_square_sf;

#[derive(Debug, Error, PartialEq)]
pub enum AnalyzeError {
    #[error("ensemble is empty")]
    EmptyEnsemble,
    #[error("ensemble instance hash {ensemble:#x} does not match {other:#x}")]
    InstanceMismatch { ensemble: u64, other: u64 },
    #[error("oracle enumeration is incomplete")]
    IncompleteOracle,
}

/// Exact histogram of cut-edge scores over an ensemble.
pub fn cut_edge_histogram(ensemble: &Ensemble) -> Result<BTreeMap<u32, u64>, AnalyzeError> {
    if ensemble.is_empty() {
        return Err(AnalyzeError::EmptyEnsemble);
    }
    let mut hist = BTreeMap::new();
    for record in &ensemble.records {
        *hist.entry(record.cut_edges).or_insert(0u64) += 1;
    }
    Ok(hist)
}

/// Per-edge cut frequency over an ensemble, one value in [0, 1] per graph
/// edge, in `graph.edges()` order.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeFrequency {
    pub frequencies: Vec<f64>,
}

pub fn edge_frequency(
    ensemble: &Ensemble,
    graph: &UnitGraph,
) -> Result<EdgeFrequency, AnalyzeError> {
    if ensemble.is_empty() {
        return Err(AnalyzeError::EmptyEnsemble);
    }
    if ensemble.instance_hash != graph.hash() {
        return Err(AnalyzeError::InstanceMismatch {
            ensemble: ensemble.instance_hash,
            other: graph.hash(),
        });
    }
    let mut counts = vec![0u64; graph.num_edges()];
    for record in &ensemble.records {
        let labels = record.plan.labels();
        for (i, &(a, b)) in graph.edges().iter().enumerate() {
            if labels[a as usize] != labels[b as usize] {
                counts[i] += 1;
            }
        }
    }
    let n = ensemble.len() as f64;
    Ok(EdgeFrequency {
        frequencies: counts.iter().map(|&c| c as f64 / n).collect(),
    })
}

/// Divergence of an ensemble's cut-edge distribution from the exact
/// enumeration distribution.
#[derive(Debug, Clone)]
pub struct DivergenceReport {
    /// Total variation distance between the normalized histograms.
    pub tv_distance: f64,
    pub chi_square: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
    pub samples: u64,
    /// True when some sampled score lies outside the oracle support
    /// (which alone proves non-uniformity; the test reports p = 0).
    pub outside_support: bool,
}

/// Compare an ensemble against the complete enumeration of the same
/// instance and constraints. Chi-square bins with expected count below 5
/// are pooled with their right neighbor (ascending score order).
pub fn compare_to_oracle(
    ensemble: &Ensemble,
    oracle: &EnumerationResult,
) -> Result<DivergenceReport, AnalyzeError> {
    if ensemble.is_empty() {
        return Err(AnalyzeError::EmptyEnsemble);
    }
    if !oracle.complete {
        return Err(AnalyzeError::IncompleteOracle);
    }
    if ensemble.instance_hash != oracle.graph_hash {
        return Err(AnalyzeError::InstanceMismatch {
            ensemble: ensemble.instance_hash,
            other: oracle.graph_hash,
        });
    }
    let observed_hist = cut_edge_histogram(ensemble)?;
    let n = ensemble.len() as f64;
    let total = oracle.count as f64;

    // Total variation over the union support.
    let mut tv = 0.0;
    let mut scores: Vec<u32> = oracle.cut_edge_histogram.keys().copied().collect();
    for &s in observed_hist.keys() {
        if !oracle.cut_edge_histogram.contains_key(&s) {
            scores.push(s);
        }
    }
    scores.sort_unstable();
    for &s in &scores {
        let p = *oracle.cut_edge_histogram.get(&s).unwrap_or(&0) as f64 / total;
        let q = *observed_hist.get(&s).unwrap_or(&0) as f64 / n;
        tv += (p - q).abs();
    }
    let tv_distance = tv / 2.0;

    let outside_support = observed_hist
        .keys()
        .any(|s| !oracle.cut_edge_histogram.contains_key(s));

    // Chi-square over the oracle support with small-expectation pooling.
    let mut bins: Vec<(f64, f64)> = Vec::new(); // (expected, observed)
    for (&score, &count) in &oracle.cut_edge_histogram {
        let expected = count as f64 / total * n;
        let observed = *observed_hist.get(&score).unwrap_or(&0) as f64;
        bins.push((expected, observed));
    }
    // Pool ascending: fold any bin with expected < 5 into the next one.
    let mut pooled: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0, 0.0);
    for (e, o) in bins {
        acc.0 += e;
        acc.1 += o;
        if acc.0 >= 5.0 {
            pooled.push(acc);
            acc = (0.0, 0.0);
        }
    }
    if acc.0 > 0.0 {
        match pooled.last_mut() {
            Some(last) => {
                last.0 += acc.0;
                last.1 += acc.1;
            }
            None => pooled.push(acc),
        }
    }
    let (chi_square, degrees_of_freedom, p_value) = if outside_support {
        (f64::INFINITY, pooled.len().saturating_sub(1).max(1), 0.0)
    } else if pooled.len() < 2 {
        (0.0, 1, 1.0)
    } else {
        let stat: f64 = pooled
            .iter()
            .map(|&(e, o)| (o - e).powi(2) / e)
            .sum();
        let dof = pooled.len() - 1;
        (stat, dof, chi_square_sf(stat, dof))
    };

    Ok(DivergenceReport {
        tv_distance,
        chi_square,
        degrees_of_freedom,
        p_value,
        samples: ensemble.len() as u64,
        outside_support,
    })
}
