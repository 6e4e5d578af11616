//! Clustering of segments in component space.
//!
//! Two interchangeable methods produce the same assignment shape: the
//! density-seeking mode finder (the default) and a deterministic
//! k-means baseline to compare it against.

pub mod kmeans;
pub mod mean_shift;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClusterMethod {
    MeanShift,
    Kmeans,
}

impl ClusterMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            ClusterMethod::MeanShift => "mean-shift",
            ClusterMethod::Kmeans => "kmeans",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    pub method: ClusterMethod,
    /// Cluster id per point, in point order.
    pub labels: Vec<usize>,
    /// Cluster centers (modes or centroids), indexed by cluster id.
    pub modes: Vec<Vec<f64>>,
    /// Per point, per cluster: how often the point took part in that
    /// cluster's search. One-hot for k-means.
    pub freq: Vec<Vec<u32>>,
    /// Set by [`flag_abnormal`]; all false straight out of a method.
    pub abnormal: Vec<bool>,
}

impl ClusterAssignment {
    pub fn n_clusters(&self) -> usize {
        self.modes.len()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.modes.len()];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}

/// Mark clusters too small to trust as abnormal. They stay in the
/// assignment for reporting but are excluded from cycle assembly.
pub fn flag_abnormal(assign: &mut ClusterAssignment, min_size: usize) {
    let sizes = assign.cluster_sizes();
    assign.abnormal = sizes.iter().map(|&s| s < min_size).collect();
}

pub(crate) fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
