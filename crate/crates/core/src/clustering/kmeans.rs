//! Deterministic k-means baseline.
//!
//! Initialization is farthest-first anchored at the most central
//! point, so there is no random restart to manage and two runs over
//! the same data always agree. The seed parameter exists to keep the
//! call shape uniform with the other method; nothing consumes it.

use super::{euclid, ClusterAssignment, ClusterMethod};
use crate::config::KmeansConfig;
use crate::error::{Error, Result};

fn mean_point(points: &[Vec<f64>], dim: usize) -> Vec<f64> {
    let mut m = vec![0.0; dim];
    for p in points {
        for (a, x) in m.iter_mut().zip(p) {
            *a += x;
        }
    }
    for a in m.iter_mut() {
        *a /= points.len() as f64;
    }
    m
}

fn nearest(centers: &[Vec<f64>], p: &[f64]) -> usize {
    let mut best = 0usize;
    let mut bd = f64::INFINITY;
    for (i, c) in centers.iter().enumerate() {
        let d = euclid(c, p);
        if d < bd {
            bd = d;
            best = i;
        }
    }
    best
}

pub fn kmeans(points: &[Vec<f64>], cfg: &KmeansConfig, _seed: u64) -> Result<ClusterAssignment> {
    let n = points.len();
    let k = cfg.k;
    if n == 0 {
        return Err(Error::InsufficientData("no points to cluster".into()));
    }
    if n < k {
        return Err(Error::InsufficientData(format!("{n} points cannot form {k} clusters")));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::Validation("points have mixed dimensionality".into()));
    }

    let grand_mean = mean_point(points, dim);
    // anchor: the point closest to the grand mean, ties to lower index
    let mut best = 0usize;
    let mut bd = f64::INFINITY;
    for (i, p) in points.iter().enumerate() {
        let d = euclid(p, &grand_mean);
        if d < bd {
            bd = d;
            best = i;
        }
    }
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    centers.push(points[best].clone());
    // then repeatedly the point farthest from everything chosen so far
    while centers.len() < k {
        let mut far = 0usize;
        let mut fd = -1.0;
        for (i, p) in points.iter().enumerate() {
            let d = centers.iter().map(|c| euclid(p, c)).fold(f64::INFINITY, f64::min);
            if d > fd {
                fd = d;
                far = i;
            }
        }
        if fd <= 0.0 {
            return Err(Error::DegenerateGeometry(format!(
                "fewer than {k} distinct points; cannot seed {k} clusters"
            )));
        }
        centers.push(points[far].clone());
    }

    let mut labels: Vec<usize> = vec![usize::MAX; n];
    let mut settled = false;
    for _ in 0..cfg.max_iter {
        let new_labels: Vec<usize> = points.iter().map(|p| nearest(&centers, p)).collect();
        if new_labels == labels {
            settled = true;
            break;
        }
        labels = new_labels;

        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            for (s, x) in sums[l].iter_mut().zip(p) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        // an empty cluster steals the point sitting farthest from its
        // own center, which forces another assignment round
        let mut reseeded: Vec<usize> = Vec::new();
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let mut far = None;
            let mut fd = -1.0;
            for (i, p) in points.iter().enumerate() {
                if reseeded.contains(&i) {
                    continue;
                }
                let d = euclid(p, &centers[labels[i]]);
                if d > fd {
                    fd = d;
                    far = Some(i);
                }
            }
            let far = far.expect("n >= k guarantees a reseed candidate");
            centers[c] = points[far].clone();
            reseeded.push(far);
        }
    }
    if !settled {
        log::warn!("assignment still moving after {} rounds; using the current one", cfg.max_iter);
        labels = points.iter().map(|p| nearest(&centers, p)).collect();
    }

    let mut freq = vec![vec![0u32; k]; n];
    for (i, &l) in labels.iter().enumerate() {
        freq[i][l] = 1;
    }
    Ok(ClusterAssignment {
        method: ClusterMethod::Kmeans,
        labels,
        modes: centers,
        freq,
        abnormal: vec![false; k],
    })
}
