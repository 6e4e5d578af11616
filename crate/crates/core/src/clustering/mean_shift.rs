//! Mode-seeking clustering.
//!
//! Each unvisited point starts a hill climb: average the points inside
//! the kernel window, step to that average, repeat until the step is
//! tiny. Climbs that end near an existing mode merge into it. The
//! number of clusters falls out of the data instead of being chosen up
//! front, which is the property the pipeline wants from its default
//! method.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{euclid, ClusterAssignment, ClusterMethod};
use crate::config::{BandwidthRule, Kernel, MeanShiftConfig};
use crate::error::{Error, Result};

/// Pick a bandwidth from the spread of pairwise distances: a low
/// quantile (or a fraction of the mean) over a bounded, seeded sample
/// of pairs. A zero estimate falls back to the smallest positive
/// distance seen.
pub fn estimate_bandwidth(
    points: &[Vec<f64>],
    cfg: &MeanShiftConfig,
    seed: u64,
) -> Result<f64> {
    if let Some(h) = cfg.bandwidth {
        return Ok(h);
    }
    let n = points.len();
    if n < 2 {
        return Err(Error::InsufficientData(
            "bandwidth estimation needs at least two points".into(),
        ));
    }
    let total = n * (n - 1) / 2;
    let mut dists: Vec<f64> = Vec::with_capacity(total.min(cfg.sample_pairs));
    if total <= cfg.sample_pairs {
        for i in 0..n {
            for j in (i + 1)..n {
                dists.push(euclid(&points[i], &points[j]));
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut seen: HashSet<(usize, usize)> = HashSet::with_capacity(cfg.sample_pairs);
        while seen.len() < cfg.sample_pairs {
            let i = rng.gen_range(0..n);
            let j = rng.gen_range(0..n);
            if i == j {
                continue;
            }
            let key = (i.min(j), i.max(j));
            if seen.insert(key) {
                dists.push(euclid(&points[key.0], &points[key.1]));
            }
        }
    }
    dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let h = match cfg.bandwidth_rule {
        BandwidthRule::Percentile => {
            let pos = cfg.bandwidth_quantile * (dists.len() - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(dists.len() - 1);
            dists[lo] + (pos - lo as f64) * (dists[hi] - dists[lo])
        }
        BandwidthRule::MeanFraction => {
            cfg.bandwidth_quantile * dists.iter().sum::<f64>() / dists.len() as f64
        }
    };
    if h > 0.0 {
        return Ok(h);
    }
    match dists.iter().find(|d| **d > 0.0) {
        Some(d) => Ok(*d),
        None => Err(Error::DegenerateGeometry(
            "all sampled point pairs coincide; no usable bandwidth".into(),
        )),
    }
}

fn nearest_mode(modes: &[Vec<f64>], x: &[f64]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, m) in modes.iter().enumerate() {
        let d = euclid(m, x);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best
}

pub fn mean_shift(
    points: &[Vec<f64>],
    cfg: &MeanShiftConfig,
    seed: u64,
) -> Result<ClusterAssignment> {
    let n = points.len();
    if n == 0 {
        return Err(Error::InsufficientData("no points to cluster".into()));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::Validation("points have mixed dimensionality".into()));
    }
    if n == 1 {
        return Ok(ClusterAssignment {
            method: ClusterMethod::MeanShift,
            labels: vec![0],
            modes: vec![points[0].clone()],
            freq: vec![vec![1]],
            abnormal: vec![false],
        });
    }
    let h = estimate_bandwidth(points, cfg, seed)?;
    let radius = match cfg.kernel {
        Kernel::Flat => h,
        // the tail beyond three bandwidths carries negligible weight
        Kernel::Gaussian => 3.0 * h,
    };
    let tol = cfg.shift_tol_frac * h;
    let merge_tol = cfg.merge_frac * h;

    let mut modes: Vec<Vec<f64>> = Vec::new();
    let mut freq: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut visited = vec![false; n];

    for start in 0..n {
        if visited[start] {
            continue;
        }
        let mut center = points[start].clone();
        let mut local = vec![0u32; n];
        let mut converged = false;
        for _ in 0..cfg.max_iter {
            let mut wsum = 0.0;
            let mut mu = vec![0.0; dim];
            let mut any = false;
            for (i, p) in points.iter().enumerate() {
                let d = euclid(&center, p);
                if d <= radius {
                    let w = match cfg.kernel {
                        Kernel::Flat => 1.0,
                        Kernel::Gaussian => (-d * d / (2.0 * h * h)).exp(),
                    };
                    wsum += w;
                    for (m, x) in mu.iter_mut().zip(p) {
                        *m += w * x;
                    }
                    local[i] += 1;
                    visited[i] = true;
                    any = true;
                }
            }
            if !any {
                // cannot happen starting from a data point, but an
                // empty window means there is nothing left to follow
                converged = true;
                break;
            }
            for m in mu.iter_mut() {
                *m /= wsum;
            }
            // check before moving, so the center we keep is the one
            // whose own shift is already below tolerance
            if euclid(&mu, &center) < tol {
                converged = true;
                break;
            }
            center = mu;
        }
        let mode_id = if converged {
            match nearest_mode(&modes, &center) {
                Some((mid, d)) if d < merge_tol => mid,
                _ => {
                    modes.push(center);
                    modes.len() - 1
                }
            }
        } else {
            log::warn!(
                "climb from point {start} did not settle within {} iterations; pooling into the nearest mode",
                cfg.max_iter
            );
            match nearest_mode(&modes, &center) {
                Some((mid, _)) => mid,
                None => {
                    modes.push(center);
                    modes.len() - 1
                }
            }
        };
        for (i, c) in local.iter().enumerate() {
            if *c > 0 {
                if freq[i].len() < modes.len() {
                    freq[i].resize(modes.len(), 0);
                }
                freq[i][mode_id] += c;
            }
        }
    }

    let m = modes.len();
    let mut labels = vec![0usize; n];
    for i in 0..n {
        freq[i].resize(m, 0);
        let mut best = 0usize;
        for j in 1..m {
            if freq[i][j] > freq[i][best] {
                best = j;
            }
        }
        labels[i] = best;
    }
    Ok(ClusterAssignment {
        method: ClusterMethod::MeanShift,
        labels,
        modes,
        freq,
        abnormal: vec![false; m],
    })
}
