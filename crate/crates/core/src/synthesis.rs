//! Cycle assembly.
//!
//! Each normal cluster describes one driving regime. The cycle takes
//! the least-deviant segment of every minor cluster, then fills from
//! the dominant cluster's ranking until the total lands inside the
//! target window. Segments are judged by distance to their cluster's
//! mean feature profile, so the cycle is built from typical behavior,
//! not outliers.

use crate::clustering::ClusterAssignment;
use crate::config::{DeviationNorm, SynthesisConfig, Thresholds};
use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::segmentation::MicroTrip;

const DEVIATION_EPS: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct ClusterProfile {
    pub cluster_id: usize,
    pub size: usize,
    /// Sum of member durations in seconds.
    pub total_duration_s: u64,
    pub mean_features: [f64; 12],
    /// Per-feature sample deviation (n-1); zero for singleton clusters.
    pub std_features: [f64; 12],
}

pub fn cluster_profiles(
    fvs: &[FeatureVector],
    assign: &ClusterAssignment,
) -> Vec<ClusterProfile> {
    let k = assign.n_clusters();
    let mut out = Vec::with_capacity(k);
    for c in 0..k {
        let members: Vec<&FeatureVector> = fvs
            .iter()
            .zip(&assign.labels)
            .filter(|(_, &l)| l == c)
            .map(|(f, _)| f)
            .collect();
        let n = members.len();
        let mut mean = [0.0f64; 12];
        let mut std = [0.0f64; 12];
        if n > 0 {
            for f in &members {
                for (m, v) in mean.iter_mut().zip(&f.values) {
                    *m += v;
                }
            }
            for m in mean.iter_mut() {
                *m /= n as f64;
            }
            if n > 1 {
                for f in &members {
                    for ((s, v), m) in std.iter_mut().zip(&f.values).zip(&mean) {
                        *s += (v - m) * (v - m);
                    }
                }
                for s in std.iter_mut() {
                    *s = (*s / (n as f64 - 1.0)).sqrt();
                }
            }
        }
        let total: f64 = members.iter().map(|f| f.values[0]).sum();
        out.push(ClusterProfile {
            cluster_id: c,
            size: n,
            total_duration_s: total.round() as u64,
            mean_features: mean,
            std_features: std,
        });
    }
    out
}

/// Sum over features of the normalized absolute gap to the cluster
/// mean. Small means typical.
pub fn segment_deviation(
    fv: &FeatureVector,
    profile: &ClusterProfile,
    norm: DeviationNorm,
) -> f64 {
    let mut d = 0.0;
    for j in 0..12 {
        let gap = (fv.values[j] - profile.mean_features[j]).abs();
        let denom = match norm {
            DeviationNorm::Relative => profile.mean_features[j].abs() + DEVIATION_EPS,
            DeviationNorm::Zscore => profile.std_features[j] + DEVIATION_EPS,
        };
        d += gap / denom;
    }
    d
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankedSegment {
    pub seg_id: usize,
    pub deviation: f64,
}

#[derive(Debug, Clone)]
pub struct RankedCluster {
    pub cluster_id: usize,
    pub size: usize,
    /// Ascending deviation; equal deviations order by segment id.
    pub ranked: Vec<RankedSegment>,
}

pub fn rank_segments(
    fvs: &[FeatureVector],
    assign: &ClusterAssignment,
    norm: DeviationNorm,
) -> Vec<RankedCluster> {
    let profiles = cluster_profiles(fvs, assign);
    profiles
        .iter()
        .map(|p| {
            let mut ranked: Vec<RankedSegment> = fvs
                .iter()
                .enumerate()
                .filter(|(i, _)| assign.labels[*i] == p.cluster_id)
                .map(|(i, f)| RankedSegment {
                    seg_id: i,
                    deviation: segment_deviation(f, p, norm),
                })
                .collect();
            ranked.sort_by(|a, b| {
                a.deviation.partial_cmp(&b.deviation).unwrap().then(a.seg_id.cmp(&b.seg_id))
            });
            RankedCluster { cluster_id: p.cluster_id, size: p.size, ranked }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CyclePiece {
    pub seg_id: usize,
    pub cluster_id: usize,
    pub deviation: f64,
    /// Segment length plus its trailing zero pad, if one was added.
    pub duration_s: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DrivingCycle {
    pub speeds: Vec<f64>,
    /// Concatenation order: cluster id, then deviation, then segment id.
    pub pieces: Vec<CyclePiece>,
    pub duration_s: usize,
    pub general_cluster: usize,
}

/// A segment ending in motion gets one zero appended so the cycle
/// never cuts off mid-maneuver; that extra second counts toward the
/// duration budget.
fn effective_len(mt: &MicroTrip, idle_eps: f64) -> usize {
    let pad = mt.speeds.last().is_some_and(|v| *v > idle_eps);
    mt.speeds.len() + usize::from(pad)
}

pub fn assemble_cycle(
    trips: &[MicroTrip],
    fvs: &[FeatureVector],
    assign: &ClusterAssignment,
    cfg: &SynthesisConfig,
    th: &Thresholds,
) -> Result<DrivingCycle> {
    assert_eq!(trips.len(), fvs.len());
    assert_eq!(trips.len(), assign.labels.len());
    let target = cfg.target_duration_s as usize;
    let window = cfg.window_s as usize;
    let floor = target.saturating_sub(window);
    let ceiling = target + window;

    let ranked = rank_segments(fvs, assign, cfg.deviation_norm);
    let normal: Vec<&RankedCluster> = ranked
        .iter()
        .filter(|r| !assign.abnormal[r.cluster_id] && !r.ranked.is_empty())
        .collect();
    if normal.is_empty() {
        return Err(Error::InsufficientData(
            "every cluster is abnormal; nothing to assemble from".into(),
        ));
    }
    // dominant cluster: most members, ties to the lower id
    let general = normal
        .iter()
        .map(|r| (r.cluster_id, r.size))
        .fold((usize::MAX, 0usize), |acc, (id, sz)| if sz > acc.1 { (id, sz) } else { acc })
        .0;

    let mut chosen: Vec<RankedSegment> = Vec::new();
    let mut chosen_cluster: Vec<usize> = Vec::new();
    let mut total = 0usize;
    for r in &normal {
        if r.cluster_id == general {
            continue;
        }
        let top = r.ranked[0];
        total += effective_len(&trips[top.seg_id], th.idle_eps_kmh);
        chosen.push(top);
        chosen_cluster.push(r.cluster_id);
    }
    let general_ranked = &ranked[general].ranked;
    for cand in general_ranked {
        if total >= floor {
            break;
        }
        let eff = effective_len(&trips[cand.seg_id], th.idle_eps_kmh);
        if total + eff > ceiling {
            // a shorter, less typical segment may still fit
            continue;
        }
        total += eff;
        chosen.push(*cand);
        chosen_cluster.push(general);
    }
    if total < floor {
        return Err(Error::DurationShortfall { achieved: total, target: cfg.target_duration_s });
    }
    if total > ceiling {
        log::warn!(
            "mandatory representatives alone run {total} s, past the {ceiling} s ceiling"
        );
    }

    let mut order: Vec<usize> = (0..chosen.len()).collect();
    order.sort_by(|&a, &b| {
        chosen_cluster[a]
            .cmp(&chosen_cluster[b])
            .then(chosen[a].deviation.partial_cmp(&chosen[b].deviation).unwrap())
            .then(chosen[a].seg_id.cmp(&chosen[b].seg_id))
    });

    let mut speeds = Vec::with_capacity(total);
    let mut pieces = Vec::with_capacity(chosen.len());
    for &i in &order {
        let seg = &trips[chosen[i].seg_id];
        let eff = effective_len(seg, th.idle_eps_kmh);
        speeds.extend_from_slice(&seg.speeds);
        if eff > seg.speeds.len() {
            speeds.push(0.0);
        }
        pieces.push(CyclePiece {
            seg_id: chosen[i].seg_id,
            cluster_id: chosen_cluster[i],
            deviation: chosen[i].deviation,
            duration_s: eff,
        });
    }
    debug_assert_eq!(speeds.len(), total);
    Ok(DrivingCycle { duration_s: speeds.len(), speeds, pieces, general_cluster: general })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::{flag_abnormal, ClusterMethod};
    use crate::features::compute_features;
    use approx::assert_relative_eq;

    fn trip_with_peak(peak: f64, cruise: usize) -> MicroTrip {
        let mut v = vec![0.0, 0.0, 0.0];
        let mut x = 0.0;
        while x + 5.0 <= peak {
            x += 5.0;
            v.push(x);
        }
        for i in 0..cruise {
            v.push(x + 0.2 * ((i % 2) as f64));
        }
        while x > 5.0 {
            x -= 5.0;
            v.push(x);
        }
        MicroTrip::from_speeds("t", 0, 0, v, &Thresholds::default())
    }

    fn corpus() -> (Vec<MicroTrip>, Vec<FeatureVector>, ClusterAssignment) {
        // cluster 0: three slow trips, cluster 1: two fast ones
        let trips = vec![
            trip_with_peak(20.0, 10),
            trip_with_peak(20.0, 14),
            trip_with_peak(25.0, 12),
            trip_with_peak(60.0, 30),
            trip_with_peak(60.0, 34),
        ];
        let fvs: Vec<FeatureVector> = trips.iter().map(|t| compute_features(t).unwrap()).collect();
        let labels = vec![0, 0, 0, 1, 1];
        let freq = labels.iter().map(|&l| {
            let mut f = vec![0u32; 2];
            f[l] = 1;
            f
        });
        let assign = ClusterAssignment {
            method: ClusterMethod::Kmeans,
            labels: labels.clone(),
            modes: vec![vec![0.0], vec![1.0]],
            freq: freq.collect(),
            abnormal: vec![false, false],
        };
        (trips, fvs, assign)
    }

    #[test]
    fn profiles_average_member_features() {
        let (_, fvs, assign) = corpus();
        let profiles = cluster_profiles(&fvs, &assign);
        assert_eq!(profiles.len(), 2);
        assert_eq!(profiles[0].size, 3);
        let want_t = (fvs[0].values[0] + fvs[1].values[0] + fvs[2].values[0]) / 3.0;
        assert_relative_eq!(profiles[0].mean_features[0], want_t, max_relative = 1e-12);
        assert_eq!(
            profiles[0].total_duration_s,
            (fvs[0].values[0] + fvs[1].values[0] + fvs[2].values[0]) as u64
        );
        assert!(profiles[0].std_features[0] > 0.0);
        assert_eq!(profiles[1].size, 2);
    }

    #[test]
    fn deviation_is_the_normalized_gap_sum() {
        let mut p = ClusterProfile {
            cluster_id: 0,
            size: 2,
            total_duration_s: 0,
            mean_features: [0.0; 12],
            std_features: [0.0; 12],
        };
        p.mean_features[0] = 10.0;
        p.mean_features[1] = -2.0;
        p.std_features[0] = 4.0;
        p.std_features[1] = 0.5;
        let mut fv = FeatureVector { values: [0.0; 12] };
        fv.values[0] = 12.0;
        fv.values[1] = -1.0;
        let d = segment_deviation(&fv, &p, DeviationNorm::Relative);
        assert_relative_eq!(d, 0.2 + 0.5, epsilon = 1e-8);
        let d = segment_deviation(&fv, &p, DeviationNorm::Zscore);
        assert_relative_eq!(d, 2.0 / 4.0 + 1.0 / 0.5, epsilon = 1e-7);
    }

    #[test]
    fn ranking_is_ascending_with_id_tiebreak() {
        let (_, fvs, assign) = corpus();
        let ranked = rank_segments(&fvs, &assign, DeviationNorm::Relative);
        for r in &ranked {
            assert!(r
                .ranked
                .windows(2)
                .all(|w| w[0].deviation < w[1].deviation
                    || (w[0].deviation == w[1].deviation && w[0].seg_id < w[1].seg_id)));
        }
        // identical members tie and keep id order
        let fvs2 = vec![fvs[0], fvs[0], fvs[0]];
        let assign2 = ClusterAssignment {
            method: ClusterMethod::Kmeans,
            labels: vec![0, 0, 0],
            modes: vec![vec![0.0]],
            freq: vec![vec![1], vec![1], vec![1]],
            abnormal: vec![false],
        };
        let r2 = rank_segments(&fvs2, &assign2, DeviationNorm::Relative);
        let ids: Vec<usize> = r2[0].ranked.iter().map(|s| s.seg_id).collect();
        assert_eq!(ids, vec![0, 1, 2]);
    }

    #[test]
    fn cycle_hits_the_window_and_orders_pieces() {
        let (trips, fvs, assign) = corpus();
        // the minor representative plus all three dominant segments
        // are needed to reach the floor of this window
        let cfg = SynthesisConfig {
            target_duration_s: 150,
            window_s: 30,
            deviation_norm: DeviationNorm::Relative,
        };
        let cycle = assemble_cycle(&trips, &fvs, &assign, &cfg, &Thresholds::default()).unwrap();
        assert_eq!(cycle.general_cluster, 0);
        assert_eq!(cycle.duration_s, cycle.speeds.len());
        assert!((120..=180).contains(&cycle.duration_s));
        // exactly one piece from the minor cluster, fills from the rest
        assert_eq!(cycle.pieces.iter().filter(|p| p.cluster_id == 1).count(), 1);
        assert_eq!(cycle.pieces.iter().filter(|p| p.cluster_id == 0).count(), 3);
        // pieces ordered by cluster then deviation
        let keys: Vec<(usize, f64)> =
            cycle.pieces.iter().map(|p| (p.cluster_id, p.deviation)).collect();
        let mut sorted = keys.clone();
        sorted.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.partial_cmp(&b.1).unwrap()));
        assert_eq!(keys, sorted);
        // every trip ends in motion here, so each piece carries a pad
        let raw: usize = cycle.pieces.iter().map(|p| p.duration_s).sum();
        assert_eq!(raw, cycle.duration_s);
        assert_eq!(*cycle.speeds.last().unwrap(), 0.0);
    }

    #[test]
    fn abnormal_clusters_contribute_nothing() {
        let (trips, fvs, mut assign) = corpus();
        assign.labels = vec![0, 0, 0, 1, 2];
        assign.modes.push(vec![2.0]);
        assign.abnormal = vec![false, false, false];
        flag_abnormal(&mut assign, 2);
        assert_eq!(assign.abnormal, vec![false, true, true]);
        let cfg = SynthesisConfig {
            target_duration_s: 60,
            window_s: 50,
            deviation_norm: DeviationNorm::Relative,
        };
        let cycle = assemble_cycle(&trips, &fvs, &assign, &cfg, &Thresholds::default()).unwrap();
        assert!(cycle.pieces.iter().all(|p| p.cluster_id == 0));
    }

    #[test]
    fn unreachable_target_is_a_shortfall() {
        let (trips, fvs, assign) = corpus();
        let cfg = SynthesisConfig {
            target_duration_s: 100000,
            window_s: 60,
            deviation_norm: DeviationNorm::Relative,
        };
        match assemble_cycle(&trips, &fvs, &assign, &cfg, &Thresholds::default()) {
            Err(Error::DurationShortfall { achieved, target }) => {
                assert!(achieved < 100000 - 60);
                assert_eq!(target, 100000);
            }
            other => panic!("expected a shortfall, got {other:?}"),
        }
    }

    #[test]
    fn oversize_candidates_are_skipped_not_fatal() {
        // general cluster holds one long and one short segment; the
        // long one would overshoot, the short one fits
        let long = trip_with_peak(20.0, 200);
        let short = trip_with_peak(20.0, 10);
        let minor = trip_with_peak(60.0, 10);
        let trips = vec![long.clone(), long, short, minor];
        let fvs: Vec<FeatureVector> = trips.iter().map(|t| compute_features(t).unwrap()).collect();
        let assign = ClusterAssignment {
            method: ClusterMethod::Kmeans,
            labels: vec![0, 0, 0, 1],
            modes: vec![vec![0.0], vec![1.0]],
            freq: vec![vec![1, 0], vec![1, 0], vec![1, 0], vec![0, 1]],
            abnormal: vec![false, false],
        };
        let minor_len = trips[3].duration_s() + 1;
        let short_len = trips[2].duration_s() + 1;
        let cfg = SynthesisConfig {
            target_duration_s: (minor_len + short_len) as u32,
            window_s: 5,
            deviation_norm: DeviationNorm::Relative,
        };
        let cycle = assemble_cycle(&trips, &fvs, &assign, &cfg, &Thresholds::default()).unwrap();
        let ids: Vec<usize> = cycle.pieces.iter().map(|p| p.seg_id).collect();
        assert!(ids.contains(&2), "the fitting short segment is used: {ids:?}");
        assert!(!ids.contains(&0) && !ids.contains(&1), "oversize segments are skipped");
        assert_eq!(cycle.duration_s, minor_len + short_len);
    }
}
