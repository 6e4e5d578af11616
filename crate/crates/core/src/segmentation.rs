//! Micro-trip segmentation.
//!
//! A micro-trip runs from the first sample of one idle period to the
//! first sample of the next, so every segment carries its leading idle
//! and the full speed excursion after it. Segments are self-contained:
//! states and accelerations are computed from the segment's own
//! samples, never from neighboring context.

use crate::config::Thresholds;
use crate::ingest::CleanTrace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum StateLabel {
    Idle = 0,
    Accel = 1,
    Decel = 2,
    Cruise = 3,
}

/// Per-sample forward-difference acceleration in m/s2. The last sample
/// has no forward neighbor and reuses the final difference.
pub fn accelerations(speeds: &[f64]) -> Vec<f64> {
    let n = speeds.len();
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => {
            let mut a: Vec<f64> = speeds.windows(2).map(|w| (w[1] - w[0]) / 3.6).collect();
            a.push(a[n - 2]);
            a
        }
    }
}

/// Idle wins over everything; the rest split on the acceleration
/// threshold, with the band around zero labeled cruise.
pub fn label_states(speeds: &[f64], th: &Thresholds) -> Vec<StateLabel> {
    let acc = accelerations(speeds);
    speeds
        .iter()
        .zip(&acc)
        .map(|(&v, &a)| {
            if v <= th.idle_eps_kmh {
                StateLabel::Idle
            } else if a > th.state_accel_ms2 {
                StateLabel::Accel
            } else if a < -th.state_accel_ms2 {
                StateLabel::Decel
            } else {
                StateLabel::Cruise
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MicroTrip {
    pub trace_id: String,
    pub piece: usize,
    /// Timestamp of the first sample, within the cleaned piece.
    pub start_t: i64,
    pub speeds: Vec<f64>,
    pub states: Vec<StateLabel>,
}

impl MicroTrip {
    pub fn from_speeds(
        trace_id: &str,
        piece: usize,
        start_t: i64,
        speeds: Vec<f64>,
        th: &Thresholds,
    ) -> MicroTrip {
        let states = label_states(&speeds, th);
        MicroTrip { trace_id: trace_id.to_string(), piece, start_t, speeds, states }
    }

    pub fn duration_s(&self) -> usize {
        self.speeds.len()
    }

    pub fn has_all_states(&self) -> bool {
        let mut seen = [false; 4];
        for s in &self.states {
            seen[*s as usize] = true;
        }
        seen.iter().all(|&x| x)
    }
}

/// Cut one cleaned piece into micro-trips.
///
/// Anything before the first idle onset has no leading idle and is
/// skipped; anything after the last onset has no terminator and is
/// skipped. Segments shorter than the minimum, or missing one of the
/// four states (unless `keep_incomplete`), are dropped.
pub fn divide_microtrips(
    clean: &CleanTrace,
    th: &Thresholds,
    keep_incomplete: bool,
) -> Vec<MicroTrip> {
    let eps = th.idle_eps_kmh;
    let n = clean.records.len();
    let mut onsets = Vec::new();
    for i in 0..n {
        if clean.records[i].v <= eps && (i == 0 || clean.records[i - 1].v > eps) {
            onsets.push(i);
        }
    }
    let mut out = Vec::new();
    for w in onsets.windows(2) {
        let (s, e) = (w[0], w[1]);
        if e - s < th.min_segment_s as usize {
            continue;
        }
        let speeds: Vec<f64> = clean.records[s..e].iter().map(|r| r.v).collect();
        let mt = MicroTrip::from_speeds(
            &clean.trace_id,
            clean.piece,
            clean.records[s].t,
            speeds,
            th,
        );
        if keep_incomplete || mt.has_all_states() {
            out.push(mt);
        }
    }
    out
}

/// Segment every cleaned piece, preserving input order so segment ids
/// are stable across runs.
pub fn segment_corpus(
    cleans: &[CleanTrace],
    th: &Thresholds,
    keep_incomplete: bool,
) -> Vec<MicroTrip> {
    cleans.iter().flat_map(|c| divide_microtrips(c, th, keep_incomplete)).collect()
}
