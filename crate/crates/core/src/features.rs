//! Per-segment characteristic values.
//!
//! Twelve values describe each micro-trip, in a fixed order that every
//! downstream matrix, artifact, and report relies on:
//!
//! | name  | meaning                                   | unit |
//! |-------|-------------------------------------------|------|
//! | T     | duration                                  | s    |
//! | T_i   | idle time                                 | s    |
//! | T_a   | accelerating time                         | s    |
//! | T_d   | decelerating time                         | s    |
//! | T_e   | cruising time                             | s    |
//! | S     | distance                                  | km   |
//! | V_max | top speed                                 | km/h |
//! | V_m   | mean speed over the whole segment         | km/h |
//! | V_mr  | mean speed over non-idle time             | km/h |
//! | V_s   | speed standard deviation (n-1 divisor)    | km/h |
//! | a_a   | mean acceleration while accelerating      | m/s2 |
//! | a_d   | mean acceleration while decelerating      | m/s2 |

use crate::error::{Error, Result};
use crate::pca::Mat;
use crate::segmentation::{accelerations, MicroTrip, StateLabel};

pub const FEATURE_NAMES: [&str; 12] =
    ["T", "T_i", "T_a", "T_d", "T_e", "S", "V_max", "V_m", "V_mr", "V_s", "a_a", "a_d"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector {
    pub values: [f64; 12],
}

impl FeatureVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        FEATURE_NAMES.iter().position(|n| *n == name).map(|i| self.values[i])
    }
}

pub fn compute_features(mt: &MicroTrip) -> Result<FeatureVector> {
    let n = mt.speeds.len();
    if n == 0 {
        return Err(Error::InsufficientData("empty segment".into()));
    }
    let t = n as f64;
    let mut counts = [0usize; 4];
    for s in &mt.states {
        counts[*s as usize] += 1;
    }
    let t_i = counts[StateLabel::Idle as usize] as f64;
    let t_a = counts[StateLabel::Accel as usize] as f64;
    let t_d = counts[StateLabel::Decel as usize] as f64;
    let t_e = counts[StateLabel::Cruise as usize] as f64;
    if t_i >= t {
        return Err(Error::InsufficientData(format!(
            "segment at t={} never moves, so running means are undefined",
            mt.start_t
        )));
    }
    let sum_v: f64 = mt.speeds.iter().sum();
    let s_km = sum_v / 3600.0;
    let v_max = mt.speeds.iter().cloned().fold(f64::MIN, f64::max);
    let v_m = sum_v / t;
    let v_mr = sum_v / (t - t_i);
    let v_s = if n < 2 {
        0.0
    } else {
        (mt.speeds.iter().map(|v| (v - v_m) * (v - v_m)).sum::<f64>() / (t - 1.0)).sqrt()
    };
    let acc = accelerations(&mt.speeds);
    let mean_over = |label: StateLabel| {
        let mut sum = 0.0;
        let mut c = 0usize;
        for (a, st) in acc.iter().zip(&mt.states) {
            if *st == label {
                sum += a;
                c += 1;
            }
        }
        if c == 0 {
            0.0
        } else {
            sum / c as f64
        }
    };
    Ok(FeatureVector {
        values: [
            t,
            t_i,
            t_a,
            t_d,
            t_e,
            s_km,
            v_max,
            v_m,
            v_mr,
            v_s,
            mean_over(StateLabel::Accel),
            mean_over(StateLabel::Decel),
        ],
    })
}

/// Stack feature vectors into a rows-by-12 matrix, one row per segment
/// in input order.
pub fn assemble_matrix(fvs: &[FeatureVector]) -> Mat {
    let mut m = Mat::zeros(fvs.len(), 12);
    for (i, fv) in fvs.iter().enumerate() {
        for (j, v) in fv.values.iter().enumerate() {
            *m.at_mut(i, j) = *v;
        }
    }
    m
}
