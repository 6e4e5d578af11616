//! Cycle quality measures.
//!
//! Two views of how well a built cycle represents its source corpus:
//! eight aggregate indicators compared as relative difference rates,
//! and the total-variation distance between joint speed-acceleration
//! histograms. Both treat a collection of speed series as one pooled
//! population but never difference across series boundaries.

use crate::config::{EvalConfig, Thresholds};
use crate::error::{Error, Result};
use crate::segmentation::{accelerations, label_states, StateLabel};

pub const INDICATOR_NAMES: [&str; 8] =
    ["V_m", "V_mr", "a_a", "a_d", "p_i", "p_a", "p_d", "p_e"];

/// Pooled aggregate indicators: mean speed, running mean speed, mean
/// acceleration and deceleration, and the four state time shares.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndicatorSet {
    pub values: [f64; 8],
}

impl IndicatorSet {
    pub fn get(&self, name: &str) -> Option<f64> {
        INDICATOR_NAMES.iter().position(|n| *n == name).map(|i| self.values[i])
    }
}

pub fn corpus_indicators(series_set: &[&[f64]], th: &Thresholds) -> Result<IndicatorSet> {
    let mut total = 0usize;
    let mut sum_v = 0.0;
    let mut counts = [0usize; 4];
    let mut acc_sum = [0.0f64; 2];
    let mut acc_n = [0usize; 2];
    for series in series_set {
        let states = label_states(series, th);
        let acc = accelerations(series);
        total += series.len();
        sum_v += series.iter().sum::<f64>();
        for (st, a) in states.iter().zip(&acc) {
            counts[*st as usize] += 1;
            match st {
                StateLabel::Accel => {
                    acc_sum[0] += a;
                    acc_n[0] += 1;
                }
                StateLabel::Decel => {
                    acc_sum[1] += a;
                    acc_n[1] += 1;
                }
                _ => {}
            }
        }
    }
    if total == 0 {
        return Err(Error::InsufficientData("no samples to evaluate".into()));
    }
    let t = total as f64;
    let nonidle = total - counts[StateLabel::Idle as usize];
    let v_m = sum_v / t;
    let v_mr = if nonidle == 0 { 0.0 } else { sum_v / nonidle as f64 };
    let a_a = if acc_n[0] == 0 { 0.0 } else { acc_sum[0] / acc_n[0] as f64 };
    let a_d = if acc_n[1] == 0 { 0.0 } else { acc_sum[1] / acc_n[1] as f64 };
    Ok(IndicatorSet {
        values: [
            v_m,
            v_mr,
            a_a,
            a_d,
            counts[StateLabel::Idle as usize] as f64 / t,
            counts[StateLabel::Accel as usize] as f64 / t,
            counts[StateLabel::Decel as usize] as f64 / t,
            counts[StateLabel::Cruise as usize] as f64 / t,
        ],
    })
}

const RATE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceReport {
    /// Relative difference per indicator; None where the source value
    /// is too close to zero for a ratio to mean anything.
    pub rates: [Option<f64>; 8],
    /// Mean of the defined rates; None if nothing was defined.
    pub average: Option<f64>,
    pub undefined: Vec<&'static str>,
}

pub fn difference_rates(cycle: &IndicatorSet, source: &IndicatorSet) -> DifferenceReport {
    let mut rates = [None; 8];
    let mut undefined = Vec::new();
    let mut sum = 0.0;
    let mut n = 0usize;
    for i in 0..8 {
        let s = source.values[i];
        if s.abs() <= RATE_FLOOR {
            undefined.push(INDICATOR_NAMES[i]);
            log::warn!(
                "source {} is {s}, too small for a relative rate; leaving it out of the average",
                INDICATOR_NAMES[i]
            );
            continue;
        }
        let r = (cycle.values[i] - s).abs() / s.abs();
        rates[i] = Some(r);
        sum += r;
        n += 1;
    }
    DifferenceReport {
        rates,
        average: if n == 0 { None } else { Some(sum / n as f64) },
        undefined,
    }
}

/// Shared bin layout for joint speed-acceleration histograms. Two
/// histograms are only comparable when built on the same layout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SapdBins {
    pub v_step: f64,
    pub n_v: usize,
    pub a_min: f64,
    pub a_step: f64,
    pub n_a: usize,
}

pub fn sapd_bins(v_max: f64, cfg: &EvalConfig) -> SapdBins {
    let top = v_max.max(0.0).ceil();
    let n_v = ((top / cfg.v_bin_kmh).ceil() as usize).max(1);
    let n_a = (((cfg.a_max_ms2 - cfg.a_min_ms2) / cfg.a_bin_ms2).round() as usize).max(1);
    SapdBins { v_step: cfg.v_bin_kmh, n_v, a_min: cfg.a_min_ms2, a_step: cfg.a_bin_ms2, n_a }
}

pub fn max_speed(series_set: &[&[f64]]) -> f64 {
    series_set
        .iter()
        .flat_map(|s| s.iter())
        .fold(0.0f64, |m, v| m.max(*v))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SapdHistogram {
    pub bins: SapdBins,
    /// Row-major [speed bin][accel bin], sums to one.
    pub mass: Vec<f64>,
}

// Nudges a value sitting a rounding error below a bin edge up into the
// bin it belongs to.
const EDGE_NUDGE: f64 = 1e-9;

/// Joint distribution over (speed, acceleration) pairs. Each
/// consecutive sample pair contributes one count at the leading speed;
/// out-of-range values land in the edge bins.
pub fn sapd_histogram(series_set: &[&[f64]], bins: &SapdBins) -> Result<SapdHistogram> {
    let mut mass = vec![0.0f64; bins.n_v * bins.n_a];
    let mut total = 0usize;
    for series in series_set {
        for w in series.windows(2) {
            let a = (w[1] - w[0]) / 3.6;
            let vi = ((w[0] / bins.v_step + EDGE_NUDGE).floor() as isize)
                .clamp(0, bins.n_v as isize - 1) as usize;
            let ai = (((a - bins.a_min) / bins.a_step + EDGE_NUDGE).floor() as isize)
                .clamp(0, bins.n_a as isize - 1) as usize;
            mass[vi * bins.n_a + ai] += 1.0;
            total += 1;
        }
    }
    if total == 0 {
        return Err(Error::InsufficientData(
            "no consecutive sample pairs; cannot build a distribution".into(),
        ));
    }
    for m in mass.iter_mut() {
        *m /= total as f64;
    }
    Ok(SapdHistogram { bins: *bins, mass })
}

/// Total variation distance between two distributions on identical
/// bins: half the absolute mass difference, in [0, 1].
pub fn sapd_distance(a: &SapdHistogram, b: &SapdHistogram) -> Result<f64> {
    if a.bins != b.bins {
        return Err(Error::BinMismatch(format!(
            "histograms use different layouts ({:?} vs {:?})",
            a.bins, b.bins
        )));
    }
    Ok(0.5 * a.mass.iter().zip(&b.mass).map(|(x, y)| (x - y).abs()).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn th() -> Thresholds {
        Thresholds::default()
    }

    fn set(series: &[Vec<f64>]) -> Vec<&[f64]> {
        series.iter().map(|s| s.as_slice()).collect()
    }

    #[test]
    fn pooled_indicators_match_hand_computation() {
        let series = vec![
            vec![0.0, 0.0, 10.0, 20.0, 20.0, 20.0, 10.0, 0.0],
            vec![0.0, 30.0, 30.0, 0.0],
        ];
        let got = corpus_indicators(&set(&series), &th()).unwrap();
        let want = [
            11.666666666666666,
            20.0,
            2.7777777777777777,
            -4.62962962962963,
            0.4166666666666667,
            0.08333333333333333,
            0.25,
            0.25,
        ];
        for (g, w) in got.values.iter().zip(want) {
            assert_relative_eq!(*g, w, max_relative = 1e-12);
        }
        assert_eq!(got.get("V_mr"), Some(20.0));
    }

    #[test]
    fn difference_rates_average_the_defined_ones() {
        let series = vec![
            vec![0.0, 0.0, 10.0, 20.0, 20.0, 20.0, 10.0, 0.0],
            vec![0.0, 30.0, 30.0, 0.0],
        ];
        let source = corpus_indicators(&set(&series), &th()).unwrap();
        let cyc = vec![vec![0.0, 10.0, 20.0, 20.0, 10.0, 0.0]];
        let cycle = corpus_indicators(&set(&cyc), &th()).unwrap();
        let report = difference_rates(&cycle, &source);
        let want = [
            0.14285714285714282,
            0.25,
            0.0,
            0.4,
            0.20000000000000007,
            1.0,
            0.33333333333333326,
            0.33333333333333337,
        ];
        for (got, w) in report.rates.iter().zip(want) {
            assert_relative_eq!(got.unwrap(), w, max_relative = 1e-9, epsilon = 1e-12);
        }
        assert!(report.undefined.is_empty());
        assert_relative_eq!(report.average.unwrap(), 0.3324404761904762, max_relative = 1e-12);
    }

    #[test]
    fn zero_source_indicators_are_excluded() {
        // the source never accelerates or cruises: a_a, p_a and p_e are all zero
        let series = vec![vec![0.0, 10.0, 5.0, 0.0]];
        let source = corpus_indicators(&set(&series), &th()).unwrap();
        assert_eq!(source.get("a_a"), Some(0.0));
        assert_eq!(source.get("p_e"), Some(0.0));
        let cyc = vec![vec![0.0, 10.0, 20.0, 20.0, 10.0, 0.0]];
        let cycle = corpus_indicators(&set(&cyc), &th()).unwrap();
        let report = difference_rates(&cycle, &source);
        assert!(report.rates[2].is_none());
        assert!(report.rates[5].is_none());
        assert!(report.rates[7].is_none());
        assert_eq!(report.undefined, vec!["a_a", "p_a", "p_e"]);
        assert_eq!(report.rates.iter().flatten().count(), 5);
        assert!(report.average.is_some());
    }

    #[test]
    fn all_idle_source_keeps_running_mean_finite() {
        let series = vec![vec![0.0, 0.0, 0.0]];
        let got = corpus_indicators(&set(&series), &th()).unwrap();
        assert_eq!(got.get("V_mr"), Some(0.0));
        assert_eq!(got.get("p_i"), Some(1.0));
    }

    #[test]
    fn histogram_layout_follows_the_top_speed() {
        let bins = sapd_bins(43.7, &EvalConfig::default());
        assert_eq!(bins.n_v, 22);
        assert_eq!(bins.n_a, 40);
        let bins = sapd_bins(0.0, &EvalConfig::default());
        assert_eq!(bins.n_v, 1);
    }

    #[test]
    fn boundary_values_land_in_the_upper_bin() {
        // a = 0 sits exactly on a bin edge and belongs to [0, 0.2)
        let series = vec![vec![20.0, 20.0, 20.0]];
        let bins = sapd_bins(20.0, &EvalConfig::default());
        let h = sapd_histogram(&set(&series), &bins).unwrap();
        assert_eq!(bins.n_v, 10);
        // v = 20 is the histogram ceiling and clamps into the top bin
        assert_relative_eq!(h.mass[9 * bins.n_a + 20], 1.0);
        assert_relative_eq!(h.mass.iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn extreme_accelerations_clamp_to_edge_bins() {
        let series = vec![vec![0.0, 60.0, 0.0, 0.0]];
        let bins = sapd_bins(60.0, &EvalConfig::default());
        let h = sapd_histogram(&set(&series), &bins).unwrap();
        // +16.7 m/s2 clamps high (v bin 0, a bin 39), -16.7 clamps low
        assert_relative_eq!(h.mass[39], 1.0 / 3.0);
        assert_relative_eq!(h.mass[(60 / 2 - 1) * bins.n_a], 1.0 / 3.0);
    }

    #[test]
    fn distance_matches_hand_computation() {
        let a = vec![vec![0.0, 10.0, 20.0, 20.0, 10.0, 0.0]];
        let b = vec![vec![0.0, 10.0, 20.0, 20.0, 12.0, 0.0]];
        let vmax = max_speed(&set(&a)).max(max_speed(&set(&b)));
        let bins = sapd_bins(vmax, &EvalConfig::default());
        let ha = sapd_histogram(&set(&a), &bins).unwrap();
        let hb = sapd_histogram(&set(&b), &bins).unwrap();
        assert_relative_eq!(sapd_distance(&ha, &hb).unwrap(), 0.4, max_relative = 1e-12);
        assert_relative_eq!(sapd_distance(&ha, &ha).unwrap(), 0.0);
    }

    #[test]
    fn mismatched_layouts_refuse_to_compare() {
        let a = vec![vec![0.0, 10.0, 20.0]];
        let ha = sapd_histogram(&set(&a), &sapd_bins(20.0, &EvalConfig::default())).unwrap();
        let hb = sapd_histogram(&set(&a), &sapd_bins(44.0, &EvalConfig::default())).unwrap();
        assert!(matches!(sapd_distance(&ha, &hb), Err(Error::BinMismatch(_))));
    }
}
