//! Synthetic corpus generator.
//!
//! Builds a deterministic set of speed traces with known structure so
//! the pipeline can be exercised end to end. Each trace holds trips of
//! one driving regime; regimes use disjoint duration and peak-speed
//! ranges, so the true grouping of every trip is known. Defects can be
//! injected on top (bad gps points, speed spikes, over-long stops,
//! recording gaps) and their exact cleaning footprint is reported next
//! to the data.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmt::sig9;
use crate::ingest::{CleanReport, Record, SpeedTrace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegimeSpec {
    pub name: String,
    pub segments: u32,
    pub v_peak_kmh: (f64, f64),
    pub duration_s: (u32, u32),
    pub idle_s: (u32, u32),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenConfig {
    pub seed: u64,
    pub regimes: Vec<RegimeSpec>,
    /// Acceleration used on the ramp up, m/s2, sampled per trip.
    pub accel_up_ms2: (f64, f64),
    /// Deceleration magnitude on the ramp down, m/s2.
    pub accel_down_ms2: (f64, f64),
    /// Cruise speed wobble below the peak, km/h. Kept under the cruise
    /// state band so cruising samples stay cruising.
    pub cruise_jitter_kmh: f64,
    /// Idle tail after the last trip, so it ends on a proper boundary.
    pub closing_idle_s: u32,
    pub gps_rate: f64,
    pub spike_rate: f64,
    pub spike_kmh: f64,
    pub parking_rate: f64,
    pub parking_extra_s: u32,
    pub gap_rate: f64,
    pub gap_extra_s: i64,
    pub lat: f64,
    pub lon: f64,
}

impl Default for GenConfig {
    fn default() -> GenConfig {
        let regime = |name: &str, segments, v: (f64, f64), d: (u32, u32), i: (u32, u32)| {
            RegimeSpec { name: name.into(), segments, v_peak_kmh: v, duration_s: d, idle_s: i }
        };
        GenConfig {
            seed: 42,
            regimes: vec![
                regime("urban", 40, (30.0, 38.0), (55, 75), (5, 8)),
                regime("arterial", 70, (44.0, 52.0), (90, 110), (9, 12)),
                regime("motorway", 40, (58.0, 66.0), (120, 140), (12, 15)),
            ],
            accel_up_ms2: (1.8, 2.6),
            accel_down_ms2: (1.3, 1.7),
            cruise_jitter_kmh: 0.45,
            closing_idle_s: 6,
            gps_rate: 0.05,
            spike_rate: 0.05,
            spike_kmh: 40.0,
            parking_rate: 0.05,
            parking_extra_s: 310,
            gap_rate: 0.05,
            gap_extra_s: 5,
            lat: 30.0,
            lon: 120.0,
        }
    }
}

impl GenConfig {
    pub fn from_json(text: &str) -> Result<GenConfig> {
        let cfg: GenConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.regimes.is_empty() {
            return fail("at least one regime is required".into());
        }
        for r in &self.regimes {
            if r.segments == 0 {
                return fail(format!("regime {}: zero segments", r.name));
            }
            if !(r.v_peak_kmh.0 <= r.v_peak_kmh.1 && r.v_peak_kmh.0 > 15.0) {
                return fail(format!("regime {}: peak speed range is unusable", r.name));
            }
            if r.duration_s.0 > r.duration_s.1 || r.idle_s.0 > r.idle_s.1 || r.idle_s.0 == 0 {
                return fail(format!("regime {}: bad duration or idle range", r.name));
            }
            // phases must fit: idle + both ramps + some cruise
            let ramps = (r.v_peak_kmh.1 / (self.accel_up_ms2.0 * 3.6)).ceil()
                + (r.v_peak_kmh.1 / (self.accel_down_ms2.0 * 3.6)).ceil();
            if (r.duration_s.0 as f64) < r.idle_s.1 as f64 + ramps + 3.0 {
                return fail(format!("regime {}: durations too short for its speeds", r.name));
            }
        }
        let (alo, ahi) = self.accel_up_ms2;
        let (dlo, dhi) = self.accel_down_ms2;
        if !(0.2 < alo && alo <= ahi && ahi < 4.5) {
            return fail("ramp-up acceleration range must sit inside (0.2, 4.5)".into());
        }
        if !(0.2 < dlo && dlo <= dhi && dhi < 7.5) {
            return fail("ramp-down deceleration range must sit inside (0.2, 7.5)".into());
        }
        if !(self.cruise_jitter_kmh > 0.0 && self.cruise_jitter_kmh < 0.5) {
            return fail("cruise jitter must be positive and under 0.5 km/h".into());
        }
        for (name, rate) in [
            ("gps_rate", self.gps_rate),
            ("spike_rate", self.spike_rate),
            ("parking_rate", self.parking_rate),
            ("gap_rate", self.gap_rate),
        ] {
            if !(0.0..=1.0).contains(&rate) {
                return fail(format!("{name} must be in [0, 1]"));
            }
        }
        if self.gps_rate + self.spike_rate + self.parking_rate + self.gap_rate > 1.0 {
            return fail("defect rates must sum to at most 1".into());
        }
        if self.spike_kmh < 20.0 {
            return fail("spikes under 20 km/h would not violate the acceleration bound".into());
        }
        if self.parking_extra_s < 301 {
            return fail("parking insertions under 301 s would survive cleaning".into());
        }
        if self.gap_extra_s < 2 {
            return fail("gaps under 2 s would not split the trace".into());
        }
        Ok(())
    }
}

/// Where one generated trip sits inside its trace, by phase.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentPlan {
    pub regime: String,
    pub start: usize,
    pub idle_len: usize,
    pub up_len: usize,
    pub cruise_len: usize,
    pub down_len: usize,
}

impl SegmentPlan {
    pub fn len_s(&self) -> usize {
        self.idle_len + self.up_len + self.cruise_len + self.down_len
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum AnomalyKind {
    BadGps,
    Spike,
    Parking,
    Gap,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct AnomalyLog {
    pub bad_gps: u32,
    pub spikes: u32,
    pub parkings: u32,
    pub gaps: u32,
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub traces: Vec<SpeedTrace>,
    /// One plan per trace, parallel to `traces`.
    pub plans: Vec<Vec<SegmentPlan>>,
    pub anomalies: AnomalyLog,
    /// What cleaning the generated corpus should report.
    pub expected_clean: CleanReport,
}

fn build_trace(
    regime: &RegimeSpec,
    cfg: &GenConfig,
    rng: &mut ChaCha8Rng,
) -> (Vec<f64>, Vec<SegmentPlan>) {
    let mut speeds = Vec::new();
    let mut plan = Vec::new();
    for _ in 0..regime.segments {
        let v_peak = rng.gen_range(regime.v_peak_kmh.0..=regime.v_peak_kmh.1);
        let duration = rng.gen_range(regime.duration_s.0..=regime.duration_s.1) as usize;
        let idle_len = rng.gen_range(regime.idle_s.0..=regime.idle_s.1) as usize;
        let step_up = rng.gen_range(cfg.accel_up_ms2.0..=cfg.accel_up_ms2.1) * 3.6;
        let step_down = rng.gen_range(cfg.accel_down_ms2.0..=cfg.accel_down_ms2.1) * 3.6;

        let mut up = Vec::new();
        let mut v = step_up;
        while v < v_peak {
            up.push(v);
            v += step_up;
        }
        let mut down = Vec::new();
        let mut w = v_peak - step_down;
        while w > 1.0 {
            down.push(w);
            w -= step_down;
        }
        let cruise_len = duration.saturating_sub(idle_len + up.len() + down.len()).max(3);

        let start = speeds.len();
        speeds.extend(std::iter::repeat_n(0.0, idle_len));
        speeds.extend_from_slice(&up);
        for _ in 0..cruise_len {
            speeds.push(v_peak - rng.gen_range(0.0..cfg.cruise_jitter_kmh));
        }
        speeds.extend_from_slice(&down);
        plan.push(SegmentPlan {
            regime: regime.name.clone(),
            start,
            idle_len,
            up_len: up.len(),
            cruise_len,
            down_len: down.len(),
        });
    }
    speeds.extend(std::iter::repeat_n(0.0, cfg.closing_idle_s as usize));
    (speeds, plan)
}

/// One draw per trip decides its defect, if any; the first trip of a
/// trace is left alone so insertions never touch the trace head.
fn draw_anomalies(
    plan: &[SegmentPlan],
    cfg: &GenConfig,
    rng: &mut ChaCha8Rng,
) -> Vec<(usize, AnomalyKind)> {
    let mut marks = Vec::new();
    for k in 1..plan.len() {
        let u: f64 = rng.gen();
        let mut edge = cfg.gps_rate;
        if u < edge {
            marks.push((k, AnomalyKind::BadGps));
            continue;
        }
        edge += cfg.spike_rate;
        if u < edge {
            marks.push((k, AnomalyKind::Spike));
            continue;
        }
        edge += cfg.parking_rate;
        if u < edge {
            marks.push((k, AnomalyKind::Parking));
            continue;
        }
        edge += cfg.gap_rate;
        if u < edge {
            marks.push((k, AnomalyKind::Gap));
        }
    }
    marks
}

// Applied back to front so earlier positions stay valid while records
// are inserted or timestamps shifted behind them.
fn apply_anomalies(
    records: &mut Vec<Record>,
    plan: &[SegmentPlan],
    marks: &[(usize, AnomalyKind)],
    cfg: &GenConfig,
    log: &mut AnomalyLog,
) {
    for &(k, kind) in marks.iter().rev() {
        let seg = &plan[k];
        let mid = seg.start + seg.idle_len + seg.up_len + seg.cruise_len / 2;
        match kind {
            AnomalyKind::BadGps => {
                records[mid].lat = Some(0.0);
                records[mid].lon = Some(0.0);
                log.bad_gps += 1;
            }
            AnomalyKind::Spike => {
                records[mid].v += cfg.spike_kmh;
                log.spikes += 1;
            }
            AnomalyKind::Gap => {
                for r in &mut records[mid..] {
                    r.t += cfg.gap_extra_s;
                }
                log.gaps += 1;
            }
            AnomalyKind::Parking => {
                let at = seg.start + 1;
                let t0 = records[seg.start].t;
                let extra = cfg.parking_extra_s as i64;
                for r in &mut records[at..] {
                    r.t += extra;
                }
                let block = (1..=extra).map(|j| Record {
                    t: t0 + j,
                    v: 0.0,
                    lat: Some(cfg.lat),
                    lon: Some(cfg.lon),
                });
                records.splice(at..at, block);
                log.parkings += 1;
            }
        }
    }
}

pub fn generate(cfg: &GenConfig) -> Result<Fixture> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut traces = Vec::new();
    let mut plans = Vec::new();
    let mut log = AnomalyLog::default();
    for regime in &cfg.regimes {
        let (speeds, plan) = build_trace(regime, cfg, &mut rng);
        let marks = draw_anomalies(&plan, cfg, &mut rng);
        let mut records: Vec<Record> = speeds
            .iter()
            .enumerate()
            .map(|(i, &v)| Record { t: i as i64, v, lat: Some(cfg.lat), lon: Some(cfg.lon) })
            .collect();
        apply_anomalies(&mut records, &plan, &marks, cfg, &mut log);
        traces.push(SpeedTrace { source_id: regime.name.clone(), records });
        plans.push(plan);
    }
    // every dropped gps record also opens a one-second hole, which the
    // gap pass then splits
    let expected_clean = CleanReport {
        gps_dropped: log.bad_gps,
        gaps_split: log.gaps + log.bad_gps,
        accel_corrected: log.spikes,
        burrs_zeroed: 0,
        idle_truncations: 0,
        parkings_dropped: log.parkings,
    };
    Ok(Fixture { traces, plans, anomalies: log, expected_clean })
}

pub fn trace_to_csv(trace: &SpeedTrace) -> String {
    let mut s = String::from("t,v_kmh,lat,lon\n");
    for r in &trace.records {
        let coord = |c: Option<f64>| c.map(sig9).unwrap_or_default();
        s.push_str(&format!("{},{},{},{}\n", r.t, sig9(r.v), coord(r.lat), coord(r.lon)));
    }
    s
}

/// Write one CSV per trace plus the expected cleaning counts, returning
/// the trace paths in generation order.
pub fn write_fixture(dir: &Path, fixture: &Fixture) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    for tr in &fixture.traces {
        let p = dir.join(format!("{}.csv", tr.source_id));
        std::fs::write(&p, trace_to_csv(tr))?;
        paths.push(p);
    }
    let expected = serde_json::to_string_pretty(&fixture.expected_clean).expect("report encodes");
    std::fs::write(dir.join("expected_clean.json"), expected)?;
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Thresholds;
    use crate::ingest::{clean_trace, parse_trace};
    use crate::segmentation::segment_corpus;

    fn pristine() -> GenConfig {
        GenConfig {
            gps_rate: 0.0,
            spike_rate: 0.0,
            parking_rate: 0.0,
            gap_rate: 0.0,
            ..GenConfig::default()
        }
    }

    #[test]
    fn default_config_is_valid_and_roundtrips() {
        let cfg = GenConfig::default();
        cfg.validate().unwrap();
        let back = GenConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn bad_configs_are_rejected() {
        let cfg = GenConfig { cruise_jitter_kmh: 0.9, ..GenConfig::default() };
        assert!(cfg.validate().is_err());
        let cfg = GenConfig { parking_extra_s: 120, ..GenConfig::default() };
        assert!(cfg.validate().is_err());
        let cfg = GenConfig { gps_rate: 0.7, gap_rate: 0.7, ..GenConfig::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate(&GenConfig::default()).unwrap();
        let b = generate(&GenConfig::default()).unwrap();
        assert_eq!(a.traces.len(), b.traces.len());
        for (x, y) in a.traces.iter().zip(&b.traces) {
            assert_eq!(x.records, y.records);
        }
        assert_eq!(a.anomalies, b.anomalies);
    }

    #[test]
    fn pristine_corpus_cleans_to_a_single_untouched_piece_per_trace() {
        let fx = generate(&pristine()).unwrap();
        assert_eq!(fx.expected_clean, CleanReport::default());
        let th = Thresholds::default();
        for tr in &fx.traces {
            assert!(tr.records.windows(2).all(|w| w[1].t - w[0].t == 1));
            let (pieces, report) = clean_trace(tr, &th).unwrap();
            assert_eq!(report, CleanReport::default());
            assert_eq!(pieces.len(), 1);
            assert_eq!(pieces[0].records, tr.records);
        }
    }

    #[test]
    fn pristine_corpus_segments_exactly_as_planned() {
        let fx = generate(&pristine()).unwrap();
        let th = Thresholds::default();
        let mut cleans = Vec::new();
        for tr in &fx.traces {
            let (pieces, _) = clean_trace(tr, &th).unwrap();
            cleans.extend(pieces);
        }
        let trips = segment_corpus(&cleans, &th, false);
        let planned: usize = fx.plans.iter().map(|p| p.len()).sum();
        assert_eq!(trips.len(), planned);
        assert_eq!(planned, 150);
        let mut i = 0;
        for (tr, plan) in fx.traces.iter().zip(&fx.plans) {
            for seg in plan {
                assert_eq!(trips[i].trace_id, tr.source_id);
                assert_eq!(trips[i].start_t, seg.start as i64);
                assert_eq!(trips[i].duration_s(), seg.len_s());
                assert!(trips[i].has_all_states());
                i += 1;
            }
        }
    }

    #[test]
    fn defect_injection_counts_match_the_promised_report() {
        let fx = generate(&GenConfig::default()).unwrap();
        let log = fx.anomalies;
        assert!(log.bad_gps > 0 && log.spikes > 0 && log.parkings > 0 && log.gaps > 0);
        assert_eq!(fx.expected_clean.gps_dropped, log.bad_gps);
        assert_eq!(fx.expected_clean.gaps_split, log.gaps + log.bad_gps);
        assert_eq!(fx.expected_clean.accel_corrected, log.spikes);
        assert_eq!(fx.expected_clean.parkings_dropped, log.parkings);

        let th = Thresholds::default();
        let mut report = CleanReport::default();
        for tr in &fx.traces {
            let (_, r) = clean_trace(tr, &th).unwrap();
            report.absorb(&r);
        }
        assert_eq!(report, fx.expected_clean);
    }

    #[test]
    fn csv_roundtrip_preserves_structure() {
        let fx = generate(&GenConfig::default()).unwrap();
        let text = trace_to_csv(&fx.traces[0]);
        let back = parse_trace("urban", &text).unwrap();
        assert_eq!(back.records.len(), fx.traces[0].records.len());
        assert_eq!(back.records[0].lat, Some(30.0));
        let th = Thresholds::default();
        let (_, direct) = clean_trace(&fx.traces[0], &th).unwrap();
        let (_, reparsed) = clean_trace(&back, &th).unwrap();
        assert_eq!(direct, reparsed);
    }

    #[test]
    fn shipped_fixture_config_matches_the_default() {
        let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/fixture_config.json");
        let text = std::fs::read_to_string(path).unwrap();
        let shipped = GenConfig::from_json(&text).unwrap();
        assert_eq!(shipped, GenConfig::default());
    }
}
