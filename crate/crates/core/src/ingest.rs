//! Trace ingestion and cleaning.
//!
//! Raw input is CSV at one sample per second: `t,v_kmh` with optional
//! `lat,lon` columns, extra columns ignored. Cleaning turns one raw
//! trace into contiguous pieces that downstream stages can trust:
//! timestamps step by exactly one, speeds respect physical acceleration
//! bounds, and pathological idle stretches are capped or removed.
//!
//! Passes run in an order chosen so each pass cannot re-create the
//! artifacts an earlier pass removed; cleaning its own output is a
//! no-op and the per-pass counters all read zero the second time.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{BoundingBox, Thresholds};
use crate::error::{Error, Result};
use crate::fmt::sig9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Record {
    pub t: i64,
    /// Speed in km/h, never negative.
    pub v: f64,
    pub lat: Option<f64>,
    pub lon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeedTrace {
    pub source_id: String,
    pub records: Vec<Record>,
}

/// One contiguous cleaned piece of a source trace.
#[derive(Debug, Clone, PartialEq)]
pub struct CleanTrace {
    pub trace_id: String,
    pub piece: usize,
    pub records: Vec<Record>,
}

/// What cleaning did, by pass. Counts are events: one corrected sample,
/// one zeroed blip, one truncated or deleted run, one split.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanReport {
    pub gps_dropped: u32,
    pub gaps_split: u32,
    pub accel_corrected: u32,
    pub burrs_zeroed: u32,
    pub idle_truncations: u32,
    pub parkings_dropped: u32,
}

impl CleanReport {
    pub fn absorb(&mut self, other: &CleanReport) {
        self.gps_dropped += other.gps_dropped;
        self.gaps_split += other.gaps_split;
        self.accel_corrected += other.accel_corrected;
        self.burrs_zeroed += other.burrs_zeroed;
        self.idle_truncations += other.idle_truncations;
        self.parkings_dropped += other.parkings_dropped;
    }
}

fn parse_coord(field: &str, line: usize, name: &str) -> Result<Option<f64>> {
    if field.is_empty() {
        return Ok(None);
    }
    field
        .parse::<f64>()
        .map(Some)
        .map_err(|_| Error::Parse { line, msg: format!("bad {name} {field:?}") })
}

pub fn parse_trace(source_id: &str, text: &str) -> Result<SpeedTrace> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or(Error::Parse { line: 1, msg: "empty input, expected a t,v_kmh header".into() })?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.len() < 2 || cols[0] != "t" || cols[1] != "v_kmh" {
        return Err(Error::Parse {
            line: 1,
            msg: format!("header must start with t,v_kmh (got {header:?})"),
        });
    }
    let has_gps = cols.len() >= 4 && cols[2] == "lat" && cols[3] == "lon";

    let mut records = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        let row = raw.trim();
        if row.is_empty() {
            continue;
        }
        let fields: Vec<&str> = row.split(',').map(str::trim).collect();
        if fields.len() < 2 {
            return Err(Error::Parse { line, msg: "expected at least t and v_kmh".into() });
        }
        let t: i64 = fields[0]
            .parse()
            .map_err(|_| Error::Parse { line, msg: format!("bad timestamp {:?}", fields[0]) })?;
        let v: f64 = fields[1]
            .parse()
            .map_err(|_| Error::Parse { line, msg: format!("bad speed {:?}", fields[1]) })?;
        if !v.is_finite() {
            return Err(Error::Validation(format!("non-finite speed at line {line}")));
        }
        if v < 0.0 {
            return Err(Error::Validation(format!("negative speed {v} at line {line}")));
        }
        let (lat, lon) = if has_gps && fields.len() >= 4 {
            (parse_coord(fields[2], line, "lat")?, parse_coord(fields[3], line, "lon")?)
        } else {
            (None, None)
        };
        records.push(Record { t, v, lat, lon });
    }
    Ok(SpeedTrace { source_id: source_id.to_string(), records })
}

pub fn read_trace_file(path: &Path) -> Result<SpeedTrace> {
    let text = std::fs::read_to_string(path)?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    parse_trace(&id, &text)
}

/// Drop records positioned at the (0, 0) null island, plus anything
/// outside the bounding box when one is configured. Records without
/// coordinates are kept.
pub fn drop_gps_invalid(trace: &mut SpeedTrace, bbox: Option<&BoundingBox>) -> u32 {
    let before = trace.records.len();
    trace.records.retain(|r| match (r.lat, r.lon) {
        (Some(lat), Some(lon)) => {
            if lat == 0.0 && lon == 0.0 {
                return false;
            }
            bbox.is_none_or(|b| b.contains(lat, lon))
        }
        _ => true,
    });
    (before - trace.records.len()) as u32
}

/// Split wherever consecutive timestamps differ by more than one
/// second. A non-increasing timestamp is corrupt input, not a gap.
pub fn split_on_gaps(trace: &SpeedTrace) -> Result<(Vec<Vec<Record>>, u32)> {
    let mut pieces = Vec::new();
    let mut cur: Vec<Record> = Vec::new();
    let mut splits = 0u32;
    for (i, r) in trace.records.iter().enumerate() {
        if let Some(prev) = cur.last() {
            let dt = r.t - prev.t;
            if dt <= 0 {
                return Err(Error::Validation(format!(
                    "trace {}: timestamp does not increase at sample {} (t={} after t={})",
                    trace.source_id, i, r.t, prev.t
                )));
            }
            if dt > 1 {
                splits += 1;
                pieces.push(std::mem::take(&mut cur));
            }
        }
        cur.push(*r);
    }
    if !cur.is_empty() {
        pieces.push(cur);
    }
    Ok((pieces, splits))
}

// Comparisons carry a tiny slack so a repair that lands exactly on the
// bound is not re-flagged by its own rounding.
const ACCEL_SLACK: f64 = 1e-9;

fn accel_violates(prev: f64, cur: f64, th: &Thresholds) -> bool {
    let a = (cur - prev) / 3.6;
    a > th.accel_max_ms2 + ACCEL_SLACK || a < th.decel_min_ms2 - ACCEL_SLACK
}

/// Repair samples implying impossible acceleration. Interior offenders
/// become the mean of their neighbors; a trailing offender is clamped
/// to the bound. Sweeps repeat because a repair can expose the next
/// sample, and a trace still violating after the sweep budget is
/// rejected rather than silently half-fixed.
pub fn correct_accel_outliers(records: &mut [Record], th: &Thresholds) -> Result<u32> {
    let n = records.len();
    if n < 2 {
        return Ok(0);
    }
    let mut events = 0u32;
    for _ in 0..th.accel_sweep_passes {
        let mut fixed = 0u32;
        for t in 1..n {
            if accel_violates(records[t - 1].v, records[t].v, th) {
                fixed += 1;
                if t + 1 < n {
                    records[t].v = 0.5 * (records[t - 1].v + records[t + 1].v);
                } else {
                    let a = (records[t].v - records[t - 1].v) / 3.6;
                    let bound = if a > 0.0 { th.accel_max_ms2 } else { th.decel_min_ms2 };
                    records[t].v = records[t - 1].v + bound * 3.6;
                }
            }
        }
        if fixed == 0 {
            return Ok(events);
        }
        events += fixed;
    }
    if (1..n).any(|t| accel_violates(records[t - 1].v, records[t].v, th)) {
        return Err(Error::Numeric(format!(
            "acceleration repair did not converge after {} passes",
            th.accel_sweep_passes
        )));
    }
    Ok(events)
}

/// Zero out short low-speed blips sitting inside idle: sensor noise
/// that would otherwise read as motion. A blip only qualifies when
/// idle samples bound it on both sides.
pub fn zero_burrs(records: &mut [Record], th: &Thresholds) -> u32 {
    let eps = th.idle_eps_kmh;
    let n = records.len();
    let mut zeroed = 0u32;
    let mut i = 0;
    while i < n {
        if records[i].v > eps {
            let start = i;
            let mut low = true;
            while i < n && records[i].v > eps {
                low &= records[i].v < th.burr_max_kmh;
                i += 1;
            }
            if low && start > 0 && i < n && i - start < th.burr_max_s as usize {
                for r in &mut records[start..i] {
                    r.v = 0.0;
                }
                zeroed += 1;
            }
        } else {
            i += 1;
        }
    }
    zeroed
}

/// Delete idle runs long enough to be parked vehicles, splitting the
/// piece where they were.
pub fn drop_long_parking(pieces: Vec<Vec<Record>>, th: &Thresholds) -> (Vec<Vec<Record>>, u32) {
    let eps = th.idle_eps_kmh;
    let min = th.park_min_s as usize;
    let mut out = Vec::new();
    let mut parked = 0u32;
    for piece in pieces {
        let n = piece.len();
        let mut cur: Vec<Record> = Vec::new();
        let mut i = 0;
        while i < n {
            if piece[i].v <= eps {
                let start = i;
                while i < n && piece[i].v <= eps {
                    i += 1;
                }
                if i - start > min {
                    parked += 1;
                    if !cur.is_empty() {
                        out.push(std::mem::take(&mut cur));
                    }
                } else {
                    cur.extend_from_slice(&piece[start..i]);
                }
            } else {
                cur.push(piece[i]);
                i += 1;
            }
        }
        if !cur.is_empty() {
            out.push(cur);
        }
    }
    (out, parked)
}

/// Cap idle runs at the configured length, keeping the final stretch so
/// the transition back into motion is preserved. Later timestamps shift
/// down to stay contiguous. The sample newly adjacent to the run head
/// is nudged up if the join would imply braking beyond the bound.
pub fn truncate_long_idle(records: &mut Vec<Record>, th: &Thresholds) -> u32 {
    let cap = th.idle_cap_s as usize;
    let eps = th.idle_eps_kmh;
    let n = records.len();
    let mut out: Vec<Record> = Vec::with_capacity(n);
    let mut truncations = 0u32;
    let mut shift: i64 = 0;
    let mut i = 0;
    while i < n {
        if records[i].v <= eps {
            let start = i;
            while i < n && records[i].v <= eps {
                i += 1;
            }
            let run = i - start;
            let keep_from = if run > cap {
                truncations += 1;
                shift += (run - cap) as i64;
                start + (run - cap)
            } else {
                start
            };
            let mut first = records[keep_from];
            if keep_from > start {
                if let Some(prev) = out.last() {
                    let floor = prev.v + th.decel_min_ms2 * 3.6;
                    if first.v < floor {
                        first.v = floor.min(eps);
                    }
                }
            }
            out.push(Record { t: first.t - shift, ..first });
            for r in &records[keep_from + 1..i] {
                out.push(Record { t: r.t - shift, ..*r });
            }
        } else {
            out.push(Record { t: records[i].t - shift, ..records[i] });
            i += 1;
        }
    }
    *records = out;
    truncations
}

/// Run the full cleaning pipeline on one raw trace.
pub fn clean_trace(trace: &SpeedTrace, th: &Thresholds) -> Result<(Vec<CleanTrace>, CleanReport)> {
    let mut report = CleanReport::default();
    let mut work = trace.clone();
    report.gps_dropped = drop_gps_invalid(&mut work, th.bbox.as_ref());
    let (mut pieces, splits) = split_on_gaps(&work)?;
    report.gaps_split = splits;
    for piece in &mut pieces {
        report.accel_corrected += correct_accel_outliers(piece, th)?;
        report.burrs_zeroed += zero_burrs(piece, th);
    }
    let (mut pieces, parked) = drop_long_parking(pieces, th);
    report.parkings_dropped = parked;
    for piece in &mut pieces {
        report.idle_truncations += truncate_long_idle(piece, th);
    }
    let out = pieces
        .into_iter()
        .filter(|p| !p.is_empty())
        .enumerate()
        .map(|(k, records)| CleanTrace { trace_id: trace.source_id.clone(), piece: k, records })
        .collect();
    Ok((out, report))
}

pub fn records_to_csv(records: &[Record]) -> String {
    let mut s = String::from("t,v_kmh\n");
    for r in records {
        s.push_str(&r.t.to_string());
        s.push(',');
        s.push_str(&sig9(r.v));
        s.push('\n');
    }
    s
}
