//! Stage orchestration and artifacts.
//!
//! Runs the stages in order up to a requested stopping point and writes
//! one artifact per completed stage into the output directory. All
//! output is deterministic for a given input set, configuration, and
//! seed: artifact bytes can be compared across runs.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::clustering::kmeans::kmeans;
use crate::clustering::mean_shift::mean_shift;
use crate::clustering::{flag_abnormal, ClusterMethod};
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::evaluation::{
    corpus_indicators, difference_rates, max_speed, sapd_bins, sapd_distance, sapd_histogram,
    INDICATOR_NAMES,
};
use crate::features::{assemble_matrix, compute_features, FeatureVector, FEATURE_NAMES};
use crate::fmt::{round9, sig9};
use crate::ingest::{clean_trace, read_trace_file, records_to_csv, CleanReport, CleanTrace};
use crate::pca::fit_transform;
use crate::segmentation::{segment_corpus, MicroTrip};
use crate::synthesis::assemble_cycle;

/// Stopping points, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Clean,
    Segment,
    Features,
    Pca,
    Cluster,
    Build,
    Evaluate,
}

/// What a run did, stage by stage. Fields stay `None` past the
/// requested stopping point.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub traces: usize,
    pub pieces: usize,
    pub clean: CleanReport,
    pub segments: Option<usize>,
    pub kept_components: Option<usize>,
    pub clusters: Option<usize>,
    pub abnormal_clusters: Option<usize>,
    pub cycle_duration_s: Option<usize>,
    pub cycle_pieces: Option<usize>,
    pub average_rate: Option<f64>,
    pub sapd_distance: Option<f64>,
}

/// Stable JSON form of a summary, shared by the CLI and bindings.
pub fn summary_to_json(summary: &RunSummary) -> String {
    serde_json::to_string_pretty(summary).expect("summary serializes")
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("artifact serializes");
    text.push('\n');
    fs::write(dir.join(name), text)?;
    Ok(())
}

fn finish(out_dir: &Path, summary: RunSummary) -> Result<RunSummary> {
    write_json(out_dir, "summary.json", &summary)?;
    Ok(summary)
}

#[derive(Serialize)]
struct SegmentRow<'a> {
    id: usize,
    trace: &'a str,
    piece: usize,
    start_t: i64,
    duration_s: usize,
}

#[derive(Serialize)]
struct PcaArtifact {
    eigenvalues: Vec<f64>,
    rates: Vec<f64>,
    cumulative: Vec<f64>,
    kept_components: usize,
    cumulative_short: bool,
    kept_columns: Vec<usize>,
    /// Rows are input features, columns are component axes.
    loadings: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct ClusterArtifact<'a> {
    method: &'a str,
    sizes: Vec<usize>,
    abnormal: &'a [bool],
    labels: &'a [usize],
    modes: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct CyclePieceRow {
    seg_id: usize,
    cluster_id: usize,
    deviation: f64,
    duration_s: usize,
}

#[derive(Serialize)]
struct CycleArtifact {
    duration_s: usize,
    general_cluster: usize,
    pieces: Vec<CyclePieceRow>,
}

#[derive(Serialize)]
struct EvaluationArtifact {
    names: [&'static str; 8],
    source: [f64; 8],
    cycle: [f64; 8],
    rates: [Option<f64>; 8],
    average_rate: Option<f64>,
    undefined: Vec<&'static str>,
    sapd_distance: f64,
}

fn features_csv(fvs: &[FeatureVector]) -> String {
    let mut s = String::from("seg");
    for name in FEATURE_NAMES {
        s.push(',');
        s.push_str(name);
    }
    s.push('\n');
    for (i, fv) in fvs.iter().enumerate() {
        s.push_str(&i.to_string());
        for v in fv.values {
            s.push(',');
            s.push_str(&sig9(v));
        }
        s.push('\n');
    }
    s
}

fn cycle_csv(speeds: &[f64]) -> String {
    let mut s = String::from("t,v_kmh\n");
    for (t, v) in speeds.iter().enumerate() {
        s.push_str(&format!("{t},{}\n", sig9(*v)));
    }
    s
}

fn round9_all(xs: &[f64]) -> Vec<f64> {
    xs.iter().copied().map(round9).collect()
}

/// Run the pipeline over the given trace files, writing artifacts into
/// `out_dir`, and stop after `stage`.
pub fn run_pipeline(
    inputs: &[PathBuf],
    cfg: &PipelineConfig,
    method: ClusterMethod,
    out_dir: &Path,
    stage: Stage,
) -> Result<RunSummary> {
    if inputs.is_empty() {
        return Err(Error::Config("no input traces given".into()));
    }
    cfg.validate()?;
    fs::create_dir_all(out_dir)?;

    let cleaned_dir = out_dir.join("cleaned");
    fs::create_dir_all(&cleaned_dir)?;
    let mut cleans: Vec<CleanTrace> = Vec::new();
    let mut report = CleanReport::default();
    for path in inputs {
        let raw = read_trace_file(path)?;
        let (pieces, r) = clean_trace(&raw, &cfg.thresholds)?;
        report.absorb(&r);
        for p in &pieces {
            let name = format!("{}_p{}.csv", p.trace_id, p.piece);
            fs::write(cleaned_dir.join(name), records_to_csv(&p.records))?;
        }
        cleans.extend(pieces);
    }
    write_json(out_dir, "clean_report.json", &report)?;
    log::info!(
        "cleaned {} traces into {} pieces ({report:?})",
        inputs.len(),
        cleans.len()
    );
    let mut summary = RunSummary {
        traces: inputs.len(),
        pieces: cleans.len(),
        clean: report,
        segments: None,
        kept_components: None,
        clusters: None,
        abnormal_clusters: None,
        cycle_duration_s: None,
        cycle_pieces: None,
        average_rate: None,
        sapd_distance: None,
    };
    if stage == Stage::Clean {
        return finish(out_dir, summary);
    }

    let trips: Vec<MicroTrip> =
        segment_corpus(&cleans, &cfg.thresholds, cfg.keep_incomplete_segments);
    let rows: Vec<SegmentRow> = trips
        .iter()
        .enumerate()
        .map(|(id, t)| SegmentRow {
            id,
            trace: &t.trace_id,
            piece: t.piece,
            start_t: t.start_t,
            duration_s: t.duration_s(),
        })
        .collect();
    write_json(out_dir, "segments.json", &rows)?;
    log::info!("cut {} micro-trips", trips.len());
    summary.segments = Some(trips.len());
    if stage == Stage::Segment {
        return finish(out_dir, summary);
    }
    if trips.is_empty() {
        return Err(Error::InsufficientData("no usable micro-trips in the corpus".into()));
    }

    let fvs: Vec<FeatureVector> = trips.iter().map(compute_features).collect::<Result<_>>()?;
    fs::write(out_dir.join("features.csv"), features_csv(&fvs))?;
    if stage == Stage::Features {
        return finish(out_dir, summary);
    }

    let matrix = assemble_matrix(&fvs);
    let (model, scores) = fit_transform(&matrix, &cfg.pca)?;
    if model.cumulative_short {
        log::warn!(
            "first {} components cover only {:.1}% of the variance",
            model.k,
            100.0 * model.cumulative[model.k - 1]
        );
    }
    let loadings: Vec<Vec<f64>> =
        (0..model.loadings.rows).map(|i| round9_all(model.loadings.row(i))).collect();
    write_json(
        out_dir,
        "pca.json",
        &PcaArtifact {
            eigenvalues: round9_all(&model.eigenvalues),
            rates: round9_all(&model.rates),
            cumulative: round9_all(&model.cumulative),
            kept_components: model.k,
            cumulative_short: model.cumulative_short,
            kept_columns: model.kept_columns.clone(),
            loadings,
        },
    )?;
    log::info!("kept {} of {} components", model.k, model.eigenvalues.len());
    summary.kept_components = Some(model.k);
    if stage == Stage::Pca {
        return finish(out_dir, summary);
    }

    let points: Vec<Vec<f64>> = (0..scores.rows).map(|i| scores.row(i).to_vec()).collect();
    let mut assign = match method {
        ClusterMethod::MeanShift => mean_shift(&points, &cfg.mean_shift, cfg.seed)?,
        ClusterMethod::Kmeans => kmeans(&points, &cfg.kmeans, cfg.seed)?,
    };
    flag_abnormal(&mut assign, cfg.min_cluster_size);
    let modes: Vec<Vec<f64>> = assign.modes.iter().map(|m| round9_all(m)).collect();
    write_json(
        out_dir,
        "clusters.json",
        &ClusterArtifact {
            method: assign.method.as_str(),
            sizes: assign.cluster_sizes(),
            abnormal: &assign.abnormal,
            labels: &assign.labels,
            modes,
        },
    )?;
    let n_abnormal = assign.abnormal.iter().filter(|&&x| x).count();
    log::info!(
        "{} found {} clusters, {} abnormal",
        assign.method.as_str(),
        assign.n_clusters(),
        n_abnormal
    );
    summary.clusters = Some(assign.n_clusters());
    summary.abnormal_clusters = Some(n_abnormal);
    if stage == Stage::Cluster {
        return finish(out_dir, summary);
    }

    let cycle = assemble_cycle(&trips, &fvs, &assign, &cfg.synthesis, &cfg.thresholds)?;
    fs::write(out_dir.join("cycle.csv"), cycle_csv(&cycle.speeds))?;
    write_json(
        out_dir,
        "cycle.json",
        &CycleArtifact {
            duration_s: cycle.duration_s,
            general_cluster: cycle.general_cluster,
            pieces: cycle
                .pieces
                .iter()
                .map(|p| CyclePieceRow {
                    seg_id: p.seg_id,
                    cluster_id: p.cluster_id,
                    deviation: round9(p.deviation),
                    duration_s: p.duration_s,
                })
                .collect(),
        },
    )?;
    log::info!("assembled a {} s cycle from {} segments", cycle.duration_s, cycle.pieces.len());
    summary.cycle_duration_s = Some(cycle.duration_s);
    summary.cycle_pieces = Some(cycle.pieces.len());
    if stage == Stage::Build {
        return finish(out_dir, summary);
    }

    let series: Vec<Vec<f64>> =
        cleans.iter().map(|c| c.records.iter().map(|r| r.v).collect()).collect();
    let source_set: Vec<&[f64]> = series.iter().map(|s| s.as_slice()).collect();
    let cycle_set = [cycle.speeds.as_slice()];
    let source = corpus_indicators(&source_set, &cfg.thresholds)?;
    let cyc = corpus_indicators(&cycle_set, &cfg.thresholds)?;
    let diff = difference_rates(&cyc, &source);
    let bins = sapd_bins(max_speed(&source_set).max(max_speed(&cycle_set)), &cfg.evaluation);
    let h_source = sapd_histogram(&source_set, &bins)?;
    let h_cycle = sapd_histogram(&cycle_set, &bins)?;
    let sapd = sapd_distance(&h_cycle, &h_source)?;
    let mut rates = [None; 8];
    for (r, d) in rates.iter_mut().zip(diff.rates) {
        *r = d.map(round9);
    }
    write_json(
        out_dir,
        "evaluation.json",
        &EvaluationArtifact {
            names: INDICATOR_NAMES,
            source: source.values.map(round9),
            cycle: cyc.values.map(round9),
            rates,
            average_rate: diff.average.map(round9),
            undefined: diff.undefined,
            sapd_distance: round9(sapd),
        },
    )?;
    log::info!(
        "average indicator difference {:?} over {} defined, distribution distance {:.4}",
        diff.average,
        diff.rates.iter().flatten().count(),
        sapd
    );
    summary.average_rate = diff.average;
    summary.sapd_distance = Some(sapd);
    finish(out_dir, summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthgen::{generate, write_fixture, GenConfig};

    fn fixture_inputs(dir: &Path) -> Vec<PathBuf> {
        let fx = generate(&GenConfig::default()).unwrap();
        write_fixture(dir, &fx).unwrap()
    }

    #[test]
    fn full_run_writes_every_artifact() {
        let tmp = tempfile::tempdir().unwrap();
        let inputs = fixture_inputs(&tmp.path().join("data"));
        let out = tmp.path().join("out");
        let cfg = PipelineConfig::default();
        let summary =
            run_pipeline(&inputs, &cfg, ClusterMethod::MeanShift, &out, Stage::Evaluate).unwrap();

        for name in [
            "clean_report.json",
            "segments.json",
            "features.csv",
            "pca.json",
            "clusters.json",
            "cycle.csv",
            "cycle.json",
            "evaluation.json",
            "summary.json",
        ] {
            assert!(out.join(name).exists(), "missing {name}");
        }
        assert!(out.join("cleaned").read_dir().unwrap().count() >= 3);

        assert_eq!(summary.traces, 3);
        let segments = summary.segments.unwrap();
        assert!(segments > 100, "only {segments} segments");
        assert!(summary.kept_components.unwrap() >= 1);
        assert!(summary.clusters.unwrap() >= 1);
        let dur = summary.cycle_duration_s.unwrap();
        let target = cfg.synthesis.target_duration_s as usize;
        let window = cfg.synthesis.window_s as usize;
        assert!(dur >= target - window && dur <= target + window, "cycle ran {dur} s");
        assert!(summary.average_rate.unwrap() >= 0.0);
        assert!(summary.sapd_distance.unwrap() >= 0.0);
    }

    #[test]
    fn a_run_stops_at_the_requested_stage() {
        let tmp = tempfile::tempdir().unwrap();
        let inputs = fixture_inputs(&tmp.path().join("data"));
        let out = tmp.path().join("out");
        let cfg = PipelineConfig::default();
        let summary =
            run_pipeline(&inputs, &cfg, ClusterMethod::MeanShift, &out, Stage::Clean).unwrap();
        assert!(summary.segments.is_none());
        assert!(out.join("clean_report.json").exists());
        assert!(!out.join("segments.json").exists());
        assert!(out.join("summary.json").exists());
    }

    #[test]
    fn no_inputs_is_a_config_error() {
        let tmp = tempfile::tempdir().unwrap();
        let err = run_pipeline(
            &[],
            &PipelineConfig::default(),
            ClusterMethod::MeanShift,
            tmp.path(),
            Stage::Clean,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }
}
