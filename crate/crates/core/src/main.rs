use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use drivecycle::clustering::ClusterMethod;
use drivecycle::config::PipelineConfig;
use drivecycle::pipeline::{run_pipeline, RunSummary, Stage};
use drivecycle::synthgen::{generate, write_fixture, GenConfig};
use drivecycle::{Error, Result};

#[derive(Parser)]
#[command(
    name = "drivecycle",
    version,
    about = "Build a representative driving cycle from 1 Hz speed traces"
)]
struct Cli {
    /// JSON configuration file; defaults apply when absent.
    /// For synth-gen this is a generator configuration instead.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the configured random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Clustering method.
    #[arg(long, global = true, value_enum, default_value_t = MethodArg::MeanShift)]
    method: MethodArg,

    /// Directory artifacts are written into.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Print the effective configuration as JSON and exit.
    #[arg(long, global = true)]
    print_config: bool,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    MeanShift,
    Kmeans,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StageArg {
    Clean,
    Segment,
    Features,
    Pca,
    Cluster,
    Build,
    Evaluate,
}

impl From<StageArg> for Stage {
    fn from(s: StageArg) -> Stage {
        match s {
            StageArg::Clean => Stage::Clean,
            StageArg::Segment => Stage::Segment,
            StageArg::Features => Stage::Features,
            StageArg::Pca => Stage::Pca,
            StageArg::Cluster => Stage::Cluster,
            StageArg::Build => Stage::Build,
            StageArg::Evaluate => Stage::Evaluate,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Clean raw traces into contiguous pieces.
    Clean { inputs: Vec<PathBuf> },
    /// Clean, then cut into micro-trips.
    Segment { inputs: Vec<PathBuf> },
    /// Compute the per-trip feature matrix.
    Features { inputs: Vec<PathBuf> },
    /// Reduce the feature matrix to principal components.
    Pca { inputs: Vec<PathBuf> },
    /// Cluster the component scores.
    Cluster { inputs: Vec<PathBuf> },
    /// Assemble the representative cycle.
    Build { inputs: Vec<PathBuf> },
    /// Assemble the cycle and score it against the source corpus.
    Evaluate { inputs: Vec<PathBuf> },
    /// Run the pipeline up to a chosen stage.
    Run {
        #[arg(long, value_enum, default_value_t = StageArg::Evaluate)]
        stage: StageArg,
        inputs: Vec<PathBuf>,
    },
    /// Generate the synthetic benchmark corpus into the output directory.
    SynthGen,
}

/// Files pass through; directories expand to the CSV files directly
/// inside them, sorted by name so runs do not depend on readdir order.
fn expand_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in inputs {
        let meta = std::fs::metadata(p)?;
        if meta.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(p)?
                .collect::<std::io::Result<Vec<_>>>()?
                .into_iter()
                .map(|e| e.path())
                .filter(|q| q.extension().is_some_and(|x| x == "csv"))
                .collect();
            found.sort();
            out.extend(found);
        } else {
            out.push(p.clone());
        }
    }
    if out.is_empty() {
        return Err(Error::Config("no input traces given".into()));
    }
    Ok(out)
}

fn print_summary(s: &RunSummary) {
    println!("traces: {}, cleaned pieces: {}", s.traces, s.pieces);
    let c = &s.clean;
    println!(
        "cleaning: gps_dropped={} gaps_split={} accel_corrected={} burrs_zeroed={} idle_truncations={} parkings_dropped={}",
        c.gps_dropped, c.gaps_split, c.accel_corrected, c.burrs_zeroed, c.idle_truncations, c.parkings_dropped
    );
    if let Some(n) = s.segments {
        println!("micro-trips: {n}");
    }
    if let Some(k) = s.kept_components {
        println!("components kept: {k}");
    }
    if let (Some(k), Some(a)) = (s.clusters, s.abnormal_clusters) {
        println!("clusters: {k} ({a} abnormal)");
    }
    if let (Some(d), Some(n)) = (s.cycle_duration_s, s.cycle_pieces) {
        println!("cycle: {d} s from {n} segments");
    }
    if let Some(r) = s.average_rate {
        println!("average indicator difference rate: {r:.4}");
    }
    if let Some(d) = s.sapd_distance {
        println!("speed-acceleration distribution distance: {d:.4}");
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Cmd::SynthGen = cli.cmd {
        let mut gcfg = match &cli.config {
            Some(p) => GenConfig::from_json(&std::fs::read_to_string(p)?)?,
            None => GenConfig::default(),
        };
        if let Some(seed) = cli.seed {
            gcfg.seed = seed;
        }
        if cli.print_config {
            println!("{}", gcfg.to_json());
            return Ok(());
        }
        let fx = generate(&gcfg)?;
        let paths = write_fixture(&cli.out, &fx)?;
        for p in &paths {
            println!("{}", p.display());
        }
        let e = &fx.expected_clean;
        println!(
            "expected cleaning: gps_dropped={} gaps_split={} accel_corrected={} parkings_dropped={}",
            e.gps_dropped, e.gaps_split, e.accel_corrected, e.parkings_dropped
        );
        return Ok(());
    }

    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::from_json(&std::fs::read_to_string(p)?)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if cli.print_config {
        println!("{}", cfg.to_json());
        return Ok(());
    }

    let (stage, inputs) = match &cli.cmd {
        Cmd::Clean { inputs } => (Stage::Clean, inputs),
        Cmd::Segment { inputs } => (Stage::Segment, inputs),
        Cmd::Features { inputs } => (Stage::Features, inputs),
        Cmd::Pca { inputs } => (Stage::Pca, inputs),
        Cmd::Cluster { inputs } => (Stage::Cluster, inputs),
        Cmd::Build { inputs } => (Stage::Build, inputs),
        Cmd::Evaluate { inputs } => (Stage::Evaluate, inputs),
        Cmd::Run { stage, inputs } => ((*stage).into(), inputs),
        Cmd::SynthGen => unreachable!("handled above"),
    };
    let inputs = expand_inputs(inputs)?;
    let method = match cli.method {
        MethodArg::MeanShift => ClusterMethod::MeanShift,
        MethodArg::Kmeans => ClusterMethod::Kmeans,
    };
    let summary = run_pipeline(&inputs, &cfg, method, &cli.out, stage)?;
    print_summary(&summary);
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Io(_) | Error::Config(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
