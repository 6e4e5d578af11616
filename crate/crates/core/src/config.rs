//! Pipeline configuration.
//!
//! Every stage reads its tunables from [`PipelineConfig`]. The defaults
//! are the constants the pipeline was validated against, so `{}` is a
//! complete config file. Unknown keys are rejected to catch typos.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Geographic bounding box in degrees. When configured, records outside
/// the box are dropped during cleaning along with null-island points.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundingBox {
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
}

impl BoundingBox {
    pub fn contains(&self, lat: f64, lon: f64) -> bool {
        lat >= self.lat_min && lat <= self.lat_max && lon >= self.lon_min && lon <= self.lon_max
    }
}

/// Cleaning and segmentation thresholds.
///
/// Speeds are km/h, accelerations m/s2, durations whole seconds. One
/// record is one second, so duration thresholds double as sample counts.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    /// Hardest credible acceleration; a larger implied jump is a glitch.
    pub accel_max_ms2: f64,
    /// Hardest credible braking, negative.
    pub decel_min_ms2: f64,
    /// Speeds at or below this are idle. Nonzero to absorb GPS drift.
    pub idle_eps_kmh: f64,
    /// |a| at or below this is cruising; above is accel, below is decel.
    pub state_accel_ms2: f64,
    /// Segments shorter than this are discarded.
    pub min_segment_s: u32,
    /// Idle runs longer than this keep only their final this-many seconds.
    pub idle_cap_s: u32,
    /// Zero-speed runs longer than this are parking, deleted outright.
    pub park_min_s: u32,
    /// Maximum length of a low-speed blip that is zeroed as noise.
    pub burr_max_s: u32,
    /// Speed ceiling for such blips.
    pub burr_max_kmh: f64,
    /// Acceleration repair sweeps before giving up on a pathological trace.
    pub accel_sweep_passes: u32,
    pub bbox: Option<BoundingBox>,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            accel_max_ms2: 4.5,
            decel_min_ms2: -7.5,
            idle_eps_kmh: 0.5,
            state_accel_ms2: 0.15,
            min_segment_s: 20,
            idle_cap_s: 180,
            park_min_s: 300,
            burr_max_s: 10,
            burr_max_kmh: 10.0,
            accel_sweep_passes: 10,
            bbox: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PcaConfig {
    /// Components must explain at least this share of variance.
    pub cum_threshold: f64,
    /// Components with eigenvalues below this carry less information
    /// than a single standardized feature and are never selected.
    pub eig_threshold: f64,
    /// Drop constant feature columns instead of erroring.
    pub drop_constant: bool,
}

impl Default for PcaConfig {
    fn default() -> Self {
        PcaConfig { cum_threshold: 0.80, eig_threshold: 1.0, drop_constant: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    Flat,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthRule {
    /// Percentile of sampled pairwise distances.
    Percentile,
    /// Fraction of the mean sampled pairwise distance.
    MeanFraction,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeanShiftConfig {
    /// Fixed bandwidth override; estimated from the data when absent.
    pub bandwidth: Option<f64>,
    pub bandwidth_rule: BandwidthRule,
    /// Quantile (or mean fraction) used by the bandwidth estimate.
    pub bandwidth_quantile: f64,
    /// Pairwise distances sampled by the bandwidth estimate.
    pub sample_pairs: usize,
    pub kernel: Kernel,
    /// Convergence threshold as a fraction of the bandwidth.
    pub shift_tol_frac: f64,
    pub max_iter: u32,
    /// Converged centers closer than this fraction of the bandwidth to
    /// an existing mode are merged into it.
    pub merge_frac: f64,
}

impl Default for MeanShiftConfig {
    fn default() -> Self {
        MeanShiftConfig {
            bandwidth: None,
            bandwidth_rule: BandwidthRule::Percentile,
            bandwidth_quantile: 0.20,
            sample_pairs: 1000,
            kernel: Kernel::Flat,
            shift_tol_frac: 1e-4,
            max_iter: 500,
            merge_frac: 0.5,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KmeansConfig {
    pub k: usize,
    pub max_iter: u32,
}

impl Default for KmeansConfig {
    fn default() -> Self {
        KmeansConfig { k: 3, max_iter: 300 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviationNorm {
    /// |x - mean| / (|mean| + eps), the default.
    Relative,
    /// |x - mean| / (std + eps), for corpora with wildly mixed scales.
    Zscore,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthesisConfig {
    pub target_duration_s: u32,
    /// The assembled cycle must land within this many seconds of target.
    pub window_s: u32,
    pub deviation_norm: DeviationNorm,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        SynthesisConfig { target_duration_s: 1500, window_s: 60, deviation_norm: DeviationNorm::Relative }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub v_bin_kmh: f64,
    pub a_bin_ms2: f64,
    pub a_min_ms2: f64,
    pub a_max_ms2: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { v_bin_kmh: 2.0, a_bin_ms2: 0.2, a_min_ms2: -4.0, a_max_ms2: 4.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub thresholds: Thresholds,
    pub pca: PcaConfig,
    pub mean_shift: MeanShiftConfig,
    pub kmeans: KmeansConfig,
    /// Clusters with fewer members are flagged abnormal and excluded
    /// from cycle assembly.
    pub min_cluster_size: usize,
    pub synthesis: SynthesisConfig,
    pub evaluation: EvalConfig,
    /// Keep segments that lack one of the four states, for diagnostics.
    pub keep_incomplete_segments: bool,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            thresholds: Thresholds::default(),
            pca: PcaConfig::default(),
            mean_shift: MeanShiftConfig::default(),
            kmeans: KmeansConfig::default(),
            min_cluster_size: 3,
            synthesis: SynthesisConfig::default(),
            evaluation: EvalConfig::default(),
            keep_incomplete_segments: false,
            seed: 42,
        }
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: PipelineConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let t = &self.thresholds;
        if t.accel_max_ms2 <= 0.0 || t.decel_min_ms2 >= 0.0 {
            return Err(Error::Config("acceleration bounds must straddle zero".into()));
        }
        if t.idle_eps_kmh < 0.0 || t.state_accel_ms2 <= 0.0 {
            return Err(Error::Config("idle_eps_kmh and state_accel_ms2 must be non-negative".into()));
        }
        if t.min_segment_s == 0 {
            return Err(Error::Config("min_segment_s must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.pca.cum_threshold) {
            return Err(Error::Config("pca.cum_threshold must be in [0, 1]".into()));
        }
        let ms = &self.mean_shift;
        if let Some(h) = ms.bandwidth {
            if h <= 0.0 {
                return Err(Error::Config("mean_shift.bandwidth must be positive".into()));
            }
        }
        if !(0.0..1.0).contains(&ms.bandwidth_quantile) || ms.sample_pairs == 0 {
            return Err(Error::Config("mean_shift bandwidth estimate is misconfigured".into()));
        }
        if ms.shift_tol_frac <= 0.0 || ms.merge_frac <= 0.0 || ms.max_iter == 0 {
            return Err(Error::Config("mean_shift iteration controls must be positive".into()));
        }
        if self.kmeans.k == 0 {
            return Err(Error::Config("kmeans.k must be positive".into()));
        }
        if self.synthesis.target_duration_s == 0 {
            return Err(Error::Config("synthesis.target_duration_s must be positive".into()));
        }
        let e = &self.evaluation;
        if e.v_bin_kmh <= 0.0 || e.a_bin_ms2 <= 0.0 || e.a_min_ms2 >= e.a_max_ms2 {
            return Err(Error::Config("evaluation bins are misconfigured".into()));
        }
        Ok(())
    }
}
