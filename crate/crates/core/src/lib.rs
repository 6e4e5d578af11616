//! Representative driving cycle construction from 1 Hz speed traces.
//!
//! The pipeline cleans raw traces into contiguous pieces, cuts them
//! into micro-trips at idle onsets, describes each trip with twelve
//! aggregate features, compresses those with principal components,
//! clusters the component scores, and splices the most typical segment
//! of each cluster into a cycle whose length lands inside a configured
//! window. The result is scored against its source corpus by indicator
//! difference rates and by the distance between joint
//! speed-acceleration distributions.
//!
//! Every stage is usable on its own; [`pipeline::run_pipeline`] wires
//! them together and writes one artifact per stage.

pub mod clustering;
pub mod config;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod fmt;
pub mod ingest;
pub mod pca;
pub mod pipeline;
pub mod segmentation;
pub mod synthesis;
pub mod synthgen;

pub use config::PipelineConfig;
pub use error::{Error, Result};
