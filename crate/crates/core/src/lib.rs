//! Detection-driven multi-object tracking for small aerial targets, with a
//! single-object selection layer, offline gap interpolation, synthetic
//! scenario generation and SOT/MOT scoring.
//!
//! The pipeline per frame is: detections (plus optional appearance
//! embeddings and a global camera-motion transform) go into
//! [`tracker::Tracker::step`], which returns online and lost tracks;
//! [`sot::SotSelector`] reduces that to one box per frame.

pub mod assoc;
pub mod cli;
pub mod cmc;
pub mod error;
pub mod geometry;
pub mod io;
pub mod kalman;
pub mod metrics;
pub mod postproc;
pub mod sot;
pub mod synth;
pub mod tracker;

pub use error::{Error, Result};
pub use geometry::{iou, BoundingBox, Detection};
pub use tracker::{FrameOutput, Track, TrackId, TrackOutput, TrackState, Tracker, TrackerConfig};
