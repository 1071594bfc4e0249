//! Tracking-by-detection and evaluation toolkit for person perception from an
//! overhead LiDAR.
//!
//! Per-frame oriented 3D person detections enter as plain text files. They are
//! filtered (score, radial ROI, rotated NMS), tracked by one of two classical
//! constant-velocity Kalman pipelines, and scored with distance-sliced
//! detection metrics and CLEAR-MOT / IDF1 tracking metrics.
//!
//! * [`geometry`] rotated bird's-eye-view polygons, IoU and NMS.
//! * [`motion`] Kalman filtering in the centre-only and full-box layouts.
//! * [`association`] cost matrices, Hungarian assignment and gating.
//! * [`tracker`] track lifecycle and pseudo ground-truth generation.
//! * [`eval`] detection and tracking metrics, latency percentiles.
//! * [`io`] frame / track file formats, clip loading and benchmarking.

pub mod association;
pub mod config;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod io;
pub mod model;
pub mod motion;
pub mod tracker;

pub use config::{EvalConfig, TrackerConfig, TrackerVariant};
pub use error::{Error, Result};
pub use model::{
    normalize_yaw, Detection, FrameDetections, ObjectClass, OrientedBox3D, SensorGeometry, SequenceClip, Track,
    TrackId, TrackStatus,
};
pub use motion::{KalmanState, NoiseConfig, StateLayout};
pub use tracker::{TrackOutput, TrackerRuntime};
