//! Domain types shared by every stage of the pipeline.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::motion::KalmanState;

/// Wraps an angle into `[-π, π)`.
///
/// Non-finite input is rejected.
pub fn normalize_yaw(angle: f64) -> Result<f64> {
    if !angle.is_finite() {
        return Err(Error::NonFinite {
            what: "yaw",
            value: angle,
        });
    }
    Ok(wrap_angle(angle))
}

/// Infallible wrap used on values already known to be finite.
pub(crate) fn wrap_angle(angle: f64) -> f64 {
    // In-range values pass through bit-exact.
    if (-PI..PI).contains(&angle) {
        return angle;
    }
    let wrapped = (angle + PI).rem_euclid(TAU) - PI;
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if wrapped >= PI {
        wrapped - TAU
    } else {
        wrapped
    }
}

/// An oriented 3D box in the LiDAR frame (z up).
///
/// `dx` is the extent along the heading given by `yaw`, `dy` the lateral
/// extent and `dz` the vertical extent. Yaw is measured about +z from +x and
/// always stored in `[-π, π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedBox3D {
    cx: f64,
    cy: f64,
    cz: f64,
    dx: f64,
    dy: f64,
    dz: f64,
    yaw: f64,
}

impl OrientedBox3D {
    pub fn new(cx: f64, cy: f64, cz: f64, dx: f64, dy: f64, dz: f64, yaw: f64) -> Result<Self> {
        for (what, value) in [("cx", cx), ("cy", cy), ("cz", cz)] {
            if !value.is_finite() {
                return Err(Error::NonFinite { what, value });
            }
        }
        for (axis, value) in [("dx", dx), ("dy", dy), ("dz", dz)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidExtent { axis, value });
            }
        }
        Ok(Self {
            cx,
            cy,
            cz,
            dx,
            dy,
            dz,
            yaw: normalize_yaw(yaw)?,
        })
    }

    pub fn from_arrays(center: [f64; 3], extent: [f64; 3], yaw: f64) -> Result<Self> {
        Self::new(center[0], center[1], center[2], extent[0], extent[1], extent[2], yaw)
    }

    pub fn cx(&self) -> f64 {
        self.cx
    }
    pub fn cy(&self) -> f64 {
        self.cy
    }
    pub fn cz(&self) -> f64 {
        self.cz
    }
    pub fn dx(&self) -> f64 {
        self.dx
    }
    pub fn dy(&self) -> f64 {
        self.dy
    }
    pub fn dz(&self) -> f64 {
        self.dz
    }
    pub fn yaw(&self) -> f64 {
        self.yaw
    }

    pub fn center(&self) -> [f64; 3] {
        [self.cx, self.cy, self.cz]
    }

    pub fn extent(&self) -> [f64; 3] {
        [self.dx, self.dy, self.dz]
    }

    /// Same box moved to a new center.
    pub fn with_center(&self, center: [f64; 3]) -> Result<Self> {
        Self::from_arrays(center, self.extent(), self.yaw)
    }

    /// BEV footprint area.
    pub fn bev_area(&self) -> f64 {
        self.dx * self.dy
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ObjectClass {
    Person,
}

impl ObjectClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            ObjectClass::Person => "person",
        }
    }
}

impl fmt::Display for ObjectClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ObjectClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "person" | "pedestrian" => Ok(ObjectClass::Person),
            other => Err(format!("unknown class `{other}` (only `person` is supported)")),
        }
    }
}

/// A scored person box; the tracker's per-frame input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub bbox: OrientedBox3D,
    pub class: ObjectClass,
    score: f64,
}

impl Detection {
    /// Scores outside `[0, 1]` are clamped with a warning; some detectors
    /// emit raw logits. Non-finite scores are rejected.
    pub fn new(bbox: OrientedBox3D, score: f64) -> Result<Self> {
        if !score.is_finite() {
            return Err(Error::NonFinite {
                what: "score",
                value: score,
            });
        }
        let clamped = score.clamp(0.0, 1.0);
        if clamped != score {
            log::warn!("detection score {score} outside [0, 1]; clamped to {clamped}");
        }
        Ok(Self {
            bbox,
            class: ObjectClass::Person,
            score: clamped,
        })
    }

    /// A ground-truth label, scored 1.0.
    pub fn label(bbox: OrientedBox3D) -> Self {
        Self {
            bbox,
            class: ObjectClass::Person,
            score: 1.0,
        }
    }

    pub fn score(&self) -> f64 {
        self.score
    }
}

/// Identity of a track, unique and never reused within a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TrackId(pub u64);

impl fmt::Display for TrackId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackStatus {
    Tentative,
    Confirmed,
    Dead,
}

#[derive(Debug, Clone)]
pub struct Track {
    pub id: TrackId,
    pub kf: KalmanState,
    /// Current output box; the centre follows the filter.
    pub bbox: OrientedBox3D,
    pub hits: u32,
    pub consecutive_misses: u32,
    pub status: TrackStatus,
    pub last_score: f64,
    /// Index of the detection matched in the latest frame, if any.
    pub(crate) matched_detection: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameDetections {
    pub frame_index: u64,
    /// Seconds from the start of the clip.
    pub timestamp: f64,
    pub detections: Vec<Detection>,
}

impl FrameDetections {
    pub fn new(frame_index: u64, timestamp: f64, detections: Vec<Detection>) -> Self {
        Self {
            frame_index,
            timestamp,
            detections,
        }
    }
}

pub const DEFAULT_RATE_HZ: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceClip {
    pub clip_id: String,
    pub rate_hz: f64,
    pub frames: Vec<FrameDetections>,
}

impl SequenceClip {
    /// Builds a clip with frame indices `0..n` and timestamps `index / rate_hz`.
    pub fn from_detections(clip_id: impl Into<String>, rate_hz: f64, frames: Vec<Vec<Detection>>) -> Self {
        let frames = frames
            .into_iter()
            .enumerate()
            .map(|(i, dets)| FrameDetections::new(i as u64, i as f64 / rate_hz, dets))
            .collect();
        Self {
            clip_id: clip_id.into(),
            rate_hz,
            frames,
        }
    }

    /// Checks strictly increasing frame indices and non-decreasing timestamps.
    pub fn validate(&self) -> Result<()> {
        if !(self.rate_hz.is_finite() && self.rate_hz > 0.0) {
            return Err(Error::Config(format!("rate_hz must be positive, got {}", self.rate_hz)));
        }
        for pair in self.frames.windows(2) {
            if pair[1].frame_index <= pair[0].frame_index {
                return Err(Error::FrameOrder {
                    last: pair[0].frame_index,
                    got: pair[1].frame_index,
                });
            }
            if pair[1].timestamp < pair[0].timestamp {
                return Err(Error::FrameMismatch(format!(
                    "timestamp decreases at frame {}",
                    pair[1].frame_index
                )));
            }
        }
        Ok(())
    }
}

/// Mounting geometry of the overhead sensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorGeometry {
    /// Height of the sensor above the floor, metres.
    pub mount_height: f64,
    /// Anchor prior for a standing person: (length, width, height) in metres.
    pub default_person_extent: [f64; 3],
}

impl Default for SensorGeometry {
    fn default() -> Self {
        Self {
            mount_height: 2.94,
            default_person_extent: [0.8, 0.6, 1.73],
        }
    }
}

impl SensorGeometry {
    /// Centre height of a default person standing on the floor, in the sensor frame.
    pub fn person_center_z(&self) -> f64 {
        self.default_person_extent[2] / 2.0 - self.mount_height
    }

    /// A default-sized person box at `(x, y)` on the floor.
    pub fn person_box(&self, x: f64, y: f64, yaw: f64) -> Result<OrientedBox3D> {
        OrientedBox3D::from_arrays([x, y, self.person_center_z()], self.default_person_extent, yaw)
    }
}
