//! Detection post-processing and the per-frame track lifecycle.
//!
//! Each frame: predict every live track, associate (Mahalanobis or BEV IoU,
//! depending on the variant), update matched tracks, age unmatched ones, and
//! spawn tentative tracks from leftover detections. Tracks are reported once
//! they have `min_hits` matches and deleted after more than `max_age`
//! consecutive misses.

use crate::association::{gate, hungarian_solve, iou_cost, mahalanobis_cost, pre_gate};
use crate::config::{TrackerConfig, TrackerVariant};
use crate::error::{Error, Result};
use crate::geometry::{horizontal_radius, nms_rotated};
use crate::model::{Detection, FrameDetections, ObjectClass, OrientedBox3D, SequenceClip, Track, TrackId, TrackStatus};
use crate::motion::{ema_smooth, kf_init, kf_predict, kf_update};

/// One reported box of a confirmed track.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackOutput {
    pub frame_index: u64,
    pub track_id: TrackId,
    pub class: ObjectClass,
    pub bbox: OrientedBox3D,
    pub score: f64,
}

/// Score threshold, radial ROI, then rotated NMS. Output is score-descending.
pub fn filter_detections(frame: &FrameDetections, cfg: &TrackerConfig) -> FrameDetections {
    let candidates: Vec<Detection> = frame
        .detections
        .iter()
        .filter(|d| d.score() >= cfg.score_threshold && horizontal_radius(&d.bbox) <= cfg.roi_radius)
        .copied()
        .collect();
    FrameDetections {
        frame_index: frame.frame_index,
        timestamp: frame.timestamp,
        detections: nms_rotated(&candidates, cfg.nms_iou_threshold),
    }
}

/// Mutable tracking state for one clip. Steps must be applied in frame order.
#[derive(Debug, Clone)]
pub struct TrackerRuntime {
    cfg: TrackerConfig,
    tracks: Vec<Track>,
    next_id: u64,
    frame_counter: u64,
    last_frame: Option<u64>,
}

impl TrackerRuntime {
    pub fn new(cfg: TrackerConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            tracks: Vec::new(),
            next_id: 1,
            frame_counter: 0,
            last_frame: None,
        })
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.cfg
    }

    /// Live (tentative or confirmed) tracks after the last step.
    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    /// Number of frames processed so far.
    pub fn frames_processed(&self) -> u64 {
        self.frame_counter
    }

    /// Advances the tracker by one frame of already-filtered detections.
    pub fn step(&mut self, frame: &FrameDetections) -> Result<Vec<TrackOutput>> {
        Ok(self.step_with_sources(frame)?.into_iter().map(|(o, _)| o).collect())
    }

    /// Like [`step`](Self::step), also returning the index of the detection
    /// each output was matched to (`None` for coasted outputs).
    pub fn step_with_sources(&mut self, frame: &FrameDetections) -> Result<Vec<(TrackOutput, Option<usize>)>> {
        if let Some(last) = self.last_frame {
            if frame.frame_index <= last {
                return Err(Error::FrameOrder {
                    last,
                    got: frame.frame_index,
                });
            }
        }
        let cfg = &self.cfg;
        let noise = &cfg.noise;
        let dets = &frame.detections;

        for t in &mut self.tracks {
            t.kf = kf_predict(&t.kf, 1.0, noise);
            t.bbox = t.kf.to_box(&t.bbox);
            t.matched_detection = None;
        }
        let predicted: Vec<OrientedBox3D> = self.tracks.iter().map(|t| t.bbox).collect();

        let costs = match cfg.variant {
            TrackerVariant::Ab3dmotStyle => {
                let states: Vec<_> = self.tracks.iter().map(|t| t.kf.clone()).collect();
                mahalanobis_cost(&states, dets, noise)?
            }
            TrackerVariant::SimpleTrackStyle => iou_cost(&predicted, dets, cfg.association_iou_min),
        };
        let costs = if cfg.pre_gate {
            pre_gate(&costs, &predicted, dets, cfg)
        } else {
            costs
        };
        let assignment = gate(&hungarian_solve(&costs), &predicted, dets, cfg);

        for m in &assignment.matches {
            let t = &mut self.tracks[m.track];
            let det = &dets[m.detection];
            t.kf = kf_update(&t.kf, det, noise)?;
            t.bbox = match cfg.variant {
                TrackerVariant::Ab3dmotStyle => {
                    ema_smooth(&t.bbox, &det.bbox, cfg.ema_alpha).with_center(t.kf.position())?
                }
                TrackerVariant::SimpleTrackStyle => t.kf.to_box(&t.bbox),
            };
            t.hits += 1;
            t.consecutive_misses = 0;
            t.last_score = det.score();
            t.matched_detection = Some(m.detection);
        }
        for &i in &assignment.unmatched_tracks {
            let t = &mut self.tracks[i];
            t.consecutive_misses += 1;
            if t.consecutive_misses > cfg.max_age {
                t.status = TrackStatus::Dead;
            }
        }
        self.tracks.retain(|t| t.status != TrackStatus::Dead);

        let layout = cfg.variant.state_layout();
        for &j in &assignment.unmatched_detections {
            let det = &dets[j];
            self.tracks.push(Track {
                id: TrackId(self.next_id),
                kf: kf_init(det, layout, noise),
                bbox: det.bbox,
                hits: 1,
                consecutive_misses: 0,
                status: TrackStatus::Tentative,
                last_score: det.score(),
                matched_detection: Some(j),
            });
            self.next_id += 1;
        }

        let mut outputs = Vec::new();
        for t in &mut self.tracks {
            if t.status == TrackStatus::Tentative && t.hits >= cfg.min_hits {
                t.status = TrackStatus::Confirmed;
            }
            if t.status == TrackStatus::Confirmed && (t.matched_detection.is_some() || cfg.emit_coasted) {
                let output = TrackOutput {
                    frame_index: frame.frame_index,
                    track_id: t.id,
                    class: ObjectClass::Person,
                    bbox: t.bbox,
                    score: t.last_score,
                };
                outputs.push((output, t.matched_detection));
            }
        }
        outputs.sort_by_key(|o| o.0.track_id);

        self.last_frame = Some(frame.frame_index);
        self.frame_counter += 1;
        Ok(outputs)
    }
}

/// Filters and tracks a whole clip on a fresh runtime.
pub fn run_clip(cfg: &TrackerConfig, clip: &SequenceClip) -> Result<Vec<TrackOutput>> {
    clip.validate()?;
    let mut rt = TrackerRuntime::new(cfg.clone())?;
    let mut out = Vec::new();
    for frame in &clip.frames {
        let filtered = filter_detections(frame, cfg);
        out.extend(rt.step(&filtered)?);
    }
    Ok(out)
}

/// Stamps track identities onto ground-truth labels.
///
/// Runs `variant` with `min_hits = 1` and no score threshold, so every label
/// that survives the ROI and NMS filters is reported from its first frame.
/// Each output carries the label's own box and score; only the id comes
/// from the tracker.
pub fn generate_pseudo_gt(labels: &SequenceClip, variant: TrackerVariant) -> Result<Vec<TrackOutput>> {
    let cfg = TrackerConfig::pseudo_gt(variant);
    labels.validate()?;
    let mut rt = TrackerRuntime::new(cfg.clone())?;
    let mut out = Vec::new();
    for frame in &labels.frames {
        let filtered = filter_detections(frame, &cfg);
        for (mut o, source) in rt.step_with_sources(&filtered)? {
            let det = &filtered.detections[source.expect("pseudo-GT never emits coasted tracks")];
            o.bbox = det.bbox;
            o.score = det.score();
            out.push(o);
        }
    }
    Ok(out)
}

/// Re-wraps tracker outputs as a detection clip (score from the output).
pub fn outputs_as_clip(outputs: &[TrackOutput], template: &SequenceClip) -> SequenceClip {
    let frames = template
        .frames
        .iter()
        .map(|f| FrameDetections {
            frame_index: f.frame_index,
            timestamp: f.timestamp,
            detections: outputs
                .iter()
                .filter(|o| o.frame_index == f.frame_index)
                .map(|o| Detection::new(o.bbox, o.score).expect("tracker scores are finite"))
                .collect(),
        })
        .collect();
    SequenceClip {
        clip_id: template.clip_id.clone(),
        rate_hz: template.rate_hz,
        frames,
    }
}
