//! Tracker and evaluation configuration, plus the flat `key = value` config
//! file format.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::motion::{NoiseConfig, StateLayout};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TrackerVariant {
    /// Centre-only Kalman state, Mahalanobis association with a BEV-overlap
    /// veto, EMA-smoothed extents and yaw.
    Ab3dmotStyle,
    /// Full-box Kalman state with BEV-IoU association.
    SimpleTrackStyle,
}

impl TrackerVariant {
    pub const ALL: [TrackerVariant; 2] = [TrackerVariant::Ab3dmotStyle, TrackerVariant::SimpleTrackStyle];

    pub fn state_layout(self) -> StateLayout {
        match self {
            TrackerVariant::Ab3dmotStyle => StateLayout::Center6,
            TrackerVariant::SimpleTrackStyle => StateLayout::FullBox10,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TrackerVariant::Ab3dmotStyle => "ab3dmot",
            TrackerVariant::SimpleTrackStyle => "simpletrack",
        }
    }
}

impl fmt::Display for TrackerVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TrackerVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "ab3dmot" | "ab3dmotstyle" => Ok(TrackerVariant::Ab3dmotStyle),
            "simpletrack" | "simpletrackstyle" => Ok(TrackerVariant::SimpleTrackStyle),
            _ => Err(format!(
                "unknown tracker variant `{s}` (expected ab3dmot or simpletrack)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackerConfig {
    pub variant: TrackerVariant,
    /// Detections scoring below this are dropped before tracking.
    pub score_threshold: f64,
    pub nms_iou_threshold: f64,
    /// Horizontal radius of the region of interest, metres.
    pub roi_radius: f64,
    /// Matches needed before a track is reported.
    pub min_hits: u32,
    /// Consecutive misses tolerated before a track is deleted.
    pub max_age: u32,
    /// EMA factor for extents and yaw (centre-only variant).
    pub ema_alpha: f64,
    /// Upper bound on the Mahalanobis distance of an accepted match.
    pub mahalanobis_gate: f64,
    /// Minimum rotated BEV IoU of an accepted match.
    pub association_iou_min: f64,
    /// Apply the gate to the cost matrix before assignment as well as after.
    pub pre_gate: bool,
    /// Also report confirmed tracks that coasted through this frame.
    pub emit_coasted: bool,
    pub noise: NoiseConfig,
}

impl TrackerConfig {
    pub fn default_for(variant: TrackerVariant) -> Self {
        Self {
            variant,
            score_threshold: 0.45,
            nms_iou_threshold: 0.30,
            roi_radius: 4.5,
            min_hits: 2,
            max_age: 3,
            ema_alpha: 0.5,
            mahalanobis_gate: 9.4877,
            association_iou_min: match variant {
                TrackerVariant::Ab3dmotStyle => 0.01,
                TrackerVariant::SimpleTrackStyle => 0.10,
            },
            pre_gate: true,
            emit_coasted: false,
            noise: NoiseConfig::default(),
        }
    }

    /// Configuration used to stamp identities onto ground-truth labels.
    pub fn pseudo_gt(variant: TrackerVariant) -> Self {
        Self {
            score_threshold: 0.0,
            min_hits: 1,
            max_age: 3,
            ..Self::default_for(variant)
        }
    }

    pub fn validate(&self) -> Result<()> {
        fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::Config(msg()))
            }
        }
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        check(unit(self.score_threshold), || {
            format!("score_threshold must lie in [0, 1], got {}", self.score_threshold)
        })?;
        check(self.nms_iou_threshold > 0.0 && self.nms_iou_threshold <= 1.0, || {
            format!("nms_iou_threshold must lie in (0, 1], got {}", self.nms_iou_threshold)
        })?;
        check(self.roi_radius > 0.0 && !self.roi_radius.is_nan(), || {
            format!("roi_radius must be positive, got {}", self.roi_radius)
        })?;
        check(self.min_hits >= 1, || "min_hits must be at least 1".to_string())?;
        check(self.ema_alpha > 0.0 && self.ema_alpha <= 1.0, || {
            format!("ema_alpha must lie in (0, 1], got {}", self.ema_alpha)
        })?;
        check(self.mahalanobis_gate > 0.0 && !self.mahalanobis_gate.is_nan(), || {
            format!("mahalanobis_gate must be positive, got {}", self.mahalanobis_gate)
        })?;
        check(unit(self.association_iou_min), || {
            format!(
                "association_iou_min must lie in [0, 1], got {}",
                self.association_iou_min
            )
        })?;
        self.noise.validate()
    }

    /// Renders the config in the `key = value` file format.
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        for key in TRACKER_KEYS {
            let _ = writeln!(out, "{key} = {}", self.get(key).expect("known key"));
        }
        out
    }

    /// Parses a config file; keys absent from the file keep the defaults of
    /// the file's `variant` (or of `fallback` when the file names none).
    pub fn parse(text: &str, fallback: TrackerVariant) -> Result<Self> {
        let pairs = parse_key_values(text)?;
        let variant = match pairs.iter().find(|(_, k, _)| k == "variant") {
            Some((line, _, v)) => v
                .parse()
                .map_err(|message| Error::ConfigParse { line: *line, message })?,
            None => fallback,
        };
        let mut cfg = Self::default_for(variant);
        for (line, key, value) in &pairs {
            cfg.set(key, value)
                .map_err(|message| Error::ConfigParse { line: *line, message })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn get(&self, key: &str) -> Option<String> {
        let n = &self.noise;
        let v = match key {
            "variant" => self.variant.to_string(),
            "score_threshold" => self.score_threshold.to_string(),
            "nms_iou_threshold" => self.nms_iou_threshold.to_string(),
            "roi_radius" => self.roi_radius.to_string(),
            "min_hits" => self.min_hits.to_string(),
            "max_age" => self.max_age.to_string(),
            "ema_alpha" => self.ema_alpha.to_string(),
            "mahalanobis_gate" => self.mahalanobis_gate.to_string(),
            "association_iou_min" => self.association_iou_min.to_string(),
            "pre_gate" => self.pre_gate.to_string(),
            "emit_coasted" => self.emit_coasted.to_string(),
            "q_position" => n.q_position.to_string(),
            "q_velocity" => n.q_velocity.to_string(),
            "q_size" => n.q_size.to_string(),
            "q_yaw" => n.q_yaw.to_string(),
            "r_position" => n.r_position.to_string(),
            "r_size" => n.r_size.to_string(),
            "r_yaw" => n.r_yaw.to_string(),
            "p0_measured" => n.p0_measured.to_string(),
            "p0_velocity" => n.p0_velocity.to_string(),
            _ => return None,
        };
        Some(v)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: FromStr>(key: &str, value: &str) -> Result<T, String> {
            value
                .parse()
                .map_err(|_| format!("invalid value `{value}` for `{key}`"))
        }
        let n = &mut self.noise;
        match key {
            "variant" => self.variant = value.parse()?,
            "score_threshold" => self.score_threshold = num(key, value)?,
            "nms_iou_threshold" => self.nms_iou_threshold = num(key, value)?,
            "roi_radius" => self.roi_radius = num(key, value)?,
            "min_hits" => self.min_hits = num(key, value)?,
            "max_age" => self.max_age = num(key, value)?,
            "ema_alpha" => self.ema_alpha = num(key, value)?,
            "mahalanobis_gate" => self.mahalanobis_gate = num(key, value)?,
            "association_iou_min" => self.association_iou_min = num(key, value)?,
            "pre_gate" => self.pre_gate = num(key, value)?,
            "emit_coasted" => self.emit_coasted = num(key, value)?,
            "q_position" => n.q_position = num(key, value)?,
            "q_velocity" => n.q_velocity = num(key, value)?,
            "q_size" => n.q_size = num(key, value)?,
            "q_yaw" => n.q_yaw = num(key, value)?,
            "r_position" => n.r_position = num(key, value)?,
            "r_size" => n.r_size = num(key, value)?,
            "r_yaw" => n.r_yaw = num(key, value)?,
            "p0_measured" => n.p0_measured = num(key, value)?,
            "p0_velocity" => n.p0_velocity = num(key, value)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }
}

const TRACKER_KEYS: [&str; 20] = [
    "variant",
    "score_threshold",
    "nms_iou_threshold",
    "roi_radius",
    "min_hits",
    "max_age",
    "ema_alpha",
    "mahalanobis_gate",
    "association_iou_min",
    "pre_gate",
    "emit_coasted",
    "q_position",
    "q_velocity",
    "q_size",
    "q_yaw",
    "r_position",
    "r_size",
    "r_yaw",
    "p0_measured",
    "p0_velocity",
];

/// Splits `key = value` lines, skipping blanks and `#` comments.
/// Returns `(line_number, key, value)` with 1-based line numbers.
pub fn parse_key_values(text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::ConfigParse {
            line: i + 1,
            message: format!("expected `key = value`, got `{line}`"),
        })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::ConfigParse {
                line: i + 1,
                message: "empty key".to_string(),
            });
        }
        out.push((i + 1, key.to_string(), value.trim().to_string()));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    /// Minimum rotated BEV IoU for a true positive.
    pub tp_iou_min: f64,
    /// Cumulative horizontal radii, metres, strictly increasing.
    pub radii: Vec<f64>,
    pub mot_iou_thresholds: Vec<f64>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            tp_iou_min: 0.10,
            radii: vec![1.0, 2.0, 3.0, 4.0, 5.0],
            mot_iou_thresholds: vec![0.3, 0.1],
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        let in_unit = |t: f64| t > 0.0 && t <= 1.0;
        if !in_unit(self.tp_iou_min) {
            return Err(Error::Config(format!(
                "tp_iou_min must lie in (0, 1], got {}",
                self.tp_iou_min
            )));
        }
        if self.radii.is_empty() || self.radii.iter().any(|r| r.is_nan() || *r <= 0.0) {
            return Err(Error::Config("radii must be positive and non-empty".into()));
        }
        if self.radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("radii must be strictly increasing".into()));
        }
        if let Some(t) = self.mot_iou_thresholds.iter().find(|t| !in_unit(**t)) {
            return Err(Error::Config(format!("MOT IoU threshold {t} outside (0, 1]")));
        }
        Ok(())
    }
}
