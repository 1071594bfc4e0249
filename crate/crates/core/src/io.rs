//! Plain-text frame and track files, clip directories, and the latency harness.
//!
//! Frame file: one box per line, `class cx cy cz dx dy dz yaw [score]`.
//! Track file: one output per line,
//! `frame_index track_id class cx cy cz dx dy dz yaw score`.
//! Blank lines and `#` comments are ignored. Numbers use a decimal point only.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use crate::config::{parse_key_values, TrackerConfig};
use crate::error::{Error, Result};
use crate::eval::{latency_percentiles, LatencyReport};
use crate::model::{Detection, FrameDetections, ObjectClass, OrientedBox3D, SequenceClip, TrackId, DEFAULT_RATE_HZ};
use crate::tracker::{filter_detections, TrackOutput, TrackerRuntime};

pub const META_FILE: &str = "clip.meta";

fn content_lines(content: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    content.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then(|| (i + 1, line.split_whitespace().collect()))
    })
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn number(line: usize, name: &str, field: &str) -> Result<f64> {
    let value: f64 = field
        .parse()
        .map_err(|_| parse_err(line, format!("{name}: `{field}` is not a number")))?;
    if !value.is_finite() {
        return Err(parse_err(line, format!("{name}: `{field}` is not finite")));
    }
    Ok(value)
}

const BOX_FIELDS: [&str; 7] = ["cx", "cy", "cz", "dx", "dy", "dz", "yaw"];

fn parse_box(line: usize, fields: &[&str]) -> Result<OrientedBox3D> {
    let mut v = [0.0; 7];
    for ((slot, name), field) in v.iter_mut().zip(BOX_FIELDS).zip(fields) {
        *slot = number(line, name, field)?;
    }
    OrientedBox3D::new(v[0], v[1], v[2], v[3], v[4], v[5], v[6]).map_err(|e| parse_err(line, e.to_string()))
}

fn parse_class(line: usize, field: &str) -> Result<ObjectClass> {
    field.parse().map_err(|m: String| parse_err(line, m))
}

/// Parse one frame file. With `expect_scores` every line must carry a score;
/// otherwise the lines are labels, any score column is ignored, and each box
/// gets score 1.0. The returned frame has index 0 and timestamp 0.
pub fn parse_frame(content: &str, expect_scores: bool) -> Result<FrameDetections> {
    let mut detections = Vec::new();
    for (line, fields) in content_lines(content) {
        let n = fields.len();
        if !(n == 8 || n == 9) || (expect_scores && n != 9) {
            let wanted = if expect_scores { "9" } else { "8 or 9" };
            return Err(parse_err(line, format!("expected {wanted} fields, found {n}")));
        }
        let class = parse_class(line, fields[0])?;
        let bbox = parse_box(line, &fields[1..8])?;
        let mut det = if expect_scores {
            let score = number(line, "score", fields[8])?;
            Detection::new(bbox, score).map_err(|e| parse_err(line, e.to_string()))?
        } else {
            Detection::label(bbox)
        };
        det.class = class;
        detections.push(det);
    }
    Ok(FrameDetections::new(0, 0.0, detections))
}

fn fmt6(out: &mut String, v: f64) {
    // Avoid printing "-0.000000" for values that round to zero.
    let r = format!("{v:.6}");
    if r.trim_start_matches('-').bytes().all(|b| b == b'0' || b == b'.') {
        out.push_str(&r.replace('-', ""));
    } else {
        out.push_str(&r);
    }
}

fn write_box(out: &mut String, b: &OrientedBox3D) {
    for v in [b.cx(), b.cy(), b.cz(), b.dx(), b.dy(), b.dz(), b.yaw()] {
        out.push(' ');
        fmt6(out, v);
    }
}

/// Serialize a frame in frame-file format; scores are written unless
/// `with_scores` is false.
pub fn write_frame(frame: &FrameDetections, with_scores: bool) -> String {
    let mut out = String::new();
    for d in &frame.detections {
        out.push_str(d.class.as_str());
        write_box(&mut out, &d.bbox);
        if with_scores {
            out.push(' ');
            fmt6(&mut out, d.score());
        }
        out.push('\n');
    }
    out
}

/// Serialize track outputs, ordered by frame then track id.
pub fn write_tracks(outputs: &[TrackOutput]) -> String {
    let mut sorted: Vec<&TrackOutput> = outputs.iter().collect();
    sorted.sort_by_key(|o| (o.frame_index, o.track_id));
    let mut out = String::new();
    for o in sorted {
        let _ = write!(out, "{} {} {}", o.frame_index, o.track_id.0, o.class);
        write_box(&mut out, &o.bbox);
        out.push(' ');
        fmt6(&mut out, o.score);
        out.push('\n');
    }
    out
}

pub fn parse_tracks(content: &str) -> Result<Vec<TrackOutput>> {
    let mut outputs = Vec::new();
    for (line, fields) in content_lines(content) {
        if fields.len() != 11 {
            return Err(parse_err(line, format!("expected 11 fields, found {}", fields.len())));
        }
        let frame_index = fields[0].parse().map_err(|_| {
            parse_err(
                line,
                format!("frame index `{}` is not a non-negative integer", fields[0]),
            )
        })?;
        let id = fields[1]
            .parse()
            .map_err(|_| parse_err(line, format!("track id `{}` is not a non-negative integer", fields[1])))?;
        let score = number(line, "score", fields[10])?;
        if !(0.0..=1.0).contains(&score) {
            return Err(parse_err(line, format!("score {score} outside [0, 1]")));
        }
        outputs.push(TrackOutput {
            frame_index,
            track_id: TrackId(id),
            class: parse_class(line, fields[2])?,
            bbox: parse_box(line, &fields[3..10])?,
            score,
        });
    }
    Ok(outputs)
}

pub fn load_tracks(path: impl AsRef<Path>) -> Result<Vec<TrackOutput>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::Io(e).in_file(path))?;
    parse_tracks(&text).map_err(|e| e.in_file(path))
}

fn frame_file_index(name: &str) -> Option<u64> {
    let stem = name.strip_suffix(".txt")?;
    if stem.is_empty() || !stem.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    stem.parse().ok()
}

fn read_meta(dir: &Path) -> Result<(Option<String>, f64)> {
    let path = dir.join(META_FILE);
    if !path.exists() {
        return Ok((None, DEFAULT_RATE_HZ));
    }
    let text = fs::read_to_string(&path).map_err(|e| Error::Io(e).in_file(&path))?;
    let mut clip_id = None;
    let mut rate = DEFAULT_RATE_HZ;
    for (line, key, value) in parse_key_values(&text).map_err(|e| e.in_file(&path))? {
        match key.as_str() {
            "clip_id" => clip_id = Some(value),
            "rate_hz" => {
                rate = value
                    .parse::<f64>()
                    .ok()
                    .filter(|r| r.is_finite() && *r > 0.0)
                    .ok_or_else(|| {
                        parse_err(line, format!("rate_hz must be a positive number, got `{value}`")).in_file(&path)
                    })?;
            }
            other => log::warn!("{}: ignoring unknown key `{other}`", path.display()),
        }
    }
    Ok((clip_id, rate))
}

/// Load a clip directory of `NNNNNN.txt` frame files plus optional
/// `clip.meta`. Frame indices must run contiguously from 0.
pub fn load_clip(dir: impl AsRef<Path>, expect_scores: bool) -> Result<SequenceClip> {
    let dir = dir.as_ref();
    let mut files: Vec<(u64, std::path::PathBuf)> = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::Io(e).in_file(dir))? {
        let entry = entry?;
        let name = entry.file_name();
        if let Some(idx) = name.to_str().and_then(frame_file_index) {
            files.push((idx, entry.path()));
        }
    }
    if files.is_empty() {
        return Err(Error::EmptyClip(dir.to_path_buf()));
    }
    files.sort();
    for (expected, (idx, path)) in files.iter().enumerate() {
        let expected = expected as u64;
        if *idx != expected {
            // Duplicate spellings (e.g. 1.txt and 000001.txt) land here too.
            if *idx < expected {
                return Err(parse_err(0, format!("duplicate frame index {idx}")).in_file(path));
            }
            return Err(Error::MissingFrame {
                path: dir.to_path_buf(),
                index: expected,
            });
        }
    }
    let (clip_id, rate_hz) = read_meta(dir)?;
    let mut frames = Vec::with_capacity(files.len());
    for (idx, path) in &files {
        let text = fs::read_to_string(path).map_err(|e| Error::Io(e).in_file(path))?;
        let mut frame = parse_frame(&text, expect_scores).map_err(|e| e.in_file(path))?;
        frame.frame_index = *idx;
        frame.timestamp = *idx as f64 / rate_hz;
        frames.push(frame);
    }
    let clip_id = clip_id.unwrap_or_else(|| {
        dir.file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default()
    });
    Ok(SequenceClip {
        clip_id,
        rate_hz,
        frames,
    })
}

/// Write a clip directory readable by [`load_clip`].
pub fn save_clip(clip: &SequenceClip, dir: impl AsRef<Path>, with_scores: bool) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    fs::write(
        dir.join(META_FILE),
        format!("clip_id = {}\nrate_hz = {}\n", clip.clip_id, clip.rate_hz),
    )?;
    for (i, frame) in clip.frames.iter().enumerate() {
        fs::write(dir.join(format!("{i:06}.txt")), write_frame(frame, with_scores))?;
    }
    Ok(())
}

/// Time the per-frame pipeline (detection filtering plus tracker step) on
/// every frame of `clip`, `repeats` times with a fresh runtime each pass.
pub fn bench_tracker(cfg: &TrackerConfig, clip: &SequenceClip, repeats: usize) -> Result<LatencyReport> {
    if repeats == 0 {
        return Err(Error::Config("repeats must be at least 1".into()));
    }
    clip.validate()?;
    let mut samples = Vec::with_capacity(clip.frames.len() * repeats);
    for _ in 0..repeats {
        let mut rt = TrackerRuntime::new(cfg.clone())?;
        for frame in &clip.frames {
            let start = Instant::now();
            let filtered = filter_detections(frame, cfg);
            let out = rt.step(&filtered)?;
            samples.push(start.elapsed().as_secs_f64() * 1e3);
            std::hint::black_box(out);
        }
    }
    latency_percentiles(&samples)
}
