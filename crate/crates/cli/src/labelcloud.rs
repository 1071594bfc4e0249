//! Converter from labelCloud centroid exports to native label clips.
//!
//! Each `*.json` file in the input directory is one frame; files are taken
//! in name order. A file looks like
//!
//! ```json
//! { "objects": [ { "name": "person",
//!                  "centroid":   { "x": 1.0, "y": 2.0, "z": 0.9 },
//!                  "dimensions": { "length": 0.8, "width": 0.6, "height": 1.73 },
//!                  "rotations":  { "x": 0.0, "y": 0.0, "z": 90.0 } } ] }
//! ```
//!
//! `length`, `width`, `height` map to `dx`, `dy`, `dz` and the z rotation to
//! yaw. Only z rotations are kept; objects of other classes are skipped.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use perstrack_core::{Detection, ObjectClass, OrientedBox3D, SequenceClip};
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum RotationUnit {
    Deg,
    Rad,
}

#[derive(Deserialize)]
struct LabelFile {
    objects: Vec<LabelObject>,
}

#[derive(Deserialize)]
struct LabelObject {
    name: String,
    centroid: Xyz,
    dimensions: Dimensions,
    rotations: Xyz,
}

#[derive(Deserialize)]
struct Xyz {
    x: f64,
    y: f64,
    z: f64,
}

#[derive(Deserialize)]
struct Dimensions {
    length: f64,
    width: f64,
    height: f64,
}

fn convert_frame(text: &str, unit: RotationUnit) -> Result<Vec<Detection>> {
    let file: LabelFile = serde_json::from_str(text)?;
    let mut out = Vec::new();
    for (i, obj) in file.objects.iter().enumerate() {
        if obj.name.parse::<ObjectClass>().is_err() {
            log::debug!("skipping object {i} of class `{}`", obj.name);
            continue;
        }
        if obj.rotations.x != 0.0 || obj.rotations.y != 0.0 {
            log::warn!("object {i}: dropping x/y rotation");
        }
        let yaw = match unit {
            RotationUnit::Deg => obj.rotations.z.to_radians(),
            RotationUnit::Rad => obj.rotations.z,
        };
        let c = &obj.centroid;
        let d = &obj.dimensions;
        let bbox = OrientedBox3D::new(c.x, c.y, c.z, d.length, d.width, d.height, yaw)
            .with_context(|| format!("object {i}"))?;
        out.push(Detection::label(bbox));
    }
    Ok(out)
}

/// Reads every `*.json` file under `input` as one frame, in name order.
pub fn convert_dir(input: &Path, clip_id: String, rate_hz: f64, unit: RotationUnit) -> Result<SequenceClip> {
    let mut files = Vec::new();
    for entry in fs::read_dir(input).with_context(|| format!("reading {}", input.display()))? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "json") {
            files.push(path);
        }
    }
    if files.is_empty() {
        bail!("{} contains no .json label files", input.display());
    }
    files.sort();
    let mut frames = Vec::with_capacity(files.len());
    for path in &files {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        frames.push(convert_frame(&text, unit).with_context(|| path.display().to_string())?);
    }
    Ok(SequenceClip::from_detections(clip_id, rate_hz, frames))
}
