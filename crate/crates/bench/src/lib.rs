//! Deterministic inputs for the benchmarks. No randomness, so numbers from
//! different machines and runs describe the same workload.

use std::f64::consts::TAU;

use perstrack_core::{Detection, OrientedBox3D, SensorGeometry, SequenceClip};

const GOLDEN: f64 = 0.618_033_988_749_894_9;

fn person(x: f64, y: f64, yaw: f64) -> OrientedBox3D {
    SensorGeometry::default()
        .person_box(x, y, yaw)
        .expect("finite person box")
}

/// `persons` walkers circling the sensor on rings 0.8 m apart, plus
/// `clutter` low-score boxes per frame spread by a golden-ratio sequence.
/// Walkers on the same ring are evenly spaced, so none ever come close.
pub fn orbit_scene(persons: usize, frames: usize, clutter: usize) -> SequenceClip {
    let per_ring = 4;
    let rings = persons.div_ceil(per_ring).max(1);
    let mut out = Vec::with_capacity(frames);
    let mut seq = 0.0_f64;
    for k in 0..frames {
        let mut dets = Vec::with_capacity(persons + clutter);
        for p in 0..persons {
            let ring = p / per_ring;
            let radius = 0.8 * (ring + 1) as f64;
            // 0.15 m per frame along the ring, alternating direction.
            let dir = if ring % 2 == 0 { 1.0 } else { -1.0 };
            let phase = TAU * (p % per_ring) as f64 / per_ring as f64 + ring as f64 * 0.4;
            let a = phase + dir * 0.15 * k as f64 / radius;
            let yaw = a + dir * TAU / 4.0;
            let (x, y) = (radius * a.cos(), radius * a.sin());
            // Score varies slowly so sorting has work to do.
            let score = 0.7 + 0.25 * ((p + k) % 7) as f64 / 6.0;
            dets.push(Detection::new(person(x, y, yaw), score).expect("score in range"));
        }
        for _ in 0..clutter {
            seq = (seq + GOLDEN).fract();
            let r = 0.8 * rings as f64 * (seq * 7.0).fract().sqrt();
            let a = TAU * seq;
            dets.push(Detection::new(person(r * a.cos(), r * a.sin(), a), 0.55).expect("score in range"));
        }
        out.push(dets);
    }
    SequenceClip::from_detections(format!("orbit-{persons}-{clutter}"), 3.0, out)
}

/// A `rows` x `cols` cost matrix with distinct, well-spread entries.
pub fn spread_costs(rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|i| {
            (0..cols)
                .map(|j| ((i * cols + j) as f64 * GOLDEN).fract() * 10.0)
                .collect()
        })
        .collect()
}

/// Box pairs at increasing offset and relative yaw, from identical to
/// disjoint.
pub fn box_pairs(n: usize) -> Vec<(OrientedBox3D, OrientedBox3D)> {
    (0..n)
        .map(|i| {
            let t = i as f64 / n.max(1) as f64;
            (person(0.0, 0.0, 0.0), person(1.2 * t, 0.3 * t, TAU / 2.0 * t - 0.1))
        })
        .collect()
}
