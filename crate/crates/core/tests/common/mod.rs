//! Synthetic person scenes shared by the integration suites.

#![allow(dead_code)]

use perstrack_core::{Detection, ObjectClass, OrientedBox3D, SensorGeometry, SequenceClip, TrackId, TrackOutput};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

#[derive(Debug, Clone)]
pub struct SimConfig {
    /// Persons present at any time.
    pub persons: usize,
    pub frames: usize,
    /// Speed is drawn uniformly from `[min_speed, max_speed]` m/frame.
    pub min_speed: f64,
    pub max_speed: f64,
    /// Persons walk straight lines through this disk and are replaced by a
    /// newcomer (new identity) entering at its edge once they leave.
    pub roi_radius: f64,
    /// Minimum centre distance between any two persons over their shared
    /// lifetime.
    pub min_separation: f64,
    pub center_sigma: f64,
    pub drop_prob: f64,
    /// Per true box, probability of one extra spurious box in the frame.
    pub spurious_prob: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            persons: 5,
            frames: 100,
            min_speed: 0.1,
            max_speed: 0.4,
            roi_radius: 4.5,
            min_separation: 1.2,
            center_sigma: 0.05,
            drop_prob: 0.10,
            spurious_prob: 0.05,
            seed: 7,
        }
    }
}

pub struct Scene {
    /// Noise-free boxes of persons inside the ROI with their true identities.
    pub truth: Vec<TrackOutput>,
    /// Noise-free labels, no ids, every person every frame.
    pub labels: SequenceClip,
    /// Noisy detector output: jittered, thinned and cluttered.
    pub detections: SequenceClip,
}

/// A constant-velocity walker, present on frames `born..died`.
#[derive(Debug, Clone)]
struct Walker {
    id: u64,
    origin: [f64; 2],
    vel: [f64; 2],
    born: usize,
    died: usize,
}

impl Walker {
    fn at(&self, frame: usize) -> [f64; 2] {
        let k = (frame - self.born) as f64;
        [self.origin[0] + k * self.vel[0], self.origin[1] + k * self.vel[1]]
    }
}

fn norm(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

pub fn person_box(x: f64, y: f64, yaw: f64) -> OrientedBox3D {
    SensorGeometry::default().person_box(x, y, yaw).unwrap()
}

fn random_angle(rng: &mut ChaCha8Rng) -> f64 {
    rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)
}

/// Proposes a walker born at `frame`: anywhere inside the ROI on the first
/// frame, on its edge heading inwards afterwards.
fn propose(cfg: &SimConfig, rng: &mut ChaCha8Rng, id: u64, frame: usize) -> Walker {
    let speed = rng.random_range(cfg.min_speed..=cfg.max_speed);
    let (origin, dir) = if frame == 0 {
        let r = cfg.roi_radius * rng.random::<f64>().sqrt();
        let a = random_angle(rng);
        ([r * a.cos(), r * a.sin()], random_angle(rng))
    } else {
        let a = random_angle(rng);
        let r = cfg.roi_radius - 1e-6;
        // Inward directions within 80 degrees of the centre.
        let spread = rng.random_range(-1.4..1.4);
        ([r * a.cos(), r * a.sin()], a + std::f64::consts::PI + spread)
    };
    let mut w = Walker {
        id,
        origin,
        vel: [speed * dir.cos(), speed * dir.sin()],
        born: frame,
        died: frame + 1,
    };
    while w.died < cfg.frames && norm(w.at(w.died)) <= cfg.roi_radius {
        w.died += 1;
    }
    w
}

/// Frames after an exit during which nobody may enter close to it, so that
/// an exit followed by an entry never looks like one person.
const HANDOFF_FRAMES: usize = 5;

fn keeps_clear(cfg: &SimConfig, w: &Walker, others: &[Walker]) -> bool {
    let dist = |a: [f64; 2], b: [f64; 2]| norm([a[0] - b[0], a[1] - b[1]]);
    others.iter().all(|o| {
        let (from, to) = (w.born.max(o.born), w.died.min(o.died));
        let apart = (from..to).all(|f| dist(w.at(f), o.at(f)) >= cfg.min_separation);
        let recent_exit = o.died <= w.born && w.born < o.died + HANDOFF_FRAMES;
        apart && !(recent_exit && dist(w.at(w.born), o.at(o.died - 1)) < 2.0 * cfg.min_separation)
    })
}

pub fn simulate(cfg: &SimConfig) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = Normal::new(0.0, cfg.center_sigma.max(f64::MIN_POSITIVE)).unwrap();

    // Plan every walk up front; a slot is refilled on the frame its walker
    // leaves. Proposals that would come too close to anyone are redrawn.
    let mut walkers: Vec<Walker> = Vec::new();
    let mut slots: Vec<usize> = Vec::new();
    for _ in 0..cfg.persons {
        let w = (0..10_000)
            .map(|_| propose(cfg, &mut rng, walkers.len() as u64 + 1, 0))
            .find(|w| keeps_clear(cfg, w, &walkers))
            .expect("room for the initial persons");
        slots.push(walkers.len());
        walkers.push(w);
    }
    for frame in 1..cfg.frames {
        for slot in 0..slots.len() {
            if walkers[slots[slot]].died > frame {
                continue;
            }
            let id = walkers.len() as u64 + 1;
            // Entering later is fine when the edge is crowded.
            let fresh = (0..10_000)
                .map(|_| propose(cfg, &mut rng, id, frame))
                .find(|w| keeps_clear(cfg, w, &walkers));
            if let Some(w) = fresh {
                slots[slot] = walkers.len();
                walkers.push(w);
            }
        }
    }

    let mut truth = Vec::new();
    let mut labels = Vec::with_capacity(cfg.frames);
    let mut detections = Vec::with_capacity(cfg.frames);
    for frame in 0..cfg.frames {
        let mut label_dets = Vec::new();
        let mut dets = Vec::new();
        for w in walkers.iter().filter(|w| (w.born..w.died).contains(&frame)) {
            let p = w.at(frame);
            let yaw = w.vel[1].atan2(w.vel[0]);
            let bbox = person_box(p[0], p[1], yaw);
            truth.push(TrackOutput {
                frame_index: frame as u64,
                track_id: TrackId(w.id),
                class: ObjectClass::Person,
                bbox,
                score: 1.0,
            });
            label_dets.push(Detection::label(bbox));
            if rng.random::<f64>() >= cfg.drop_prob {
                let jittered = person_box(p[0] + noise.sample(&mut rng), p[1] + noise.sample(&mut rng), yaw);
                dets.push(Detection::new(jittered, rng.random_range(0.6..1.0)).unwrap());
            }
            if rng.random::<f64>() < cfg.spurious_prob {
                let r = cfg.roi_radius * rng.random::<f64>().sqrt();
                let a = random_angle(&mut rng);
                let ghost = person_box(r * a.cos(), r * a.sin(), random_angle(&mut rng));
                dets.push(Detection::new(ghost, rng.random_range(0.5..0.9)).unwrap());
            }
        }
        truth.sort_by_key(|o| (o.frame_index, o.track_id));
        labels.push(label_dets);
        detections.push(dets);
    }

    Scene {
        truth,
        labels: SequenceClip::from_detections(format!("sim-{}", cfg.seed), 3.0, labels),
        detections: SequenceClip::from_detections(format!("sim-{}-det", cfg.seed), 3.0, detections),
    }
}
