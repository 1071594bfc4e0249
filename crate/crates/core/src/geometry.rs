//! Bird's-eye-view geometry on oriented boxes.
//!
//! All overlap measures here ignore `z` and `dz`: boxes are compared through
//! their yaw-rotated BEV rectangles, intersected exactly by convex clipping.

use std::cmp::Ordering;

use crate::model::{Detection, OrientedBox3D};

pub type Point2 = [f64; 2];

/// Intersections smaller than this (m²) are treated as edge/vertex contact.
const CONTACT_AREA: f64 = 1e-12;

/// A convex polygon with counter-clockwise vertices. Fewer than three
/// vertices denotes the empty polygon.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPolygon2D {
    vertices: Vec<Point2>,
}

impl ConvexPolygon2D {
    /// Wraps a convex vertex ring, reversing it if it is clockwise.
    pub fn new(mut vertices: Vec<Point2>) -> Self {
        if signed_area(&vertices) < 0.0 {
            vertices.reverse();
        }
        Self { vertices }
    }

    pub fn empty() -> Self {
        Self { vertices: Vec::new() }
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.len() < 3
    }

    /// Shoelace area; zero for degenerate polygons.
    pub fn area(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            signed_area(&self.vertices).abs()
        }
    }

    /// Non-strict point-in-polygon test.
    pub fn contains(&self, p: Point2) -> bool {
        if self.is_empty() {
            return false;
        }
        let n = self.vertices.len();
        (0..n).all(|i| cross(self.vertices[i], self.vertices[(i + 1) % n], p) >= 0.0)
    }
}

fn signed_area(v: &[Point2]) -> f64 {
    let n = v.len();
    if n < 3 {
        return 0.0;
    }
    let twice: f64 = (0..n)
        .map(|i| {
            let (a, b) = (v[i], v[(i + 1) % n]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum();
    0.5 * twice
}

/// z-component of (b - a) x (p - a); positive when p is left of a->b.
fn cross(a: Point2, b: Point2, p: Point2) -> f64 {
    (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
}

/// CCW BEV rectangle of a box.
pub fn bev_polygon(b: &OrientedBox3D) -> ConvexPolygon2D {
    let (s, c) = b.yaw().sin_cos();
    let (hx, hy) = (b.dx() / 2.0, b.dy() / 2.0);
    let vertices = [(hx, -hy), (hx, hy), (-hx, hy), (-hx, -hy)]
        .into_iter()
        .map(|(lx, ly)| [b.cx() + c * lx - s * ly, b.cy() + s * lx + c * ly])
        .collect();
    ConvexPolygon2D { vertices }
}

fn lexicographic(a: &[Point2], b: &[Point2]) -> Ordering {
    for (p, q) in a.iter().zip(b) {
        let ord = p[0].total_cmp(&q[0]).then(p[1].total_cmp(&q[1]));
        if ord != Ordering::Equal {
            return ord;
        }
    }
    a.len().cmp(&b.len())
}

/// Area of the intersection of two convex polygons.
///
/// Sutherland-Hodgman clipping followed by the shoelace formula. Arguments are
/// put into a canonical order first so the result is bit-for-bit symmetric.
pub fn convex_intersection_area(a: &ConvexPolygon2D, b: &ConvexPolygon2D) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let (subject, clip) = match lexicographic(&a.vertices, &b.vertices) {
        Ordering::Greater => (b, a),
        _ => (a, b),
    };
    let area = clip_polygon(&subject.vertices, &clip.vertices)
        .map(|p| signed_area(&p).abs())
        .unwrap_or(0.0);
    if area < CONTACT_AREA {
        0.0
    } else {
        area
    }
}

fn clip_polygon(subject: &[Point2], clip: &[Point2]) -> Option<Vec<Point2>> {
    let mut output = subject.to_vec();
    let m = clip.len();
    for i in 0..m {
        let (e0, e1) = (clip[i], clip[(i + 1) % m]);
        let input = std::mem::take(&mut output);
        let n = input.len();
        for k in 0..n {
            let cur = input[k];
            let prev = input[(k + n - 1) % n];
            let (dc, dp) = (cross(e0, e1, cur), cross(e0, e1, prev));
            if dc >= 0.0 {
                if dp < 0.0 {
                    output.push(segment_line_intersection(prev, cur, dp, dc));
                }
                output.push(cur);
            } else if dp >= 0.0 {
                output.push(segment_line_intersection(prev, cur, dp, dc));
            }
        }
        if output.len() < 3 {
            return None;
        }
    }
    Some(output)
}

/// Point where segment p->q crosses the clip line, given signed distances.
fn segment_line_intersection(p: Point2, q: Point2, dp: f64, dq: f64) -> Point2 {
    let t = dp / (dp - dq);
    [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]
}

/// Rotated BEV intersection-over-union in `[0, 1]`.
pub fn rotated_bev_iou(a: &OrientedBox3D, b: &OrientedBox3D) -> f64 {
    let (area_a, area_b) = (a.bev_area(), b.bev_area());
    // Quick reject on circumscribed circles.
    let ra = 0.5 * a.dx().hypot(a.dy());
    let rb = 0.5 * b.dx().hypot(b.dy());
    if (a.cx() - b.cx()).hypot(a.cy() - b.cy()) > ra + rb {
        return 0.0;
    }
    let inter = convex_intersection_area(&bev_polygon(a), &bev_polygon(b))
        .min(area_a)
        .min(area_b);
    let union = area_a + area_b - inter;
    if union <= 0.0 {
        return 0.0;
    }
    if union - inter <= 1e-12 * union {
        return 1.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

/// Horizontal distance of the box centre from the sensor origin.
pub fn horizontal_radius(b: &OrientedBox3D) -> f64 {
    b.cx().hypot(b.cy())
}

/// Indices of `scores` sorted descending; equal scores keep input order.
pub(crate) fn score_order(scores: impl Iterator<Item = f64>) -> Vec<usize> {
    let scores: Vec<f64> = scores.collect();
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| scores[j].total_cmp(&scores[i]));
    order
}

/// Greedy rotated NMS.
///
/// Detections are visited in descending score order (ties by input order); one
/// is kept iff its IoU with every detection kept so far is below
/// `iou_threshold`. The result is in descending score order.
pub fn nms_rotated(dets: &[Detection], iou_threshold: f64) -> Vec<Detection> {
    let mut kept: Vec<Detection> = Vec::with_capacity(dets.len());
    for i in score_order(dets.iter().map(Detection::score)) {
        let cand = &dets[i];
        if kept
            .iter()
            .all(|k| rotated_bev_iou(&k.bbox, &cand.bbox) < iou_threshold)
        {
            kept.push(*cand);
        }
    }
    kept
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, SQRT_2};

    fn bx(cx: f64, cy: f64, dx: f64, dy: f64, yaw: f64) -> OrientedBox3D {
        OrientedBox3D::new(cx, cy, 0.0, dx, dy, 1.0, yaw).unwrap()
    }

    fn det(b: OrientedBox3D, score: f64) -> Detection {
        Detection::new(b, score).unwrap()
    }

    fn has_vertex(p: &ConvexPolygon2D, q: Point2) -> bool {
        p.vertices()
            .iter()
            .any(|v| (v[0] - q[0]).abs() < 1e-12 && (v[1] - q[1]).abs() < 1e-12)
    }

    #[test]
    fn unit_box_polygon() {
        let p = bev_polygon(&bx(0.0, 0.0, 1.0, 1.0, 0.0));
        assert_eq!(p.vertices().len(), 4);
        for q in [[0.5, 0.5], [-0.5, 0.5], [-0.5, -0.5], [0.5, -0.5]] {
            assert!(has_vertex(&p, q), "{q:?}");
        }
        assert!(signed_area(p.vertices()) > 0.0, "must be CCW");
        assert!((p.area() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quarter_turn_swaps_extents() {
        let p = bev_polygon(&bx(0.0, 0.0, 2.0, 1.0, FRAC_PI_2));
        let xs: Vec<f64> = p.vertices().iter().map(|v| v[0]).collect();
        let ys: Vec<f64> = p.vertices().iter().map(|v| v[1]).collect();
        let span = |v: &[f64]| v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min);
        assert!((span(&xs) - 1.0).abs() < 1e-12);
        assert!((span(&ys) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn eighth_turn_puts_vertices_on_axes() {
        // Corners of a unit square rotated 45 degrees sit on the axes at sqrt(2)/2.
        let p = bev_polygon(&bx(0.0, 0.0, 1.0, 1.0, FRAC_PI_4));
        let r = SQRT_2 / 2.0;
        for q in [[r, 0.0], [0.0, r], [-r, 0.0], [0.0, -r]] {
            assert!(has_vertex(&p, q), "{q:?}");
        }
    }

    #[test]
    fn intersection_basics() {
        let a = bev_polygon(&bx(0.0, 0.0, 1.0, 1.0, 0.0));
        assert!((convex_intersection_area(&a, &a) - 1.0).abs() < 1e-12);
        let far = bev_polygon(&bx(5.0, 0.0, 1.0, 1.0, 0.3));
        assert_eq!(convex_intersection_area(&a, &far), 0.0);
        assert_eq!(convex_intersection_area(&a, &ConvexPolygon2D::empty()), 0.0);
    }

    #[test]
    fn rotated_square_overlap() {
        // Octagon left over when a unit square meets its 45-degree rotation.
        let a = bev_polygon(&bx(0.0, 0.0, 1.0, 1.0, 0.0));
        let b = bev_polygon(&bx(0.0, 0.0, 1.0, 1.0, FRAC_PI_4));
        let expected = 2.0 * (SQRT_2 - 1.0);
        assert!((convex_intersection_area(&a, &b) - expected).abs() < 1e-12);
    }

    #[test]
    fn iou_examples() {
        let a = bx(0.0, 0.0, 2.0, 2.0, 0.0);
        assert_eq!(rotated_bev_iou(&a, &a), 1.0);
        let b = bx(1.0, 0.0, 2.0, 2.0, 0.0);
        assert!((rotated_bev_iou(&a, &b) - 1.0 / 3.0).abs() < 1e-12);
        let c = bx(3.0, 3.0, 2.0, 2.0, 0.7);
        assert_eq!(rotated_bev_iou(&a, &c), 0.0);
    }

    #[test]
    fn flipped_heading_is_same_rectangle() {
        let a = bx(0.3, -0.2, 0.8, 0.6, 0.4);
        let b = bx(0.3, -0.2, 0.8, 0.6, 0.4 + std::f64::consts::PI);
        assert_eq!(rotated_bev_iou(&a, &b), 1.0);
    }

    #[test]
    fn edge_contact_is_zero() {
        let a = bx(0.0, 0.0, 1.0, 1.0, 0.0);
        let b = bx(1.0, 0.0, 1.0, 1.0, 0.0);
        assert_eq!(rotated_bev_iou(&a, &b), 0.0);
        let c = bx(1.0, 1.0, 1.0, 1.0, 0.0);
        assert_eq!(rotated_bev_iou(&a, &c), 0.0);
    }

    #[test]
    fn z_is_ignored() {
        let a = OrientedBox3D::new(0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0).unwrap();
        let b = OrientedBox3D::new(0.0, 0.0, 7.0, 1.0, 1.0, 0.1, 0.0).unwrap();
        assert_eq!(rotated_bev_iou(&a, &b), 1.0);
    }

    #[test]
    fn radius_examples() {
        let r = |x, y, z| horizontal_radius(&OrientedBox3D::new(x, y, z, 1.0, 1.0, 1.0, 0.0).unwrap());
        assert_eq!(r(0.0, 0.0, 1.2), 0.0);
        assert_eq!(r(3.0, 4.0, -2.9), 5.0);
        assert_eq!(r(1.0, 0.0, 0.0), 1.0);
    }

    #[test]
    fn nms_drops_duplicate() {
        let b = bx(0.0, 0.0, 0.8, 0.6, 0.0);
        let out = nms_rotated(&[det(b, 0.8), det(b, 0.9)], 0.3);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].score(), 0.9);
    }

    #[test]
    fn nms_keeps_disjoint() {
        let out = nms_rotated(
            &[
                det(bx(0.0, 0.0, 0.8, 0.6, 0.0), 0.5),
                det(bx(3.0, 0.0, 0.8, 0.6, 0.0), 0.7),
            ],
            0.3,
        );
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].score(), 0.7);
    }

    #[test]
    fn nms_chain_is_greedy() {
        // B = [0,2] contains A = [0,1] and C = [1,2]: IoU(A,B) = IoU(B,C) = 0.5,
        // A and C only touch.
        let a = bx(0.5, 0.0, 1.0, 1.0, 0.0);
        let b = bx(1.0, 0.0, 2.0, 1.0, 0.0);
        let c = bx(1.5, 0.0, 1.0, 1.0, 0.0);
        assert!((rotated_bev_iou(&a, &b) - 0.5).abs() < 1e-12);
        assert!((rotated_bev_iou(&b, &c) - 0.5).abs() < 1e-12);
        assert_eq!(rotated_bev_iou(&a, &c), 0.0);
        let out = nms_rotated(&[det(c, 0.7), det(a, 0.9), det(b, 0.8)], 0.3);
        let scores: Vec<f64> = out.iter().map(Detection::score).collect();
        assert_eq!(scores, vec![0.9, 0.7]);
    }

    #[test]
    fn nms_ties_keep_input_order() {
        let a = bx(0.0, 0.0, 1.0, 1.0, 0.0);
        let b = bx(0.05, 0.0, 1.0, 1.0, 0.0);
        let out = nms_rotated(&[det(b, 0.5), det(a, 0.5)], 0.3);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].bbox, b);
    }

    fn arb_box() -> impl Strategy<Value = OrientedBox3D> {
        (-5.0f64..5.0, -5.0f64..5.0, 0.2f64..3.0, 0.2f64..3.0, -4.0f64..4.0)
            .prop_map(|(x, y, dx, dy, yaw)| bx(x, y, dx, dy, yaw))
    }

    fn rigid(b: &OrientedBox3D, theta: f64, tx: f64, ty: f64) -> OrientedBox3D {
        let (s, c) = theta.sin_cos();
        bx(
            c * b.cx() - s * b.cy() + tx,
            s * b.cx() + c * b.cy() + ty,
            b.dx(),
            b.dy(),
            b.yaw() + theta,
        )
    }

    proptest! {
        #[test]
        fn iou_symmetric_and_bounded(a in arb_box(), b in arb_box()) {
            let ab = rotated_bev_iou(&a, &b);
            prop_assert_eq!(ab, rotated_bev_iou(&b, &a));
            prop_assert!((0.0..=1.0).contains(&ab));
        }

        #[test]
        fn iou_rigid_invariant(a in arb_box(), b in arb_box(),
                               theta in -3.2f64..3.2, tx in -20.0f64..20.0, ty in -20.0f64..20.0) {
            let before = rotated_bev_iou(&a, &b);
            let after = rotated_bev_iou(&rigid(&a, theta, tx, ty), &rigid(&b, theta, tx, ty));
            prop_assert!((before - after).abs() <= 1e-9, "{} vs {}", before, after);
        }

        #[test]
        fn intersection_bounded_by_each_area(a in arb_box(), b in arb_box()) {
            let inter = convex_intersection_area(&bev_polygon(&a), &bev_polygon(&b));
            prop_assert!(inter >= 0.0);
            prop_assert!(inter <= a.bev_area() + 1e-9);
            prop_assert!(inter <= b.bev_area() + 1e-9);
        }

        #[test]
        fn nms_postconditions(boxes in proptest::collection::vec((arb_box(), 0.0f64..1.0), 0..12),
                              thr in 0.05f64..0.9) {
            let dets: Vec<Detection> = boxes.iter().map(|(b, s)| det(*b, *s)).collect();
            let kept = nms_rotated(&dets, thr);
            for k in &kept {
                prop_assert!(dets.contains(k));
            }
            for w in kept.windows(2) {
                prop_assert!(w[0].score() >= w[1].score());
            }
            for (i, a) in kept.iter().enumerate() {
                for b in &kept[i + 1..] {
                    prop_assert!(rotated_bev_iou(&a.bbox, &b.bbox) < thr);
                }
            }
            // every suppressed detection overlaps a kept one scoring at least as high
            let mut remaining: Vec<&Detection> = dets.iter().collect();
            for k in &kept {
                if let Some(pos) = remaining.iter().position(|d| *d == k) {
                    remaining.remove(pos);
                }
            }
            for s in remaining {
                prop_assert!(kept.iter().any(|k| k.score() >= s.score()
                    && rotated_bev_iou(&k.bbox, &s.bbox) >= thr));
            }
        }
    }
}
