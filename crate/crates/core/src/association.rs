//! Track-to-detection association: cost construction, optimal assignment and
//! post-assignment gating.

use nalgebra::Vector3;

use crate::config::{TrackerConfig, TrackerVariant};
use crate::error::Result;
use crate::geometry::rotated_bev_iou;
use crate::model::{Detection, OrientedBox3D};
use crate::motion::{mahalanobis_distance, KalmanState, NoiseConfig};

/// Marks a pair that must never be matched.
pub const INFEASIBLE: f64 = f64::INFINITY;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostKind {
    Mahalanobis,
    OneMinusIou,
    Custom,
}

/// Dense row-major `rows x cols` cost matrix, lower is better.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    pub kind: CostKind,
}

impl CostMatrix {
    /// Builds a matrix from a generator. NaN entries are stored as infeasible.
    pub fn from_fn(rows: usize, cols: usize, kind: CostKind, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                let v = f(i, j);
                values.push(if v.is_nan() || v == f64::INFINITY {
                    INFEASIBLE
                } else {
                    v
                });
            }
        }
        Self {
            rows,
            cols,
            values,
            kind,
        }
    }

    /// Panics if the rows are ragged.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged cost matrix");
        Self::from_fn(rows.len(), cols, CostKind::Custom, |i, j| rows[i][j])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn is_feasible(&self, i: usize, j: usize) -> bool {
        self.get(i, j).is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Match {
    pub track: usize,
    pub detection: usize,
    pub cost: f64,
}

/// A partition of rows and columns into matched pairs and leftovers.
/// All three lists are sorted ascending.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Assignment {
    pub matches: Vec<Match>,
    pub unmatched_tracks: Vec<usize>,
    pub unmatched_detections: Vec<usize>,
}

impl Assignment {
    pub fn unmatched(rows: usize, cols: usize) -> Self {
        Self {
            matches: Vec::new(),
            unmatched_tracks: (0..rows).collect(),
            unmatched_detections: (0..cols).collect(),
        }
    }

    pub fn total_cost(&self) -> f64 {
        self.matches.iter().map(|m| m.cost).sum()
    }

    fn from_matches(rows: usize, cols: usize, matches: Vec<Match>) -> Self {
        let mut row_used = vec![false; rows];
        let mut col_used = vec![false; cols];
        for m in &matches {
            row_used[m.track] = true;
            col_used[m.detection] = true;
        }
        Self {
            matches,
            unmatched_tracks: (0..rows).filter(|&i| !row_used[i]).collect(),
            unmatched_detections: (0..cols).filter(|&j| !col_used[j]).collect(),
        }
    }
}

/// Mahalanobis distances between predicted track centres and detection centres.
pub fn mahalanobis_cost(tracks: &[KalmanState], dets: &[Detection], noise: &NoiseConfig) -> Result<CostMatrix> {
    let mut values = Vec::with_capacity(tracks.len() * dets.len());
    for t in tracks {
        let s = t.position_innovation_covariance(noise);
        let p = t.position();
        for d in dets {
            let c = d.bbox.center();
            let nu = Vector3::new(c[0] - p[0], c[1] - p[1], c[2] - p[2]);
            values.push(mahalanobis_distance(&nu, &s)?);
        }
    }
    Ok(CostMatrix {
        rows: tracks.len(),
        cols: dets.len(),
        values,
        kind: CostKind::Mahalanobis,
    })
}

/// `1 - IoU` costs; pairs with IoU below `iou_min` are infeasible.
pub fn iou_cost(tracks: &[OrientedBox3D], dets: &[Detection], iou_min: f64) -> CostMatrix {
    CostMatrix::from_fn(tracks.len(), dets.len(), CostKind::OneMinusIou, |i, j| {
        let iou = rotated_bev_iou(&tracks[i], &dets[j].bbox);
        if iou > 0.0 && iou >= iou_min {
            1.0 - iou
        } else {
            INFEASIBLE
        }
    })
}

/// Minimum-cost assignment over the feasible entries of `c`.
///
/// The matrix is padded to square; infeasible entries get a cost larger than
/// any feasible total, so the solver first maximises the number of feasible
/// matches and then minimises their cost. Padded or infeasible pairings are
/// reported as unmatched. Among optimal solutions the one whose row-by-row
/// column sequence is lexicographically smallest is returned.
pub fn hungarian_solve(c: &CostMatrix) -> Assignment {
    let (rows, cols) = (c.rows, c.cols);
    if rows == 0 || cols == 0 || !c.values.iter().any(|v| v.is_finite()) {
        return Assignment::unmatched(rows, cols);
    }
    let n = rows.max(cols);
    let max_abs = c
        .values
        .iter()
        .filter(|v| v.is_finite())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let big = 2.0 * n as f64 * (max_abs + 1.0);

    let mut square = vec![0.0; n * n];
    for i in 0..rows {
        for j in 0..cols {
            let v = c.get(i, j);
            square[i * n + j] = if v.is_finite() { v } else { big };
        }
    }

    let mut solver = SquareLap::solve(&square, n);
    let eps = 1e-12 * big;
    solver.lexicographic_refine(&square, eps);

    let matches = (0..rows)
        .filter_map(|i| {
            let j = solver.row_to_col[i];
            (j < cols && c.is_feasible(i, j)).then(|| Match {
                track: i,
                detection: j,
                cost: c.get(i, j),
            })
        })
        .collect();
    Assignment::from_matches(rows, cols, matches)
}

/// Shortest-augmenting-path Hungarian solver on a dense square matrix,
/// keeping the dual potentials for tie refinement.
struct SquareLap {
    n: usize,
    u: Vec<f64>,
    v: Vec<f64>,
    row_to_col: Vec<usize>,
}

impl SquareLap {
    fn solve(a: &[f64], n: usize) -> Self {
        // 1-based potentials and column owners; index 0 is the virtual root.
        let mut u = vec![0.0; n + 1];
        let mut v = vec![0.0; n + 1];
        let mut owner = vec![0usize; n + 1];
        let mut way = vec![0usize; n + 1];
        for i in 1..=n {
            owner[0] = i;
            let mut j0 = 0usize;
            let mut minv = vec![f64::INFINITY; n + 1];
            let mut used = vec![false; n + 1];
            loop {
                used[j0] = true;
                let i0 = owner[j0];
                let mut delta = f64::INFINITY;
                let mut j1 = 0usize;
                for j in 1..=n {
                    if used[j] {
                        continue;
                    }
                    let cur = a[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
                for j in 0..=n {
                    if used[j] {
                        u[owner[j]] += delta;
                        v[j] -= delta;
                    } else {
                        minv[j] -= delta;
                    }
                }
                j0 = j1;
                if owner[j0] == 0 {
                    break;
                }
            }
            loop {
                let j1 = way[j0];
                owner[j0] = owner[j1];
                j0 = j1;
                if j0 == 0 {
                    break;
                }
            }
        }
        let mut row_to_col = vec![0usize; n];
        for j in 1..=n {
            row_to_col[owner[j] - 1] = j - 1;
        }
        Self {
            n,
            u: u[1..].to_vec(),
            v: v[1..].to_vec(),
            row_to_col,
        }
    }

    /// Moves to the lexicographically smallest perfect matching of the tight
    /// (zero reduced cost) subgraph. Every such matching is optimal by
    /// complementary slackness with the current potentials.
    fn lexicographic_refine(&mut self, a: &[f64], eps: f64) {
        let n = self.n;
        let tight = |i: usize, j: usize| (a[i * n + j] - self.u[i] - self.v[j]).abs() <= eps;
        let tight: Vec<bool> = (0..n * n).map(|k| tight(k / n, k % n)).collect();
        let mut col_owner = vec![0usize; n];
        for (i, &j) in self.row_to_col.iter().enumerate() {
            col_owner[j] = i;
        }
        for i in 0..n {
            let target = self.row_to_col[i];
            for j in 0..target {
                if !tight[i * n + j] || col_owner[j] < i {
                    continue;
                }
                // Find an alternating path: owner of j moves along tight edges
                // among rows > i until someone takes `target`.
                if let Some(path) = alternating_path(&tight, n, i, col_owner[j], target, &col_owner) {
                    // path: (row, new_col) moves
                    for &(r, c) in &path {
                        self.row_to_col[r] = c;
                        col_owner[c] = r;
                    }
                    self.row_to_col[i] = j;
                    col_owner[j] = i;
                    break;
                }
            }
        }
    }
}

/// BFS over rows `> fixed`, starting at `start` (the row displaced from the
/// column `fixed` wants), for a chain of tight reassignments that ends with
/// some row taking `target`. Returns the `(row, new_col)` moves.
fn alternating_path(
    tight: &[bool],
    n: usize,
    fixed: usize,
    start: usize,
    target: usize,
    col_owner: &[usize],
) -> Option<Vec<(usize, usize)>> {
    // came_from[r] = (row that takes r's column, that column)
    let mut came_from: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut seen_row = vec![false; n];
    seen_row[start] = true;
    let mut queue = std::collections::VecDeque::from([start]);
    while let Some(r) = queue.pop_front() {
        for c in 0..n {
            if !tight[r * n + c] {
                continue;
            }
            if c == target {
                let mut moves = vec![(r, c)];
                let mut row = r;
                while let Some((prev, col)) = came_from[row] {
                    moves.push((prev, col));
                    row = prev;
                }
                return Some(moves);
            }
            let owner = col_owner[c];
            if owner <= fixed || seen_row[owner] {
                continue;
            }
            seen_row[owner] = true;
            came_from[owner] = Some((r, c));
            queue.push_back(owner);
        }
    }
    None
}

fn passes_gate(cost: f64, iou: f64, cfg: &TrackerConfig) -> bool {
    match cfg.variant {
        TrackerVariant::Ab3dmotStyle => cost <= cfg.mahalanobis_gate && iou >= cfg.association_iou_min,
        TrackerVariant::SimpleTrackStyle => iou >= cfg.association_iou_min,
    }
}

/// Marks every pair that [`gate`] would reject as infeasible, so that the
/// assignment only chooses among admissible pairs.
///
/// Without this, a young track with a wide covariance can win a detection on
/// Mahalanobis cost alone, be vetoed afterwards, and leave the detection's
/// true track unmatched.
pub fn pre_gate(c: &CostMatrix, track_boxes: &[OrientedBox3D], dets: &[Detection], cfg: &TrackerConfig) -> CostMatrix {
    CostMatrix::from_fn(c.rows(), c.cols(), c.kind, |i, j| {
        let cost = c.get(i, j);
        if c.is_feasible(i, j) && passes_gate(cost, rotated_bev_iou(&track_boxes[i], &dets[j].bbox), cfg) {
            cost
        } else {
            INFEASIBLE
        }
    })
}

/// Demotes matches that fail the variant's gates. Never creates matches.
///
/// `track_boxes` are the predicted boxes the costs were computed from. For
/// the centre-only variant the match cost is taken to be the Mahalanobis
/// distance.
pub fn gate(a: &Assignment, track_boxes: &[OrientedBox3D], dets: &[Detection], cfg: &TrackerConfig) -> Assignment {
    let mut kept = Vec::with_capacity(a.matches.len());
    let mut unmatched_tracks = a.unmatched_tracks.clone();
    let mut unmatched_detections = a.unmatched_detections.clone();
    for m in &a.matches {
        let iou = rotated_bev_iou(&track_boxes[m.track], &dets[m.detection].bbox);
        if passes_gate(m.cost, iou, cfg) {
            kept.push(*m);
        } else {
            unmatched_tracks.push(m.track);
            unmatched_detections.push(m.detection);
        }
    }
    unmatched_tracks.sort_unstable();
    unmatched_detections.sort_unstable();
    Assignment {
        matches: kept,
        unmatched_tracks,
        unmatched_detections,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::{kf_init, StateLayout};
    use proptest::prelude::*;

    /// Brute force over every injection of the smaller side into the larger,
    /// visited in lexicographic order; keeps the first strict minimum.
    fn exhaustive(c: &[Vec<f64>]) -> (f64, Vec<(usize, usize)>) {
        let rows = c.len();
        let cols = c[0].len();
        let mut best = (f64::INFINITY, Vec::new());
        let mut used = vec![false; cols.max(rows)];
        fn rec(
            c: &[Vec<f64>],
            row: usize,
            used: &mut Vec<bool>,
            current: &mut Vec<(usize, usize)>,
            best: &mut (f64, Vec<(usize, usize)>),
        ) {
            let (rows, cols) = (c.len(), c[0].len());
            let needed = rows.min(cols);
            if current.len() == needed {
                let total: f64 = current.iter().map(|&(i, j)| c[i][j]).sum();
                if total < best.0 {
                    *best = (total, current.clone());
                }
                return;
            }
            if row == rows || rows - row < needed - current.len() {
                return;
            }
            for j in 0..cols {
                if !used[j] {
                    used[j] = true;
                    current.push((row, j));
                    rec(c, row + 1, used, current, best);
                    current.pop();
                    used[j] = false;
                }
            }
            // row left unmatched (only when rows > cols)
            if rows > cols {
                rec(c, row + 1, used, current, best);
            }
        }
        rec(c, 0, &mut used, &mut Vec::new(), &mut best);
        best
    }

    fn pairs(a: &Assignment) -> Vec<(usize, usize)> {
        a.matches.iter().map(|m| (m.track, m.detection)).collect()
    }

    #[test]
    fn identity_assignment() {
        let a = hungarian_solve(&CostMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]));
        assert_eq!(pairs(&a), vec![(0, 0), (1, 1)]);
        assert_eq!(a.total_cost(), 0.0);
    }

    #[test]
    fn anti_diagonal_assignment() {
        let a = hungarian_solve(&CostMatrix::from_rows(&[vec![4.0, 1.0], vec![2.0, 3.0]]));
        assert_eq!(pairs(&a), vec![(0, 1), (1, 0)]);
        assert_eq!(a.total_cost(), 3.0);
    }

    #[test]
    fn rectangular_assignment() {
        let a = hungarian_solve(&CostMatrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.0]]));
        assert_eq!(pairs(&a), vec![(0, 1), (1, 0)]);
        assert_eq!(a.total_cost(), 4.0);
        assert_eq!(a.unmatched_detections, vec![2]);
        assert!(a.unmatched_tracks.is_empty());
    }

    #[test]
    fn tall_matrix_leaves_rows_unmatched() {
        let a = hungarian_solve(&CostMatrix::from_rows(&[vec![5.0], vec![1.0], vec![3.0]]));
        assert_eq!(pairs(&a), vec![(1, 0)]);
        assert_eq!(a.unmatched_tracks, vec![0, 2]);
    }

    #[test]
    fn ties_resolve_lexicographically() {
        let a = hungarian_solve(&CostMatrix::from_rows(&[vec![1.0; 3], vec![1.0; 3], vec![1.0; 3]]));
        assert_eq!(pairs(&a), vec![(0, 0), (1, 1), (2, 2)]);
        let b = hungarian_solve(&CostMatrix::from_rows(&[vec![2.0, 1.0, 1.0], vec![1.0, 1.0, 2.0]]));
        assert_eq!(pairs(&b), vec![(0, 1), (1, 0)]);
        let z = hungarian_solve(&CostMatrix::from_rows(&vec![vec![0.0; 4]; 4]));
        assert_eq!(pairs(&z), vec![(0, 0), (1, 1), (2, 2), (3, 3)]);
    }

    #[test]
    fn infeasible_never_matched() {
        let c = CostMatrix::from_rows(&[vec![INFEASIBLE, 1.0], vec![INFEASIBLE, INFEASIBLE]]);
        let a = hungarian_solve(&c);
        assert_eq!(pairs(&a), vec![(0, 1)]);
        assert_eq!(a.unmatched_tracks, vec![1]);
        assert_eq!(a.unmatched_detections, vec![0]);
        let none = hungarian_solve(&CostMatrix::from_rows(&vec![vec![INFEASIBLE; 2]; 2]));
        assert!(none.matches.is_empty());
        assert_eq!(none.unmatched_tracks, vec![0, 1]);
        let empty = hungarian_solve(&CostMatrix::from_fn(0, 3, CostKind::Custom, |_, _| 0.0));
        assert_eq!(empty.unmatched_detections, vec![0, 1, 2]);
    }

    #[test]
    fn mahalanobis_cost_examples() {
        let noise = NoiseConfig::default();
        let b = OrientedBox3D::new(1.0, 2.0, 0.0, 0.8, 0.6, 1.73, 0.0).unwrap();
        let s = kf_init(&Detection::label(b), StateLayout::Center6, &noise);
        let c = mahalanobis_cost(std::slice::from_ref(&s), &[Detection::label(b)], &noise).unwrap();
        assert_eq!(c.get(0, 0), 0.0);
        assert_eq!(c.kind, CostKind::Mahalanobis);
        // P0 = 1 on positions, R = 0.01 -> S = 1.01 I
        let far = b.with_center([4.0, 2.0, 0.0]).unwrap();
        let c = mahalanobis_cost(&[s], &[Detection::label(far)], &noise).unwrap();
        assert!((c.get(0, 0) - 3.0 / 1.01f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn iou_cost_examples() {
        let a = OrientedBox3D::new(0.0, 0.0, 0.0, 2.0, 2.0, 1.0, 0.0).unwrap();
        let b = OrientedBox3D::new(1.0, 0.0, 0.0, 2.0, 2.0, 1.0, 0.0).unwrap();
        let far = OrientedBox3D::new(9.0, 0.0, 0.0, 2.0, 2.0, 1.0, 0.0).unwrap();
        let dets = [Detection::label(a), Detection::label(far), Detection::label(b)];
        let c = iou_cost(&[a], &dets, 0.01);
        assert_eq!(c.get(0, 0), 0.0);
        assert!(!c.is_feasible(0, 1));
        assert!((c.get(0, 2) - 2.0 / 3.0).abs() < 1e-12);
    }

    fn gate_fixture() -> (Vec<OrientedBox3D>, Vec<Detection>) {
        let t = OrientedBox3D::new(0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0).unwrap();
        let t2 = OrientedBox3D::new(5.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0).unwrap();
        // IoU of t and d_sliver = 0.01 * 1 / (2 - 0.01) ~ 0.005
        let d_sliver = OrientedBox3D::new(0.99, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0).unwrap();
        (vec![t, t2], vec![Detection::label(t), Detection::label(d_sliver)])
    }

    #[test]
    fn gate_keeps_good_matches() {
        let (tb, dets) = gate_fixture();
        let cfg = TrackerConfig::default_for(TrackerVariant::Ab3dmotStyle);
        let a = Assignment::from_matches(
            2,
            2,
            vec![Match {
                track: 0,
                detection: 0,
                cost: 0.5,
            }],
        );
        assert_eq!(gate(&a, &tb, &dets, &cfg), a);
    }

    #[test]
    fn gate_demotes_far_mahalanobis() {
        let (tb, dets) = gate_fixture();
        let cfg = TrackerConfig::default_for(TrackerVariant::Ab3dmotStyle);
        let a = Assignment::from_matches(
            2,
            2,
            vec![Match {
                track: 0,
                detection: 0,
                cost: 12.0,
            }],
        );
        let g = gate(&a, &tb, &dets, &cfg);
        assert!(g.matches.is_empty());
        assert_eq!(g.unmatched_tracks, vec![0, 1]);
        assert_eq!(g.unmatched_detections, vec![0, 1]);
    }

    #[test]
    fn gate_vetoes_sliver_overlap() {
        let (tb, dets) = gate_fixture();
        let iou = rotated_bev_iou(&tb[0], &dets[1].bbox);
        assert!(iou > 0.004 && iou < 0.006, "{iou}");
        let cfg = TrackerConfig::default_for(TrackerVariant::Ab3dmotStyle);
        let a = Assignment::from_matches(
            2,
            2,
            vec![Match {
                track: 0,
                detection: 1,
                cost: 0.1,
            }],
        );
        assert!(gate(&a, &tb, &dets, &cfg).matches.is_empty());
        let st = TrackerConfig::default_for(TrackerVariant::SimpleTrackStyle);
        assert!(gate(&a, &tb, &dets, &st).matches.is_empty());
    }

    fn arb_matrix(max: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
        (1..=max, 1..=max)
            .prop_flat_map(|(r, c)| proptest::collection::vec(proptest::collection::vec(0.0f64..10.0, c), r))
    }

    fn unit_box(x: f64) -> OrientedBox3D {
        OrientedBox3D::new(x, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0).unwrap()
    }

    #[test]
    fn pre_gate_marks_rejected_pairs() {
        let tb = [unit_box(0.0), unit_box(5.0)];
        let dets = [Detection::label(unit_box(0.1))];
        let c = CostMatrix::from_rows(&[vec![1.0], vec![1.0]]);
        let cfg = TrackerConfig::default_for(TrackerVariant::Ab3dmotStyle);
        let g = pre_gate(&c, &tb, &dets, &cfg);
        assert_eq!(g.get(0, 0), 1.0);
        assert!(!g.is_feasible(1, 0));

        let over = CostMatrix::from_rows(&[vec![cfg.mahalanobis_gate + 0.1], vec![1.0]]);
        assert!(!pre_gate(&over, &tb, &dets, &cfg).is_feasible(0, 0));
    }

    #[test]
    fn pre_gate_stops_vetoed_steal() {
        // Track 1 is far away but cheaper (wide covariance); IoU vetoes it.
        let tb = [unit_box(0.0), unit_box(5.0)];
        let dets = [Detection::label(unit_box(0.1))];
        let c = CostMatrix::from_rows(&[vec![2.0], vec![1.0]]);
        let cfg = TrackerConfig::default_for(TrackerVariant::Ab3dmotStyle);

        let post_only = gate(&hungarian_solve(&c), &tb, &dets, &cfg);
        assert!(post_only.matches.is_empty());

        let both = gate(&hungarian_solve(&pre_gate(&c, &tb, &dets, &cfg)), &tb, &dets, &cfg);
        assert_eq!(both.matches.len(), 1);
        assert_eq!((both.matches[0].track, both.matches[0].detection), (0, 0));
    }

    proptest! {
        #[test]
        fn matches_exhaustive_optimum(m in arb_matrix(5)) {
            let a = hungarian_solve(&CostMatrix::from_rows(&m));
            let (best, best_pairs) = exhaustive(&m);
            prop_assert_eq!(a.total_cost(), best);
            prop_assert_eq!(pairs(&a), best_pairs);
        }

        #[test]
        fn permutation_equivariant(m in arb_matrix(5), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let (r, c) = (m.len(), m[0].len());
            let mut rp: Vec<usize> = (0..r).collect();
            let mut cp: Vec<usize> = (0..c).collect();
            rp.shuffle(&mut rng);
            cp.shuffle(&mut rng);
            let permuted: Vec<Vec<f64>> = (0..r).map(|i| (0..c).map(|j| m[rp[i]][cp[j]]).collect()).collect();
            let a = hungarian_solve(&CostMatrix::from_rows(&m));
            let b = hungarian_solve(&CostMatrix::from_rows(&permuted));
            prop_assert!((a.total_cost() - b.total_cost()).abs() < 1e-9);
            let mut mapped: Vec<(usize, usize)> = b.matches.iter().map(|x| (rp[x.track], cp[x.detection])).collect();
            mapped.sort_unstable();
            prop_assert_eq!(mapped, pairs(&a));
        }

        #[test]
        fn row_shift_invariant(m in arb_matrix(5), row in 0usize..5, shift in -5.0f64..5.0) {
            let row = row % m.len();
            let mut shifted = m.clone();
            for v in &mut shifted[row] {
                *v += shift;
            }
            let a = hungarian_solve(&CostMatrix::from_rows(&m));
            let b = hungarian_solve(&CostMatrix::from_rows(&shifted));
            // a wide matrix always matches every row, so the optimum is unchanged
            if m.len() <= m[0].len() {
                prop_assert_eq!(pairs(&a), pairs(&b));
            }
        }

        #[test]
        fn partition_is_valid(m in arb_matrix(6), holes in proptest::collection::vec(any::<bool>(), 36)) {
            let c = CostMatrix::from_fn(m.len(), m[0].len(), CostKind::Custom, |i, j| {
                if holes[i * 6 + j] { INFEASIBLE } else { m[i][j] }
            });
            let a = hungarian_solve(&c);
            let mut rows: Vec<usize> = a.matches.iter().map(|x| x.track).chain(a.unmatched_tracks.iter().cloned()).collect();
            let mut cols: Vec<usize> = a.matches.iter().map(|x| x.detection).chain(a.unmatched_detections.iter().cloned()).collect();
            rows.sort_unstable();
            cols.sort_unstable();
            prop_assert_eq!(rows, (0..c.rows()).collect::<Vec<_>>());
            prop_assert_eq!(cols, (0..c.cols()).collect::<Vec<_>>());
            for x in &a.matches {
                prop_assert!(c.is_feasible(x.track, x.detection));
            }
        }

        #[test]
        fn gate_only_removes(costs in proptest::collection::vec(0.0f64..20.0, 2),
                             offs in proptest::collection::vec(0.0f64..1.5, 2)) {
            let tb: Vec<OrientedBox3D> = (0..2).map(|i| OrientedBox3D::new(3.0 * i as f64, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0).unwrap()).collect();
            let dets: Vec<Detection> = (0..2).map(|i| Detection::label(OrientedBox3D::new(3.0 * i as f64 + offs[i], 0.0, 0.0, 1.0, 1.0, 1.0, 0.0).unwrap())).collect();
            let a = Assignment::from_matches(2, 2, (0..2).map(|i| Match { track: i, detection: i, cost: costs[i] }).collect());
            for variant in TrackerVariant::ALL {
                let g = gate(&a, &tb, &dets, &TrackerConfig::default_for(variant));
                for m in &g.matches {
                    prop_assert!(a.matches.contains(m));
                }
                prop_assert_eq!(g.matches.len() + g.unmatched_tracks.len(), 2);
                prop_assert_eq!(g.matches.len() + g.unmatched_detections.len(), 2);
            }
        }
    }
}
