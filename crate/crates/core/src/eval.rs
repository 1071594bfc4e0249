//! Detection and tracking metrics.
//!
//! Detection quality is scored per cumulative horizontal radius with greedy
//! score-ordered matching at a rotated BEV IoU threshold. Tracking quality is
//! scored with CLEAR-MOT (MOTA, with MOTP reported as mean matched IoU) and
//! IDF1.

use std::collections::{BTreeMap, BTreeSet};

use crate::association::{hungarian_solve, CostKind, CostMatrix, INFEASIBLE};
use crate::config::EvalConfig;
use crate::error::{Error, Result};
use crate::geometry::{horizontal_radius, rotated_bev_iou, score_order};
use crate::model::{Detection, OrientedBox3D, SequenceClip, TrackId};
use crate::tracker::TrackOutput;

/// Result of matching one frame's predictions to its ground truth.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrameMatching {
    /// `(prediction index, gt index, IoU)` in the order they were made.
    pub matches: Vec<(usize, usize, f64)>,
    pub unmatched_predictions: Vec<usize>,
    pub unmatched_gts: Vec<usize>,
}

/// Greedy one-to-one matching: predictions in descending score order each
/// take the unmatched ground truth of highest IoU, provided IoU >= `iou_min`.
pub fn match_detections(preds: &[Detection], gts: &[OrientedBox3D], iou_min: f64) -> FrameMatching {
    let mut gt_taken = vec![false; gts.len()];
    let mut out = FrameMatching::default();
    for i in score_order(preds.iter().map(Detection::score)) {
        let mut best: Option<(usize, f64)> = None;
        for (g, gt) in gts.iter().enumerate() {
            if gt_taken[g] {
                continue;
            }
            let iou = rotated_bev_iou(&preds[i].bbox, gt);
            if iou > 0.0 && iou >= iou_min && best.is_none_or(|(_, b)| iou > b) {
                best = Some((g, iou));
            }
        }
        match best {
            Some((g, iou)) => {
                gt_taken[g] = true;
                out.matches.push((i, g, iou));
            }
            None => out.unmatched_predictions.push(i),
        }
    }
    out.unmatched_predictions.sort_unstable();
    out.unmatched_gts = (0..gts.len()).filter(|&g| !gt_taken[g]).collect();
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub score: f64,
    pub precision: f64,
    pub recall: f64,
}

/// Precision/recall after each prediction, in descending score order.
pub fn precision_recall_curve(scored_flags: &[(f64, bool)], gt_count: usize) -> Vec<CurvePoint> {
    let mut tp = 0usize;
    score_order(scored_flags.iter().map(|s| s.0))
        .into_iter()
        .enumerate()
        .map(|(k, i)| {
            let (score, is_tp) = scored_flags[i];
            tp += usize::from(is_tp);
            CurvePoint {
                score,
                precision: tp as f64 / (k + 1) as f64,
                recall: if gt_count == 0 {
                    0.0
                } else {
                    tp as f64 / gt_count as f64
                },
            }
        })
        .collect()
}

/// All-point interpolated average precision: the area under the monotone
/// precision envelope of the ranked precision/recall curve.
///
/// With no ground truth, AP is 1.0 if there are also no predictions and 0.0
/// otherwise.
pub fn average_precision(scored_flags: &[(f64, bool)], gt_count: usize) -> f64 {
    if gt_count == 0 {
        return if scored_flags.is_empty() { 1.0 } else { 0.0 };
    }
    let curve = precision_recall_curve(scored_flags, gt_count);
    let mut envelope: Vec<f64> = curve.iter().map(|p| p.precision).collect();
    for k in (0..envelope.len().saturating_sub(1)).rev() {
        envelope[k] = envelope[k].max(envelope[k + 1]);
    }
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    for (p, env) in curve.iter().zip(&envelope) {
        ap += (p.recall - prev_recall) * env;
        prev_recall = p.recall;
    }
    ap
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionMetricsRow {
    pub radius: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub ap: f64,
    /// Mean IoU over true positives (0 when there are none).
    pub miou: f64,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl DetectionMetricsRow {
    pub fn gt_count(&self) -> usize {
        self.tp + self.fn_
    }
}

/// Pooled matching statistics inside one radius.
#[derive(Debug, Clone, Default)]
pub struct SliceStats {
    pub radius: f64,
    pub scored_flags: Vec<(f64, bool)>,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub iou_sum: f64,
}

impl SliceStats {
    pub fn to_row(&self) -> DetectionMetricsRow {
        let (tp, fp, fn_) = (self.tp, self.fp, self.fn_);
        let gt = tp + fn_;
        let predicted = tp + fp;
        // An empty slice (no predictions, no GT) is vacuously perfect.
        let precision = if predicted > 0 {
            tp as f64 / predicted as f64
        } else if gt == 0 {
            1.0
        } else {
            0.0
        };
        let recall = if gt > 0 {
            tp as f64 / gt as f64
        } else if predicted == 0 {
            1.0
        } else {
            0.0
        };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        DetectionMetricsRow {
            radius: self.radius,
            precision,
            recall,
            f1,
            ap: average_precision(&self.scored_flags, gt),
            miou: if tp > 0 { self.iou_sum / tp as f64 } else { 0.0 },
            tp,
            fp,
            fn_,
        }
    }
}

/// Per-radius matching statistics; predictions and ground truth are each kept
/// in a slice by their own centre radius.
pub fn slice_stats(preds: &SequenceClip, gts: &SequenceClip, cfg: &EvalConfig) -> Result<Vec<SliceStats>> {
    cfg.validate()?;
    if preds.frames.len() != gts.frames.len() {
        return Err(Error::FrameMismatch(format!(
            "{} prediction frames vs {} ground-truth frames",
            preds.frames.len(),
            gts.frames.len()
        )));
    }
    for (p, g) in preds.frames.iter().zip(&gts.frames) {
        if p.frame_index != g.frame_index {
            return Err(Error::FrameMismatch(format!(
                "prediction frame {} aligned with ground-truth frame {}",
                p.frame_index, g.frame_index
            )));
        }
    }
    let mut out = Vec::with_capacity(cfg.radii.len());
    for &radius in &cfg.radii {
        let mut s = SliceStats {
            radius,
            ..SliceStats::default()
        };
        for (pf, gf) in preds.frames.iter().zip(&gts.frames) {
            let p: Vec<Detection> = pf
                .detections
                .iter()
                .filter(|d| horizontal_radius(&d.bbox) <= radius)
                .copied()
                .collect();
            let g: Vec<OrientedBox3D> = gf
                .detections
                .iter()
                .map(|d| d.bbox)
                .filter(|b| horizontal_radius(b) <= radius)
                .collect();
            let m = match_detections(&p, &g, cfg.tp_iou_min);
            s.tp += m.matches.len();
            s.fp += m.unmatched_predictions.len();
            s.fn_ += m.unmatched_gts.len();
            s.iou_sum += m.matches.iter().map(|x| x.2).sum::<f64>();
            let mut is_tp = vec![false; p.len()];
            for &(i, _, _) in &m.matches {
                is_tp[i] = true;
            }
            s.scored_flags.extend(p.iter().zip(is_tp).map(|(d, t)| (d.score(), t)));
        }
        out.push(s);
    }
    Ok(out)
}

/// Distance-sliced detection metrics, one row per radius in `cfg.radii`.
pub fn detection_metrics_sliced(
    preds: &SequenceClip,
    gts: &SequenceClip,
    cfg: &EvalConfig,
) -> Result<Vec<DetectionMetricsRow>> {
    Ok(slice_stats(preds, gts, cfg)?.iter().map(SliceStats::to_row).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotMetrics {
    pub iou_threshold: f64,
    pub mota: f64,
    /// Mean IoU of matched pairs (higher is better).
    pub motp: f64,
    pub idf1: f64,
    pub fp: usize,
    pub fn_: usize,
    pub idsw: usize,
    pub gt_count: usize,
    pub matches: usize,
}

fn group_by_frame<'a>(
    pred: &'a [TrackOutput],
    gt: &'a [TrackOutput],
) -> BTreeMap<u64, (Vec<&'a TrackOutput>, Vec<&'a TrackOutput>)> {
    let mut frames: BTreeMap<u64, (Vec<&TrackOutput>, Vec<&TrackOutput>)> = BTreeMap::new();
    for p in pred {
        frames.entry(p.frame_index).or_default().0.push(p);
    }
    for g in gt {
        frames.entry(g.frame_index).or_default().1.push(g);
    }
    frames
}

/// CLEAR-MOT metrics (plus IDF1) at one IoU threshold.
///
/// Per frame, correspondences from each GT's most recent match are kept while
/// still valid; the rest are matched by Hungarian assignment on IoU. A GT
/// whose new partner differs from its most recent one counts as an ID switch.
/// With no ground truth at all, MOTA is 1.0 when there are no false
/// positives and 0.0 otherwise.
pub fn clear_mot(pred: &[TrackOutput], gt: &[TrackOutput], iou_threshold: f64) -> MotMetrics {
    let mut last_match: BTreeMap<TrackId, TrackId> = BTreeMap::new();
    let (mut fp, mut fn_, mut idsw, mut gt_count, mut matches) = (0usize, 0usize, 0usize, 0usize, 0usize);
    let mut iou_sum = 0.0;

    for (preds, gts) in group_by_frame(pred, gt).values() {
        gt_count += gts.len();
        let iou: Vec<Vec<f64>> = gts
            .iter()
            .map(|g| preds.iter().map(|p| rotated_bev_iou(&g.bbox, &p.bbox)).collect())
            .collect();
        let valid = |g: usize, p: usize| iou[g][p] > 0.0 && iou[g][p] >= iou_threshold;
        let mut gt_done = vec![false; gts.len()];
        let mut pred_done = vec![false; preds.len()];

        for (g, gt_box) in gts.iter().enumerate() {
            let Some(prev) = last_match.get(&gt_box.track_id) else {
                continue;
            };
            if let Some(p) = (0..preds.len()).find(|&p| preds[p].track_id == *prev && !pred_done[p]) {
                if valid(g, p) {
                    gt_done[g] = true;
                    pred_done[p] = true;
                    matches += 1;
                    iou_sum += iou[g][p];
                }
            }
        }

        let free_g: Vec<usize> = (0..gts.len()).filter(|&g| !gt_done[g]).collect();
        let free_p: Vec<usize> = (0..preds.len()).filter(|&p| !pred_done[p]).collect();
        let costs = CostMatrix::from_fn(free_g.len(), free_p.len(), CostKind::OneMinusIou, |a, b| {
            let (g, p) = (free_g[a], free_p[b]);
            if valid(g, p) {
                1.0 - iou[g][p]
            } else {
                INFEASIBLE
            }
        });
        let assignment = hungarian_solve(&costs);
        for m in &assignment.matches {
            let (g, p) = (free_g[m.track], free_p[m.detection]);
            let (gid, pid) = (gts[g].track_id, preds[p].track_id);
            if last_match.get(&gid).is_some_and(|prev| *prev != pid) {
                idsw += 1;
            }
            last_match.insert(gid, pid);
            matches += 1;
            iou_sum += iou[g][p];
        }
        fp += assignment.unmatched_detections.len();
        fn_ += assignment.unmatched_tracks.len();
    }

    let mota = if gt_count > 0 {
        1.0 - (fn_ + fp + idsw) as f64 / gt_count as f64
    } else if fp == 0 {
        1.0
    } else {
        0.0
    };
    MotMetrics {
        iou_threshold,
        mota,
        motp: if matches > 0 { iou_sum / matches as f64 } else { 0.0 },
        idf1: idf1(pred, gt, iou_threshold),
        fp,
        fn_,
        idsw,
        gt_count,
        matches,
    }
}

/// Identification F1.
///
/// GT and predicted identities are paired by a global assignment maximising
/// the number of co-occurring frames with IoU >= `iou_threshold`; IDF1 is
/// `2·IDTP / (2·IDTP + IDFP + IDFN)`. Two empty inputs score 1.0.
pub fn idf1(pred: &[TrackOutput], gt: &[TrackOutput], iou_threshold: f64) -> f64 {
    let gt_ids: Vec<TrackId> = gt
        .iter()
        .map(|o| o.track_id)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let pred_ids: Vec<TrackId> = pred
        .iter()
        .map(|o| o.track_id)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let gt_index: BTreeMap<TrackId, usize> = gt_ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
    let pred_index: BTreeMap<TrackId, usize> = pred_ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();

    let mut overlap = vec![vec![0usize; pred_ids.len()]; gt_ids.len()];
    for (preds, gts) in group_by_frame(pred, gt).values() {
        for g in gts {
            for p in preds {
                let iou = rotated_bev_iou(&g.bbox, &p.bbox);
                if iou > 0.0 && iou >= iou_threshold {
                    overlap[gt_index[&g.track_id]][pred_index[&p.track_id]] += 1;
                }
            }
        }
    }
    let costs = CostMatrix::from_fn(gt_ids.len(), pred_ids.len(), CostKind::Custom, |g, p| {
        -(overlap[g][p] as f64)
    });
    let idtp: usize = hungarian_solve(&costs)
        .matches
        .iter()
        .map(|m| overlap[m.track][m.detection])
        .sum();
    let idfp = pred.len() - idtp.min(pred.len());
    let idfn = gt.len() - idtp.min(gt.len());
    let denom = 2 * idtp + idfp + idfn;
    if denom == 0 {
        1.0
    } else {
        2.0 * idtp as f64 / denom as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyReport {
    pub p50_ms: f64,
    pub p90_ms: f64,
    pub sample_count: usize,
}

/// Nearest-rank percentile (`percent` in 1..=100) of ascending samples:
/// the element at 1-based rank `⌈percent·n/100⌉`.
pub fn nearest_rank(sorted: &[f64], percent: usize) -> f64 {
    let n = sorted.len();
    let rank = (percent * n).div_ceil(100).clamp(1, n);
    sorted[rank - 1]
}

pub fn latency_percentiles(samples_ms: &[f64]) -> Result<LatencyReport> {
    if samples_ms.is_empty() {
        return Err(Error::EmptySamples);
    }
    if let Some(bad) = samples_ms.iter().find(|s| !s.is_finite()) {
        return Err(Error::NonFinite {
            what: "latency sample",
            value: *bad,
        });
    }
    let mut sorted = samples_ms.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(LatencyReport {
        p50_ms: nearest_rank(&sorted, 50),
        p90_ms: nearest_rank(&sorted, 90),
        sample_count: sorted.len(),
    })
}
