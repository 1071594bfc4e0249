//! Table and record rendering for evaluation and benchmark results.
//!
//! Records are one line per result row, `key=value` pairs separated by
//! spaces, so they can be split with standard tools.

use std::fmt::Write as _;

use perstrack_core::eval::{CurvePoint, DetectionMetricsRow, LatencyReport, MotMetrics};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Table,
    Records,
}

pub fn detection_rows(rows: &[DetectionMetricsRow], format: Format) -> String {
    let mut out = String::new();
    match format {
        Format::Table => {
            let _ = writeln!(
                out,
                "{:>7} {:>9} {:>7} {:>7} {:>7} {:>7} {:>6} {:>6} {:>6}",
                "r (m)", "Precision", "Recall", "F1", "AP", "mIoU", "TP", "FP", "FN"
            );
            for r in rows {
                let _ = writeln!(
                    out,
                    "{:>7.1} {:>9.3} {:>7.3} {:>7.3} {:>7.3} {:>7.3} {:>6} {:>6} {:>6}",
                    r.radius, r.precision, r.recall, r.f1, r.ap, r.miou, r.tp, r.fp, r.fn_
                );
            }
        }
        Format::Records => {
            for r in rows {
                let _ = writeln!(
                    out,
                    "radius={} precision={:.6} recall={:.6} f1={:.6} ap={:.6} miou={:.6} tp={} fp={} fn={}",
                    r.radius, r.precision, r.recall, r.f1, r.ap, r.miou, r.tp, r.fp, r.fn_
                );
            }
        }
    }
    out
}

pub fn curve_records(radius: f64, points: &[CurvePoint]) -> String {
    let mut out = String::new();
    for p in points {
        let _ = writeln!(
            out,
            "radius={radius} score={:.6} precision={:.6} recall={:.6}",
            p.score, p.precision, p.recall
        );
    }
    out
}

pub fn mot_blocks(blocks: &[MotMetrics], format: Format) -> String {
    let mut out = String::new();
    for (i, m) in blocks.iter().enumerate() {
        match format {
            Format::Table => {
                if i > 0 {
                    out.push('\n');
                }
                let _ = writeln!(out, "IoU = {}", m.iou_threshold);
                let _ = writeln!(out, "  MOTA  {:>8.3}", m.mota);
                let _ = writeln!(out, "  IDF1  {:>8.3}", m.idf1);
                let _ = writeln!(out, "  MOTP  {:>8.3}", m.motp);
                let _ = writeln!(out, "  FP    {:>8}", m.fp);
                let _ = writeln!(out, "  FN    {:>8}", m.fn_);
                let _ = writeln!(out, "  IDSW  {:>8}", m.idsw);
                let _ = writeln!(out, "  GT    {:>8}", m.gt_count);
            }
            Format::Records => {
                let _ = writeln!(
                    out,
                    "iou={} mota={:.6} idf1={:.6} motp={:.6} fp={} fn={} idsw={} gt={} matches={}",
                    m.iou_threshold, m.mota, m.idf1, m.motp, m.fp, m.fn_, m.idsw, m.gt_count, m.matches
                );
            }
        }
    }
    out
}

/// Latency reports side by side, one column per labelled run.
pub fn latency(reports: &[(String, LatencyReport)], format: Format) -> String {
    let mut out = String::new();
    match format {
        Format::Table => {
            let _ = write!(out, "{:<10}", "");
            for (name, _) in reports {
                let _ = write!(out, " {name:>12}");
            }
            out.push('\n');
            let cell = |row: usize, r: &LatencyReport| match row {
                0 => format!("{:.3}", r.p50_ms),
                1 => format!("{:.3}", r.p90_ms),
                _ => r.sample_count.to_string(),
            };
            for (row, label) in ["p50 (ms)", "p90 (ms)", "samples"].into_iter().enumerate() {
                let _ = write!(out, "{label:<10}");
                for (_, r) in reports {
                    let _ = write!(out, " {:>12}", cell(row, r));
                }
                out.push('\n');
            }
        }
        Format::Records => {
            for (name, r) in reports {
                let _ = writeln!(
                    out,
                    "variant={name} p50_ms={:.6} p90_ms={:.6} samples={}",
                    r.p50_ms, r.p90_ms, r.sample_count
                );
            }
        }
    }
    out
}
