use std::fmt::Write;

use coseg_core::eval::MetricReport;

pub fn to_json(report: &MetricReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

/// Aligned plain-text table of per-threshold scores followed by the averages.
pub fn to_table(report: &MetricReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:>9}  {:>9}  {:>9}  {:>9}  {:>6}  {:>6}  {:>6}",
        "threshold", "precision", "recall", "f1", "tp", "det", "gt"
    );
    for t in &report.thresholds {
        let _ = writeln!(
            s,
            "{:>9.2}  {:>9.4}  {:>9.4}  {:>9.4}  {:>6}  {:>6}  {:>6}",
            t.threshold, t.precision, t.recall, t.f1, t.true_positives, t.num_detections, t.num_ground_truth
        );
    }
    let _ = writeln!(
        s,
        "{:>9}  {:>9.4}  {:>9.4}  {:>9.4}",
        "avg", report.avg_precision, report.avg_recall, report.avg_f1
    );
    let _ = writeln!(
        s,
        "MoF {:.4}  IoU {:.4}  over {} videos",
        report.mof,
        report.iou,
        report.per_video.len()
    );
    s
}
