//! Boundary and segment metrics.
//!
//! Boundary scoring: a detection matches a ground-truth boundary when their
//! distance divided by the video length is at most the threshold, under a
//! one-to-one matching of maximum cardinality. Among maximum matchings the
//! one with the smallest total distance is chosen, then the one using the
//! earliest detections, then the earliest ground-truth boundaries.
//!
//! Segment scoring: per video, predicted and ground-truth segments are paired
//! by a Hungarian assignment maximizing total frame overlap, then MoF and IoU
//! are computed over the ground-truth segments.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::data::Annotation;
use crate::detect::BoundarySet;
use crate::error::{Error, Result};

/// `|det − gt| / num_frames`.
pub fn rel_dis(det: usize, gt: usize, num_frames: usize) -> f64 {
    det.abs_diff(gt) as f64 / num_frames as f64
}

/// The standard threshold grid `0.05, 0.10, …, 0.50`.
pub fn default_thresholds() -> Vec<f64> {
    (1..=10).map(|k| k as f64 / 20.0).collect()
}

/// One-to-one pairing; indices refer to positions in the two input lists.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MatchResult {
    pub pairs: Vec<(usize, usize)>,
    pub unmatched_det: Vec<usize>,
    pub unmatched_gt: Vec<usize>,
}

impl MatchResult {
    fn from_pairs(mut pairs: Vec<(usize, usize)>, n_det: usize, n_gt: usize) -> Self {
        pairs.sort_unstable();
        let mut det_used = vec![false; n_det];
        let mut gt_used = vec![false; n_gt];
        for &(d, g) in &pairs {
            det_used[d] = true;
            gt_used[g] = true;
        }
        MatchResult {
            pairs,
            unmatched_det: (0..n_det).filter(|&i| !det_used[i]).collect(),
            unmatched_gt: (0..n_gt).filter(|&j| !gt_used[j]).collect(),
        }
    }

    pub fn true_positives(&self) -> usize {
        self.pairs.len()
    }
}

/// Minimum-cost assignment of every row of a `rows × cols` matrix to a
/// distinct column, `rows <= cols` (shortest augmenting path with
/// potentials, O(rows²·cols)).
fn assign_rows(cost: &[Vec<i128>], cols: usize) -> Vec<usize> {
    let n = cost.len();
    let m = cols;
    debug_assert!(n <= m);
    let inf = i128::MAX / 4;
    let mut u = vec![0i128; n + 1];
    let mut v = vec![0i128; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![0usize; n];
    for j in 1..=m {
        if p[j] != 0 {
            out[p[j] - 1] = j - 1;
        }
    }
    out
}

/// Minimum-cost one-to-one assignment for a rectangular matrix; returns
/// `min(rows, cols)` `(row, col)` pairs.
pub fn min_cost_assignment(cost: &[Vec<i128>], rows: usize, cols: usize) -> Vec<(usize, usize)> {
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    if rows <= cols {
        assign_rows(cost, cols)
            .into_iter()
            .enumerate()
            .collect()
    } else {
        let t: Vec<Vec<i128>> = (0..cols)
            .map(|j| (0..rows).map(|i| cost[i][j]).collect())
            .collect();
        assign_rows(&t, rows)
            .into_iter()
            .enumerate()
            .map(|(j, i)| (i, j))
            .collect()
    }
}

/// Maximum-cardinality one-to-one matching of detections to ground truth
/// among pairs with `rel_dis <= threshold`.
pub fn match_boundaries(det: &BoundarySet, gt: &BoundarySet, threshold: f64) -> Result<MatchResult> {
    if det.num_frames != gt.num_frames || det.num_frames == 0 {
        return Err(Error::InvalidInput(format!(
            "{}: detection length {} vs annotation length {}",
            gt.video_id, det.num_frames, gt.num_frames
        )));
    }
    let (n, m) = (det.len(), gt.len());
    let f = det.num_frames;
    let allowed = |i: usize, j: usize| rel_dis(det.frames[i], gt.frames[j], f) <= threshold;

    // Lexicographic key (distance, det index, gt index) folded into one
    // integer; each weight exceeds the largest possible sum of the terms below.
    let k = n.min(m) as i128;
    let w_gt = 1i128;
    let w_det = k * m as i128 + 1;
    let w_dist = k * (n as i128 * w_det + m as i128) + 1;
    let max_allowed = f as i128 * w_dist + n as i128 * w_det + m as i128;
    let forbidden = k * max_allowed + 1;

    let cost: Vec<Vec<i128>> = (0..n)
        .map(|i| {
            (0..m)
                .map(|j| {
                    if allowed(i, j) {
                        det.frames[i].abs_diff(gt.frames[j]) as i128 * w_dist
                            + i as i128 * w_det
                            + j as i128 * w_gt
                    } else {
                        forbidden
                    }
                })
                .collect()
        })
        .collect();
    let pairs = min_cost_assignment(&cost, n, m)
        .into_iter()
        .filter(|&(i, j)| allowed(i, j))
        .collect();
    Ok(MatchResult::from_pairs(pairs, n, m))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Precision, recall and `F1 = 2PR/(P+R)` (0 when `P + R = 0`). With nothing
/// detected the precision is 0 unless there was also nothing to find; the
/// same convention applies symmetrically to recall.
pub fn precision_recall_f1(tp: usize, n_det: usize, n_gt: usize) -> Prf {
    let precision = if n_det > 0 {
        tp as f64 / n_det as f64
    } else if n_gt == 0 {
        1.0
    } else {
        0.0
    };
    let recall = if n_gt > 0 {
        tp as f64 / n_gt as f64
    } else if n_det == 0 {
        1.0
    } else {
        0.0
    };
    Prf {
        precision,
        recall,
        f1: f1_score(precision, recall),
    }
}

pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Half-open frame intervals covering `[0, num_frames)` without gaps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentSet {
    pub num_frames: usize,
    pub segments: Vec<(usize, usize)>,
}

impl SegmentSet {
    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }
}

fn overlap(a: (usize, usize), b: (usize, usize)) -> usize {
    a.1.min(b.1).saturating_sub(a.0.max(b.0))
}

fn seg_len(s: (usize, usize)) -> usize {
    s.1 - s.0
}

/// `{b₁ … bₙ}` over `F` frames becomes `[0,b₁), [b₁,b₂), …, [bₙ,F)`.
/// A boundary at frame 0 would open an empty segment and is ignored.
pub fn boundaries_to_segments(b: &BoundarySet) -> SegmentSet {
    let mut segments = Vec::with_capacity(b.len() + 1);
    let mut start = 0;
    for &f in &b.frames {
        if f > start {
            segments.push((start, f));
            start = f;
        }
    }
    if b.num_frames > start {
        segments.push((start, b.num_frames));
    }
    SegmentSet {
        num_frames: b.num_frames,
        segments,
    }
}

/// Pairs of `(pred index, gt index)` maximizing the total overlap. Pairs with
/// no overlap are left unmatched.
pub fn hungarian_match(pred: &SegmentSet, gt: &SegmentSet) -> Result<MatchResult> {
    if pred.num_frames != gt.num_frames {
        return Err(Error::InvalidInput(format!(
            "segment sets cover {} and {} frames",
            pred.num_frames, gt.num_frames
        )));
    }
    let (n, m) = (pred.len(), gt.len());
    let cost: Vec<Vec<i128>> = pred
        .segments
        .iter()
        .map(|&p| gt.segments.iter().map(|&g| -(overlap(p, g) as i128)).collect())
        .collect();
    let pairs = min_cost_assignment(&cost, n, m)
        .into_iter()
        .filter(|&(i, j)| cost[i][j] < 0)
        .collect();
    Ok(MatchResult::from_pairs(pairs, n, m))
}

/// Total overlap of a segment matching.
pub fn matched_overlap(pred: &SegmentSet, gt: &SegmentSet, matching: &MatchResult) -> usize {
    matching
        .pairs
        .iter()
        .map(|&(i, j)| overlap(pred.segments[i], gt.segments[j]))
        .sum()
}

/// `MoF = Σ|Y∩Z| / Σ|Z|`, `IoU = (1/U) Σ |Y∩Z| / |Y∪Z|` over the `U`
/// ground-truth segments; unmatched ground truth contributes zero.
pub fn mof_iou(pred: &SegmentSet, gt: &SegmentSet, matching: &MatchResult) -> (f64, f64) {
    let total: usize = gt.segments.iter().map(|&s| seg_len(s)).sum();
    if gt.is_empty() || total == 0 {
        return (0.0, 0.0);
    }
    let mut inter_sum = 0usize;
    let mut iou_sum = 0.0f64;
    for &(i, j) in &matching.pairs {
        let (y, z) = (pred.segments[i], gt.segments[j]);
        let inter = overlap(y, z);
        let union = seg_len(y) + seg_len(z) - inter;
        inter_sum += inter;
        iou_sum += inter as f64 / union as f64;
    }
    (inter_sum as f64 / total as f64, iou_sum / gt.len() as f64)
}

/// Fraction of frames lying within `threshold` (relative distance) of some
/// ground-truth boundary.
pub fn hit_coverage(gt: &BoundarySet, threshold: f64) -> f64 {
    if gt.num_frames == 0 {
        return 0.0;
    }
    let hits = (0..gt.num_frames)
        .filter(|&t| gt.frames.iter().any(|&g| rel_dis(t, g, gt.num_frames) <= threshold))
        .count();
    hits as f64 / gt.num_frames as f64
}

/// Expected true positives of `n_det` detections placed uniformly at random,
/// bounded above by `min(n_det · coverage, n_gt)`: each detection lands in a
/// matchable frame with probability `coverage`, and no more than `n_gt` can
/// be matched.
pub fn random_detector_true_positives(gt: &BoundarySet, n_det: usize, threshold: f64) -> f64 {
    (n_det as f64 * hit_coverage(gt, threshold)).min(gt.len() as f64)
}

/// Mean error at boundary frames and at interior frames, where an interior
/// frame is one whose centered `window` lies inside a single event.
pub fn error_contrast(error: &[f64], boundaries: &[usize], window: usize) -> (f64, f64) {
    let half = window / 2;
    let mean = |v: &[f64]| if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
    let at_boundary: Vec<f64> = boundaries.iter().filter(|&&b| b < error.len()).map(|&b| error[b]).collect();
    let interior: Vec<f64> = (0..error.len())
        .filter(|&t| {
            let start = t.saturating_sub(half);
            let end = start + window - 1;
            !boundaries.iter().any(|&b| start < b && b <= end)
        })
        .map(|t| error[t])
        .collect();
    (mean(&at_boundary), mean(&interior))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ThresholdScore {
    pub threshold: f64,
    pub true_positives: usize,
    pub num_detections: usize,
    pub num_ground_truth: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VideoScore {
    pub video_id: String,
    pub f1: Vec<f64>,
    pub mof: f64,
    pub iou: f64,
}

/// Corpus metrics: boundary counts are pooled across videos per threshold;
/// MoF and IoU are averaged over videos.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricReport {
    pub thresholds: Vec<ThresholdScore>,
    pub avg_precision: f64,
    pub avg_recall: f64,
    pub avg_f1: f64,
    pub mof: f64,
    pub iou: f64,
    pub per_video: Vec<VideoScore>,
}

pub fn evaluate_corpus(detections: &[BoundarySet], annotations: &[Annotation], thresholds: &[f64]) -> Result<MetricReport> {
    if thresholds.is_empty() {
        return Err(Error::Config("at least one threshold is required".into()));
    }
    let by_id: BTreeMap<&str, &Annotation> =
        annotations.iter().map(|a| (a.video_id.as_str(), a)).collect();
    let missing: Vec<&str> = detections
        .iter()
        .filter(|d| !by_id.contains_key(d.video_id.as_str()))
        .map(|d| d.video_id.as_str())
        .collect();
    if !missing.is_empty() {
        return Err(Error::InvalidInput(format!(
            "no annotation for video(s): {}",
            missing.join(", ")
        )));
    }

    let mut counts = vec![(0usize, 0usize, 0usize); thresholds.len()];
    let mut per_video = Vec::with_capacity(detections.len());
    for det in detections {
        let ann = by_id[det.video_id.as_str()];
        ann.validate()?;
        let gt = BoundarySet::new(ann.video_id.clone(), ann.num_frames, ann.boundaries.clone())?;
        let mut f1s = Vec::with_capacity(thresholds.len());
        for (slot, &th) in counts.iter_mut().zip(thresholds) {
            let m = match_boundaries(det, &gt, th)?;
            slot.0 += m.true_positives();
            slot.1 += det.len();
            slot.2 += gt.len();
            f1s.push(precision_recall_f1(m.true_positives(), det.len(), gt.len()).f1);
        }
        let (ps, gs) = (boundaries_to_segments(det), boundaries_to_segments(&gt));
        let matching = hungarian_match(&ps, &gs)?;
        let (mof, iou) = mof_iou(&ps, &gs, &matching);
        per_video.push(VideoScore {
            video_id: det.video_id.clone(),
            f1: f1s,
            mof,
            iou,
        });
    }

    let scores: Vec<ThresholdScore> = thresholds
        .iter()
        .zip(&counts)
        .map(|(&threshold, &(tp, nd, ng))| {
            let prf = precision_recall_f1(tp, nd, ng);
            ThresholdScore {
                threshold,
                true_positives: tp,
                num_detections: nd,
                num_ground_truth: ng,
                precision: prf.precision,
                recall: prf.recall,
                f1: prf.f1,
            }
        })
        .collect();
    let k = scores.len() as f64;
    let nv = per_video.len().max(1) as f64;
    Ok(MetricReport {
        avg_precision: scores.iter().map(|s| s.precision).sum::<f64>() / k,
        avg_recall: scores.iter().map(|s| s.recall).sum::<f64>() / k,
        avg_f1: scores.iter().map(|s| s.f1).sum::<f64>() / k,
        mof: per_video.iter().map(|v| v.mof).sum::<f64>() / nv,
        iou: per_video.iter().map(|v| v.iou).sum::<f64>() / nv,
        thresholds: scores,
        per_video,
    })
}
