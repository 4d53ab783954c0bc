//! Exhaustive-search references for boundary and segment matching.

use coseg_core::detect::BoundarySet;
use coseg_core::eval::{boundaries_to_segments, default_thresholds, hungarian_match, match_boundaries, matched_overlap, mof_iou, rel_dis, SegmentSet};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn bs(frames: &[usize], n: usize) -> BoundarySet {
    BoundarySet::new("v", n, frames.to_vec()).unwrap()
}

pub fn random_set(rng: &mut ChaCha8Rng, n: usize, max: usize) -> BoundarySet {
    let k = rng.random_range(0..=max.min(n - 1));
    let mut f = sample(rng, n - 1, k).into_vec();
    f.iter_mut().for_each(|x| *x += 1);
    f.sort_unstable();
    bs(&f, n)
}

/// (−cardinality, Σ distance, Σ det index, Σ gt index); smaller is better.
pub type Key = (isize, usize, usize, usize);

pub fn key(det: &BoundarySet, gt: &BoundarySet, pairs: &[(usize, usize)]) -> Key {
    (
        -(pairs.len() as isize),
        pairs.iter().map(|&(i, j)| det.frames[i].abs_diff(gt.frames[j])).sum(),
        pairs.iter().map(|&(i, _)| i).sum(),
        pairs.iter().map(|&(_, j)| j).sum(),
    )
}

pub fn brute_boundaries(det: &BoundarySet, gt: &BoundarySet, th: f64) -> Key {
    fn go(i: usize, det: &BoundarySet, gt: &BoundarySet, th: f64, used: &mut Vec<bool>, cur: &mut Vec<(usize, usize)>, best: &mut Option<Key>) {
        if i == det.len() {
            let k = key(det, gt, cur);
            if best.is_none_or(|b| k < b) {
                *best = Some(k);
            }
            return;
        }
        go(i + 1, det, gt, th, used, cur, best);
        for j in 0..gt.len() {
            if !used[j] && rel_dis(det.frames[i], gt.frames[j], det.num_frames) <= th {
                used[j] = true;
                cur.push((i, j));
                go(i + 1, det, gt, th, used, cur, best);
                cur.pop();
                used[j] = false;
            }
        }
    }
    let mut best = None;
    go(0, det, gt, th, &mut vec![false; gt.len()], &mut Vec::new(), &mut best);
    best.unwrap()
}

pub fn overlap(a: (usize, usize), b: (usize, usize)) -> usize {
    a.1.min(b.1).saturating_sub(a.0.max(b.0))
}

pub fn brute_segments(pred: &SegmentSet, gt: &SegmentSet) -> usize {
    fn go(i: usize, pred: &SegmentSet, gt: &SegmentSet, used: &mut Vec<bool>) -> usize {
        if i == pred.len() {
            return 0;
        }
        let mut best = go(i + 1, pred, gt, used);
        for j in 0..gt.len() {
            if !used[j] {
                used[j] = true;
                best = best.max(overlap(pred.segments[i], gt.segments[j]) + go(i + 1, pred, gt, used));
                used[j] = false;
            }
        }
        best
    }
    go(0, pred, gt, &mut vec![false; gt.len()])
}

/// Cases (out of `cases`) where boundary matching is invalid or loses to
/// exhaustive search on the lexicographic key.
pub fn boundary_mismatches(seed: u64, cases: usize) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = default_thresholds();
    let mut bad = Vec::new();
    for case in 0..cases {
        let n = rng.random_range(8..80);
        let det = random_set(&mut rng, n, 6);
        let gt = random_set(&mut rng, n, 6);
        let th = grid[rng.random_range(0..grid.len())];
        let m = match_boundaries(&det, &gt, th).unwrap();
        let within = m.pairs.iter().all(|&(i, j)| rel_dis(det.frames[i], gt.frames[j], n) <= th);
        let mut ds: Vec<usize> = m.pairs.iter().map(|p| p.0).collect();
        let mut gs: Vec<usize> = m.pairs.iter().map(|p| p.1).collect();
        ds.sort_unstable();
        ds.dedup();
        gs.sort_unstable();
        gs.dedup();
        let one_to_one = ds.len() == m.pairs.len() && gs.len() == m.pairs.len();
        let complete = m.unmatched_det.len() + m.pairs.len() == det.len() && m.unmatched_gt.len() + m.pairs.len() == gt.len();
        let got = key(&det, &gt, &m.pairs);
        let want = brute_boundaries(&det, &gt, th);
        if !(within && one_to_one && complete && got == want) {
            bad.push(format!("case {case}: key {got:?}, exhaustive {want:?}"));
        }
    }
    bad
}

/// Cases where segment matching's total overlap differs from exhaustive
/// search or MoF/IoU leave [0, 1].
pub fn segment_mismatches(seed: u64, cases: usize) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = Vec::new();
    for case in 0..cases {
        let n = rng.random_range(6..60);
        let pred = boundaries_to_segments(&random_set(&mut rng, n, 5));
        let gt = boundaries_to_segments(&random_set(&mut rng, n, 5));
        let m = hungarian_match(&pred, &gt).unwrap();
        let got = matched_overlap(&pred, &gt, &m);
        let want = brute_segments(&pred, &gt);
        let (mof, iou) = mof_iou(&pred, &gt, &m);
        if got != want || !(0.0..=1.0).contains(&mof) || !(0.0..=1.0).contains(&iou) {
            bad.push(format!("case {case}: overlap {got}, exhaustive {want}"));
        }
    }
    bad
}
