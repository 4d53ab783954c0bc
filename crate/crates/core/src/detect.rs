//! Boundary detection from reconstruction error trajectories.
//!
//! Each frame with a full `T`-frame window around it is masked and
//! reconstructed from its neighbours; the squared error over time is smoothed
//! with a box FIR filter, differentiated, and boundaries are the strict
//! relative maxima of the gradient within `±r` frames.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::autodiff::Tape;
use crate::data::{validate_boundaries, FrameFeatureSequence};
use crate::embedding;
use crate::error::{Error, Result};
use crate::reconstruction;
use crate::tensor::{self, Tensor};
use crate::train::CosegModel;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct DetectorConfig {
    pub window: usize,
    pub fir_half_width: usize,
    pub extrema_range: usize,
    /// Videos shorter than this yield no detections instead of an error.
    pub min_trajectory_len: usize,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            window: 10,
            fir_half_width: 5,
            extrema_range: 70,
            min_trajectory_len: 10,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.extrema_range == 0 {
            return Err(Error::Config("extrema_range must be >= 1".into()));
        }
        if self.window == 0 {
            return Err(Error::Config("window must be positive".into()));
        }
        Ok(())
    }
}

/// Per-frame reconstruction error `E[t] ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorTrajectory {
    pub values: Vec<f64>,
}

/// Sorted, strictly increasing boundary frames of one video.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundarySet {
    pub video_id: String,
    pub num_frames: usize,
    pub frames: Vec<usize>,
}

impl BoundarySet {
    pub fn new(video_id: impl Into<String>, num_frames: usize, frames: Vec<usize>) -> Result<Self> {
        let video_id = video_id.into();
        validate_boundaries(&frames, num_frames)
            .map_err(|m| Error::InvalidInput(format!("{video_id}: {m}")))?;
        Ok(BoundarySet {
            video_id,
            num_frames,
            frames,
        })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// Output of [`detect_boundaries`] with the intermediate signals kept for
/// inspection.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub boundaries: BoundarySet,
    /// `G[t_b]` for each boundary.
    pub scores: Vec<f64>,
    pub error: Vec<f64>,
    pub smoothed: Vec<f64>,
    pub gradient: Vec<f64>,
}

/// Reconstructs every frame from its centered window and records the squared
/// error. Frames without a full window copy the nearest computed value.
pub fn error_trajectory(video: &FrameFeatureSequence, model: &CosegModel, window: usize) -> Result<ErrorTrajectory> {
    if window != model.config.window {
        return Err(Error::Config(format!(
            "detector window {window} does not match model window {}",
            model.config.window
        )));
    }
    let len = video.num_frames();
    if len < window {
        return Err(Error::InvalidInput(format!(
            "{} has {len} frames, shorter than the window {window}",
            video.video_id
        )));
    }
    let h = embedding::embed_frames(&model.encoder, &video.features)?;
    let half = window / 2;
    let centers = len - window + 1;
    let mut rows = Vec::with_capacity(centers * window);
    for c in 0..centers {
        rows.extend(c..c + window);
    }
    let stacked = h.select_rows(&rows)?;
    let mask_rows: Vec<usize> = (0..centers).map(|c| c * window + half).collect();

    let mut tape = Tape::new();
    let hv = tape.constant(stacked)?;
    let input = reconstruction::assemble_masked_input(&mut tape, &model.reconstructor, hv, &mask_rows, &model.positional)?;
    let out = reconstruction::reconstruct(&mut tape, &model.reconstructor, input, window)?;
    let recon: &Tensor = tape.value(out);

    let mut values = Vec::with_capacity(len);
    for t in 0..len {
        let c = t.saturating_sub(half).min(centers - 1);
        let r = mask_rows[c];
        values.push(tensor::squared_distance(recon.row(r), h.row(c + half)));
    }
    Ok(ErrorTrajectory { values })
}

/// Centered moving average of width `2N + 1` with replicate padding.
pub fn fir_smooth(signal: &[f64], half_width: usize) -> Vec<f64> {
    let n = signal.len();
    if n == 0 || half_width == 0 {
        return signal.to_vec();
    }
    let w = (2 * half_width + 1) as f64;
    let at = |i: isize| signal[i.clamp(0, n as isize - 1) as usize];
    (0..n as isize)
        .map(|t| {
            let hw = half_width as isize;
            (-hw..=hw).map(|k| at(t - k)).sum::<f64>() / w
        })
        .collect()
}

/// Central differences inside, one-sided differences at the ends.
pub fn gradient(signal: &[f64]) -> Result<Vec<f64>> {
    let n = signal.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "gradient needs at least 2 samples, got {n}"
        )));
    }
    let mut g = Vec::with_capacity(n);
    g.push(signal[1] - signal[0]);
    for t in 1..n - 1 {
        g.push((signal[t + 1] - signal[t - 1]) / 2.0);
    }
    g.push(signal[n - 1] - signal[n - 2]);
    Ok(g)
}

/// Positions strictly greater than every value within `range` on both sides.
/// Positions with fewer than `range` neighbours on either side are skipped.
pub fn relative_extrema(signal: &[f64], range: usize) -> Vec<usize> {
    let n = signal.len();
    if range == 0 || n < 2 * range + 1 {
        return Vec::new();
    }
    (range..n - range)
        .filter(|&t| {
            let v = signal[t];
            (t - range..t).chain(t + 1..=t + range).all(|u| v > signal[u])
        })
        .collect()
}

/// Error trajectory → FIR smoothing → gradient → relative extrema.
pub fn detect_boundaries(video: &FrameFeatureSequence, model: &CosegModel, cfg: &DetectorConfig) -> Result<Detection> {
    cfg.validate()?;
    let len = video.num_frames();
    if len < cfg.min_trajectory_len.max(cfg.window) {
        if cfg.window != model.config.window {
            return Err(Error::Config(format!(
                "detector window {} does not match model window {}",
                cfg.window, model.config.window
            )));
        }
        return Ok(Detection {
            boundaries: BoundarySet::new(video.video_id.clone(), len, Vec::new())?,
            scores: Vec::new(),
            error: Vec::new(),
            smoothed: Vec::new(),
            gradient: Vec::new(),
        });
    }
    let error = error_trajectory(video, model, cfg.window)?.values;
    detect_from_trajectory(&video.video_id, error, cfg)
}

/// The signal-processing half of [`detect_boundaries`].
pub fn detect_from_trajectory(video_id: &str, error: Vec<f64>, cfg: &DetectorConfig) -> Result<Detection> {
    let smoothed = fir_smooth(&error, cfg.fir_half_width);
    let gradient = gradient(&smoothed)?;
    let frames = relative_extrema(&gradient, cfg.extrema_range);
    let scores = frames.iter().map(|&t| gradient[t]).collect();
    Ok(Detection {
        boundaries: BoundarySet::new(video_id, error.len(), frames)?,
        scores,
        error,
        smoothed,
        gradient,
    })
}
