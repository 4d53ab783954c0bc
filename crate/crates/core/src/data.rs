//! Frame-feature sequences, boundary annotations and the synthetic event
//! stream generator.
//!
//! Boundary convention used everywhere: a boundary index `b` is the first
//! frame of the new event.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// One video as a `[num_frames, dim]` feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameFeatureSequence {
    pub video_id: String,
    pub fps: f32,
    pub features: Tensor,
}

impl FrameFeatureSequence {
    pub fn new(video_id: impl Into<String>, fps: f32, features: Tensor) -> Result<Self> {
        let seq = FrameFeatureSequence {
            video_id: video_id.into(),
            fps,
            features,
        };
        seq.validate()?;
        Ok(seq)
    }

    pub fn validate(&self) -> Result<()> {
        if self.features.rank() != 2 {
            return Err(Error::InvalidInput(format!(
                "{}: features must be a matrix, got shape {:?}",
                self.video_id,
                self.features.shape()
            )));
        }
        if self.num_frames() == 0 {
            return Err(Error::InvalidInput(format!("{}: no frames", self.video_id)));
        }
        if !self.features.is_finite() {
            return Err(Error::InvalidInput(format!(
                "{}: non-finite feature value",
                self.video_id
            )));
        }
        Ok(())
    }

    pub fn num_frames(&self) -> usize {
        self.features.shape()[0]
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }
}

/// Ground-truth (or detected) boundaries of one video.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Annotation {
    pub video_id: String,
    pub num_frames: usize,
    pub fps: f32,
    pub boundaries: Vec<usize>,
}

impl Annotation {
    pub fn validate(&self) -> Result<()> {
        validate_boundaries(&self.boundaries, self.num_frames)
            .map_err(|msg| Error::InvalidInput(format!("{}: {msg}", self.video_id)))
    }
}

/// Checks that `boundaries` is strictly increasing and inside `[0, num_frames)`.
/// The message names the offending position as `boundaries[i]`.
pub fn validate_boundaries(boundaries: &[usize], num_frames: usize) -> core::result::Result<(), String> {
    for (i, &b) in boundaries.iter().enumerate() {
        if b >= num_frames {
            return Err(format!(
                "boundaries[{i}] = {b} is outside [0, {num_frames})"
            ));
        }
        if i > 0 && b <= boundaries[i - 1] {
            return Err(format!(
                "boundaries[{i}] = {b} does not exceed boundaries[{}] = {}",
                i - 1,
                boundaries[i - 1]
            ));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SynthConfig {
    pub num_videos: usize,
    pub min_events: usize,
    pub max_events: usize,
    pub min_event_len: usize,
    pub max_event_len: usize,
    pub feature_dim: usize,
    pub num_prototypes: usize,
    pub noise_std: f32,
    pub drift_std: f32,
    pub fps: f32,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            num_videos: 32,
            min_events: 3,
            max_events: 5,
            min_event_len: 30,
            max_event_len: 60,
            feature_dim: 32,
            num_prototypes: 8,
            noise_std: 0.1,
            drift_std: 0.02,
            fps: 30.0,
            seed: 7,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.min_events == 0 || self.min_events > self.max_events {
            return bad(format!(
                "events per video range [{}, {}] is empty",
                self.min_events, self.max_events
            ));
        }
        if self.min_event_len == 0 || self.min_event_len > self.max_event_len {
            return bad(format!(
                "event length range [{}, {}] is empty",
                self.min_event_len, self.max_event_len
            ));
        }
        if self.num_prototypes < 2 {
            return bad(format!("num_prototypes must be >= 2, got {}", self.num_prototypes));
        }
        if self.feature_dim == 0 {
            return bad("feature_dim must be positive".into());
        }
        if !(self.noise_std >= 0.0 && self.drift_std >= 0.0) {
            return bad("noise_std and drift_std must be non-negative".into());
        }
        if !(self.fps > 0.0) {
            return bad(format!("fps must be positive, got {}", self.fps));
        }
        Ok(())
    }

    /// Events must be at least one window long.
    pub fn validate_for_window(&self, window: usize) -> Result<()> {
        self.validate()?;
        if self.min_event_len < window {
            return Err(Error::Config(format!(
                "min_event_len {} is shorter than the window {window}",
                self.min_event_len
            )));
        }
        Ok(())
    }
}

fn normal<R: Rng>(rng: &mut R) -> f32 {
    rng.sample::<f32, _>(StandardNormal)
}

/// Generates a corpus of piecewise-stationary feature streams.
///
/// Each event picks one of `num_prototypes` unit vectors (drawn once per
/// corpus), never the same one twice in a row. Frame `t` is
/// `prototype + N(0, noise_std²) + drift_t`, where `drift` is a per-dimension
/// random walk with step `N(0, drift_std²)` running across the whole video.
pub fn synth_generate(cfg: &SynthConfig) -> Result<(Vec<FrameFeatureSequence>, Vec<Annotation>)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let d = cfg.feature_dim;

    let prototypes: Vec<Vec<f32>> = (0..cfg.num_prototypes)
        .map(|_| loop {
            let v: Vec<f32> = (0..d).map(|_| normal(&mut rng)).collect();
            let n = libm::sqrtf(v.iter().map(|x| x * x).sum());
            if n > 1e-6 {
                break v.into_iter().map(|x| x / n).collect();
            }
        })
        .collect();

    let mut corpus = Vec::with_capacity(cfg.num_videos);
    let mut annotations = Vec::with_capacity(cfg.num_videos);
    for v in 0..cfg.num_videos {
        let video_id = format!("synth_{v:04}");
        let num_events = rng.random_range(cfg.min_events..=cfg.max_events);
        let mut data = Vec::new();
        let mut boundaries = Vec::with_capacity(num_events - 1);
        let mut drift = alloc::vec![0.0f32; d];
        let mut prev: Option<usize> = None;
        let mut frame = 0;
        for e in 0..num_events {
            let proto = loop {
                let p = rng.random_range(0..cfg.num_prototypes);
                if Some(p) != prev {
                    break p;
                }
            };
            prev = Some(proto);
            let len = rng.random_range(cfg.min_event_len..=cfg.max_event_len);
            if e > 0 {
                boundaries.push(frame);
            }
            for _ in 0..len {
                for k in 0..d {
                    drift[k] += cfg.drift_std * normal(&mut rng);
                    let noise = cfg.noise_std * normal(&mut rng);
                    data.push(prototypes[proto][k] + noise + drift[k]);
                }
            }
            frame += len;
        }
        let features = Tensor::matrix(frame, d, data)?;
        corpus.push(FrameFeatureSequence::new(video_id.clone(), cfg.fps, features)?);
        annotations.push(Annotation {
            video_id,
            num_frames: frame,
            fps: cfg.fps,
            boundaries,
        });
    }
    Ok((corpus, annotations))
}
