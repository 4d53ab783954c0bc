//! The four pipeline stages as library calls; `main` only parses flags.
//!
//! Directory layout:
//! - corpus: `features/<video_id>.csgf`, `annotations.json`
//! - run: `checkpoint.csgc`, `losses.csv`, `detections.json`,
//!   `trajectories/<video_id>.csv`, `report.json`, `report.txt`

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use coseg_core::data::{synth_generate, FrameFeatureSequence};
use coseg_core::detect::{detect_boundaries, Detection};
use coseg_core::eval::{evaluate_corpus, MetricReport};
use coseg_core::train::{CosegModel, StepLosses, Trainer};
use coseg_core::Error as CoreError;
use rayon::prelude::*;

use crate::annotations::{self, DetectionRecord};
use crate::checkpoint::Checkpoint;
use crate::config::RunConfig;
use crate::csgf;
use crate::error::{CliError, Result};
use crate::report;

pub const FEATURES_DIR: &str = "features";
pub const ANNOTATIONS_FILE: &str = "annotations.json";
pub const CHECKPOINT_FILE: &str = "checkpoint.csgc";
pub const LOSSES_FILE: &str = "losses.csv";
pub const DETECTIONS_FILE: &str = "detections.json";
pub const TRAJECTORY_DIR: &str = "trajectories";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TEXT: &str = "report.txt";

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(CliError::io(path))
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(CliError::io(path))
}

/// Every `features/*.csgf` under `dir`, ordered by file name.
pub fn load_corpus(dir: &Path) -> Result<Vec<FrameFeatureSequence>> {
    let features = dir.join(FEATURES_DIR);
    let mut paths: Vec<PathBuf> = fs::read_dir(&features)
        .map_err(CliError::io(&features))?
        .map(|e| e.map(|e| e.path()).map_err(CliError::io(&features)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|p| p.extension().is_some_and(|e| e == csgf::EXTENSION))
        .collect();
    paths.sort();
    paths.iter().map(|p| csgf::load_feature_file(p)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSummary {
    pub videos: usize,
    pub boundaries: usize,
}

/// Writes the synthetic corpus and its annotations under `out`, replacing
/// any feature files already there.
pub fn cmd_synth(cfg: &RunConfig, out: &Path) -> Result<SynthSummary> {
    cfg.validate()?;
    let (videos, anns) = synth_generate(&cfg.synth)?;
    let features = out.join(FEATURES_DIR);
    create_dir(&features)?;
    for entry in fs::read_dir(&features).map_err(CliError::io(&features))? {
        let path = entry.map_err(CliError::io(&features))?.path();
        if path.extension().is_some_and(|e| e == csgf::EXTENSION) {
            fs::remove_file(&path).map_err(CliError::io(&path))?;
        }
    }
    for v in &videos {
        csgf::save_feature_file(v, &features.join(format!("{}.{}", v.video_id, csgf::EXTENSION)))?;
    }
    annotations::save_annotations(&anns, &out.join(ANNOTATIONS_FILE))?;
    Ok(SynthSummary {
        videos: videos.len(),
        boundaries: anns.iter().map(|a| a.boundaries.len()).sum(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub losses: Vec<StepLosses>,
    pub checkpoint: PathBuf,
}

fn losses_csv(losses: &[StepLosses]) -> String {
    let mut s = String::from("step,contrastive,reconstruction,joint\n");
    for (i, l) in losses.iter().enumerate() {
        let _ = writeln!(s, "{},{},{},{}", i + 1, l.contrastive, l.reconstruction, l.joint);
    }
    s
}

fn check_input_dim(videos: &[FrameFeatureSequence], dim: usize) -> Result<()> {
    match videos.iter().find(|v| v.dim() != dim) {
        Some(v) => Err(CliError::Config(format!(
            "{} has {}-dimensional features, model expects {dim}",
            v.video_id,
            v.dim()
        ))),
        None => Ok(()),
    }
}

/// Trains for `cfg.steps` steps, logging losses per step. A non-finite loss
/// stops training; the checkpoint then holds the last finite state.
pub fn cmd_train(cfg: &RunConfig, corpus: &Path, out: &Path) -> Result<TrainSummary> {
    cfg.validate()?;
    let videos = load_corpus(corpus)?;
    if videos.is_empty() {
        return Err(CliError::Config(format!("no feature files under {}", corpus.join(FEATURES_DIR).display())));
    }
    check_input_dim(&videos, cfg.model.input_dim)?;
    create_dir(out)?;
    let checkpoint = out.join(CHECKPOINT_FILE);
    let model = CosegModel::new(cfg.model, cfg.seed)?;
    let mut trainer = Trainer::new(model, cfg.train_config(), cfg.seed)?;
    let mut losses = Vec::with_capacity(cfg.steps);
    for step in 1..=cfg.steps {
        match trainer.step(&videos) {
            Ok(l) => losses.push(l),
            Err(source @ CoreError::NonFinite { .. }) => {
                Checkpoint::from_model(&trainer.model, losses.len() as u64).save(&checkpoint)?;
                write(&out.join(LOSSES_FILE), losses_csv(&losses))?;
                return Err(CliError::Diverged {
                    step,
                    checkpoint,
                    source,
                });
            }
            Err(e) => return Err(e.into()),
        }
    }
    Checkpoint::from_model(&trainer.model, losses.len() as u64).save(&checkpoint)?;
    write(&out.join(LOSSES_FILE), losses_csv(&losses))?;
    Ok(TrainSummary { losses, checkpoint })
}

fn trajectory_csv(d: &Detection) -> String {
    let mut s = String::from("frame,error,smoothed,gradient\n");
    for t in 0..d.error.len() {
        let _ = writeln!(s, "{t},{},{},{}", d.error[t], d.smoothed[t], d.gradient[t]);
    }
    s
}

/// Detects boundaries in every corpus video with a trained checkpoint.
/// Videos are processed in parallel; output order follows the corpus.
pub fn cmd_detect(cfg: &RunConfig, checkpoint: &Path, corpus: &Path, out: &Path, dump_trajectory: bool) -> Result<Vec<DetectionRecord>> {
    cfg.validate()?;
    let ck = Checkpoint::load(checkpoint)?;
    if ck.config.window != cfg.detector.window {
        return Err(CliError::Config(format!(
            "checkpoint was trained with window {} but detector.window = {}",
            ck.config.window, cfg.detector.window
        )));
    }
    let model = ck.to_model()?;
    let videos = load_corpus(corpus)?;
    check_input_dim(&videos, model.config.input_dim)?;
    let detections = videos
        .par_iter()
        .map(|v| detect_boundaries(v, &model, &cfg.detector))
        .collect::<Result<Vec<_>, _>>()?;

    create_dir(out)?;
    let records: Vec<DetectionRecord> = videos
        .iter()
        .zip(&detections)
        .map(|(v, d)| DetectionRecord {
            video_id: v.video_id.clone(),
            num_frames: v.num_frames(),
            fps: v.fps,
            boundaries: d.boundaries.frames.clone(),
            scores: d.scores.clone(),
        })
        .collect();
    annotations::save_detections(&records, &out.join(DETECTIONS_FILE))?;
    if dump_trajectory {
        let dir = out.join(TRAJECTORY_DIR);
        create_dir(&dir)?;
        for (v, d) in videos.iter().zip(&detections) {
            write(&dir.join(format!("{}.csv", v.video_id)), trajectory_csv(d))?;
        }
    }
    Ok(records)
}

/// Scores detections against annotations and writes the JSON and text
/// reports under `out`.
pub fn cmd_eval(detections: &Path, annotations_path: &Path, thresholds: &[f64], out: &Path) -> Result<MetricReport> {
    if let Some(bad) = thresholds.iter().find(|&&th| !(th > 0.0 && th <= 1.0)) {
        return Err(CliError::Config(format!("threshold {bad} is outside (0, 1]")));
    }
    let records = annotations::load_detections(detections)?;
    let anns = annotations::load_annotations(annotations_path)?;
    let sets = records
        .iter()
        .map(DetectionRecord::boundary_set)
        .collect::<Result<Vec<_>>>()?;
    let report = evaluate_corpus(&sets, &anns, thresholds)?;
    create_dir(out)?;
    write(&out.join(REPORT_JSON), report::to_json(&report))?;
    write(&out.join(REPORT_TEXT), report::to_table(&report))?;
    Ok(report)
}
