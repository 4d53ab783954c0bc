//! Command behaviour through the library entry points and the binary.

use std::fs;
use std::path::Path;
use std::process::Command;

use coseg::annotations::{self, DetectionRecord};
use coseg::commands::*;
use coseg::{CliError, RunConfig};
use sha2::{Digest, Sha256};

fn small() -> RunConfig {
    let mut c = RunConfig::default();
    c.synth.num_videos = 4;
    c.batch.videos_per_batch = 4;
    c.model.queue_capacity = 64;
    c.steps = 3;
    c
}

fn digest(path: &Path) -> String {
    hex::encode(Sha256::digest(fs::read(path).unwrap()))
}

fn corpus_digest(dir: &Path) -> String {
    let mut names: Vec<_> = fs::read_dir(dir.join(FEATURES_DIR)).unwrap().map(|e| e.unwrap().path()).collect();
    names.sort();
    names.push(dir.join(ANNOTATIONS_FILE));
    let mut h = Sha256::new();
    for p in names {
        h.update(p.file_name().unwrap().as_encoded_bytes());
        h.update(fs::read(&p).unwrap());
    }
    hex::encode(h.finalize())
}

fn trained(cfg: &RunConfig) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    cmd_synth(cfg, &dir.path().join("corpus")).unwrap();
    cmd_train(cfg, &dir.path().join("corpus"), &dir.path().join("run")).unwrap();
    dir
}

#[test]
fn synth_writes_one_file_per_video_deterministically() {
    let cfg = small();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let s = cmd_synth(&cfg, a.path()).unwrap();
    cmd_synth(&cfg, b.path()).unwrap();
    assert_eq!(s.videos, 4);
    assert_eq!(fs::read_dir(a.path().join(FEATURES_DIR)).unwrap().count(), 4);
    assert_eq!(corpus_digest(a.path()), corpus_digest(b.path()));
    assert_eq!(load_corpus(a.path()).unwrap().len(), 4);
}

#[test]
fn synth_replaces_stale_feature_files() {
    let mut cfg = small();
    let dir = tempfile::tempdir().unwrap();
    cmd_synth(&cfg, dir.path()).unwrap();
    cfg.synth.num_videos = 2;
    cmd_synth(&cfg, dir.path()).unwrap();
    assert_eq!(load_corpus(dir.path()).unwrap().len(), 2);
}

#[test]
fn small_corpus_digest_is_pinned() {
    let dir = tempfile::tempdir().unwrap();
    cmd_synth(&small(), dir.path()).unwrap();
    assert_eq!(corpus_digest(dir.path()), "c5e799fc49a57040e58a67d716c86aa59b99c6078a6b8dcac867151848a8a846");
}

#[test]
fn loss_log_has_one_row_per_step() {
    let cfg = small();
    let dir = trained(&cfg);
    let text = fs::read_to_string(dir.path().join("run").join(LOSSES_FILE)).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "step,contrastive,reconstruction,joint");
    assert_eq!(lines.len(), cfg.steps + 1);
    assert!(lines[3].starts_with("3,"));
}

#[test]
fn training_is_reproducible_from_seed() {
    let cfg = small();
    let a = trained(&cfg);
    let b = trained(&cfg);
    let ck = |d: &tempfile::TempDir| digest(&d.path().join("run").join(CHECKPOINT_FILE));
    assert_eq!(ck(&a), ck(&b));
    let mut other = cfg.clone();
    other.seed += 1;
    assert_ne!(ck(&a), ck(&trained(&other)));
}

#[test]
fn divergence_keeps_the_last_finite_checkpoint() {
    let mut cfg = small();
    cfg.optimizer.learning_rate = 1e30;
    let dir = tempfile::tempdir().unwrap();
    cmd_synth(&cfg, &dir.path().join("corpus")).unwrap();
    let err = cmd_train(&cfg, &dir.path().join("corpus"), &dir.path().join("run")).unwrap_err();
    let CliError::Diverged { step, checkpoint, .. } = &err else {
        panic!("expected divergence, got {err}");
    };
    assert_eq!(err.category(), "numeric");
    let ck = coseg::checkpoint::Checkpoint::load(checkpoint).unwrap();
    assert_eq!(ck.steps as usize, step - 1);
    assert!(ck.tensors.iter().all(|(_, t)| t.is_finite()));
}

#[test]
fn training_needs_a_corpus() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir_all(dir.path().join(FEATURES_DIR)).unwrap();
    let err = cmd_train(&small(), dir.path(), &dir.path().join("run")).unwrap_err();
    assert_eq!(err.category(), "config");
}

#[test]
fn detect_on_empty_corpus_writes_empty_output() {
    let cfg = small();
    let dir = trained(&cfg);
    let empty = dir.path().join("empty");
    fs::create_dir_all(empty.join(FEATURES_DIR)).unwrap();
    let out = dir.path().join("out");
    let records = cmd_detect(&cfg, &dir.path().join("run").join(CHECKPOINT_FILE), &empty, &out, false).unwrap();
    assert!(records.is_empty());
    assert!(annotations::load_detections(&out.join(DETECTIONS_FILE)).unwrap().is_empty());
}

#[test]
fn detect_rejects_a_window_mismatch() {
    let cfg = small();
    let dir = trained(&cfg);
    let mut other = cfg.clone();
    other.detector.window = cfg.model.window + 2;
    other.model.window = other.detector.window;
    other.reconstruction.window = other.detector.window;
    other.contrastive.window = other.detector.window;
    let err = cmd_detect(
        &other,
        &dir.path().join("run").join(CHECKPOINT_FILE),
        &dir.path().join("corpus"),
        &dir.path().join("out"),
        false,
    )
    .unwrap_err();
    assert!(matches!(err, CliError::Config(_)), "{err}");
    assert!(err.to_string().contains("window"));
}

#[test]
fn detect_is_deterministic_and_leaves_the_checkpoint_alone() {
    let cfg = small();
    let dir = trained(&cfg);
    let ck = dir.path().join("run").join(CHECKPOINT_FILE);
    let before = digest(&ck);
    let corpus = dir.path().join("corpus");
    let a = cmd_detect(&cfg, &ck, &corpus, &dir.path().join("a"), true).unwrap();
    let b = cmd_detect(&cfg, &ck, &corpus, &dir.path().join("b"), false).unwrap();
    assert_eq!(digest(&ck), before);
    assert_eq!(a, b);
    assert_eq!(
        digest(&dir.path().join("a").join(DETECTIONS_FILE)),
        digest(&dir.path().join("b").join(DETECTIONS_FILE))
    );
    let first = &a[0];
    let csv = fs::read_to_string(dir.path().join("a").join(TRAJECTORY_DIR).join(format!("{}.csv", first.video_id))).unwrap();
    assert_eq!(csv.lines().next(), Some("frame,error,smoothed,gradient"));
    assert_eq!(csv.lines().count(), first.num_frames + 1);
}

#[test]
fn perfect_detections_give_an_all_ones_report() {
    let cfg = small();
    let dir = tempfile::tempdir().unwrap();
    cmd_synth(&cfg, dir.path()).unwrap();
    let anns = annotations::load_annotations(&dir.path().join(ANNOTATIONS_FILE)).unwrap();
    let records: Vec<DetectionRecord> = anns
        .iter()
        .map(|a| DetectionRecord {
            video_id: a.video_id.clone(),
            num_frames: a.num_frames,
            fps: a.fps,
            boundaries: a.boundaries.clone(),
            scores: vec![1.0; a.boundaries.len()],
        })
        .collect();
    let det = dir.path().join(DETECTIONS_FILE);
    annotations::save_detections(&records, &det).unwrap();
    let report = cmd_eval(&det, &dir.path().join(ANNOTATIONS_FILE), &cfg.eval.thresholds, dir.path()).unwrap();
    assert_eq!(report.thresholds.len(), 10);
    for s in &report.thresholds {
        assert_eq!((s.precision, s.recall, s.f1), (1.0, 1.0, 1.0));
    }
    assert_eq!((report.avg_f1, report.mof, report.iou), (1.0, 1.0, 1.0));
    assert!(dir.path().join(REPORT_JSON).exists());
    assert!(fs::read_to_string(dir.path().join(REPORT_TEXT)).unwrap().contains("avg"));
}

#[test]
fn eval_lists_missing_annotations() {
    let dir = tempfile::tempdir().unwrap();
    let det = dir.path().join("d.json");
    let ann = dir.path().join("a.json");
    fs::write(&det, r#"[{"video_id":"x","num_frames":10,"fps":1.0,"boundaries":[4],"scores":[0.5]}]"#).unwrap();
    fs::write(&ann, "[]").unwrap();
    let err = cmd_eval(&det, &ann, &[0.05], dir.path()).unwrap_err();
    assert!(err.to_string().contains('x'), "{err}");
}

fn coseg_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_coseg"))
}

#[test]
fn binary_reports_errors_on_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = coseg_bin()
        .args(["eval", "--detections"])
        .arg(dir.path().join("missing.json"))
        .arg("--annotations")
        .arg(dir.path().join("missing_too.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert_eq!(stderr.lines().count(), 1, "{stderr}");
    assert!(stderr.starts_with("error[io]: "), "{stderr}");
    assert!(stderr.contains("missing.json"));
}

#[test]
fn binary_rejects_bad_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "stepz = 4\n").unwrap();
    let out = coseg_bin().arg("--config").arg(&cfg).args(["synth", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().starts_with("error[config]: "));
}

#[test]
fn binary_runs_the_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.toml");
    let mut cfg = small();
    cfg.paths.corpus = dir.path().join("corpus");
    cfg.paths.run = dir.path().join("run");
    fs::write(&cfg_path, cfg.to_toml()).unwrap();
    for args in [
        vec!["synth", "--seed", "11"],
        vec!["train", "--steps", "2"],
        vec!["detect"],
        vec!["eval", "--thresholds", "0.05,0.5"],
    ] {
        let out = coseg_bin().arg("--config").arg(&cfg_path).args(&args).output().unwrap();
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let losses = fs::read_to_string(dir.path().join("run").join(LOSSES_FILE)).unwrap();
    assert_eq!(losses.lines().count(), 3);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("run").join(REPORT_JSON)).unwrap()).unwrap();
    assert_eq!(report["thresholds"].as_array().unwrap().len(), 2);
}
