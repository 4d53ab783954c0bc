//! Annotation and detection lists as JSON arrays.
//!
//! Each entry is `{"video_id", "num_frames", "fps", "boundaries"}`;
//! detections add `"scores"`, one per boundary. Loading validates every field
//! and reports the offending location as a path such as `[3].boundaries[1]`.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use coseg_core::data::{validate_boundaries, Annotation};
use coseg_core::detect::BoundarySet;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionRecord {
    pub video_id: String,
    pub num_frames: usize,
    pub fps: f32,
    pub boundaries: Vec<usize>,
    pub scores: Vec<f64>,
}

impl DetectionRecord {
    pub fn boundary_set(&self) -> Result<BoundarySet> {
        Ok(BoundarySet::new(self.video_id.clone(), self.num_frames, self.boundaries.clone())?)
    }
}

struct Fields<'a> {
    path: String,
    map: &'a Map<String, Value>,
}

impl<'a> Fields<'a> {
    fn new(path: String, v: &'a Value, allowed: &[&str]) -> Result<Self, String> {
        let map = v.as_object().ok_or_else(|| format!("{path}: expected an object"))?;
        if let Some(k) = map.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(format!("{path}.{k}: unknown field"));
        }
        Ok(Fields { path, map })
    }

    fn get(&self, key: &str) -> Result<&'a Value, String> {
        self.map
            .get(key)
            .ok_or_else(|| format!("{}.{key}: missing field", self.path))
    }

    fn string(&self, key: &str) -> Result<String, String> {
        self.get(key)?
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| format!("{}.{key}: expected a string", self.path))
    }

    fn index(&self, key: &str) -> Result<usize, String> {
        as_index(self.get(key)?).ok_or_else(|| format!("{}.{key}: expected a non-negative integer", self.path))
    }

    fn fps(&self) -> Result<f32, String> {
        match self.get("fps")?.as_f64() {
            Some(f) if f.is_finite() && f > 0.0 => Ok(f as f32),
            _ => Err(format!("{}.fps: expected a positive number", self.path)),
        }
    }

    fn array(&self, key: &str) -> Result<&'a Vec<Value>, String> {
        self.get(key)?
            .as_array()
            .ok_or_else(|| format!("{}.{key}: expected an array", self.path))
    }

    fn boundaries(&self, num_frames: usize) -> Result<Vec<usize>, String> {
        let items = self.array("boundaries")?;
        let mut out = Vec::with_capacity(items.len());
        for (i, v) in items.iter().enumerate() {
            out.push(as_index(v).ok_or_else(|| {
                format!("{}.boundaries[{i}]: expected a non-negative integer", self.path)
            })?);
        }
        validate_boundaries(&out, num_frames).map_err(|m| format!("{}.{m}", self.path))?;
        Ok(out)
    }
}

fn as_index(v: &Value) -> Option<usize> {
    v.as_u64().and_then(|n| usize::try_from(n).ok())
}

fn entries(text: &str) -> Result<Vec<Value>, String> {
    let root: Value = serde_json::from_str(text).map_err(|e| format!("invalid JSON: {e}"))?;
    match root {
        Value::Array(items) => Ok(items),
        _ => Err("$: expected an array of entries".into()),
    }
}

fn unique_ids<'a>(ids: impl Iterator<Item = (usize, &'a str)>) -> Result<(), String> {
    let mut seen = BTreeSet::new();
    for (i, id) in ids {
        if !seen.insert(id) {
            return Err(format!("[{i}].video_id: duplicate id {id:?}"));
        }
    }
    Ok(())
}

pub fn parse_annotations(text: &str) -> Result<Vec<Annotation>, String> {
    let items = entries(text)?;
    let mut out = Vec::with_capacity(items.len());
    for (i, v) in items.iter().enumerate() {
        let f = Fields::new(format!("[{i}]"), v, &["video_id", "num_frames", "fps", "boundaries"])?;
        let num_frames = f.index("num_frames")?;
        out.push(Annotation {
            video_id: f.string("video_id")?,
            num_frames,
            fps: f.fps()?,
            boundaries: f.boundaries(num_frames)?,
        });
    }
    unique_ids(out.iter().enumerate().map(|(i, a)| (i, a.video_id.as_str())))?;
    Ok(out)
}

pub fn parse_detections(text: &str) -> Result<Vec<DetectionRecord>, String> {
    let items = entries(text)?;
    let mut out = Vec::with_capacity(items.len());
    for (i, v) in items.iter().enumerate() {
        let f = Fields::new(
            format!("[{i}]"),
            v,
            &["video_id", "num_frames", "fps", "boundaries", "scores"],
        )?;
        let num_frames = f.index("num_frames")?;
        let boundaries = f.boundaries(num_frames)?;
        let raw = f.array("scores")?;
        let mut scores = Vec::with_capacity(raw.len());
        for (k, s) in raw.iter().enumerate() {
            scores.push(s.as_f64().ok_or_else(|| format!("[{i}].scores[{k}]: expected a number"))?);
        }
        if scores.len() != boundaries.len() {
            return Err(format!(
                "[{i}].scores: {} scores for {} boundaries",
                scores.len(),
                boundaries.len()
            ));
        }
        out.push(DetectionRecord {
            video_id: f.string("video_id")?,
            num_frames,
            fps: f.fps()?,
            boundaries,
            scores,
        });
    }
    unique_ids(out.iter().enumerate().map(|(i, d)| (i, d.video_id.as_str())))?;
    Ok(out)
}

fn to_json<T: Serialize>(items: &[T]) -> String {
    let mut s = serde_json::to_string_pretty(items).expect("plain data serializes");
    s.push('\n');
    s
}

pub fn annotations_to_json(items: &[Annotation]) -> String {
    to_json(items)
}

pub fn detections_to_json(items: &[DetectionRecord]) -> String {
    to_json(items)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(CliError::io(path))
}

fn json_err(path: &Path) -> impl FnOnce(String) -> CliError + '_ {
    move |message| CliError::Json {
        path: path.to_path_buf(),
        message,
    }
}

pub fn load_annotations(path: &Path) -> Result<Vec<Annotation>> {
    parse_annotations(&read(path)?).map_err(json_err(path))
}

pub fn save_annotations(items: &[Annotation], path: &Path) -> Result<()> {
    fs::write(path, annotations_to_json(items)).map_err(CliError::io(path))
}

pub fn load_detections(path: &Path) -> Result<Vec<DetectionRecord>> {
    parse_detections(&read(path)?).map_err(json_err(path))
}

pub fn save_detections(items: &[DetectionRecord], path: &Path) -> Result<()> {
    fs::write(path, detections_to_json(items)).map_err(CliError::io(path))
}
