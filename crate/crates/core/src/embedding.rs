//! Contrastive temporal feature embedding.
//!
//! A query encoder `f` and a momentum key encoder `g` map raw frame features
//! to unit-norm embeddings. Frames of the same snippet are positives; frames
//! of every other snippet in the batch and the entries of a FIFO memory queue
//! are negatives. `g` only ever moves by [`momentum_update`].

use alloc::collections::VecDeque;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::autodiff::{Tape, Var};
use crate::data::FrameFeatureSequence;
use crate::error::{Error, Result};
use crate::nn::Linear;
use crate::param::Params;
use crate::tensor::{self, Tensor};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct ContrastiveConfig {
    pub temperature: f32,
    pub window: usize,
}

impl Default for ContrastiveConfig {
    fn default() -> Self {
        ContrastiveConfig {
            temperature: 0.2,
            window: 10,
        }
    }
}

impl ContrastiveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::Config(format!(
                "temperature must be positive, got {}",
                self.temperature
            )));
        }
        if self.window < 3 {
            return Err(Error::Config(format!(
                "window must be at least 3 frames, got {}",
                self.window
            )));
        }
        Ok(())
    }
}

/// Widths of the frame encoder: `input_dim → 2·embed_dim → embed_dim`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncoderShape {
    pub input_dim: usize,
    pub embed_dim: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct EncoderNet {
    fc1: Linear,
    fc2: Linear,
}

impl EncoderNet {
    fn forward(&self, tape: &mut Tape, params: &Params, x: Var) -> Result<Var> {
        let h = self.fc1.forward(tape, params, x)?;
        let h = tape.gelu(h)?;
        let h = self.fc2.forward(tape, params, h)?;
        tape.l2_normalize(h)
    }
}

/// Query encoder parameters (`ctfe.query.*`), key encoder parameters
/// (`ctfe.key.*`) and the momentum coefficient.
#[derive(Debug, Clone)]
pub struct EncoderPair {
    pub query: Params,
    pub key: Params,
    pub alpha: f32,
    shape: EncoderShape,
    net: EncoderNet,
}

impl EncoderPair {
    /// Random query encoder; the key encoder starts as an exact copy.
    pub fn new<R: Rng + ?Sized>(shape: EncoderShape, alpha: f32, rng: &mut R) -> Result<Self> {
        if shape.input_dim == 0 || shape.embed_dim == 0 {
            return Err(Error::Config("encoder widths must be positive".into()));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Config(format!("alpha must lie in [0, 1], got {alpha}")));
        }
        let hidden = 2 * shape.embed_dim;
        let mut query = Params::new();
        let fc1 = Linear::new(&mut query, "ctfe.query.fc1", shape.input_dim, hidden, rng);
        let fc2 = Linear::new(&mut query, "ctfe.query.fc2", hidden, shape.embed_dim, rng);
        let mut key = Params::new();
        for p in query.iter() {
            key.add(p.name.replacen("ctfe.query.", "ctfe.key.", 1), p.value.clone());
        }
        Ok(EncoderPair {
            query,
            key,
            alpha,
            shape,
            net: EncoderNet { fc1, fc2 },
        })
    }

    pub fn shape(&self) -> EncoderShape {
        self.shape
    }

    fn check_width(&self, frames: &Tensor) -> Result<()> {
        if frames.rank() != 2 || frames.cols() != self.shape.input_dim {
            return Err(Error::shape(
                "encode",
                format!(
                    "frames {:?} for encoder input width {}",
                    frames.shape(),
                    self.shape.input_dim
                ),
            ));
        }
        Ok(())
    }
}

/// `h = normalize(MLP_f(frames))`, differentiable through the query encoder.
pub fn encode_query(tape: &mut Tape, enc: &EncoderPair, frames: Var) -> Result<Var> {
    enc.check_width(tape.value(frames))?;
    enc.net.forward(tape, &enc.query, frames)
}

/// `z = normalize(MLP_g(frames))`, detached from every tape.
pub fn encode_key(enc: &EncoderPair, frames: &Tensor) -> Result<Tensor> {
    enc.check_width(frames)?;
    let mut tape = Tape::new();
    let x = tape.constant(frames.clone())?;
    let z = enc.net.forward(&mut tape, &enc.key, x)?;
    Ok(tape.value(z).clone())
}

/// Query embeddings computed without recording gradients.
pub fn embed_frames(enc: &EncoderPair, frames: &Tensor) -> Result<Tensor> {
    let mut tape = Tape::new();
    let x = tape.constant(frames.clone())?;
    let h = encode_query(&mut tape, enc, x)?;
    Ok(tape.value(h).clone())
}

/// `g ← α·g + (1 − α)·f` for every key parameter.
pub fn momentum_update(enc: &mut EncoderPair) {
    let a = enc.alpha;
    for (k, q) in enc.key.iter_mut().zip(enc.query.iter()) {
        for (g, &f) in k.value.data_mut().iter_mut().zip(q.value.data()) {
            *g = a * *g + (1.0 - a) * f;
        }
    }
}

/// FIFO of unit-norm key embeddings used as extra negatives.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryQueue {
    capacity: usize,
    dim: usize,
    entries: VecDeque<Vec<f32>>,
}

impl MemoryQueue {
    pub fn new(capacity: usize, dim: usize) -> Self {
        MemoryQueue {
            capacity,
            dim,
            entries: VecDeque::with_capacity(capacity.min(1 << 16)),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f32]> {
        self.entries.iter().map(|e| e.as_slice())
    }

    /// Appends a row after normalizing it, evicting the oldest entry when
    /// full. Zero rows are rejected.
    pub fn push(&mut self, row: &[f32]) -> Result<()> {
        if row.len() != self.dim {
            return Err(Error::shape(
                "MemoryQueue::push",
                format!("row of {} values for queue width {}", row.len(), self.dim),
            ));
        }
        if self.capacity == 0 {
            return Ok(());
        }
        let n = libm::sqrt(tensor::dot(row, row));
        if n < tensor::DEGENERATE_NORM || !n.is_finite() {
            return Err(Error::InvalidInput("cannot enqueue a zero embedding".into()));
        }
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries
            .push_back(row.iter().map(|&v| (v as f64 / n) as f32).collect());
        Ok(())
    }

    /// Entries as a `[len, dim]` matrix, oldest first.
    pub fn to_tensor(&self) -> Tensor {
        let mut data = Vec::with_capacity(self.entries.len() * self.dim);
        for e in &self.entries {
            data.extend_from_slice(e);
        }
        Tensor::matrix(self.entries.len(), self.dim, data).expect("rows have queue width")
    }

    /// Rebuilds a queue from a `[len, dim]` matrix (oldest first).
    pub fn from_tensor(capacity: usize, t: &Tensor) -> Result<Self> {
        let dim = t.cols();
        let mut q = MemoryQueue::new(capacity, dim);
        for i in 0..t.rows() {
            q.push(t.row(i))?;
        }
        Ok(q)
    }
}

/// `L = B·X` snippets of `T` frames each, stacked snippet-major into one
/// `[L·T, input_dim]` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SnippetBatch {
    pub frames: Tensor,
    pub snippet_len: usize,
    /// Corpus index of the source video of each snippet.
    pub video_index: Vec<usize>,
    pub video_ids: Vec<String>,
    /// First frame of each snippet within its video.
    pub starts: Vec<usize>,
}

impl SnippetBatch {
    pub fn num_snippets(&self) -> usize {
        self.starts.len()
    }
}

/// Picks `videos` distinct videos and `per_video` non-overlapping windows of
/// `window` frames from each. Videos shorter than `per_video·window` are
/// never drawn.
pub fn sample_batch<R: Rng + ?Sized>(
    corpus: &[FrameFeatureSequence],
    videos: usize,
    per_video: usize,
    window: usize,
    rng: &mut R,
) -> Result<SnippetBatch> {
    if videos == 0 || per_video == 0 || window == 0 {
        return Err(Error::Config("batch sizes must be positive".into()));
    }
    let need = per_video * window;
    let eligible: Vec<usize> = (0..corpus.len())
        .filter(|&i| corpus[i].num_frames() >= need)
        .collect();
    if eligible.len() < videos {
        return Err(Error::InvalidInput(format!(
            "{} videos have at least {need} frames, batch needs {videos}",
            eligible.len()
        )));
    }
    let dim = corpus[eligible[0]].dim();
    let mut chosen: Vec<usize> = rand::seq::index::sample(rng, eligible.len(), videos)
        .into_iter()
        .map(|i| eligible[i])
        .collect();
    chosen.sort_unstable();

    let mut data = Vec::with_capacity(videos * need * dim);
    let mut video_index = Vec::with_capacity(videos * per_video);
    let mut video_ids = Vec::with_capacity(videos * per_video);
    let mut starts = Vec::with_capacity(videos * per_video);
    for &v in &chosen {
        let seq = &corpus[v];
        if seq.dim() != dim {
            return Err(Error::shape(
                "sample_batch",
                format!("{} has width {}, expected {dim}", seq.video_id, seq.dim()),
            ));
        }
        // Uniform placement of non-overlapping windows: sorted offsets into
        // the slack, shifted by the windows already placed.
        let slack = seq.num_frames() - need;
        let mut offsets: Vec<usize> = (0..per_video).map(|_| rng.random_range(0..=slack)).collect();
        offsets.sort_unstable();
        for (x, off) in offsets.into_iter().enumerate() {
            let start = off + x * window;
            for t in start..start + window {
                data.extend_from_slice(seq.features.row(t));
            }
            video_index.push(v);
            video_ids.push(seq.video_id.clone());
            starts.push(start);
        }
    }
    Ok(SnippetBatch {
        frames: Tensor::matrix(videos * per_video * window, dim, data)?,
        snippet_len: window,
        video_index,
        video_ids,
        starts,
    })
}

/// Loss value and its gradient with respect to the query embeddings.
///
/// `queries` and `keys` are `[L·T, D]`, snippet-major. For query `(i, j)`,
/// every `k ≠ j` of the same snippet is a positive; keys of all other
/// snippets and every row of `memory` are negatives:
///
/// `P(i,j,k) = Q⁺ / (Q⁺ + Q₁⁻ + Q₂⁻)`, `Q = exp(q·z / τ)`,
/// `L = mean_{i,j} −1/(T−1) Σ_{k≠j} log P(i,j,k)`.
///
/// Evaluated in `f64` with the maximum logit of each query factored out.
pub fn contrastive_value_and_grad(
    queries: &Tensor,
    keys: &Tensor,
    memory: &Tensor,
    window: usize,
    temperature: f32,
) -> Result<(f64, Tensor)> {
    if window < 2 {
        return Err(Error::Config(format!(
            "contrastive loss needs at least 2 frames per snippet, got {window}"
        )));
    }
    if !(temperature > 0.0) {
        return Err(Error::Config(format!("temperature must be positive, got {temperature}")));
    }
    if queries.shape() != keys.shape() || queries.rank() != 2 {
        return Err(Error::shape(
            "contrastive_loss",
            format!("queries {:?} vs keys {:?}", queries.shape(), keys.shape()),
        ));
    }
    let (n, d) = (queries.rows(), queries.cols());
    if n == 0 || n % window != 0 {
        return Err(Error::shape(
            "contrastive_loss",
            format!("{n} rows do not form snippets of {window}"),
        ));
    }
    if memory.numel() > 0 && memory.cols() != d {
        return Err(Error::shape(
            "contrastive_loss",
            format!("memory width {} vs embedding width {d}", memory.cols()),
        ));
    }
    let inv_tau = 1.0 / temperature as f64;
    let m_rows = if memory.numel() == 0 { 0 } else { memory.rows() };
    let pos_count = (window - 1) as f64;
    let scale = 1.0 / (n as f64 * pos_count);

    let mut total = 0.0f64;
    let mut grad = vec![0.0f64; n * d];
    let mut key_logits = vec![0.0f64; n];
    let mut mem_logits = vec![0.0f64; m_rows];
    let mut key_coef = vec![0.0f64; n];
    let mut mem_coef = vec![0.0f64; m_rows];

    for q in 0..n {
        let qrow = queries.row(q);
        let snippet = q / window;
        let (lo, hi) = (snippet * window, snippet * window + window);
        for (c, slot) in key_logits.iter_mut().enumerate() {
            *slot = tensor::dot(qrow, keys.row(c)) * inv_tau;
        }
        for (c, slot) in mem_logits.iter_mut().enumerate() {
            *slot = tensor::dot(qrow, memory.row(c)) * inv_tau;
        }
        let max = key_logits
            .iter()
            .enumerate()
            .filter(|&(c, _)| c != q)
            .map(|(_, &v)| v)
            .chain(mem_logits.iter().copied())
            .fold(f64::NEG_INFINITY, f64::max);

        let mut neg = 0.0f64;
        for (c, &v) in key_logits.iter().enumerate() {
            if c < lo || c >= hi {
                neg += libm::exp(v - max);
            }
        }
        neg += mem_logits.iter().map(|&v| libm::exp(v - max)).sum::<f64>();

        // Σ_k 1/(e^{a_k} + neg): every negative's coefficient shares it.
        let mut inv_denoms = 0.0f64;
        let mut loss_q = 0.0f64;
        for c in lo..hi {
            if c == q {
                key_coef[c] = 0.0;
                continue;
            }
            let a = key_logits[c] - max;
            let ea = libm::exp(a);
            let denom = ea + neg;
            loss_q -= a - libm::log(denom);
            inv_denoms += 1.0 / denom;
            key_coef[c] = -(1.0 - ea / denom);
        }
        total += loss_q;

        for c in (0..lo).chain(hi..n) {
            key_coef[c] = libm::exp(key_logits[c] - max) * inv_denoms;
        }
        for (c, coef) in mem_coef.iter_mut().enumerate() {
            *coef = libm::exp(mem_logits[c] - max) * inv_denoms;
        }

        let g = &mut grad[q * d..(q + 1) * d];
        for (c, &coef) in key_coef.iter().enumerate() {
            if coef == 0.0 {
                continue;
            }
            let w = coef * scale * inv_tau;
            for (gk, &z) in g.iter_mut().zip(keys.row(c)) {
                *gk += w * z as f64;
            }
        }
        for (c, &coef) in mem_coef.iter().enumerate() {
            let w = coef * scale * inv_tau;
            for (gk, &z) in g.iter_mut().zip(memory.row(c)) {
                *gk += w * z as f64;
            }
        }
    }
    let grad = Tensor::matrix(n, d, grad.into_iter().map(|v| v as f32).collect())?;
    Ok((total * scale, grad))
}

/// Records the contrastive loss of query embeddings `h` against detached
/// `keys` and `memory` on the tape.
pub fn contrastive_loss(
    tape: &mut Tape,
    h: Var,
    keys: &Tensor,
    memory: &MemoryQueue,
    cfg: &ContrastiveConfig,
) -> Result<Var> {
    let mem = memory.to_tensor();
    let (value, grad) =
        contrastive_value_and_grad(tape.value(h), keys, &mem, cfg.window, cfg.temperature)?;
    tape.fused_scalar("contrastive_loss", value as f32, vec![(h, grad)])
}

/// Pushes one key embedding per snippet, at a uniformly random frame.
pub fn enqueue_memory<R: Rng + ?Sized>(
    queue: &mut MemoryQueue,
    keys: &Tensor,
    window: usize,
    rng: &mut R,
) -> Result<()> {
    if window == 0 || !keys.rows().is_multiple_of(window) {
        return Err(Error::shape(
            "enqueue_memory",
            format!("{} key rows do not form snippets of {window}", keys.rows()),
        ));
    }
    for s in 0..keys.rows() / window {
        let j = rng.random_range(0..window);
        queue.push(keys.row(s * window + j))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pair(alpha: f32) -> EncoderPair {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        EncoderPair::new(
            EncoderShape {
                input_dim: 6,
                embed_dim: 4,
            },
            alpha,
            &mut rng,
        )
        .unwrap()
    }

    fn frames(rows: usize, cols: usize, seed: u64) -> Tensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
        Tensor::matrix(rows, cols, data).unwrap()
    }

    #[test]
    fn query_rows_are_unit_norm_and_deterministic() {
        let enc = pair(0.999);
        let mut x = frames(5, 6, 1);
        let first = x.row(0).to_vec();
        x.row_mut(3).copy_from_slice(&first);
        let h = embed_frames(&enc, &x).unwrap();
        for r in 0..5 {
            assert!((tensor::dot(h.row(r), h.row(r)) - 1.0).abs() < 1e-5);
        }
        assert_eq!(h.row(0), h.row(3));
    }

    #[test]
    fn width_mismatch_is_rejected() {
        let enc = pair(0.999);
        assert!(matches!(
            encode_key(&enc, &frames(2, 5, 1)),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn momentum_update_cases() {
        let mut enc = pair(1.0);
        for p in enc.query.iter_mut() {
            p.value.fill(1.0);
        }
        for p in enc.key.iter_mut() {
            p.value.fill(0.0);
        }
        momentum_update(&mut enc);
        assert!(enc.key.iter().all(|p| p.value.data().iter().all(|&v| v == 0.0)));

        enc.alpha = 0.999;
        momentum_update(&mut enc);
        for p in enc.key.iter() {
            for &v in p.value.data() {
                assert!((v - 0.001).abs() < 1e-7);
            }
        }

        enc.alpha = 0.0;
        momentum_update(&mut enc);
        for (k, q) in enc.key.iter().zip(enc.query.iter()) {
            assert_eq!(k.value, q.value);
        }
    }

    #[test]
    fn key_equals_query_after_copy() {
        let mut enc = pair(0.0);
        for p in enc.query.iter_mut() {
            for v in p.value.data_mut() {
                *v *= 1.5;
            }
        }
        momentum_update(&mut enc);
        let x = frames(4, 6, 2);
        assert_eq!(encode_key(&enc, &x).unwrap(), embed_frames(&enc, &x).unwrap());
    }

    #[test]
    fn key_path_receives_no_gradient() {
        let enc = pair(0.999);
        let x = frames(6, 6, 5);
        let mut tape = Tape::new();
        let xv = tape.constant(x.clone()).unwrap();
        let h = encode_query(&mut tape, &enc, xv).unwrap();
        let z = encode_key(&enc, &x).unwrap();
        let queue = MemoryQueue::new(8, 4);
        let loss = contrastive_loss(&mut tape, h, &z, &queue, &ContrastiveConfig { temperature: 0.2, window: 3 }).unwrap();
        let grads = tape.backward(loss).unwrap();
        let mut key = enc.key.clone();
        let mut query = enc.query.clone();
        // gradients are routed by store identity; clones receive nothing
        key.accumulate(&grads);
        query.accumulate(&grads);
        assert!(key.iter().all(|p| p.grad.data().iter().all(|&g| g == 0.0)));
        let mut orig_key = enc.key;
        orig_key.accumulate(&grads);
        assert!(orig_key.iter().all(|p| p.grad.data().iter().all(|&g| g == 0.0)));
        let mut orig_query = enc.query;
        orig_query.accumulate(&grads);
        assert!(orig_query.iter().any(|p| p.grad.data().iter().any(|&g| g != 0.0)));
    }

    #[test]
    fn perfect_alignment_floor() {
        let h = Tensor::matrix(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let z = Tensor::matrix(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let (loss, _) = contrastive_value_and_grad(&h, &z, &Tensor::zeros(&[0, 2]), 2, 0.2).unwrap();
        assert_eq!(loss, 0.0);
    }

    #[test]
    fn single_negative_hand_value() {
        // one snippet of two identical frames, one orthogonal memory entry
        let h = Tensor::matrix(2, 2, vec![1.0, 0.0, 1.0, 0.0]).unwrap();
        let z = Tensor::matrix(2, 2, vec![1.0, 0.0, 1.0, 0.0]).unwrap();
        let mem = Tensor::matrix(1, 2, vec![0.0, 1.0]).unwrap();
        let (loss, _) = contrastive_value_and_grad(&h, &z, &mem, 2, 0.2).unwrap();
        let expected = -libm::log(libm::exp(5.0) / (libm::exp(5.0) + 1.0));
        assert!((loss - expected).abs() < 1e-9);
        assert!((loss - 0.006715).abs() < 1e-6);
    }

    #[test]
    fn window_below_two_is_a_config_error() {
        let h = Tensor::zeros(&[3, 2]);
        let err = contrastive_value_and_grad(&h, &h, &Tensor::zeros(&[0, 2]), 1, 0.2).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn queue_is_fifo_with_capacity() {
        let mut q = MemoryQueue::new(3, 2);
        for i in 0..5 {
            q.push(&[1.0, i as f32]).unwrap();
        }
        assert_eq!(q.len(), 3);
        let firsts: Vec<f32> = q.iter().map(|r| r[1] / r[0]).collect();
        assert!((firsts[0] - 2.0).abs() < 1e-6 && (firsts[2] - 4.0).abs() < 1e-6);
        assert!(q.push(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn enqueue_one_per_snippet() {
        let enc = pair(0.999);
        let z = encode_key(&enc, &frames(12, 6, 9)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut q = MemoryQueue::new(100, 4);
        enqueue_memory(&mut q, &z, 3, &mut rng).unwrap();
        assert_eq!(q.len(), 4);
        let mut full = MemoryQueue::new(4, 4);
        enqueue_memory(&mut full, &z, 3, &mut rng).unwrap();
        let before: Vec<Vec<f32>> = full.iter().map(|r| r.to_vec()).collect();
        enqueue_memory(&mut full, &z.select_rows(&[0, 1, 2, 3, 4, 5]).unwrap(), 3, &mut rng).unwrap();
        assert_eq!(full.len(), 4);
        let after: Vec<Vec<f32>> = full.iter().map(|r| r.to_vec()).collect();
        assert_eq!(&after[..2], &before[2..]);
        for r in full.iter() {
            assert!((tensor::dot(r, r) - 1.0).abs() < 1e-5);
        }
    }

    fn corpus() -> Vec<FrameFeatureSequence> {
        (0..20)
            .map(|i| {
                let len = if i == 3 { 15 } else { 40 + i };
                FrameFeatureSequence::new(alloc::format!("v{i}"), 30.0, frames(len, 3, i as u64)).unwrap()
            })
            .collect()
    }

    #[test]
    fn batch_shape_and_non_overlap() {
        let c = corpus();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let b = sample_batch(&c, 16, 2, 10, &mut rng).unwrap();
        assert_eq!(b.num_snippets(), 32);
        assert_eq!(b.frames.shape(), &[320, 3]);
        assert!(!b.video_index.contains(&3));
        for pair in b.starts.chunks(2).zip(b.video_index.chunks(2)) {
            let (s, v) = pair;
            assert_eq!(v[0], v[1]);
            assert!(s[0] + 10 <= s[1]);
            assert!(s[1] + 10 <= c[v[1]].num_frames());
        }
        let mut distinct = b.video_index.clone();
        distinct.dedup();
        assert_eq!(distinct.len(), 16);
        assert_eq!(b.frames.row(0), c[b.video_index[0]].features.row(b.starts[0]));
    }

    #[test]
    fn batch_is_seed_deterministic() {
        let c = corpus();
        let a = sample_batch(&c, 8, 2, 10, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let b = sample_batch(&c, 8, 2, 10, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn small_corpus_is_an_error() {
        let c = corpus();
        assert!(sample_batch(&c, 20, 2, 10, &mut ChaCha8Rng::seed_from_u64(4)).is_err());
    }
}
