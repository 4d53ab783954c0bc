//! Masked frame-feature reconstruction.
//!
//! A snippet of `T` embeddings gets sin-cos positional codes added, the
//! masked rows are replaced by a learned mask token, and a stack of pre-norm
//! residual attention blocks followed by a residual affine head predicts the
//! masked embeddings. Attention is bidirectional and unrestricted within a
//! snippet; the mask acts only through token replacement.
//!
//! All functions take snippets stacked snippet-major, `[L·T, D]`, so a whole
//! batch (or every sliding window of a video) runs as one set of tape ops.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::nn::{uniform_init, LayerNorm, Linear};
use crate::param::{ParamId, Params};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct ReconstructionConfig {
    pub window: usize,
    pub mask_size: usize,
    pub beta: f32,
}

impl Default for ReconstructionConfig {
    fn default() -> Self {
        ReconstructionConfig {
            window: 10,
            mask_size: 1,
            beta: 1.0,
        }
    }
}

impl ReconstructionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.mask_size == 0 || self.mask_size >= self.window {
            return Err(Error::Config(format!(
                "mask_size must satisfy 1 <= M < T, got M = {}, T = {}",
                self.mask_size, self.window
            )));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::Config(format!("beta must be non-negative, got {}", self.beta)));
        }
        Ok(())
    }
}

/// `T × D` table with `pos[t][2k] = sin(w_k t)`, `pos[t][2k+1] = cos(w_k t)`,
/// `w_k = 10000^(−2k/D)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionalTable {
    table: Tensor,
}

impl PositionalTable {
    pub fn new(window: usize, dim: usize) -> Result<Self> {
        if !dim.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "positional embedding needs an even width, got {dim}"
            )));
        }
        let mut data = Vec::with_capacity(window * dim);
        for t in 0..window {
            for k in 0..dim / 2 {
                let w = 1.0 / libm::pow(10000.0, 2.0 * k as f64 / dim as f64);
                let a = w * t as f64;
                data.push(libm::sin(a) as f32);
                data.push(libm::cos(a) as f32);
            }
        }
        Ok(PositionalTable {
            table: Tensor::matrix(window, dim, data)?,
        })
    }

    pub fn table(&self) -> &Tensor {
        &self.table
    }

    pub fn window(&self) -> usize {
        self.table.rows()
    }

    /// The table repeated for `snippets` stacked snippets.
    fn tiled(&self, snippets: usize) -> Tensor {
        let mut data = Vec::with_capacity(snippets * self.table.numel());
        for _ in 0..snippets {
            data.extend_from_slice(self.table.data());
        }
        Tensor::matrix(snippets * self.table.rows(), self.table.cols(), data)
            .expect("tiling preserves width")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructorShape {
    pub dim: usize,
    pub heads: usize,
    pub layers: usize,
}

#[derive(Debug, Clone, PartialEq)]
struct Head {
    query: Linear,
    key: Linear,
    value: Linear,
    out: ParamId,
}

#[derive(Debug, Clone, PartialEq)]
struct Block {
    ln1: LayerNorm,
    heads: Vec<Head>,
    out_bias: ParamId,
    ln2: LayerNorm,
    fc1: Linear,
    fc2: Linear,
}

/// Mask token, attention blocks and output head (`ffr.*`).
#[derive(Debug, Clone)]
pub struct ReconstructorParams {
    pub params: Params,
    pub mask_token: ParamId,
    shape: ReconstructorShape,
    blocks: Vec<Block>,
    head: Linear,
}

impl ReconstructorParams {
    pub fn new<R: Rng + ?Sized>(shape: ReconstructorShape, rng: &mut R) -> Result<Self> {
        let ReconstructorShape { dim, heads, layers } = shape;
        if heads == 0 || dim % heads != 0 {
            return Err(Error::Config(format!(
                "embedding width {dim} is not divisible by {heads} heads"
            )));
        }
        let head_dim = dim / heads;
        let mut p = Params::new();
        let mask_token = p.add("ffr.mask_token", {
            let data = (0..dim).map(|_| rng.random_range(-0.02..=0.02)).collect();
            Tensor::new(&[dim], data)?
        });
        let mut blocks = Vec::with_capacity(layers);
        for l in 0..layers {
            let pre = format!("ffr.layer{l}");
            let ln1 = LayerNorm::new(&mut p, &format!("{pre}.ln1"), dim);
            let heads = (0..heads)
                .map(|h| {
                    let hp = format!("{pre}.msa.head{h}");
                    Head {
                        query: Linear::new(&mut p, &format!("{hp}.q"), dim, head_dim, rng),
                        key: Linear::new(&mut p, &format!("{hp}.k"), dim, head_dim, rng),
                        value: Linear::new(&mut p, &format!("{hp}.v"), dim, head_dim, rng),
                        out: p.add(
                            format!("{hp}.o.weight"),
                            uniform_init(rng, dim, &[head_dim, dim]),
                        ),
                    }
                })
                .collect();
            let out_bias = p.add(format!("{pre}.msa.out.bias"), Tensor::zeros(&[dim]));
            let ln2 = LayerNorm::new(&mut p, &format!("{pre}.ln2"), dim);
            let fc1 = Linear::new(&mut p, &format!("{pre}.mlp.fc1"), dim, 4 * dim, rng);
            let fc2 = Linear::new(&mut p, &format!("{pre}.mlp.fc2"), 4 * dim, dim, rng);
            blocks.push(Block {
                ln1,
                heads,
                out_bias,
                ln2,
                fc1,
                fc2,
            });
        }
        let head = Linear::new(&mut p, "ffr.head", dim, dim, rng);
        Ok(ReconstructorParams {
            params: p,
            mask_token,
            shape,
            blocks,
            head,
        })
    }

    pub fn shape(&self) -> ReconstructorShape {
        self.shape
    }

    fn head_dim(&self) -> usize {
        self.shape.dim / self.shape.heads
    }
}

/// Samples `mask_size` distinct positions per snippet, returned as global
/// row indices into the stacked `[snippets·window, D]` layout.
pub fn sample_mask_rows<R: Rng + ?Sized>(snippets: usize, window: usize, mask_size: usize, rng: &mut R) -> Result<Vec<usize>> {
    if mask_size == 0 || mask_size > window {
        return Err(Error::Config(format!(
            "cannot mask {mask_size} of {window} frames"
        )));
    }
    let mut rows = Vec::with_capacity(snippets * mask_size);
    for s in 0..snippets {
        let mut picked: Vec<usize> = rand::seq::index::sample(rng, window, mask_size).into_vec();
        picked.sort_unstable();
        rows.extend(picked.into_iter().map(|t| s * window + t));
    }
    Ok(rows)
}

/// Row `t` becomes `h_t + pos_t`, except masked rows, which become the mask
/// token (both terms are replaced).
pub fn assemble_masked_input(
    tape: &mut Tape,
    rec: &ReconstructorParams,
    h: Var,
    mask_rows: &[usize],
    pos: &PositionalTable,
) -> Result<Var> {
    let hv = tape.value(h);
    let window = pos.window();
    if hv.rank() != 2 || hv.cols() != pos.table().cols() || window == 0 || !hv.rows().is_multiple_of(window) {
        return Err(Error::shape(
            "assemble_masked_input",
            format!("embeddings {:?} for positional table {:?}", hv.shape(), pos.table().shape()),
        ));
    }
    let tiled = pos.tiled(hv.rows() / window);
    let pos_var = tape.constant(tiled)?;
    let x = tape.add(h, pos_var)?;
    let token = tape.param(&rec.params, rec.mask_token);
    tape.replace_rows(x, token, mask_rows)
}

/// Runs the attention blocks and output head over an assembled input,
/// returning the output and the attention weights of every head and layer.
pub fn reconstruct_traced(tape: &mut Tape, rec: &ReconstructorParams, input: Var, window: usize) -> Result<(Var, Vec<Var>)> {
    let width = tape.value(input).cols();
    if width != rec.shape.dim {
        return Err(Error::shape(
            "reconstruct",
            format!("input width {width} for model width {}", rec.shape.dim),
        ));
    }
    let p = &rec.params;
    let scale = 1.0 / libm::sqrtf(rec.head_dim() as f32);
    let mut maps = Vec::new();
    let mut x = input;
    for block in &rec.blocks {
        let y = block.ln1.forward(tape, p, x)?;
        let mut attn: Option<Var> = None;
        for head in &block.heads {
            let q = head.query.forward(tape, p, y)?;
            let k = head.key.forward(tape, p, y)?;
            let v = head.value.forward(tape, p, y)?;
            let scores = tape.block_matmul_nt(q, k, window)?;
            let scores = tape.scale(scores, scale)?;
            let weights = tape.softmax(scores)?;
            maps.push(weights);
            let mixed = tape.block_matmul(weights, v, window)?;
            let wo = tape.param(p, head.out);
            let proj = tape.matmul(mixed, wo)?;
            attn = Some(match attn {
                Some(acc) => tape.add(acc, proj)?,
                None => proj,
            });
        }
        let bias = tape.param(p, block.out_bias);
        let attn = match attn {
            Some(a) => tape.add_row(a, bias)?,
            None => return Err(Error::Config("attention needs at least one head".into())),
        };
        let x1 = tape.add(x, attn)?;
        let z = block.ln2.forward(tape, p, x1)?;
        let z = block.fc1.forward(tape, p, z)?;
        let z = tape.gelu(z)?;
        let z = block.fc2.forward(tape, p, z)?;
        x = tape.add(x1, z)?;
    }
    let out = rec.head.forward(tape, p, x)?;
    Ok((tape.add(x, out)?, maps))
}

/// Reconstructed embeddings for every row of the assembled input.
pub fn reconstruct(tape: &mut Tape, rec: &ReconstructorParams, input: Var, window: usize) -> Result<Var> {
    reconstruct_traced(tape, rec, input, window).map(|(out, _)| out)
}

/// Mean over masked rows of `‖recon_t − target_t‖²`; `target` is detached.
pub fn reconstruction_loss(tape: &mut Tape, target: &Tensor, recon: Var, mask_rows: &[usize]) -> Result<Var> {
    if mask_rows.is_empty() {
        return Err(Error::InvalidInput("reconstruction loss needs at least one masked row".into()));
    }
    if target.shape() != tape.value(recon).shape() {
        return Err(Error::shape(
            "reconstruction_loss",
            format!("target {:?} vs reconstruction {:?}", target.shape(), tape.value(recon).shape()),
        ));
    }
    let picked = tape.gather_rows(recon, mask_rows)?;
    let goal = tape.constant(target.select_rows(mask_rows)?)?;
    let diff = tape.sub(picked, goal)?;
    let sq = tape.mul(diff, diff)?;
    let total = tape.sum(sq)?;
    tape.scale(total, 1.0 / mask_rows.len() as f32)
}

/// `L = L_C + β·L_R` on the tape.
pub fn joint_loss(tape: &mut Tape, contrastive: Var, reconstruction: Var, beta: f32) -> Result<Var> {
    let weighted = tape.scale(reconstruction, beta)?;
    tape.add(contrastive, weighted)
}

/// `L = L_C + β·L_R` for plain numbers.
pub fn joint_loss_value(contrastive: f64, reconstruction: f64, beta: f64) -> f64 {
    contrastive + beta * reconstruction
}
