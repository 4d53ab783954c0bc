//! Tape-based reverse-mode automatic differentiation.
//!
//! A [`Tape`] records every operation in execution order, so the node list is
//! already a topological order and `backward` is a single reverse sweep.
//! Gradients accumulate additively whenever a value is used more than once.
//! A tape is single-threaded; independent tapes share no state.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::param::{ParamId, Params, StoreId};
use crate::tensor::{self, Tensor};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
const GELU_K: f64 = 0.044_715;

#[derive(Debug)]
enum Op {
    Leaf,
    Param { store: StoreId, id: ParamId },
    MatMul(Var, Var),
    Transpose(Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddRow(Var, Var),
    Scale(Var, f32),
    Gelu(Var),
    Sum(Var),
    Softmax(Var),
    LayerNorm {
        x: Var,
        gamma: Var,
        beta: Var,
        xhat: Tensor,
        rstd: Vec<f64>,
    },
    L2Normalize {
        x: Var,
        norms: Vec<f64>,
    },
    GatherRows {
        x: Var,
        rows: Vec<usize>,
    },
    ReplaceRows {
        x: Var,
        token: Var,
        rows: Vec<usize>,
    },
    BlockMatMulNT {
        a: Var,
        b: Var,
        block: usize,
    },
    BlockMatMul {
        p: Var,
        v: Var,
        block: usize,
    },
    /// Scalar-valued fused op whose input gradients were computed in forward.
    Fused {
        inputs: Vec<(Var, Tensor)>,
    },
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients produced by [`Tape::backward`].
#[derive(Debug, Default)]
pub struct Gradients {
    params: Vec<(StoreId, ParamId, Tensor)>,
    inputs: Vec<(Var, Tensor)>,
}

impl Gradients {
    /// Per-use parameter gradients; a parameter used twice appears twice.
    pub fn iter(&self) -> impl Iterator<Item = (StoreId, ParamId, &Tensor)> {
        self.params.iter().map(|(s, p, g)| (*s, *p, g))
    }

    /// Gradient with respect to a leaf created by [`Tape::input`].
    pub fn wrt(&self, var: Var) -> Option<&Tensor> {
        self.inputs.iter().find(|(v, _)| *v == var).map(|(_, g)| g)
    }
}

fn same_shape(op: &'static str, a: &Tensor, b: &Tensor) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::shape(
            op,
            format!("{:?} vs {:?}", a.shape(), b.shape()),
        ));
    }
    Ok(())
}

fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + libm::tanh(GELU_C * (x + GELU_K * x * x * x)))
}

fn gelu_grad(x: f64) -> f64 {
    let t = libm::tanh(GELU_C * (x + GELU_K * x * x * x));
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_K * x * x)
}

fn accumulate(grads: &mut [Option<Tensor>], v: Var, g: Tensor) {
    match &mut grads[v.0] {
        Some(existing) => existing.add_assign(&g),
        slot => *slot = Some(g),
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn push(&mut self, op_name: &'static str, value: Tensor, op: Op, requires_grad: bool) -> Result<Var> {
        if !value.is_finite() {
            return Err(Error::NonFinite { op: op_name });
        }
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Ok(Var(self.nodes.len() - 1))
    }

    fn rg(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    /// A leaf that never receives gradients.
    pub fn constant(&mut self, value: Tensor) -> Result<Var> {
        self.push("constant", value, Op::Leaf, false)
    }

    /// A leaf whose gradient is reported through [`Gradients::wrt`].
    pub fn input(&mut self, value: Tensor) -> Result<Var> {
        self.push("input", value, Op::Leaf, true)
    }

    /// Records the current value of a parameter; its gradient is routed back
    /// to `store` by [`Params::accumulate`].
    pub fn param(&mut self, store: &Params, id: ParamId) -> Var {
        self.nodes.push(Node {
            value: store.value(id).clone(),
            op: Op::Param {
                store: store.store_id(),
                id,
            },
            requires_grad: true,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).matmul(self.value(b))?;
        let rg = self.rg(&[a, b]);
        self.push("matmul", out, Op::MatMul(a, b), rg)
    }

    pub fn transpose(&mut self, x: Var) -> Result<Var> {
        let xv = self.value(x);
        if xv.rank() != 2 {
            return Err(Error::shape("transpose", format!("rank {} input", xv.rank())));
        }
        let out = xv.transpose();
        let rg = self.rg(&[x]);
        self.push("transpose", out, Op::Transpose(x), rg)
    }

    fn zip_with(&mut self, name: &'static str, a: Var, b: Var, f: impl Fn(f32, f32) -> f32, op: Op) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        same_shape(name, av, bv)?;
        let data = av.data().iter().zip(bv.data()).map(|(&x, &y)| f(x, y)).collect();
        let out = Tensor::new(av.shape(), data)?;
        let rg = self.rg(&[a, b]);
        self.push(name, out, op, rg)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_with("add", a, b, |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_with("sub", a, b, |x, y| x - y, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_with("mul", a, b, |x, y| x * y, Op::Mul(a, b))
    }

    /// Adds a length-`cols` vector to every row of `x`.
    pub fn add_row(&mut self, x: Var, bias: Var) -> Result<Var> {
        let (xv, bv) = (self.value(x), self.value(bias));
        let cols = xv.cols();
        if bv.numel() != cols {
            return Err(Error::shape(
                "add_row",
                format!("bias of {} values for rows of width {cols}", bv.numel()),
            ));
        }
        let mut out = xv.clone();
        for i in 0..out.rows() {
            for (o, &b) in out.row_mut(i).iter_mut().zip(bv.data()) {
                *o += b;
            }
        }
        let rg = self.rg(&[x, bias]);
        self.push("add_row", out, Op::AddRow(x, bias), rg)
    }

    pub fn scale(&mut self, x: Var, factor: f32) -> Result<Var> {
        let xv = self.value(x);
        let data = xv.data().iter().map(|&v| v * factor).collect();
        let out = Tensor::new(xv.shape(), data)?;
        let rg = self.rg(&[x]);
        self.push("scale", out, Op::Scale(x, factor), rg)
    }

    /// GELU with the tanh approximation.
    pub fn gelu(&mut self, x: Var) -> Result<Var> {
        let xv = self.value(x);
        let data = xv.data().iter().map(|&v| gelu(v as f64) as f32).collect();
        let out = Tensor::new(xv.shape(), data)?;
        let rg = self.rg(&[x]);
        self.push("gelu", out, Op::Gelu(x), rg)
    }

    pub fn sum(&mut self, x: Var) -> Result<Var> {
        let out = Tensor::scalar(self.value(x).sum() as f32);
        let rg = self.rg(&[x]);
        self.push("sum", out, Op::Sum(x), rg)
    }

    /// Softmax over the last dimension.
    pub fn softmax(&mut self, x: Var) -> Result<Var> {
        let out = tensor::softmax_rows(self.value(x));
        let rg = self.rg(&[x]);
        self.push("softmax", out, Op::Softmax(x), rg)
    }

    /// Layer normalization over the last dimension with affine `gamma`, `beta`.
    pub fn layer_norm(&mut self, x: Var, gamma: Var, beta: Var, eps: f32) -> Result<Var> {
        let (xv, gv, bv) = (self.value(x), self.value(gamma), self.value(beta));
        let d = xv.cols();
        if gv.numel() != d || bv.numel() != d {
            return Err(Error::shape(
                "layer_norm",
                format!(
                    "row width {d} with gamma of {} and beta of {}",
                    gv.numel(),
                    bv.numel()
                ),
            ));
        }
        let mut xhat = xv.clone();
        let mut out = xv.clone();
        let mut rstd = Vec::with_capacity(xv.rows());
        for i in 0..xv.rows() {
            let row = xv.row(i);
            let mean = row.iter().map(|&v| v as f64).sum::<f64>() / d as f64;
            let var = row
                .iter()
                .map(|&v| {
                    let c = v as f64 - mean;
                    c * c
                })
                .sum::<f64>()
                / d as f64;
            let r = 1.0 / libm::sqrt(var + eps as f64);
            rstd.push(r);
            let xh = xhat.row_mut(i);
            for (k, v) in xh.iter_mut().enumerate() {
                *v = ((row[k] as f64 - mean) * r) as f32;
            }
            let o = out.row_mut(i);
            for k in 0..d {
                o[k] = xh[k] * gv.data()[k] + bv.data()[k];
            }
        }
        let rg = self.rg(&[x, gamma, beta]);
        self.push(
            "layer_norm",
            out,
            Op::LayerNorm {
                x,
                gamma,
                beta,
                xhat,
                rstd,
            },
            rg,
        )
    }

    /// Scales each row to unit Euclidean norm; rows with norm below
    /// [`tensor::DEGENERATE_NORM`] stay zero and pass no gradient.
    pub fn l2_normalize(&mut self, x: Var) -> Result<Var> {
        let n = tensor::l2_normalize_rows(self.value(x));
        let rg = self.rg(&[x]);
        self.push(
            "l2_normalize",
            n.tensor,
            Op::L2Normalize { x, norms: n.norms },
            rg,
        )
    }

    pub fn gather_rows(&mut self, x: Var, rows: &[usize]) -> Result<Var> {
        let out = self.value(x).select_rows(rows)?;
        let rg = self.rg(&[x]);
        self.push(
            "gather_rows",
            out,
            Op::GatherRows {
                x,
                rows: rows.to_vec(),
            },
            rg,
        )
    }

    /// Returns `x` with each listed row replaced by `token`.
    pub fn replace_rows(&mut self, x: Var, token: Var, rows: &[usize]) -> Result<Var> {
        let (xv, tv) = (self.value(x), self.value(token));
        if tv.numel() != xv.cols() {
            return Err(Error::shape(
                "replace_rows",
                format!("token of {} values for rows of width {}", tv.numel(), xv.cols()),
            ));
        }
        let mut seen = rows.to_vec();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != rows.len() {
            return Err(Error::shape("replace_rows", "row listed twice"));
        }
        let mut out = xv.clone();
        for &r in rows {
            if r >= out.rows() {
                return Err(Error::shape(
                    "replace_rows",
                    format!("row {r} out of range for {} rows", out.rows()),
                ));
            }
            out.row_mut(r).copy_from_slice(tv.data());
        }
        let rg = self.rg(&[x, token]);
        self.push(
            "replace_rows",
            out,
            Op::ReplaceRows {
                x,
                token,
                rows: rows.to_vec(),
            },
            rg,
        )
    }

    fn check_blocks(op: &'static str, rows: usize, block: usize) -> Result<()> {
        if block == 0 || !rows.is_multiple_of(block) {
            return Err(Error::shape(
                op,
                format!("{rows} rows do not split into blocks of {block}"),
            ));
        }
        Ok(())
    }

    /// For rows split into consecutive blocks of `block`, returns the
    /// `[rows, block]` matrix of `a_r · b_c` over rows `c` of the same block.
    pub fn block_matmul_nt(&mut self, a: Var, b: Var, block: usize) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        same_shape("block_matmul_nt", av, bv)?;
        Self::check_blocks("block_matmul_nt", av.rows(), block)?;
        let n = av.rows();
        let mut out = Vec::with_capacity(n * block);
        for r in 0..n {
            let start = r / block * block;
            for c in 0..block {
                out.push(tensor::dot(av.row(r), bv.row(start + c)) as f32);
            }
        }
        let out = Tensor::matrix(n, block, out)?;
        let rg = self.rg(&[a, b]);
        self.push("block_matmul_nt", out, Op::BlockMatMulNT { a, b, block }, rg)
    }

    /// Block-diagonal product: row `r` of the result is `Σ_c p[r, c] · v_c`
    /// over rows `c` of the block containing `r`.
    pub fn block_matmul(&mut self, p: Var, v: Var, block: usize) -> Result<Var> {
        let (pv, vv) = (self.value(p), self.value(v));
        Self::check_blocks("block_matmul", vv.rows(), block)?;
        if pv.rows() != vv.rows() || pv.cols() != block {
            return Err(Error::shape(
                "block_matmul",
                format!("weights {:?} for values {:?}", pv.shape(), vv.shape()),
            ));
        }
        let (n, k) = (vv.rows(), vv.cols());
        let mut out = Vec::with_capacity(n * k);
        let mut acc = vec![0.0f64; k];
        for r in 0..n {
            let start = r / block * block;
            acc.iter_mut().for_each(|a| *a = 0.0);
            for (c, &w) in pv.row(r).iter().enumerate() {
                for (slot, &x) in acc.iter_mut().zip(vv.row(start + c)) {
                    *slot += w as f64 * x as f64;
                }
            }
            out.extend(acc.iter().map(|&a| a as f32));
        }
        let out = Tensor::matrix(n, k, out)?;
        let rg = self.rg(&[p, v]);
        self.push("block_matmul", out, Op::BlockMatMul { p, v, block }, rg)
    }

    /// Records a scalar computed outside the tape together with its gradient
    /// with respect to each input.
    pub fn fused_scalar(&mut self, name: &'static str, value: f32, inputs: Vec<(Var, Tensor)>) -> Result<Var> {
        for (v, g) in &inputs {
            same_shape(name, self.value(*v), g)?;
            if !g.is_finite() {
                return Err(Error::NonFinite { op: name });
            }
        }
        let vars: Vec<Var> = inputs.iter().map(|(v, _)| *v).collect();
        let rg = self.rg(&vars);
        self.push(name, Tensor::scalar(value), Op::Fused { inputs }, rg)
    }

    /// Reverse sweep from a scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let numel = self.value(loss).numel();
        if numel != 1 {
            return Err(Error::NotScalar { numel });
        }
        let mut grads: Vec<Option<Tensor>> = Vec::new();
        grads.resize_with(loss.0 + 1, || None);
        grads[loss.0] = Some(Tensor::full(self.value(loss).shape(), 1.0));
        let mut out = Gradients::default();

        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if !node.requires_grad {
                continue;
            }
            let Some(g) = grads[idx].take() else {
                continue;
            };
            if !g.is_finite() {
                return Err(Error::NonFinite { op: "backward" });
            }
            match &node.op {
                Op::Leaf => out.inputs.push((Var(idx), g)),
                Op::Param { store, id } => out.params.push((*store, *id, g)),
                Op::MatMul(a, b) => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    if self.requires_grad(*a) {
                        accumulate(&mut grads, *a, g.matmul(&bv.transpose())?);
                    }
                    if self.requires_grad(*b) {
                        accumulate(&mut grads, *b, av.transpose().matmul(&g)?);
                    }
                }
                Op::Transpose(x) => accumulate(&mut grads, *x, g.transpose()),
                Op::Add(a, b) => {
                    accumulate(&mut grads, *a, g.clone());
                    accumulate(&mut grads, *b, g);
                }
                Op::Sub(a, b) => {
                    let neg = Tensor::new(g.shape(), g.data().iter().map(|v| -v).collect())?;
                    accumulate(&mut grads, *a, g);
                    accumulate(&mut grads, *b, neg);
                }
                Op::Mul(a, b) => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    let ga = g.data().iter().zip(bv.data()).map(|(x, y)| x * y).collect();
                    let gb = g.data().iter().zip(av.data()).map(|(x, y)| x * y).collect();
                    accumulate(&mut grads, *a, Tensor::new(av.shape(), ga)?);
                    accumulate(&mut grads, *b, Tensor::new(bv.shape(), gb)?);
                }
                Op::AddRow(x, bias) => {
                    let bshape = self.value(*bias).shape().to_vec();
                    let cols = g.cols();
                    let mut gb = vec![0.0f64; cols];
                    for r in 0..g.rows() {
                        for (s, &v) in gb.iter_mut().zip(g.row(r)) {
                            *s += v as f64;
                        }
                    }
                    let gb = Tensor::new(&bshape, gb.into_iter().map(|v| v as f32).collect())?;
                    accumulate(&mut grads, *bias, gb);
                    accumulate(&mut grads, *x, g);
                }
                Op::Scale(x, f) => {
                    let data = g.data().iter().map(|v| v * f).collect();
                    accumulate(&mut grads, *x, Tensor::new(g.shape(), data)?);
                }
                Op::Gelu(x) => {
                    let xv = self.value(*x);
                    let data = g
                        .data()
                        .iter()
                        .zip(xv.data())
                        .map(|(&gv, &v)| (gv as f64 * gelu_grad(v as f64)) as f32)
                        .collect();
                    accumulate(&mut grads, *x, Tensor::new(xv.shape(), data)?);
                }
                Op::Sum(x) => {
                    let shape = self.value(*x).shape().to_vec();
                    accumulate(&mut grads, *x, Tensor::full(&shape, g.item()));
                }
                Op::Softmax(x) => {
                    let y = &node.value;
                    let mut gx = g.clone();
                    for r in 0..y.rows() {
                        let yr = y.row(r);
                        let inner = tensor::dot(g.row(r), yr);
                        for (k, v) in gx.row_mut(r).iter_mut().enumerate() {
                            *v = (yr[k] as f64 * (*v as f64 - inner)) as f32;
                        }
                    }
                    accumulate(&mut grads, *x, gx);
                }
                Op::LayerNorm {
                    x,
                    gamma,
                    beta,
                    xhat,
                    rstd,
                } => {
                    let gv = self.value(*gamma);
                    let d = xhat.cols();
                    let mut dgamma = vec![0.0f64; d];
                    let mut dbeta = vec![0.0f64; d];
                    let mut gx = Tensor::zeros(xhat.shape());
                    let mut gxh = vec![0.0f64; d];
                    for r in 0..xhat.rows() {
                        let (gr, xr) = (g.row(r), xhat.row(r));
                        for k in 0..d {
                            dgamma[k] += gr[k] as f64 * xr[k] as f64;
                            dbeta[k] += gr[k] as f64;
                            gxh[k] = gr[k] as f64 * gv.data()[k] as f64;
                        }
                        let mean_g = gxh.iter().sum::<f64>() / d as f64;
                        let mean_gx = gxh
                            .iter()
                            .zip(xr)
                            .map(|(a, &b)| a * b as f64)
                            .sum::<f64>()
                            / d as f64;
                        for (k, o) in gx.row_mut(r).iter_mut().enumerate() {
                            *o = (rstd[r] * (gxh[k] - mean_g - xr[k] as f64 * mean_gx)) as f32;
                        }
                    }
                    let to_t = |v: Vec<f64>, shape: &[usize]| {
                        Tensor::new(shape, v.into_iter().map(|x| x as f32).collect())
                    };
                    let gshape = gv.shape().to_vec();
                    let bshape = self.value(*beta).shape().to_vec();
                    accumulate(&mut grads, *gamma, to_t(dgamma, &gshape)?);
                    accumulate(&mut grads, *beta, to_t(dbeta, &bshape)?);
                    accumulate(&mut grads, *x, gx);
                }
                Op::L2Normalize { x, norms } => {
                    let y = &node.value;
                    let mut gx = g.clone();
                    for r in 0..y.rows() {
                        let n = norms[r];
                        let row = gx.row_mut(r);
                        if n < tensor::DEGENERATE_NORM {
                            row.iter_mut().for_each(|v| *v = 0.0);
                            continue;
                        }
                        let yr = y.row(r);
                        let inner = tensor::dot(g.row(r), yr);
                        for (k, v) in row.iter_mut().enumerate() {
                            *v = ((*v as f64 - yr[k] as f64 * inner) / n) as f32;
                        }
                    }
                    accumulate(&mut grads, *x, gx);
                }
                Op::GatherRows { x, rows } => {
                    let mut gx = Tensor::zeros(self.value(*x).shape());
                    for (i, &r) in rows.iter().enumerate() {
                        for (o, &v) in gx.row_mut(r).iter_mut().zip(g.row(i)) {
                            *o += v;
                        }
                    }
                    accumulate(&mut grads, *x, gx);
                }
                Op::ReplaceRows { x, token, rows } => {
                    let tshape = self.value(*token).shape().to_vec();
                    let mut gt = vec![0.0f64; g.cols()];
                    let mut gx = g;
                    for &r in rows {
                        let row = gx.row_mut(r);
                        for (s, v) in gt.iter_mut().zip(row.iter_mut()) {
                            *s += *v as f64;
                            *v = 0.0;
                        }
                    }
                    let gt = Tensor::new(&tshape, gt.into_iter().map(|v| v as f32).collect())?;
                    accumulate(&mut grads, *token, gt);
                    accumulate(&mut grads, *x, gx);
                }
                Op::BlockMatMulNT { a, b, block } => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    let k = av.cols();
                    let mut ga = vec![0.0f64; av.numel()];
                    let mut gb = vec![0.0f64; bv.numel()];
                    for r in 0..av.rows() {
                        let start = r / block * block;
                        for (c, &w) in g.row(r).iter().enumerate() {
                            let w = w as f64;
                            if w == 0.0 {
                                continue;
                            }
                            let brow = bv.row(start + c);
                            let arow = av.row(r);
                            for j in 0..k {
                                ga[r * k + j] += w * brow[j] as f64;
                                gb[(start + c) * k + j] += w * arow[j] as f64;
                            }
                        }
                    }
                    let ash = av.shape().to_vec();
                    accumulate(&mut grads, *a, Tensor::new(&ash, ga.into_iter().map(|v| v as f32).collect())?);
                    accumulate(&mut grads, *b, Tensor::new(&ash, gb.into_iter().map(|v| v as f32).collect())?);
                }
                Op::BlockMatMul { p, v, block } => {
                    let (pv, vv) = (self.value(*p), self.value(*v));
                    let k = vv.cols();
                    let mut gp = Vec::with_capacity(pv.numel());
                    let mut gv = vec![0.0f64; vv.numel()];
                    for r in 0..pv.rows() {
                        let start = r / block * block;
                        let gr = g.row(r);
                        for (c, &w) in pv.row(r).iter().enumerate() {
                            let vrow = vv.row(start + c);
                            gp.push(tensor::dot(gr, vrow) as f32);
                            for j in 0..k {
                                gv[(start + c) * k + j] += w as f64 * gr[j] as f64;
                            }
                        }
                    }
                    let psh = pv.shape().to_vec();
                    let vsh = vv.shape().to_vec();
                    accumulate(&mut grads, *p, Tensor::new(&psh, gp)?);
                    accumulate(&mut grads, *v, Tensor::new(&vsh, gv.into_iter().map(|v| v as f32).collect())?);
                }
                Op::Fused { inputs } => {
                    let s = g.item();
                    for (v, local) in inputs {
                        let data = local.data().iter().map(|x| x * s).collect();
                        accumulate(&mut grads, *v, Tensor::new(local.shape(), data)?);
                    }
                }
            }
        }
        Ok(out)
    }
}
