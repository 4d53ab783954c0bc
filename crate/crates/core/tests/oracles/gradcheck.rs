//! Full-model finite-difference oracle: a fixed small model and an
//! independent f64 forward of its training loss.

use coseg_core::autodiff::{Tape, Var};
use coseg_core::embedding::{self, ContrastiveConfig};
use coseg_core::reconstruction::{self, PositionalTable};
use coseg_core::train::{CosegModel, ModelConfig};
use coseg_core::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STEPS: [f64; 5] = [1e-2, 3e-3, 1e-3, 3e-4, 1e-4];
pub const REL_TOL: f64 = 1e-3;

/// Richardson-extrapolated central differences over a ladder of step sizes,
/// keeping the estimate that agrees best with its neighbour. Losses are f32,
/// so small steps drown in rounding while strongly curved directions (layer
/// norm of a near-constant row) need small ones.
pub fn derivative(mut f: impl FnMut(f64) -> f64) -> f64 {
    let mut d = |h: f64| (f(h) - f(-h)) / (2.0 * h);
    let est: Vec<f64> = STEPS
        .iter()
        .map(|&h| {
            let coarse = d(h);
            let fine = d(h / 2.0);
            (4.0 * fine - coarse) / 3.0
        })
        .collect();
    let best = (0..est.len() - 1)
        .min_by(|&a, &b| {
            let da = (est[a] - est[a + 1]).abs();
            let db = (est[b] - est[b + 1]).abs();
            da.total_cmp(&db)
        })
        .unwrap();
    est[best + 1]
}

/// Norm-wise relative error. The floor keeps exactly-zero gradients (key
/// biases, which softmax is invariant to) from dividing by rounding noise.
pub fn rel_err(analytic: &[f32], numeric: &[f64]) -> f64 {
    let diff: f64 = analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| (a as f64 - n).powi(2))
        .sum::<f64>()
        .sqrt();
    let na = analytic.iter().map(|&a| (a as f64).powi(2)).sum::<f64>().sqrt();
    let nn = numeric.iter().map(|n| n.powi(2)).sum::<f64>().sqrt();
    diff / na.max(nn).max(1e-4)
}

pub fn random(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    let n: usize = shape.iter().product();
    Tensor::new(shape, (0..n).map(|_| rng.random_range(-1.0f32..1.0)).collect()).unwrap()
}

pub struct Fixture {
    pub model: CosegModel,
    pub frames: Tensor,
    pub keys: Tensor,
    pub target: Tensor,
    pub mask_rows: Vec<usize>,
    pub cfg: ContrastiveConfig,
}

impl Fixture {
    pub fn new() -> Self {
        let window = 5;
        let config = ModelConfig {
            input_dim: 6,
            embed_dim: 8,
            heads: 2,
            layers: 2,
            window,
            queue_capacity: 4,
            alpha: 0.999,
        };
        let mut model = CosegModel::new(config, 21).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..4 {
            let row: Vec<f32> = (0..8).map(|_| rng.random_range(-1.0f32..1.0)).collect();
            model.queue.push(&row).unwrap();
        }
        let frames = random(&mut rng, &[2 * window, 6]);
        let keys = embedding::encode_key(&model.encoder, &frames).unwrap();
        let target = embedding::embed_frames(&model.encoder, &frames).unwrap();
        let mask_rows = reconstruction::sample_mask_rows(2, window, 1, &mut rng).unwrap();
        Fixture {
            model,
            frames,
            keys,
            target,
            mask_rows,
            cfg: ContrastiveConfig { temperature: 0.2, window },
        }
    }

    pub fn loss(&self, model: &CosegModel) -> (Tape, Var) {
        let mut tape = Tape::new();
        let x = tape.constant(self.frames.clone()).unwrap();
        let h = embedding::encode_query(&mut tape, &model.encoder, x).unwrap();
        let lc = embedding::contrastive_loss(&mut tape, h, &self.keys, &model.queue, &self.cfg).unwrap();
        let pos = PositionalTable::new(self.cfg.window, 8).unwrap();
        let input = reconstruction::assemble_masked_input(&mut tape, &model.reconstructor, h, &self.mask_rows, &pos).unwrap();
        let recon = reconstruction::reconstruct(&mut tape, &model.reconstructor, input, self.cfg.window).unwrap();
        let lr = reconstruction::reconstruction_loss(&mut tape, &self.target, recon, &self.mask_rows).unwrap();
        let loss = reconstruction::joint_loss(&mut tape, lc, lr, 1.0).unwrap();
        (tape, loss)
    }
}

/// Plain f64 re-implementation of the training loss, written independently
/// of the tape, used as the finite-difference oracle.
mod reference {
    use std::collections::BTreeMap;

    pub type Weights = BTreeMap<String, (Vec<usize>, Vec<f64>)>;
    type Mat = Vec<Vec<f64>>;

    pub struct Inputs<'a> {
        pub frames: &'a Mat,
        pub keys: &'a Mat,
        pub memory: &'a Mat,
        pub target: &'a Mat,
        pub pos: &'a Mat,
        pub mask_rows: &'a [usize],
        pub window: usize,
        pub heads: usize,
        pub layers: usize,
        pub temperature: f64,
    }

    fn linear(w: &Weights, name: &str, x: &Mat) -> Mat {
        let (shape, wv) = &w[&format!("{name}.weight")];
        let (_, bv) = &w[&format!("{name}.bias")];
        let (din, dout) = (shape[0], shape[1]);
        x.iter()
            .map(|row| {
                (0..dout)
                    .map(|o| bv[o] + (0..din).map(|i| row[i] * wv[i * dout + o]).sum::<f64>())
                    .collect()
            })
            .collect()
    }

    fn gelu(x: f64) -> f64 {
        0.5 * x * (1.0 + ((2.0 / std::f64::consts::PI).sqrt() * (x + 0.044715 * x.powi(3))).tanh())
    }

    fn layer_norm(w: &Weights, name: &str, x: &Mat) -> Mat {
        let g = &w[&format!("{name}.gamma")].1;
        let b = &w[&format!("{name}.beta")].1;
        x.iter()
            .map(|row| {
                let d = row.len() as f64;
                let mean = row.iter().sum::<f64>() / d;
                let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / d;
                let r = 1.0 / (var + 1e-5).sqrt();
                row.iter().enumerate().map(|(k, v)| (v - mean) * r * g[k] + b[k]).collect()
            })
            .collect()
    }

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    pub fn loss(w: &Weights, inp: &Inputs) -> f64 {
        // query encoder
        let mut h = linear(w, "ctfe.query.fc1", inp.frames);
        h.iter_mut().flatten().for_each(|v| *v = gelu(*v));
        let mut h = linear(w, "ctfe.query.fc2", &h);
        for row in &mut h {
            let n = dot(row, row).sqrt();
            row.iter_mut().for_each(|v| *v /= n);
        }

        // contrastive loss, double loop over positives
        let n = h.len();
        let t = inp.window;
        let mut lc = 0.0;
        for q in 0..n {
            let snip = q / t;
            let sim = |z: &[f64]| (dot(&h[q], z) / inp.temperature).exp();
            let neg: f64 = (0..n).filter(|&c| c / t != snip).map(|c| sim(&inp.keys[c])).sum::<f64>()
                + inp.memory.iter().map(|m| sim(m)).sum::<f64>();
            for k in snip * t..snip * t + t {
                if k != q {
                    let pos = sim(&inp.keys[k]);
                    lc -= (pos / (pos + neg)).ln() / (t - 1) as f64;
                }
            }
        }
        lc /= n as f64;

        // masked reconstruction
        let token = &w["ffr.mask_token"].1;
        let mut x: Mat = h
            .iter()
            .enumerate()
            .map(|(r, row)| {
                if inp.mask_rows.contains(&r) {
                    token.clone()
                } else {
                    row.iter().zip(&inp.pos[r % t]).map(|(a, b)| a + b).collect()
                }
            })
            .collect();
        let d = x[0].len();
        let hd = d / inp.heads;
        for l in 0..inp.layers {
            let y = layer_norm(w, &format!("ffr.layer{l}.ln1"), &x);
            let mut attn = vec![w[&format!("ffr.layer{l}.msa.out.bias")].1.clone(); n];
            for hh in 0..inp.heads {
                let pre = format!("ffr.layer{l}.msa.head{hh}");
                let q = linear(w, &format!("{pre}.q"), &y);
                let k = linear(w, &format!("{pre}.k"), &y);
                let v = linear(w, &format!("{pre}.v"), &y);
                let wo = &w[&format!("{pre}.o.weight")].1;
                for i in 0..n {
                    let s0 = (i / t) * t;
                    let scores: Vec<f64> = (s0..s0 + t).map(|j| dot(&q[i], &k[j]) / (hd as f64).sqrt()).collect();
                    let m = scores.iter().cloned().fold(f64::MIN, f64::max);
                    let e: Vec<f64> = scores.iter().map(|s| (s - m).exp()).collect();
                    let z: f64 = e.iter().sum();
                    let mixed: Vec<f64> = (0..hd)
                        .map(|c| (0..t).map(|j| e[j] / z * v[s0 + j][c]).sum())
                        .collect();
                    for o in 0..d {
                        attn[i][o] += (0..hd).map(|c| mixed[c] * wo[c * d + o]).sum::<f64>();
                    }
                }
            }
            let x1: Mat = x.iter().zip(&attn).map(|(a, b)| a.iter().zip(b).map(|(p, q)| p + q).collect()).collect();
            let z = layer_norm(w, &format!("ffr.layer{l}.ln2"), &x1);
            let mut z = linear(w, &format!("ffr.layer{l}.mlp.fc1"), &z);
            z.iter_mut().flatten().for_each(|v| *v = gelu(*v));
            let z = linear(w, &format!("ffr.layer{l}.mlp.fc2"), &z);
            x = x1.iter().zip(&z).map(|(a, b)| a.iter().zip(b).map(|(p, q)| p + q).collect()).collect();
        }
        let head = linear(w, "ffr.head", &x);
        let lr = inp
            .mask_rows
            .iter()
            .map(|&r| (0..d).map(|c| (x[r][c] + head[r][c] - inp.target[r][c]).powi(2)).sum::<f64>())
            .sum::<f64>()
            / inp.mask_rows.len() as f64;
        lc + lr
    }
}

fn to_mat(t: &Tensor) -> Vec<Vec<f64>> {
    (0..t.rows()).map(|r| t.row(r).iter().map(|&v| v as f64).collect()).collect()
}

pub struct FullModelCheck {
    /// |reference loss − tape loss|, relative to max(|reference|, 1).
    pub loss_gap: f64,
    /// Norm-wise relative gradient error per parameter tensor.
    pub errors: Vec<(String, f64)>,
}

impl FullModelCheck {
    pub fn worst(&self) -> (&str, f64) {
        self.errors
            .iter()
            .map(|(n, e)| (n.as_str(), *e))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap_or(("", 0.0))
    }
}

/// Analytic gradients of every trainable tensor against finite differences
/// of the reference loss.
pub fn full_model() -> FullModelCheck {
    let mut fx = Fixture::new();
    let (tape, loss) = fx.loss(&fx.model);
    let tape_loss = tape.value(loss).item() as f64;
    let grads = tape.backward(loss).unwrap();
    fx.model.encoder.query.accumulate(&grads);
    fx.model.reconstructor.params.accumulate(&grads);

    let stores = [&fx.model.encoder.query, &fx.model.reconstructor.params];
    let mut weights = reference::Weights::new();
    for store in stores {
        for p in store.iter() {
            let vals = p.value.data().iter().map(|&v| v as f64).collect();
            weights.insert(p.name.clone(), (p.value.shape().to_vec(), vals));
        }
    }
    let (frames, keys, target) = (to_mat(&fx.frames), to_mat(&fx.keys), to_mat(&fx.target));
    let memory = to_mat(&fx.model.queue.to_tensor());
    let pos = to_mat(PositionalTable::new(fx.cfg.window, 8).unwrap().table());
    let inputs = reference::Inputs {
        frames: &frames,
        keys: &keys,
        memory: &memory,
        target: &target,
        pos: &pos,
        mask_rows: &fx.mask_rows,
        window: fx.cfg.window,
        heads: 2,
        layers: 2,
        temperature: fx.cfg.temperature as f64,
    };
    let ref_loss = reference::loss(&weights, &inputs);
    let loss_gap = (ref_loss - tape_loss).abs() / ref_loss.abs().max(1.0);

    let mut errors = Vec::new();
    for store in stores {
        for param in store.iter() {
            let numeric: Vec<f64> = (0..param.value.numel())
                .map(|e| {
                    let mut w = weights.clone();
                    derivative(|h| {
                        let slot = &mut w.get_mut(&param.name).unwrap().1[e];
                        let orig = *slot;
                        *slot = orig + h;
                        let v = reference::loss(&w, &inputs);
                        w.get_mut(&param.name).unwrap().1[e] = orig;
                        v
                    })
                })
                .collect();
            errors.push((param.name.clone(), rel_err(param.grad.data(), &numeric)));
        }
    }
    assert_eq!(errors.len(), weights.len());
    FullModelCheck { loss_gap, errors }
}
