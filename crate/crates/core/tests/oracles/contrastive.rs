//! Direct double-loop contrastive loss and the checks built on it.

use coseg_core::embedding::contrastive_value_and_grad;
use coseg_core::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn unit_rows(rng: &mut ChaCha8Rng, rows: usize, dim: usize) -> Tensor {
    let mut data = Vec::with_capacity(rows * dim);
    for _ in 0..rows {
        let row: Vec<f32> = (0..dim).map(|_| rng.random_range(-1.0f32..1.0)).collect();
        let n = row.iter().map(|v| v * v).sum::<f32>().sqrt();
        data.extend(row.iter().map(|v| v / n));
    }
    if rows == 0 {
        return Tensor::new(&[0, dim], data).unwrap();
    }
    Tensor::matrix(rows, dim, data).unwrap()
}

fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x as f64 * y as f64).sum()
}

/// `mean_{i,j} −1/(T−1) Σ_{k≠j} log(Q⁺ / (Q⁺ + Σ Q⁻))`, no stabilization.
pub fn brute_force(h: &Tensor, z: &Tensor, mem: &Tensor, t: usize, tau: f64) -> f64 {
    let n = h.rows();
    let snippets = n / t;
    let mem_rows = if mem.numel() == 0 { 0 } else { mem.rows() };
    let mut total = 0.0;
    for i in 0..snippets {
        for j in 0..t {
            let q = h.row(i * t + j);
            let mut neg = 0.0;
            for other in 0..snippets {
                if other == i {
                    continue;
                }
                for k in 0..t {
                    neg += (dot(q, z.row(other * t + k)) / tau).exp();
                }
            }
            for m in 0..mem_rows {
                neg += (dot(q, mem.row(m)) / tau).exp();
            }
            let mut term = 0.0;
            for k in 0..t {
                if k == j {
                    continue;
                }
                let pos = (dot(q, z.row(i * t + k)) / tau).exp();
                term -= (pos / (pos + neg)).ln();
            }
            total += term / (t - 1) as f64;
        }
    }
    total / n as f64
}

/// Largest |fused − double loop| over `cases` random batches with up to 4
/// snippets of 2 to 4 frames and up to 8 queued negatives.
pub fn max_deviation(seed: u64, cases: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut done = 0;
    while done < cases {
        let snippets = rng.random_range(1..=4);
        let t = rng.random_range(2..=4);
        let queue = rng.random_range(0..=8);
        let dim = rng.random_range(2..=6);
        let tau = rng.random_range(0.1f32..1.0);
        if snippets == 1 && queue == 0 {
            continue;
        }
        let h = unit_rows(&mut rng, snippets * t, dim);
        let z = unit_rows(&mut rng, snippets * t, dim);
        let mem = unit_rows(&mut rng, queue, dim);
        let (fused, _) = contrastive_value_and_grad(&h, &z, &mem, t, tau).unwrap();
        worst = worst.max((fused - brute_force(&h, &z, &mem, t, tau as f64)).abs());
        done += 1;
    }
    worst
}

/// Largest |L − log(1 + #negatives)| at temperature 1e6.
pub fn infinite_temperature_deviation() -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for &(snippets, t, queue) in &[(2usize, 3usize, 4usize), (4, 4, 8), (3, 2, 0), (1, 4, 5)] {
        let h = unit_rows(&mut rng, snippets * t, 4);
        let z = unit_rows(&mut rng, snippets * t, 4);
        let mem = unit_rows(&mut rng, queue, 4);
        let negatives = (snippets - 1) * t + queue;
        let (value, _) = contrastive_value_and_grad(&h, &z, &mem, t, 1e6).unwrap();
        worst = worst.max((value - (1.0 + negatives as f64).ln()).abs());
    }
    worst
}
