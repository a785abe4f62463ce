//! Shared instance generators and brute-force oracles for the integration tests.
//!
//! The oracles here enumerate configurations with `models::log_weight` directly and never go
//! through the `exact` module, so they check it independently.

#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use spinlab::graphs::Graph;
use spinlab::models::{log_weight, SpinModel};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `G(n, p)` as a simple graph.
pub fn random_graph(n: usize, p: f64, r: &mut impl Rng) -> Graph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if r.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    Graph::simple(n, &edges).unwrap()
}

/// Graph from the bits of `mask` over the pairs `(u, v)`, `u < v`, in lexicographic order.
pub fn graph_from_mask(n: usize, mask: u64) -> Graph {
    let mut edges = Vec::new();
    let mut bit = 0;
    for u in 0..n {
        for v in u + 1..n {
            if mask >> bit & 1 == 1 {
                edges.push((u, v));
            }
            bit += 1;
        }
    }
    Graph::simple(n, &edges).unwrap()
}

/// Hardcore or graphical Ising model on `G(n, ½)` with random parameters.
pub fn random_model(n: usize, r: &mut impl Rng) -> SpinModel {
    let g = random_graph(n, 0.5, r);
    if r.random::<bool>() {
        SpinModel::hardcore(g, r.random_range(0.1..5.0)).unwrap()
    } else {
        let beta = r.random_range(-1.0..1.0);
        let h = (0..n).map(|_| r.random_range(-0.8..0.8)).collect();
        SpinModel::ising(g, beta, h).unwrap()
    }
}

pub fn config(n: usize, mask: usize) -> Vec<bool> {
    (0..n).map(|v| mask >> v & 1 == 1).collect()
}

/// Normalised probabilities of all `2^n` configurations, by direct weights.
pub fn brute_probs(model: &SpinModel) -> Vec<f64> {
    let n = model.n();
    let lw: Vec<f64> = (0..1usize << n).map(|m| log_weight(model, &config(n, m))).collect();
    let top = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = lw.iter().map(|l| (l - top).exp()).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

pub fn brute_log_z(model: &SpinModel) -> f64 {
    let n = model.n();
    let lw: Vec<f64> = (0..1usize << n).map(|m| log_weight(model, &config(n, m))).collect();
    let top = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    top + lw.iter().map(|l| (l - top).exp()).sum::<f64>().ln()
}

/// `Ψ(i,j) = Pr[X_j=1 | X_i=1] − Pr[X_j=1 | X_i=0]`, diagonal 1, zero rows and columns for
/// frozen coordinates.
pub fn brute_influence(model: &SpinModel) -> DMatrix<f64> {
    let n = model.n();
    let p = brute_probs(model);
    let pr = |f: &dyn Fn(usize) -> bool| -> f64 {
        p.iter().enumerate().filter(|(m, _)| f(*m)).map(|(_, q)| q).sum()
    };
    let free: Vec<bool> = (0..n)
        .map(|i| {
            let p1 = pr(&|m| m >> i & 1 == 1);
            p1 > 1e-300 && 1.0 - p1 > 1e-300
        })
        .collect();
    DMatrix::from_fn(n, n, |i, j| {
        if !free[i] || !free[j] {
            return 0.0;
        }
        if i == j {
            return 1.0;
        }
        let on = pr(&|m| m >> i & 1 == 1);
        let both = pr(&|m| m >> i & 1 == 1 && m >> j & 1 == 1);
        let j_only = pr(&|m| m >> i & 1 == 0 && m >> j & 1 == 1);
        both / on - j_only / (1.0 - on)
    })
}

/// Covariance in the 0/1 encoding.
pub fn brute_covariance(model: &SpinModel) -> DMatrix<f64> {
    let n = model.n();
    let p = brute_probs(model);
    let mut mean = vec![0.0; n];
    let mut second = DMatrix::<f64>::zeros(n, n);
    for (m, q) in p.iter().enumerate() {
        for i in 0..n {
            if m >> i & 1 == 1 {
                mean[i] += q;
                for j in 0..n {
                    if m >> j & 1 == 1 {
                        second[(i, j)] += q;
                    }
                }
            }
        }
    }
    DMatrix::from_fn(n, n, |i, j| second[(i, j)] - mean[i] * mean[j])
}

/// Largest real eigenvalue of a (not necessarily symmetric) matrix.
pub fn top_real_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}

pub fn top_symmetric_eigenvalue(m: DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m).eigenvalues.max()
}

/// Mean and standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let k = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / k;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}
