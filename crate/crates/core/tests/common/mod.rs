//! Test-only fixtures and dense-matrix oracles. Nothing here calls the
//! sparse kernels under test.

#![allow(dead_code)]

use fuse_core::{NodeLabels, Pair, PairSet, Sign, SparseGraph};
use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// G(n, p) with at least one edge.
pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> SparseGraph {
    let mut rng = rng(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p) {
                edges.push((i, j));
            }
        }
    }
    if edges.is_empty() {
        edges.push((0, n - 1));
    }
    SparseGraph::from_edges(n, &edges).unwrap().0
}

/// Two-or-more block stochastic block model; returns the graph and block
/// labels (`block = node * blocks / n`).
pub fn sbm(n: usize, blocks: usize, p_in: f64, p_out: f64, seed: u64) -> (SparseGraph, Vec<usize>) {
    let labels: Vec<usize> = (0..n).map(|i| i * blocks / n).collect();
    let mut rng = rng(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let p = if labels[i] == labels[j] { p_in } else { p_out };
            if rng.random_bool(p) {
                edges.push((i, j));
            }
        }
    }
    (SparseGraph::from_edges(n, &edges).unwrap().0, labels)
}

pub fn random_pairs(n: usize, count: usize, seed: u64) -> PairSet {
    let mut rng = rng(seed);
    let mut all: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    all.shuffle(&mut rng);
    let pairs = all
        .into_iter()
        .take(count)
        .map(|(i, j)| {
            let sign = if rng.random_bool(0.5) { Sign::Positive } else { Sign::Negative };
            if rng.random_bool(0.5) {
                Pair::new(i, j, sign)
            } else {
                Pair::new(j, i, sign)
            }
        })
        .collect();
    PairSet::new(n, pairs).unwrap()
}

pub fn random_matrix(n: usize, k: usize, seed: u64) -> Array2<f64> {
    let mut rng = rng(seed);
    Array2::from_shape_fn((n, k), |_| rng.random_range(-1.0..1.0))
}

pub fn labels(v: Vec<usize>) -> NodeLabels {
    NodeLabels::new(v).unwrap()
}

pub fn to_dense(a: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

pub fn from_dense(m: &DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

/// Dense adjacency rebuilt from the edge iterator.
pub fn dense_adjacency(g: &SparseGraph) -> DMatrix<f64> {
    let n = g.n();
    let mut a = DMatrix::zeros(n, n);
    for (i, j) in g.edges() {
        a[(i, j)] = 1.0;
        a[(j, i)] = 1.0;
    }
    a
}

/// `(A, d, 2m)` computed from the dense adjacency.
pub fn dense_parts(g: &SparseGraph) -> (DMatrix<f64>, DMatrix<f64>, f64) {
    let a = dense_adjacency(g);
    let n = g.n();
    let d = DMatrix::from_fn(n, 1, |i, _| a.row(i).sum());
    let two_m = a.sum();
    (a, d, two_m)
}

/// `A - d 1ᵀ / 2m`.
pub fn dense_b_tilde(g: &SparseGraph) -> DMatrix<f64> {
    let (a, d, two_m) = dense_parts(g);
    let ones = DMatrix::from_element(1, g.n(), 1.0);
    a - (&d * ones) / two_m
}

/// `A - d dᵀ / 2m`.
pub fn dense_b(g: &SparseGraph) -> DMatrix<f64> {
    let (a, d, two_m) = dense_parts(g);
    a - (&d * d.transpose()) / two_m
}

/// Symmetric `Y` and `L_c = I - D^{-1/2} Y D^{-1/2}` built entry by entry.
pub fn dense_laplacian(pairs: &PairSet) -> DMatrix<f64> {
    let n = pairs.n();
    let mut y = DMatrix::zeros(n, n);
    for p in pairs.pairs() {
        y[(p.i as usize, p.j as usize)] = p.sign.value();
        y[(p.j as usize, p.i as usize)] = p.sign.value();
    }
    let dc: Vec<f64> = (0..n).map(|i| y.row(i).abs().sum()).collect();
    let mut l = DMatrix::identity(n, n);
    for i in 0..n {
        for j in 0..n {
            if y[(i, j)] != 0.0 {
                l[(i, j)] -= y[(i, j)] / (dc[i] * dc[j]).sqrt();
            }
        }
    }
    l
}

pub fn dense_spectral_norm(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
}

pub fn trace_form(s: &DMatrix<f64>, m: &DMatrix<f64>) -> f64 {
    (s.transpose() * m * s).trace()
}

pub fn max_rel_err(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let scale = b.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1e-300);
    a.iter()
        .zip(b.iter())
        .fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs()))
        / scale
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Central finite-difference gradient of `f` at `s`.
pub fn finite_difference(s: &Array2<f64>, h: f64, f: impl Fn(&Array2<f64>) -> f64) -> Array2<f64> {
    let mut grad = Array2::zeros(s.raw_dim());
    let mut probe = s.clone();
    for idx in 0..s.len() {
        let (i, j) = (idx / s.ncols(), idx % s.ncols());
        let orig = probe[[i, j]];
        probe[[i, j]] = orig + h;
        let up = f(&probe);
        probe[[i, j]] = orig - h;
        let down = f(&probe);
        probe[[i, j]] = orig;
        grad[[i, j]] = (up - down) / (2.0 * h);
    }
    grad
}

/// Mean and sample variance of off-diagonal row inner products.
pub fn inner_product_stats(s: &Array2<f64>) -> (f64, f64) {
    let n = s.nrows();
    let mut values = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            values.push(s.row(i).dot(&s.row(j)));
        }
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64;
    (mean, var)
}
