//! Computable theory quantities: alignment between the exact and
//! approximate structural gradients, Zagreb statistics with the sufficient
//! edge count, and a power-iteration Lipschitz estimate.

use std::fmt::Write as _;

use ndarray::{Array2, ArrayView2, Zip};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::optimizer::{structural_gradient, GradientMode};
use crate::pairs::{apply_contrastive_laplacian, frobenius_inner, PairSet};
use crate::rng::{rng_for, STREAM_POWER};

/// Default power-iteration budget and relative tolerance.
pub const DEFAULT_POWER_ITERS: usize = 1000;
pub const DEFAULT_POWER_TOL: f64 = 1e-6;

/// Cosine between `G_true = AS - d dᵀS/2m` and `G_approx = AS - d 1ᵀS/2m`
/// in the Frobenius inner product. Identical gradients (including both
/// zero) give exactly 1.
pub fn gradient_alignment(graph: &SparseGraph, s: ArrayView2<'_, f64>) -> Result<f64> {
    let exact = structural_gradient(graph, s, GradientMode::Exact)?;
    let approx = structural_gradient(graph, s, GradientMode::Approximate)?;
    if exact == approx {
        return Ok(1.0);
    }
    let dot = frobenius_inner(exact.view(), approx.view());
    let ne = frobenius_inner(exact.view(), exact.view()).sqrt();
    let na = frobenius_inner(approx.view(), approx.view()).sqrt();
    if ne == 0.0 || na == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / (ne * na)).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZagrebReport {
    pub n: usize,
    pub m: usize,
    pub zagreb_m2: f64,
    /// `c(G) = M₂ m / ‖d‖₂⁴`
    pub zagreb_constant: f64,
    pub degree_norm: f64,
    /// `(1/c) (1 + n/‖d‖₂)²`
    pub m_min: f64,
    pub bound_satisfied: bool,
    /// `1/√m`, the first rate term of the alignment bound.
    pub rate_inv_sqrt_m: f64,
    /// `n / (‖d‖₂ √m)`, the second rate term.
    pub rate_degree_term: f64,
}

pub fn zagreb_report(graph: &SparseGraph) -> ZagrebReport {
    let n = graph.n() as f64;
    let m = graph.m() as f64;
    let m2 = graph.zagreb_m2();
    let dn = graph.degree_norm();
    let c = m2 * m / dn.powi(4);
    let m_min = (1.0 + n / dn).powi(2) / c;
    ZagrebReport {
        n: graph.n(),
        m: graph.m(),
        zagreb_m2: m2,
        zagreb_constant: c,
        degree_norm: dn,
        m_min,
        bound_satisfied: m >= m_min,
        rate_inv_sqrt_m: 1.0 / m.sqrt(),
        rate_degree_term: n / (dn * m.sqrt()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LipschitzEstimate {
    /// `2 σ_max(M)`
    pub value: f64,
    pub sigma_max: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Applies `M = (A - ddᵀ/2m) - λ L_c` to the columns of `v`.
pub fn apply_lipschitz_operator(
    graph: &SparseGraph,
    pairs: &PairSet,
    lambda: f64,
    v: ArrayView2<'_, f64>,
) -> Result<Array2<f64>> {
    let mut out = structural_gradient(graph, v, GradientMode::Exact)?;
    if lambda != 0.0 {
        let lv = apply_contrastive_laplacian(pairs, v)?;
        Zip::from(&mut out).and(&lv).for_each(|o, &l| *o -= lambda * l);
    }
    Ok(out)
}

/// `2 ‖(A - ddᵀ/2m) - λ L_c‖₂` by power iteration on `M²`, started from a
/// fixed-seed Gaussian vector. Stops when successive Rayleigh quotients
/// differ by less than `tol` relatively; otherwise returns the last iterate
/// with `converged = false`.
pub fn lipschitz_estimate(
    graph: &SparseGraph,
    pairs: &PairSet,
    lambda: f64,
    iters: usize,
    tol: f64,
) -> Result<LipschitzEstimate> {
    let n = graph.n();
    if n == 0 {
        return Err(Error::invalid("empty graph"));
    }
    if iters == 0 {
        return Err(Error::invalid("power iteration needs at least one step"));
    }
    if pairs.n() != n {
        return Err(Error::shape(format!("{n} nodes"), format!("{} nodes", pairs.n())));
    }
    let mut rng = rng_for(0, STREAM_POWER);
    let mut v = Array2::from_shape_simple_fn((n, 1), || rng.sample::<f64, _>(StandardNormal));
    let norm = frobenius_inner(v.view(), v.view()).sqrt();
    v.mapv_inplace(|x| x / norm);

    let mut rho = f64::NAN;
    for t in 1..=iters {
        let mv = apply_lipschitz_operator(graph, pairs, lambda, v.view())?;
        let w = apply_lipschitz_operator(graph, pairs, lambda, mv.view())?;
        let next = frobenius_inner(mv.view(), mv.view());
        let wn = frobenius_inner(w.view(), w.view()).sqrt();
        let done = next == 0.0 || (t > 1 && (next - rho).abs() <= tol * next);
        rho = next;
        if done || wn == 0.0 {
            return Ok(estimate(rho, t, true));
        }
        v = w / wn;
    }
    Ok(estimate(rho, iters, false))
}

fn estimate(rho: f64, iterations: usize, converged: bool) -> LipschitzEstimate {
    let sigma_max = rho.max(0.0).sqrt();
    LipschitzEstimate {
        value: 2.0 * sigma_max,
        sigma_max,
        iterations,
        converged,
    }
}

/// Everything the diagnose command reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    pub zagreb: ZagrebReport,
    pub cosine_alignment: f64,
    pub alignment_seed: u64,
    pub alignment_k: usize,
    pub lambda: Option<f64>,
    pub lipschitz: Option<LipschitzEstimate>,
}

impl DiagnosticsReport {
    /// Flat `key = value` lines, one quantity per line.
    pub fn to_key_value(&self) -> String {
        let z = &self.zagreb;
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        put("n", z.n.to_string());
        put("m", z.m.to_string());
        put("zagreb_m2", z.zagreb_m2.to_string());
        put("zagreb_constant", z.zagreb_constant.to_string());
        put("degree_norm", z.degree_norm.to_string());
        put("m_min", z.m_min.to_string());
        put("bound_satisfied", z.bound_satisfied.to_string());
        put("rate_inv_sqrt_m", z.rate_inv_sqrt_m.to_string());
        put("rate_degree_term", z.rate_degree_term.to_string());
        put("cosine_alignment", self.cosine_alignment.to_string());
        put("alignment_seed", self.alignment_seed.to_string());
        put("alignment_k", self.alignment_k.to_string());
        if let Some(lambda) = self.lambda {
            put("lambda", lambda.to_string());
        }
        if let Some(l) = &self.lipschitz {
            put("lipschitz_estimate", l.value.to_string());
            put("lipschitz_sigma_max", l.sigma_max.to_string());
            put("lipschitz_iterations", l.iterations.to_string());
            put("lipschitz_converged", l.converged.to_string());
        }
        out
    }
}
