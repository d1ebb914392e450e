//! Projected gradient ascent on `Tr(Sᵀ B̃ S) - λ Tr(Sᵀ L_c S)` with every
//! row of `S` kept on the unit sphere.
//!
//! Each iteration computes the structural direction `B̃ S` (or `B S` in
//! exact mode), the contrastive direction `-L_c S`, takes the step
//! `S + η (G_mod + λ G_con)` and renormalizes every row. The modularity
//! normalizers (`1/2m`, `1/m`) are left out of `G_mod`; the step size
//! absorbs them.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::pairs::{apply_contrastive_laplacian_into, frobenius_inner, PairSet};
use crate::real::{dot_wide, Real};
use crate::rng::{rng_for, STREAM_INIT};

/// Rows whose pre-projection norm falls below this keep their old value.
pub const MIN_ROW_NORM: f64 = 1e-12;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GradientMode {
    /// `A S - d (1ᵀ S) / 2m`
    #[default]
    Approximate,
    /// `A S - d (dᵀ S) / 2m`
    Exact,
}

impl fmt::Display for GradientMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GradientMode::Approximate => "approximate",
            GradientMode::Exact => "exact",
        })
    }
}

impl FromStr for GradientMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "approximate" | "approx" => Ok(GradientMode::Approximate),
            "exact" => Ok(GradientMode::Exact),
            other => Err(Error::invalid(format!("unknown gradient mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    F64,
    /// Embedding and gradient buffers in `f32`; reductions stay in `f64`.
    F32,
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Precision::F64 => "f64",
            Precision::F32 => "f32",
        })
    }
}

impl FromStr for Precision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f64" => Ok(Precision::F64),
            "f32" => Ok(Precision::F32),
            other => Err(Error::invalid(format!("unknown precision {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuseConfig {
    pub k: usize,
    pub eta_scaled: f64,
    /// Zero runs the structure-only ablation.
    pub lambda_scaled: f64,
    pub iterations: usize,
    pub gradient_mode: GradientMode,
    pub seed: u64,
    pub precision: Precision,
}

impl Default for FuseConfig {
    fn default() -> Self {
        FuseConfig {
            k: 128,
            eta_scaled: 1e5,
            lambda_scaled: 0.75,
            iterations: 100,
            gradient_mode: GradientMode::Approximate,
            seed: 0,
            precision: Precision::F64,
        }
    }
}

impl FuseConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::invalid("k must be positive"));
        }
        if !(self.eta_scaled.is_finite() && self.eta_scaled > 0.0) {
            return Err(Error::invalid("eta_scaled must be a positive finite number"));
        }
        if !(self.lambda_scaled.is_finite() && self.lambda_scaled >= 0.0) {
            return Err(Error::invalid("lambda_scaled must be finite and nonnegative"));
        }
        Ok(())
    }
}

/// Step size and contrastive weight after pair-count and density scaling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveParams {
    pub p_star: f64,
    pub d_star: f64,
    pub eta: f64,
    pub lambda: f64,
}

impl EffectiveParams {
    /// Unscaled parameters, for callers that pick `η` and `λ` directly.
    pub fn fixed(eta: f64, lambda: f64) -> Self {
        EffectiveParams {
            p_star: 1.0,
            d_star: 1.0,
            eta,
            lambda,
        }
    }
}

/// `p* = max(0.25, 5000/P)`, `d* = 1/sqrt(2m/n)`, `η = η_s p* d*`,
/// `λ = λ_s p* / d*`.
///
/// With no pairs the ablation (`λ_s = 0`) uses `p* = 1`; asking for a
/// positive contrastive weight without pairs is an error.
pub fn adaptive_params(
    config: &FuseConfig,
    pair_count: usize,
    graph: &SparseGraph,
) -> Result<EffectiveParams> {
    config.validate()?;
    let p_star = if pair_count == 0 {
        if config.lambda_scaled > 0.0 {
            return Err(Error::invalid(
                "a positive contrastive weight needs at least one pair",
            ));
        }
        1.0
    } else {
        (5000.0 / pair_count as f64).max(0.25)
    };
    let d_star = 1.0 / graph.average_degree().sqrt();
    Ok(EffectiveParams {
        p_star,
        d_star,
        eta: config.eta_scaled * p_star * d_star,
        lambda: config.lambda_scaled * p_star / d_star,
    })
}

/// `n × k` embedding. Values are stored in `f64` regardless of the
/// precision the optimizer ran in; `precision` records which it was.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    data: Array2<f64>,
    precision: Precision,
}

impl EmbeddingMatrix {
    /// Wraps `data` as-is. Rejects non-finite entries and empty shapes.
    pub fn new(data: Array2<f64>, precision: Precision) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::invalid("embedding must have at least one row and column"));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("embedding contains non-finite values"));
        }
        Ok(EmbeddingMatrix { data, precision })
    }

    /// Wraps `data` after scaling every row to unit length.
    pub fn normalized(mut data: Array2<f64>) -> Result<Self> {
        for mut row in data.rows_mut() {
            let norm = row.dot(&row).sqrt();
            if !(norm > MIN_ROW_NORM) {
                return Err(Error::invalid("cannot normalize a zero row"));
            }
            row.mapv_inplace(|v| v / norm);
        }
        Self::new(data, Precision::F64)
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn k(&self) -> usize {
        self.data.ncols()
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.data.view()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn into_array(self) -> Array2<f64> {
        self.data
    }

    pub fn precision(&self) -> Precision {
        self.precision
    }

    /// `max_i |‖S_i‖ - 1|`.
    pub fn max_norm_deviation(&self) -> f64 {
        max_norm_deviation(self.data.view())
    }
}

fn sq_norm<T: Real>(v: ArrayView1<'_, T>) -> f64 {
    match v.as_slice() {
        Some(x) => dot_wide(x, x),
        None => v.iter().map(|x| x.widen() * x.widen()).sum(),
    }
}

fn max_norm_deviation<T: Real>(s: ArrayView2<'_, T>) -> f64 {
    s.rows()
        .into_iter()
        .map(|r| (r.iter().map(|v| v.widen() * v.widen()).sum::<f64>().sqrt() - 1.0).abs())
        .fold(0.0, f64::max)
}

/// Rows drawn i.i.d. standard normal, then scaled to unit length. A row with
/// norm below `1e-12` is redrawn.
pub fn init_embedding(n: usize, k: usize, seed: u64) -> Result<EmbeddingMatrix> {
    if n == 0 || k == 0 {
        return Err(Error::invalid("init_embedding needs n, k >= 1"));
    }
    let mut rng = rng_for(seed, STREAM_INIT);
    let mut data = Array2::zeros((n, k));
    for mut row in data.rows_mut() {
        loop {
            row.iter_mut()
                .for_each(|v| *v = rng.sample::<f64, _>(StandardNormal));
            let norm = row.dot(&row).sqrt();
            if norm >= MIN_ROW_NORM {
                row.mapv_inplace(|v| v / norm);
                break;
            }
        }
    }
    EmbeddingMatrix::new(data, Precision::F64)
}

/// `(1ᵀS, dᵀS)`.
type ColumnSums = (Array1<f64>, Array1<f64>);

/// Column sums `1ᵀS` and `dᵀS`, accumulated in `f64` in row order.
fn column_sums<T: Real>(degrees: &[f64], s: ArrayView2<'_, T>) -> ColumnSums {
    let k = s.ncols();
    let mut ones = Array1::zeros(k);
    let mut weighted = Array1::zeros(k);
    for (row, &d) in s.rows().into_iter().zip(degrees) {
        for ((o, w), v) in ones.iter_mut().zip(weighted.iter_mut()).zip(row.iter()) {
            let v = v.widen();
            *o += v;
            *w += d * v;
        }
    }
    (ones, weighted)
}

fn check_rows<T>(graph: &SparseGraph, s: &ArrayView2<'_, T>) -> Result<()> {
    if s.nrows() != graph.n() {
        return Err(Error::shape(
            format!("{} rows", graph.n()),
            format!("{} rows", s.nrows()),
        ));
    }
    Ok(())
}

/// The rank-one correction vector `c` such that `G_mod = A S - d cᵀ / 2m`.
fn correction(graph: &SparseGraph, sums: &ColumnSums, mode: GradientMode) -> Array1<f64> {
    let c = match mode {
        GradientMode::Approximate => &sums.0,
        GradientMode::Exact => &sums.1,
    };
    c / (2.0 * graph.m() as f64)
}

/// Unscaled structural direction: `A S - d (1ᵀ S) / 2m` (approximate) or
/// `A S - d (dᵀ S) / 2m` (exact). Never forms an `n × n` matrix.
pub fn structural_gradient<T: Real>(
    graph: &SparseGraph,
    s: ArrayView2<'_, T>,
    mode: GradientMode,
) -> Result<Array2<T>> {
    check_rows(graph, &s)?;
    let mut out = graph.spmv(s)?;
    let c = correction(graph, &column_sums(graph.degrees(), s), mode);
    subtract_rank_one(&mut out, graph.degrees(), &c);
    Ok(out)
}

fn subtract_rank_one<T: Real>(out: &mut Array2<T>, degrees: &[f64], c: &Array1<f64>) {
    out.axis_iter_mut(Axis(0))
        .into_par_iter()
        .zip(degrees.par_iter())
        .for_each(|(mut row, &d)| {
            row.iter_mut()
                .zip(c.iter())
                .for_each(|(o, &cj)| *o = *o - T::from_f64(d * cj));
        });
}

/// Structural part of the objective given `A S` already computed.
fn structural_term<T: Real>(
    graph: &SparseGraph,
    s: ArrayView2<'_, T>,
    a_s: ArrayView2<'_, T>,
    (ones, weighted): &ColumnSums,
    mode: GradientMode,
) -> f64 {
    let two_m = 2.0 * graph.m() as f64;
    let quad = frobenius_inner(s, a_s);
    // Tr(Sᵀ d cᵀ S) = (Sᵀd) · (Sᵀc) for c = 1 or c = d.
    let correction = match mode {
        GradientMode::Approximate => weighted.dot(ones),
        GradientMode::Exact => weighted.dot(weighted),
    };
    quad - correction / two_m
}

/// `Tr(Sᵀ M S) - λ Tr(Sᵀ L_c S)` with `M = A - d1ᵀ/2m` (approximate) or
/// `M = A - ddᵀ/2m` (exact).
pub fn objective<T: Real>(
    graph: &SparseGraph,
    pairs: &PairSet,
    s: ArrayView2<'_, T>,
    lambda: f64,
    mode: GradientMode,
) -> Result<f64> {
    check_rows(graph, &s)?;
    let a_s = graph.spmv(s)?;
    let sums = column_sums(graph.degrees(), s);
    let mut value = structural_term(graph, s, a_s.view(), &sums, mode);
    if lambda != 0.0 {
        value -= lambda * crate::pairs::contrastive_quadratic_form(pairs, s)?;
    }
    Ok(value)
}

/// Reported to the observer after each projection step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationStats {
    /// 1-based iteration index.
    pub iteration: usize,
    /// `max_i |‖S_i‖ - 1|` after projection.
    pub max_norm_deviation: f64,
    /// Rows that kept their previous value because the update vanished.
    pub frozen_rows: usize,
}

#[derive(Debug, Clone)]
pub struct FitOutput {
    pub embedding: EmbeddingMatrix,
    /// `J(S_t)` for `t = 0..=T`, where `S_0` is the initialization.
    pub trace: Vec<f64>,
    pub params: EffectiveParams,
}

/// Runs the full procedure with adaptively scaled `η`, `λ` and a seeded
/// random initialization.
pub fn fuse_fit(graph: &SparseGraph, pairs: &PairSet, config: &FuseConfig) -> Result<FitOutput> {
    let params = adaptive_params(config, pairs.len(), graph)?;
    fuse_fit_with(graph, pairs, config, params, None, &mut |_| {})
}

/// Like [`fuse_fit`] with explicit effective parameters, an optional
/// starting point, and a per-iteration observer.
pub fn fuse_fit_with(
    graph: &SparseGraph,
    pairs: &PairSet,
    config: &FuseConfig,
    params: EffectiveParams,
    init: Option<&EmbeddingMatrix>,
    observe: &mut dyn FnMut(&IterationStats),
) -> Result<FitOutput> {
    config.validate()?;
    if pairs.n() != graph.n() {
        return Err(Error::shape(
            format!("pair set over {} nodes", graph.n()),
            format!("pair set over {} nodes", pairs.n()),
        ));
    }
    if !(params.eta.is_finite() && params.lambda.is_finite()) {
        return Err(Error::invalid("effective parameters must be finite"));
    }
    let start = match init {
        Some(s) => {
            if s.n() != graph.n() || s.k() != config.k {
                return Err(Error::shape(
                    format!("{}x{}", graph.n(), config.k),
                    format!("{}x{}", s.n(), s.k()),
                ));
            }
            s.as_array().clone()
        }
        None => init_embedding(graph.n(), config.k, config.seed)?.into_array(),
    };
    let (data, trace) = match config.precision {
        Precision::F64 => run(graph, pairs, config, &params, start, observe)?,
        Precision::F32 => {
            let (s, trace) = run(graph, pairs, config, &params, start.mapv(|v| v as f32), observe)?;
            (s.mapv(f64::from), trace)
        }
    };
    Ok(FitOutput {
        embedding: EmbeddingMatrix::new(data, config.precision)?,
        trace,
        params,
    })
}

struct RowOutcome {
    deviation: f64,
    frozen: usize,
    finite: bool,
}

impl RowOutcome {
    fn merge(self, other: RowOutcome) -> RowOutcome {
        RowOutcome {
            deviation: self.deviation.max(other.deviation),
            frozen: self.frozen + other.frozen,
            finite: self.finite && other.finite,
        }
    }
}

const EMPTY_OUTCOME: RowOutcome = RowOutcome {
    deviation: 0.0,
    frozen: 0,
    finite: true,
};

fn run<T: Real>(
    graph: &SparseGraph,
    pairs: &PairSet,
    config: &FuseConfig,
    params: &EffectiveParams,
    mut s: Array2<T>,
    observe: &mut dyn FnMut(&IterationStats),
) -> Result<(Array2<T>, Vec<f64>)> {
    let mode = config.gradient_mode;
    let lambda = params.lambda;
    let use_pairs = lambda != 0.0;
    let eta = T::from_f64(params.eta);
    let eta_lambda = T::from_f64(params.eta * lambda);

    let mut step = Array2::<T>::zeros(s.raw_dim());
    let mut l_s = Array2::<T>::zeros(if use_pairs { s.dim() } else { (0, 0) });
    let mut trace = Vec::with_capacity(config.iterations + 1);

    let evaluate = |s: &Array2<T>, a_s: &Array2<T>, l_s: &Array2<T>, sums: &ColumnSums| -> f64 {
        let mut j = structural_term(graph, s.view(), a_s.view(), sums, mode);
        if use_pairs {
            j -= lambda * frobenius_inner(s.view(), l_s.view());
        }
        j
    };

    for iteration in 1..=config.iterations {
        // `step` holds A S, then becomes the pre-projection update in place.
        graph.spmv_into(s.view(), &mut step)?;
        if use_pairs {
            apply_contrastive_laplacian_into(pairs, s.view(), &mut l_s)?;
        }
        let sums = column_sums(graph.degrees(), s.view());
        trace.push(evaluate(&s, &step, &l_s, &sums));
        let c = correction(graph, &sums, mode);
        subtract_rank_one(&mut step, graph.degrees(), &c);

        let outcome = s
            .axis_iter_mut(Axis(0))
            .into_par_iter()
            .zip(step.axis_iter_mut(Axis(0)))
            .enumerate()
            .map(|(i, (mut row, mut g))| {
                if use_pairs {
                    let lrow = l_s.row(i);
                    g.iter_mut()
                        .zip(row.iter())
                        .zip(lrow.iter())
                        .for_each(|((g, &x), &l)| *g = x + eta * *g - eta_lambda * l);
                } else {
                    g.iter_mut()
                        .zip(row.iter())
                        .for_each(|(g, &x)| *g = x + eta * *g);
                }
                let norm = sq_norm(g.view()).sqrt();
                if !norm.is_finite() {
                    return RowOutcome {
                        finite: false,
                        ..EMPTY_OUTCOME
                    };
                }
                let frozen = if norm < MIN_ROW_NORM {
                    1
                } else {
                    row.iter_mut()
                        .zip(g.iter())
                        .for_each(|(x, &v)| *x = T::from_f64(v.widen() / norm));
                    0
                };
                let stored = sq_norm(row.view()).sqrt();
                RowOutcome {
                    deviation: (stored - 1.0).abs(),
                    frozen,
                    finite: true,
                }
            })
            .reduce(|| EMPTY_OUTCOME, RowOutcome::merge);

        if !outcome.finite {
            return Err(Error::NonFinite { iteration });
        }
        observe(&IterationStats {
            iteration,
            max_norm_deviation: outcome.deviation,
            frozen_rows: outcome.frozen,
        });
    }

    graph.spmv_into(s.view(), &mut step)?;
    if use_pairs {
        apply_contrastive_laplacian_into(pairs, s.view(), &mut l_s)?;
    }
    let sums = column_sums(graph.degrees(), s.view());
    trace.push(evaluate(&s, &step, &l_s, &sums));
    Ok((s, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pairs::{Pair, Sign};
    use ndarray::array;

    fn k3() -> SparseGraph {
        SparseGraph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap().0
    }

    /// Two disjoint 4-cycles plus a chord: n = 8, m = 8, average degree 2.
    fn cycles() -> SparseGraph {
        let edges = [
            (0, 1),
            (1, 2),
            (2, 3),
            (3, 0),
            (4, 5),
            (5, 6),
            (6, 7),
            (7, 4),
        ];
        SparseGraph::from_edges(8, &edges).unwrap().0
    }

    #[test]
    fn adaptive_scaling() {
        let g = SparseGraph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)])
            .unwrap()
            .0;
        let mut cfg = FuseConfig::default();
        assert_eq!(adaptive_params(&cfg, 5000, &g).unwrap().p_star, 1.0);
        assert_eq!(adaptive_params(&cfg, 50000, &g).unwrap().p_star, 0.25);

        // Average degree exactly 4: K5.
        let k5: Vec<_> = (0..5)
            .flat_map(|i| (i + 1..5).map(move |j| (i, j)))
            .collect();
        let k5 = SparseGraph::from_edges(5, &k5).unwrap().0;
        cfg.eta_scaled = 1e5;
        cfg.lambda_scaled = 0.75;
        let p = adaptive_params(&cfg, 5000, &k5).unwrap();
        assert_eq!(p.d_star, 0.5);
        assert_eq!(p.eta, 5e4);
        assert_eq!(p.lambda, 1.5);

        assert!(adaptive_params(&cfg, 0, &k5).is_err());
        cfg.lambda_scaled = 0.0;
        assert_eq!(adaptive_params(&cfg, 0, &k5).unwrap().p_star, 1.0);
    }

    #[test]
    fn init_is_unit_and_deterministic() {
        let a = init_embedding(50, 7, 3).unwrap();
        let b = init_embedding(50, 7, 3).unwrap();
        assert_eq!(a, b);
        assert!(a.max_norm_deviation() < 1e-9);
        assert_ne!(a, init_embedding(50, 7, 4).unwrap());
        assert!(init_embedding(0, 3, 0).is_err());
    }

    #[test]
    fn k3_gradients() {
        let g = k3();
        let ones = Array2::<f64>::ones((3, 1));
        let approx = structural_gradient(&g, ones.view(), GradientMode::Approximate).unwrap();
        assert_eq!(approx, array![[1.0], [1.0], [1.0]]);
        let exact = structural_gradient(&g, ones.view(), GradientMode::Exact).unwrap();
        assert_eq!(exact, array![[0.0], [0.0], [0.0]]);
        assert!(structural_gradient(&g, Array2::<f64>::ones((2, 1)).view(), GradientMode::Exact).is_err());
    }

    #[test]
    fn k3_objective() {
        let g = k3();
        let empty = PairSet::empty(3);
        let ones = Array2::<f64>::ones((3, 1));
        let exact = objective(&g, &empty, ones.view(), 0.0, GradientMode::Exact).unwrap();
        assert!(exact.abs() < 1e-15);
        let approx = objective(&g, &empty, ones.view(), 0.0, GradientMode::Approximate).unwrap();
        assert!((approx - 3.0).abs() < 1e-15);
    }

    #[test]
    fn zero_iterations_return_init() {
        let g = cycles();
        let cfg = FuseConfig {
            k: 4,
            iterations: 0,
            lambda_scaled: 0.0,
            seed: 5,
            ..Default::default()
        };
        let out = fuse_fit(&g, &PairSet::empty(8), &cfg).unwrap();
        assert_eq!(out.embedding, init_embedding(8, 4, 5).unwrap());
        assert_eq!(out.trace.len(), 1);
    }

    #[test]
    fn fit_keeps_rows_on_sphere() {
        let g = cycles();
        let pairs = PairSet::new(
            8,
            vec![
                Pair::new(0, 2, Sign::Positive),
                Pair::new(4, 6, Sign::Positive),
                Pair::new(1, 5, Sign::Negative),
            ],
        )
        .unwrap();
        let cfg = FuseConfig {
            k: 3,
            iterations: 25,
            ..Default::default()
        };
        let mut worst = 0.0f64;
        let mut seen = 0;
        let params = adaptive_params(&cfg, pairs.len(), &g).unwrap();
        let out = fuse_fit_with(&g, &pairs, &cfg, params, None, &mut |st| {
            worst = worst.max(st.max_norm_deviation);
            seen += 1;
        })
        .unwrap();
        assert_eq!(seen, 25);
        assert!(worst < 1e-9);
        assert_eq!(out.trace.len(), 26);
        assert!(out.embedding.max_norm_deviation() < 1e-9);
    }

    #[test]
    fn f32_mode_runs() {
        let g = cycles();
        let cfg = FuseConfig {
            k: 3,
            iterations: 10,
            lambda_scaled: 0.0,
            precision: Precision::F32,
            ..Default::default()
        };
        let out = fuse_fit(&g, &PairSet::empty(8), &cfg).unwrap();
        assert_eq!(out.embedding.precision(), Precision::F32);
        assert!(out.embedding.max_norm_deviation() < 1e-6);
    }

    #[test]
    fn non_finite_step_aborts() {
        let g = cycles();
        let cfg = FuseConfig {
            k: 2,
            iterations: 3,
            lambda_scaled: 0.0,
            ..Default::default()
        };
        let err = fuse_fit_with(
            &g,
            &PairSet::empty(8),
            &cfg,
            EffectiveParams::fixed(f64::MAX, 0.0),
            None,
            &mut |_| {},
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonFinite { iteration: 1 }));
    }

    #[test]
    fn vanishing_rows_keep_previous_value() {
        // On K3, B = A - (2/3) J and columns orthogonal to 1 satisfy B S = -S
        // exactly, so the step with η = 1 sends every row to zero.
        let g = k3();
        let s = array![[1.0, 1.0], [-1.0, 1.0], [0.0, -2.0]];
        let cfg = FuseConfig {
            k: 2,
            iterations: 1,
            lambda_scaled: 0.0,
            gradient_mode: GradientMode::Exact,
            ..Default::default()
        };
        let init = EmbeddingMatrix::new(s.clone(), Precision::F64).unwrap();
        let mut frozen = 0;
        let out = fuse_fit_with(
            &g,
            &PairSet::empty(3),
            &cfg,
            EffectiveParams::fixed(1.0, 0.0),
            Some(&init),
            &mut |st| frozen = st.frozen_rows,
        )
        .unwrap();
        assert_eq!(frozen, 3);
        assert_eq!(out.embedding.as_array(), &s);
    }
}
