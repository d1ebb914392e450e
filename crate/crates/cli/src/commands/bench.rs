//! Per-iteration timing over a grid of edge counts, pair counts and widths,
//! with a least-squares fit of time against `(2m + P) k`.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::time::Instant;

use fuse_core::rng::rng_for;
use fuse_core::{
    adaptive_params, fuse_fit_with, init_embedding, FuseConfig, Pair, PairSet, Sign, SparseGraph,
};
use rand::Rng;
use serde::Serialize;
use serde_json::json;

use super::{require, write_text};
use crate::args::BenchOptions;
use crate::error::{CliError, Result};
use crate::manifest::{ensure_parent, file_name, with_suffix, Phases, RunManifest};
use crate::KeyValues;

const STREAM_GRAPH: u64 = 0x4752_4150;
const STREAM_BENCH_PAIRS: u64 = 0x5041_4952;

/// Uniform simple graph with exactly `m` edges on `n` nodes.
pub fn random_graph(n: usize, m: usize, seed: u64) -> Result<SparseGraph> {
    if n < 2 || m == 0 || m > n * (n - 1) / 2 {
        return Err(CliError::Usage(format!("cannot place {m} edges on {n} nodes")));
    }
    let mut rng = rng_for(seed, STREAM_GRAPH);
    let mut seen = HashSet::with_capacity(m);
    let mut edges = Vec::with_capacity(m);
    while edges.len() < m {
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        if a != b && seen.insert((a.min(b), a.max(b))) {
            edges.push((a, b));
        }
    }
    Ok(SparseGraph::from_edges(n, &edges)?.0)
}

/// `count` distinct unordered pairs with fair random signs.
pub fn random_pairs(n: usize, count: usize, seed: u64) -> Result<PairSet> {
    if count > n * (n - 1) / 2 {
        return Err(CliError::Usage(format!("cannot place {count} pairs on {n} nodes")));
    }
    let mut rng = rng_for(seed, STREAM_BENCH_PAIRS);
    let mut seen = HashSet::with_capacity(count);
    let mut pairs = Vec::with_capacity(count);
    while pairs.len() < count {
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        if a != b && seen.insert((a.min(b), a.max(b))) {
            let sign = if rng.random_bool(0.5) { Sign::Positive } else { Sign::Negative };
            pairs.push(Pair::new(a, b, sign));
        }
    }
    Ok(PairSet::new(n, pairs)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BenchRow {
    pub n: usize,
    pub m: usize,
    pub pairs: usize,
    pub k: usize,
    pub seconds_per_iteration: f64,
}

impl BenchRow {
    pub fn work(&self) -> f64 {
        ((2 * self.m + self.pairs) * self.k) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y = slope x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> LinearFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
    let ss_tot: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    LinearFit {
        slope,
        intercept,
        r_squared,
    }
}

/// Fastest wall-clock seconds per iteration over `iterations` timed steps,
/// after one untimed warm-up step. Scheduler noise only ever adds time, so
/// the minimum is the least contaminated lap.
pub fn time_iterations(
    graph: &SparseGraph,
    pairs: &PairSet,
    k: usize,
    iterations: usize,
    seed: u64,
) -> Result<f64> {
    let config = FuseConfig {
        k,
        iterations: iterations + 1,
        seed,
        ..FuseConfig::default()
    };
    let params = adaptive_params(&config, pairs.len(), graph)?;
    let init = init_embedding(graph.n(), k, seed)?;
    let mut stamps = Vec::with_capacity(iterations + 1);
    fuse_fit_with(graph, pairs, &config, params, Some(&init), &mut |_| stamps.push(Instant::now()))?;
    Ok(stamps
        .windows(2)
        .map(|w| (w[1] - w[0]).as_secs_f64())
        .fold(f64::INFINITY, f64::min))
}

pub struct Sweep {
    pub nodes: usize,
    pub edge_counts: Vec<usize>,
    pub pair_counts: Vec<usize>,
    pub dims: Vec<usize>,
    pub iterations: usize,
    pub rounds: usize,
    pub seed: u64,
}

impl Sweep {
    pub fn from_options(o: &BenchOptions) -> Result<Self> {
        let sweep = Sweep {
            nodes: o.nodes.unwrap_or(1_000),
            edge_counts: o.edge_counts.clone().unwrap_or_else(|| vec![20_000, 40_000, 80_000, 160_000]),
            pair_counts: o.pair_counts.clone().unwrap_or_else(|| vec![5_000, 10_000, 20_000, 40_000]),
            dims: o.dims.clone().unwrap_or_else(|| vec![8, 16, 32, 64]),
            iterations: o.iterations.unwrap_or(5),
            rounds: o.rounds.unwrap_or(10),
            seed: o.seed.unwrap_or(0),
        };
        let lists = [&sweep.edge_counts, &sweep.pair_counts, &sweep.dims];
        if sweep.nodes < 2
            || sweep.iterations < 1
            || sweep.rounds < 1
            || lists.iter().any(|l| l.is_empty() || l.contains(&0))
        {
            return Err(CliError::Usage(
                "bench sweep values must be positive and non-empty (--nodes at least 2)".into(),
            ));
        }
        Ok(sweep)
    }

    /// Every (m, P, k) combination, timed `rounds` times over the whole grid.
    /// Interleaving rounds spreads slow stretches of machine load across
    /// configurations instead of letting one configuration absorb them.
    pub fn run(&self) -> Result<Vec<BenchRow>> {
        let graphs = self
            .edge_counts
            .iter()
            .enumerate()
            .map(|(i, &m)| random_graph(self.nodes, m, self.seed.wrapping_add(i as u64)))
            .collect::<Result<Vec<_>>>()?;
        let pair_sets = self
            .pair_counts
            .iter()
            .enumerate()
            .map(|(i, &p)| random_pairs(self.nodes, p, self.seed.wrapping_add(i as u64)))
            .collect::<Result<Vec<_>>>()?;
        let mut rows = Vec::new();
        for graph in &graphs {
            for pairs in &pair_sets {
                for &k in &self.dims {
                    rows.push(BenchRow {
                        n: self.nodes,
                        m: graph.m(),
                        pairs: pairs.len(),
                        k,
                        seconds_per_iteration: f64::INFINITY,
                    });
                }
            }
        }
        for round in 0..self.rounds {
            let mut slot = rows.iter_mut();
            for graph in &graphs {
                for pairs in &pair_sets {
                    for &k in &self.dims {
                        let row = slot.next().expect("one row per configuration");
                        let seconds = time_iterations(graph, pairs, k, self.iterations, self.seed)?;
                        log::info!("round {round} m={} P={} k={k}: {seconds:.6} s/iteration", row.m, row.pairs);
                        row.seconds_per_iteration = row.seconds_per_iteration.min(seconds);
                    }
                }
            }
        }
        Ok(rows)
    }
}

pub fn to_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from("n,m,P,k,work,seconds_per_iteration\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{},{},{}", r.n, r.m, r.pairs, r.k, r.work(), r.seconds_per_iteration);
    }
    out
}

pub fn run(o: BenchOptions, threads: usize) -> Result<()> {
    let out = require(o.out.clone(), "out")?;
    let sweep = Sweep::from_options(&o)?;
    let manifest_path = with_suffix(&out, ".manifest.json");
    let mut phases = Phases::default();
    let mut manifest = RunManifest::new("bench", threads);

    let rows = phases.time("sweep", || sweep.run())?;
    let (x, y): (Vec<f64>, Vec<f64>) = rows.iter().map(|r| (r.work(), r.seconds_per_iteration)).unzip();
    let fit = linear_fit(&x, &y);

    phases.time("write", || -> Result<()> {
        ensure_parent(&out)?;
        write_text(&out, &to_csv(&rows))?;
        manifest.output(&out)
    })?;

    let mut kv = KeyValues::default();
    kv.put("configurations", rows.len());
    kv.put("slope_seconds_per_unit", fit.slope);
    kv.put("intercept_seconds", fit.intercept);
    kv.put("r_squared", fit.r_squared);
    kv.put("csv", out.display());
    kv.put("manifest", file_name(&manifest_path));
    print!("{}", kv.as_str());

    manifest.seeds.insert("sweep".into(), sweep.seed);
    manifest.config.other.insert("nodes".into(), json!(sweep.nodes));
    manifest.config.other.insert("edge_counts".into(), json!(sweep.edge_counts));
    manifest.config.other.insert("pair_counts".into(), json!(sweep.pair_counts));
    manifest.config.other.insert("dims".into(), json!(sweep.dims));
    manifest.config.other.insert("iterations".into(), json!(sweep.iterations));
    manifest.config.other.insert("rounds".into(), json!(sweep.rounds));
    manifest.summary = json!({ "fit": fit, "rows": rows });
    manifest.timings = phases.into_vec();
    manifest.write(&manifest_path)
}
