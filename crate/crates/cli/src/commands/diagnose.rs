use fuse_core::diagnostics::{apply_lipschitz_operator, DEFAULT_POWER_ITERS, DEFAULT_POWER_TOL};
use fuse_core::io::read_pairs;
use fuse_core::rng::rng_for;
use fuse_core::{
    gradient_alignment, init_embedding, lipschitz_estimate, zagreb_report, DiagnosticsReport,
    LipschitzEstimate, PairSet, SparseGraph,
};
use ndarray::Array2;
use rand::Rng;
use serde::Serialize;
use serde_json::json;

use super::{require, write_json, write_text};
use crate::args::DiagnoseOptions;
use crate::error::{CliError, Result};
use crate::manifest::{ensure_parent, file_name, with_suffix, Phases, RunManifest};
use crate::KeyValues;

const DEFAULT_K: usize = 128;
const DEFAULT_LAMBDA: f64 = 0.75;
const SPOT_CHECKS: usize = 10;
const STREAM_SPOT: u64 = 0x5350_4f54;

#[derive(Serialize)]
struct Report<'a> {
    #[serde(flatten)]
    report: &'a DiagnosticsReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    lipschitz_spot_check: Option<bool>,
    manifest: String,
}

/// Checks `‖2M(S - S')‖_F ≤ L ‖S - S'‖_F (1 + tol)` on random pairs of points.
fn spot_check(
    graph: &SparseGraph,
    pairs: &PairSet,
    lambda: f64,
    estimate: &LipschitzEstimate,
    tol: f64,
    seed: u64,
) -> Result<bool> {
    let mut rng = rng_for(seed, STREAM_SPOT);
    let (n, k) = (graph.n(), 4);
    for _ in 0..SPOT_CHECKS {
        let a = Array2::from_shape_fn((n, k), |_| rng.random_range(-1.0..1.0));
        let b = Array2::from_shape_fn((n, k), |_| rng.random_range(-1.0..1.0));
        let diff = a - b;
        let image = apply_lipschitz_operator(graph, pairs, lambda, diff.view())?;
        let lhs = 2.0 * image.iter().map(|v| v * v).sum::<f64>().sqrt();
        let rhs = estimate.value * diff.iter().map(|v| v * v).sum::<f64>().sqrt();
        if lhs > rhs * (1.0 + tol.max(1e-9)) {
            return Ok(false);
        }
    }
    Ok(true)
}

pub fn run(o: DiagnoseOptions, threads: usize) -> Result<()> {
    let edges = require(o.edges, "edges")?;
    let prefix = require(o.out, "out")?;
    let seed = o.seed.unwrap_or(0);
    let k = o.k.unwrap_or(DEFAULT_K);
    let iters = o.power_iters.unwrap_or(DEFAULT_POWER_ITERS);
    let tol = o.power_tol.unwrap_or(DEFAULT_POWER_TOL);
    if k == 0 || iters == 0 || !(tol > 0.0) {
        return Err(CliError::Usage("--k and --power-iters must be positive, --power-tol > 0".into()));
    }

    let txt_path = with_suffix(&prefix, ".txt");
    let json_path = with_suffix(&prefix, ".json");
    let manifest_path = with_suffix(&prefix, ".manifest.json");
    let mut phases = Phases::default();
    let mut manifest = RunManifest::new("diagnose", threads);

    let (graph, pairs) = phases.time("load", || -> Result<_> {
        let (graph, ids, _) = SparseGraph::load_edge_list(&edges, true)?;
        let pairs = match &o.pairs {
            Some(path) => Some(read_pairs(path, &ids)?.0),
            None => None,
        };
        Ok((graph, pairs))
    })?;
    manifest.input(&edges)?;
    if let Some(path) = &o.pairs {
        manifest.input(path)?;
    }

    // Lipschitz needs pairs or an explicit lambda; pairs alone use the default.
    let lipschitz_lambda = match (&pairs, o.lambda) {
        (Some(_), l) => Some(l.unwrap_or(DEFAULT_LAMBDA)),
        (None, Some(l)) => Some(l),
        (None, None) => None,
    };

    let (report, spot) = phases.time("diagnose", || -> Result<_> {
        let zagreb = zagreb_report(&graph);
        let s = init_embedding(graph.n(), k, seed)?;
        let cosine_alignment = gradient_alignment(&graph, s.view())?;
        let (lipschitz, spot) = match lipschitz_lambda {
            Some(lambda) => {
                let empty;
                let pairs = match &pairs {
                    Some(p) => p,
                    None => {
                        empty = PairSet::empty(graph.n());
                        &empty
                    }
                };
                let est = lipschitz_estimate(&graph, pairs, lambda, iters, tol)?;
                let ok = spot_check(&graph, pairs, lambda, &est, tol, seed)?;
                (Some(est), Some(ok))
            }
            None => (None, None),
        };
        let report = DiagnosticsReport {
            zagreb,
            cosine_alignment,
            alignment_seed: seed,
            alignment_k: k,
            lambda: lipschitz_lambda,
            lipschitz,
        };
        Ok((report, spot))
    })?;

    let mut kv = KeyValues::default();
    kv.push_block(&report.to_key_value());
    if let Some(ok) = spot {
        kv.put("lipschitz_spot_check", ok);
    }
    kv.put("manifest", file_name(&manifest_path));

    phases.time("write", || -> Result<()> {
        ensure_parent(&prefix)?;
        write_text(&txt_path, kv.as_str())?;
        write_json(
            &json_path,
            &Report {
                report: &report,
                lipschitz_spot_check: spot,
                manifest: file_name(&manifest_path),
            },
        )?;
        manifest.output(&txt_path)?;
        manifest.output(&json_path)
    })?;
    print!("{}", kv.as_str());

    manifest.seeds.insert("alignment".into(), seed);
    manifest.config.other.insert("k".into(), json!(k));
    manifest.config.other.insert("power_iters".into(), json!(iters));
    manifest.config.other.insert("power_tol".into(), json!(tol));
    if let Some(lambda) = lipschitz_lambda {
        manifest.config.other.insert("lambda".into(), json!(lambda));
    }
    manifest.summary = serde_json::to_value(&report).expect("report serializes");
    manifest.timings = phases.into_vec();
    manifest.write(&manifest_path)
}
