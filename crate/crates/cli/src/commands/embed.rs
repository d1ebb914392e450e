use fuse_core::io::{
    read_embedding_binary, read_pairs, write_embedding_binary, write_embedding_tsv_with_header,
    write_id_map, write_trace,
};
use fuse_core::{
    adaptive_params, fuse_fit_with, gradient_alignment, init_embedding, FuseConfig, PairSet,
    SparseGraph,
};
use serde_json::json;

use super::require;
use crate::args::EmbedOptions;
use crate::error::{CliError, Result};
use crate::manifest::{ensure_parent, file_name, with_suffix, Phases, RunManifest};
use crate::KeyValues;

pub fn config_from(o: &EmbedOptions) -> FuseConfig {
    let d = FuseConfig::default();
    FuseConfig {
        k: o.k.unwrap_or(d.k),
        eta_scaled: o.eta_scaled.unwrap_or(d.eta_scaled),
        lambda_scaled: o.lambda_scaled.unwrap_or(d.lambda_scaled),
        iterations: o.iterations.unwrap_or(d.iterations),
        gradient_mode: o.gradient_mode.unwrap_or(d.gradient_mode),
        seed: o.seed.unwrap_or(d.seed),
        precision: o.precision.unwrap_or(d.precision),
    }
}

pub fn run(o: EmbedOptions, threads: usize) -> Result<()> {
    let edges = require(o.edges.clone(), "edges")?;
    let prefix = require(o.out.clone(), "out")?;
    let config = config_from(&o);
    config.validate()?;

    let tsv_path = with_suffix(&prefix, ".tsv");
    let bin_path = with_suffix(&prefix, ".bin");
    let trace_path = with_suffix(&prefix, ".trace.csv");
    let ids_path = with_suffix(&prefix, ".ids.tsv");
    let manifest_path = with_suffix(&prefix, ".manifest.json");

    let mut phases = Phases::default();
    let mut manifest = RunManifest::new("embed", threads);

    let (graph, ids, edge_stats, pairs, collapsed) = phases.time("load", || -> Result<_> {
        let (graph, ids, stats) = SparseGraph::load_edge_list(&edges, true)?;
        let (pairs, collapsed) = match &o.pairs {
            Some(path) => read_pairs(path, &ids)?,
            None if config.lambda_scaled == 0.0 => (PairSet::empty(graph.n()), 0),
            None => {
                return Err(CliError::Usage(
                    "--pairs is required unless --lambda-scaled is 0".into(),
                ))
            }
        };
        Ok((graph, ids, stats, pairs, collapsed))
    })?;
    manifest.input(&edges)?;
    if let Some(path) = &o.pairs {
        manifest.input(path)?;
    }
    if collapsed > 0 {
        log::warn!("{collapsed} repeated pairs collapsed while reading the pairs file");
    }

    let (fit, alignment) = phases.time("fit", || -> Result<_> {
        let params = adaptive_params(&config, pairs.len(), &graph)?;
        let init = init_embedding(graph.n(), config.k, config.seed)?;
        let alignment = gradient_alignment(&graph, init.view())?;
        let fit = fuse_fit_with(&graph, &pairs, &config, params, Some(&init), &mut |s| {
            log::debug!(
                "iteration {} max |row norm - 1| = {:.3e}, frozen rows {}",
                s.iteration,
                s.max_norm_deviation,
                s.frozen_rows
            )
        })?;
        Ok((fit, alignment))
    })?;

    phases.time("write", || -> Result<()> {
        ensure_parent(&prefix)?;
        let header = [
            format!("manifest: {}", file_name(&manifest_path)),
            format!("n = {}, k = {}", fit.embedding.n(), fit.embedding.k()),
        ];
        write_embedding_tsv_with_header(&tsv_path, &fit.embedding, &ids, &header)?;
        write_embedding_binary(&bin_path, &fit.embedding)?;
        write_trace(&trace_path, &fit.trace)?;
        write_id_map(&ids_path, &ids)?;
        let back = read_embedding_binary(&bin_path)?;
        if back.as_array() != fit.embedding.as_array() {
            return Err(CliError::Output {
                path: bin_path.clone(),
                message: "binary embedding does not round-trip".into(),
            });
        }
        for path in [&tsv_path, &bin_path, &trace_path, &ids_path] {
            manifest.output(path)?;
        }
        Ok(())
    })?;

    let p = fit.params;
    let mut kv = KeyValues::default();
    kv.put("n", graph.n());
    kv.put("m", graph.m());
    kv.put("raw_edges", edge_stats.raw_edges);
    kv.put("duplicate_edges_dropped", edge_stats.duplicates_dropped);
    kv.put("self_loops_dropped", edge_stats.self_loops_dropped);
    kv.put("pairs", pairs.len());
    kv.put("pairs_collapsed", collapsed);
    kv.put("p_star", p.p_star);
    kv.put("d_star", p.d_star);
    kv.put("eta", p.eta);
    kv.put("lambda", p.lambda);
    kv.put("initial_objective", fit.trace[0]);
    kv.put("final_objective", fit.trace[fit.trace.len() - 1]);
    kv.put("alignment_at_init", alignment);
    kv.put("embedding", tsv_path.display());
    kv.put("manifest", file_name(&manifest_path));
    print!("{}", kv.as_str());

    manifest.config.fuse = Some(config.clone());
    manifest.config.effective = Some(p);
    manifest.seeds.insert("init".into(), config.seed);
    manifest.summary = json!({
        "n": graph.n(),
        "m": graph.m(),
        "edges": edge_stats,
        "pairs": pairs.len(),
        "pairs_collapsed": collapsed,
        "initial_objective": fit.trace[0],
        "final_objective": fit.trace[fit.trace.len() - 1],
        "alignment_at_init": alignment,
    });
    manifest.timings = phases.into_vec();
    manifest.write(&manifest_path)
}
