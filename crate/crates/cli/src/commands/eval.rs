use fuse_core::io::{read_embedding, read_id_map, read_pairs, write_vector};
use fuse_core::probe::split_pairs;
use fuse_core::{fit_and_score, IdMap, ProbeConfig};
use serde::Serialize;
use serde_json::json;

use super::{require, unit_interval, write_json, write_text};
use crate::args::EvalOptions;
use crate::error::{CliError, Result};
use crate::manifest::{ensure_parent, file_name, with_suffix, Phases, RunManifest};
use crate::KeyValues;

pub fn config_from(o: &EvalOptions) -> Result<ProbeConfig> {
    let d = ProbeConfig::default();
    let config = ProbeConfig {
        epochs: o.epochs.unwrap_or(d.epochs),
        learning_rate: o.learning_rate.unwrap_or(d.learning_rate),
        train_fraction: o.train_fraction.unwrap_or(d.train_fraction),
        threshold: unit_interval(o.threshold.unwrap_or(d.threshold), "threshold")?,
        seed: o.seed.unwrap_or(d.seed),
        symmetrize: o.symmetrize.unwrap_or(d.symmetrize),
    };
    config.validate()?;
    Ok(config)
}

#[derive(Serialize)]
struct Report {
    #[serde(flatten)]
    result: fuse_core::EvalResult,
    mode: &'static str,
    manifest: String,
}

pub fn run(o: EvalOptions, threads: usize) -> Result<()> {
    let embedding_path = require(o.embedding.clone(), "embedding")?;
    let pairs_path = require(o.pairs.clone(), "pairs")?;
    let prefix = require(o.out.clone(), "out")?;
    let config = config_from(&o)?;

    let txt_path = with_suffix(&prefix, ".txt");
    let json_path = with_suffix(&prefix, ".json");
    let weights_path = with_suffix(&prefix, ".weights.txt");
    let manifest_path = with_suffix(&prefix, ".manifest.json");
    let mut phases = Phases::default();
    let mut manifest = RunManifest::new("eval", threads);

    let (s, train, test) = phases.time("load", || -> Result<_> {
        let (s, embedded_ids) = read_embedding(&embedding_path)?;
        let ids = match (embedded_ids, &o.ids) {
            (_, Some(path)) => read_id_map(path)?,
            (Some(ids), None) => ids,
            (None, None) => IdMap::identity(s.n()),
        };
        if ids.len() != s.n() {
            return Err(CliError::Usage(format!(
                "id map has {} entries but the embedding has {} rows",
                ids.len(),
                s.n()
            )));
        }
        let pairs = read_pairs(&pairs_path, &ids)?.0;
        let (train, test) = match &o.test_pairs {
            Some(path) => (pairs.pairs().to_vec(), read_pairs(path, &ids)?.0.pairs().to_vec()),
            None => split_pairs(&pairs, config.train_fraction, config.seed)?,
        };
        Ok((s, train, test))
    })?;
    for path in [Some(&embedding_path), o.ids.as_ref(), Some(&pairs_path), o.test_pairs.as_ref()]
        .into_iter()
        .flatten()
    {
        manifest.input(path)?;
    }
    let mode = if o.test_pairs.is_some() { "fresh" } else { "held-out" };

    let (result, weights) = phases.time("probe", || fit_and_score(&s, &train, &test, &config))?;

    let mut kv = KeyValues::default();
    kv.put("accuracy", result.accuracy);
    kv.put("macro_f1", result.macro_f1);
    kv.put("f1_positive", result.f1_positive);
    kv.put("f1_negative", result.f1_negative);
    kv.put("n_train", result.n_train);
    kv.put("n_test", result.n_test);
    kv.put("mode", mode);
    kv.put("manifest", file_name(&manifest_path));

    phases.time("write", || -> Result<()> {
        ensure_parent(&prefix)?;
        write_text(&txt_path, kv.as_str())?;
        write_json(
            &json_path,
            &Report {
                result,
                mode,
                manifest: file_name(&manifest_path),
            },
        )?;
        write_vector(&weights_path, &weights.to_flat())?;
        for path in [&txt_path, &json_path, &weights_path] {
            manifest.output(path)?;
        }
        Ok(())
    })?;
    print!("{}", kv.as_str());

    manifest.config.probe = Some(config.clone());
    manifest.seeds.insert("split".into(), config.seed);
    manifest.summary = json!({ "result": result, "mode": mode });
    manifest.timings = phases.into_vec();
    manifest.write(&manifest_path)
}
