use fuse_core::io::{read_labels, write_pairs_with_header};
use fuse_core::probe::split_pairs;
use fuse_core::{flip_labels, generate_pairs, PairSet};
use serde_json::json;

use super::{display, require, unit_interval};
use crate::args::PairsOptions;
use crate::error::{CliError, Result};
use crate::manifest::{ensure_parent, file_name, with_suffix, Phases, RunManifest};
use crate::KeyValues;

pub fn run(o: PairsOptions, threads: usize) -> Result<()> {
    let labels_path = require(o.labels, "labels")?;
    let count = require(o.count, "count")?;
    let out = require(o.out, "out")?;
    let noise = unit_interval(o.noise.unwrap_or(0.0), "noise")?;
    let seed = o.seed.unwrap_or(0);
    let split = match (o.test_fraction, o.test_out) {
        (Some(f), Some(path)) if f > 0.0 && f < 1.0 => Some((f, path)),
        (Some(f), Some(_)) => {
            return Err(CliError::Usage(format!("--test-fraction must lie in (0, 1), got {f}")))
        }
        (Some(_), None) => return Err(CliError::missing("test-out")),
        (None, Some(_)) => return Err(CliError::missing("test-fraction")),
        (None, None) => None,
    };

    let mut phases = Phases::default();
    let mut manifest = RunManifest::new("pairs", threads);
    let manifest_path = with_suffix(&out, ".manifest.json");

    let (labels, ids) = phases.time("load", || read_labels(&labels_path))?;
    manifest.input(&labels_path)?;

    let (all, stats) = phases.time("generate", || generate_pairs(&labels, count, seed))?;
    let (train, test) = match &split {
        Some((fraction, _)) => {
            let (train, test) = split_pairs(&all, 1.0 - fraction, seed)?;
            (PairSet::new(all.n(), train)?, Some(PairSet::new(all.n(), test)?))
        }
        None => (all, None),
    };
    let noisy = flip_labels(&train, noise, seed)?;
    let flips = train
        .pairs()
        .iter()
        .zip(noisy.pairs())
        .filter(|(a, b)| a.sign != b.sign)
        .count();

    let header = [format!("manifest: {}", file_name(&manifest_path))];
    phases.time("write", || -> Result<()> {
        ensure_parent(&out)?;
        write_pairs_with_header(&out, &noisy, &ids, &header)?;
        manifest.output(&out)?;
        if let (Some((_, path)), Some(test)) = (&split, &test) {
            ensure_parent(path)?;
            write_pairs_with_header(path, test, &ids, &header)?;
            manifest.output(path)?;
        }
        Ok(())
    })?;

    let mut kv = KeyValues::default();
    kv.put("requested_positive", stats.requested_positive);
    kv.put("requested_negative", stats.requested_negative);
    kv.put("positive", stats.positive);
    kv.put("negative", stats.negative);
    kv.put("collapsed", stats.collapsed);
    kv.put("train_pairs", noisy.len());
    kv.put("test_pairs", test.as_ref().map_or(0, |t| t.len()));
    kv.put("flips", flips);
    kv.put("pairs_file", display(&out));
    kv.put("manifest", file_name(&manifest_path));
    print!("{}", kv.as_str());

    manifest.config.other.insert("count".into(), json!(count));
    manifest.config.other.insert("noise".into(), json!(noise));
    if let Some((fraction, _)) = &split {
        manifest.config.other.insert("test_fraction".into(), json!(fraction));
    }
    manifest.seeds.insert("seed".into(), seed);
    manifest.summary = json!({ "generation": stats, "flips": flips, "train_pairs": noisy.len() });
    manifest.timings = phases.into_vec();
    manifest.write(&manifest_path)
}
