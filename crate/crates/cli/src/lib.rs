//! The `fuse` command-line pipeline: pair sampling, embedding,
//! diagnostics, probe evaluation and a scaling benchmark.
//!
//! Every command reads its options from flags layered over an optional
//! TOML file, runs inside a rayon pool of the requested size, and writes a
//! `.manifest.json` next to its outputs.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;

use std::fmt::Display;
use std::path::Path;

use args::{Cli, Command, Layered};
pub use error::{CliError, Result};

/// Thread count: flag or config key, then `FUSE_THREADS`, then all cores.
pub fn resolve_threads(requested: Option<usize>) -> Result<usize> {
    let threads = match requested {
        Some(t) => t,
        None => match std::env::var("FUSE_THREADS") {
            Ok(raw) => raw
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("FUSE_THREADS={raw:?} is not a thread count")))?,
            Err(_) => std::thread::available_parallelism().map_or(1, |n| n.get()),
        },
    };
    if threads == 0 {
        return Err(CliError::Usage("thread count must be at least 1".into()));
    }
    Ok(threads)
}

fn layered<T: Layered + Default>(flags: T, file: Option<&Path>, command: &str) -> Result<T> {
    Ok(flags.overlay(config::load(file, command)?))
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {threads} threads: {e}")))?;
    pool.install(f)
}

pub fn run(cli: Cli) -> Result<()> {
    let name = cli.command.name();
    match cli.command {
        Command::Pairs(a) => {
            let o = layered(a.options, a.config.config.as_deref(), name)?;
            let threads = resolve_threads(o.threads)?;
            in_pool(threads, || commands::pairs::run(o, threads))
        }
        Command::Embed(a) => {
            let o = layered(a.options, a.config.config.as_deref(), name)?;
            let threads = resolve_threads(o.threads)?;
            in_pool(threads, || commands::embed::run(o, threads))
        }
        Command::Diagnose(a) => {
            let o = layered(a.options, a.config.config.as_deref(), name)?;
            let threads = resolve_threads(o.threads)?;
            in_pool(threads, || commands::diagnose::run(o, threads))
        }
        Command::Eval(a) => {
            let o = layered(a.options, a.config.config.as_deref(), name)?;
            let threads = resolve_threads(o.threads)?;
            in_pool(threads, || commands::eval::run(o, threads))
        }
        Command::Bench(a) => {
            let o = layered(a.options, a.config.config.as_deref(), name)?;
            let threads = resolve_threads(o.threads)?;
            in_pool(threads, || commands::bench::run(o, threads))
        }
    }
}

/// Accumulates `key = value` lines for stdout and report files.
#[derive(Debug, Default)]
pub struct KeyValues(String);

impl KeyValues {
    pub fn put(&mut self, key: &str, value: impl Display) {
        self.0.push_str(&format!("{key} = {value}\n"));
    }

    pub fn push_block(&mut self, block: &str) {
        self.0.push_str(block);
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}
