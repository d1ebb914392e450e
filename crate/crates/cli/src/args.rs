//! Command-line surface. Every option is optional at parse time so that a
//! config file can supply it; [`Layered::overlay`] applies precedence.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use fuse_core::{GradientMode, Precision};
use serde::Deserialize;

#[derive(Debug, Parser)]
#[command(name = "fuse", version, about = "Featureless node embeddings with pairwise supervision")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample balanced signed pairs from node labels.
    Pairs(PairsArgs),
    /// Fit an embedding from an edge list and a pairs file.
    Embed(EmbedArgs),
    /// Zagreb report, gradient alignment and Lipschitz estimate.
    Diagnose(DiagnoseArgs),
    /// Score an embedding with the linear pair probe.
    Eval(EvalArgs),
    /// Time fit iterations over a seeded size sweep.
    Bench(BenchArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Pairs(_) => "pairs",
            Command::Embed(_) => "embed",
            Command::Diagnose(_) => "diagnose",
            Command::Eval(_) => "eval",
            Command::Bench(_) => "bench",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ConfigArg {
    /// TOML file whose keys mirror the long flag names. Top-level keys
    /// apply to every command; a `[<command>]` table overrides them.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

pub trait Layered: Sized + for<'de> Deserialize<'de> {
    /// Config-file keys this command accepts.
    const KEYS: &'static [&'static str];

    /// Fields set in `self` win; unset ones fall back to `lower`.
    fn overlay(self, lower: Self) -> Self;
}

macro_rules! layered {
    (
        $(#[$meta:meta])*
        pub struct $name:ident {
            $( $(#[$fmeta:meta])* pub $field:ident : Option<$ty:ty>, )*
        }
    ) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Default, Args, Deserialize)]
        #[serde(rename_all = "kebab-case", deny_unknown_fields)]
        pub struct $name {
            $( $(#[$fmeta])* pub $field: Option<$ty>, )*
        }

        impl Layered for $name {
            const KEYS: &'static [&'static str] = &[$( layered!(@key $field) ),*];

            fn overlay(self, lower: Self) -> Self {
                $name { $( $field: self.$field.or(lower.$field), )* }
            }
        }
    };
    (@key $field:ident) => { stringify!($field) };
}

layered! {
    pub struct PairsOptions {
        /// Labels TSV: node_id, class_id.
        #[arg(long)]
        pub labels: Option<PathBuf>,
        /// Number of pair draws; half positive, half negative.
        #[arg(long)]
        pub count: Option<usize>,
        /// Fraction of (training) pairs whose sign is flipped.
        #[arg(long)]
        pub noise: Option<f64>,
        /// Hold out this fraction as clean test pairs (written to --test-out).
        #[arg(long)]
        pub test_fraction: Option<f64>,
        #[arg(long)]
        pub seed: Option<u64>,
        #[arg(long)]
        pub out: Option<PathBuf>,
        #[arg(long)]
        pub test_out: Option<PathBuf>,
        #[arg(long)]
        pub threads: Option<usize>,
    }
}

layered! {
    pub struct EmbedOptions {
        /// Edge list: two integer ids per line, `#` comments.
        #[arg(long)]
        pub edges: Option<PathBuf>,
        /// Pairs TSV; optional when lambda-scaled is 0.
        #[arg(long)]
        pub pairs: Option<PathBuf>,
        #[arg(long)]
        pub k: Option<usize>,
        #[arg(long)]
        pub iterations: Option<usize>,
        #[arg(long)]
        pub eta_scaled: Option<f64>,
        #[arg(long)]
        pub lambda_scaled: Option<f64>,
        #[arg(long)]
        pub gradient_mode: Option<GradientMode>,
        #[arg(long)]
        pub precision: Option<Precision>,
        #[arg(long)]
        pub seed: Option<u64>,
        /// Output prefix: writes .tsv, .bin, .trace.csv, .ids.tsv, .manifest.json.
        #[arg(long)]
        pub out: Option<PathBuf>,
        #[arg(long)]
        pub threads: Option<usize>,
    }
}

layered! {
    pub struct DiagnoseOptions {
        #[arg(long)]
        pub edges: Option<PathBuf>,
        /// With pairs the Lipschitz estimate is reported.
        #[arg(long)]
        pub pairs: Option<PathBuf>,
        /// Effective contrastive weight for the Lipschitz estimate.
        #[arg(long)]
        pub lambda: Option<f64>,
        /// Embedding width of the random point used for gradient alignment.
        #[arg(long)]
        pub k: Option<usize>,
        #[arg(long)]
        pub seed: Option<u64>,
        #[arg(long)]
        pub power_iters: Option<usize>,
        #[arg(long)]
        pub power_tol: Option<f64>,
        /// Output prefix: writes .txt, .json, .manifest.json.
        #[arg(long)]
        pub out: Option<PathBuf>,
        #[arg(long)]
        pub threads: Option<usize>,
    }
}

layered! {
    pub struct EvalOptions {
        /// Embedding in TSV or binary form.
        #[arg(long)]
        pub embedding: Option<PathBuf>,
        /// Id-map sidecar for a binary embedding; rows are ids 0..n without it.
        #[arg(long)]
        pub ids: Option<PathBuf>,
        /// Training pairs (and held-out test pairs unless --test-pairs is given).
        #[arg(long)]
        pub pairs: Option<PathBuf>,
        /// Separate evaluation pairs; disables the held-out split.
        #[arg(long)]
        pub test_pairs: Option<PathBuf>,
        #[arg(long)]
        pub epochs: Option<usize>,
        #[arg(long)]
        pub learning_rate: Option<f64>,
        #[arg(long)]
        pub train_fraction: Option<f64>,
        #[arg(long)]
        pub threshold: Option<f64>,
        #[arg(long, num_args = 0..=1, default_missing_value = "true")]
        pub symmetrize: Option<bool>,
        #[arg(long)]
        pub seed: Option<u64>,
        /// Output prefix: writes .txt, .json, .weights.txt, .manifest.json.
        #[arg(long)]
        pub out: Option<PathBuf>,
        #[arg(long)]
        pub threads: Option<usize>,
    }
}

layered! {
    pub struct BenchOptions {
        /// Node count of every generated graph.
        #[arg(long)]
        pub nodes: Option<usize>,
        /// Edge counts, comma separated.
        #[arg(long, value_delimiter = ',')]
        pub edge_counts: Option<Vec<usize>>,
        /// Pair counts, comma separated.
        #[arg(long, value_delimiter = ',')]
        pub pair_counts: Option<Vec<usize>>,
        /// Embedding widths, comma separated.
        #[arg(long, value_delimiter = ',')]
        pub dims: Option<Vec<usize>>,
        /// Timed iterations per configuration and round.
        #[arg(long)]
        pub iterations: Option<usize>,
        /// Passes over the whole grid; the fastest iteration seen is reported.
        #[arg(long)]
        pub rounds: Option<usize>,
        #[arg(long)]
        pub seed: Option<u64>,
        /// CSV output; a .manifest.json is written next to it.
        #[arg(long)]
        pub out: Option<PathBuf>,
        #[arg(long)]
        pub threads: Option<usize>,
    }
}

#[derive(Debug, Args)]
pub struct PairsArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    #[command(flatten)]
    pub options: PairsOptions,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    #[command(flatten)]
    pub options: EmbedOptions,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    #[command(flatten)]
    pub options: DiagnoseOptions,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    #[command(flatten)]
    pub options: EvalOptions,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    #[command(flatten)]
    pub options: BenchOptions,
}

/// Every key any command accepts; top-level config keys outside this set
/// are rejected as typos.
pub fn all_keys() -> impl Iterator<Item = &'static str> {
    PairsOptions::KEYS
        .iter()
        .chain(EmbedOptions::KEYS)
        .chain(DiagnoseOptions::KEYS)
        .chain(EvalOptions::KEYS)
        .chain(BenchOptions::KEYS)
        .copied()
}
