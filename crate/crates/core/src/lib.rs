//! Featureless node embeddings by projected gradient ascent on a
//! modularity-plus-signed-contrastive-Laplacian objective.
//!
//! The crate is organized bottom-up:
//!
//! * [`graph`] holds the sparse undirected graph and its degree statistics.
//! * [`pairs`] builds and applies the signed pairwise supervision.
//! * [`optimizer`] runs the ascent loop with exact or approximate
//!   structural gradients.
//! * [`diagnostics`] computes gradient alignment, Zagreb statistics and a
//!   Lipschitz estimate.
//! * [`probe`] is a linear pairwise-classification probe used to score
//!   embeddings.
//! * [`io`] reads and writes the on-disk formats.

pub mod diagnostics;
pub mod error;
pub mod graph;
pub mod io;
pub mod optimizer;
pub mod pairs;
pub mod probe;
pub mod real;
pub mod rng;

pub use diagnostics::{
    gradient_alignment, lipschitz_estimate, zagreb_report, DiagnosticsReport, LipschitzEstimate,
    ZagrebReport,
};
pub use error::{Error, Result};
pub use graph::{EdgeStats, IdMap, SparseGraph};
pub use optimizer::{
    adaptive_params, fuse_fit, fuse_fit_with, init_embedding, objective, structural_gradient,
    EffectiveParams, EmbeddingMatrix, FitOutput, FuseConfig, GradientMode, IterationStats,
    Precision,
};
pub use pairs::{
    apply_contrastive_laplacian, contrastive_quadratic_form, flip_labels, generate_pairs,
    GenerationStats, NodeLabels, Pair, PairSet, Sign,
};
pub use probe::{
    evaluate, evaluate_split, fit_and_score, pair_features, train_probe, EvalResult, ProbeConfig,
    ProbeWeights,
};
