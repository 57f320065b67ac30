//! Dual-space antonym/synonym pair classification over precomputed word
//! embeddings.
//!
//! The crate implements the full numerical stack from scratch: dense f64
//! tensors with a reverse-mode gradient tape, embedding and pair-file
//! loading, the dual projection + graph transformer architecture, the
//! combined BCE/margin objective, and a deterministic SGD training loop with
//! checkpointing and evaluation. Randomness is ChaCha8 throughout, split into
//! per-purpose streams, so runs reproduce bit-exactly from a seed.

pub mod checkpoint;
pub mod config;
pub mod data;
pub mod error;
pub mod graph;
pub mod loss;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod run;
pub mod synthetic;
pub mod tape;
pub mod tensor;
pub mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use config::{effective_toml, PartialRunConfig};
pub use data::{batches, filter_resolvable, load_pairs, stratified_split, Dataset, EmbeddingTable, LabeledPair};
pub use error::{Error, Result};
pub use graph::{build_graph, graph_stats, Edge, EdgeRule, GraphStats, PairGraph, PairNode};
pub use loss::{bce_loss, margin_loss, LossBreakdown};
pub use metrics::{threshold_label, EvalReport};
pub use model::{
    bind_params, classify, forward_batch, fuse, global_mean_pool, project_dual,
    transformer_conv_layer, BatchForward, BoundParams, HyperParams, Mode, ModelParams,
    PairForward,
};
pub use rng::{Rng, Stream};
pub use run::{FinalReport, RunWriter};
pub use synthetic::separable_dataset;
pub use tape::{grad_check, GradTape, Gradients, NodeId};
pub use tensor::Tensor;
pub use train::{
    collect_grads, evaluate, predict, sgd_step, train, EpochRecord, LanguageData, Prediction,
    TrainOptions, TrainState,
};
