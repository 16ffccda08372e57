//! Walk censuses and from-scratch message passing layers for studying what
//! GNNs encode when every node starts from the same scalar feature.
//!
//! The crate is generic over the real type (`f32` or `f64`, see
//! [`Scalar`]) and over the exact counting type used for raw walk counts
//! (see [`WalkCount`]). The aliases at the crate root fix `f64`, which is
//! what the verification routines are calibrated for.

pub mod analysis;
pub mod export;
pub mod generate;
pub mod graph;
pub mod linalg;
pub mod lipschitz;
pub mod mpnn;
pub mod nn;
pub mod rng;
pub mod scalar;
pub mod walks;

pub use analysis::{
    collapse_check, correlate, fig2_witness, find_walk_collisions, pearson, proportionality_check, readout_census,
    AnalysisError, CollisionWitness, CorrelationReport, DistanceSet, Pearson,
};
pub use generate::{er_corpus, fig2_collection, generate, ErCorpus, SyntheticKind, SyntheticSpec};
pub use graph::{parse_edge_list, parse_tu_collection, Graph, GraphCollection, GraphError};
pub use linalg::{DenseMatrix, LinalgError};
pub use lipschitz::{
    layer_lipschitz, spectral_norm, verify_bound, BoundReport, LipschitzError, LipschitzProfile, PowerIteration,
};
pub use mpnn::{forward, readout, EmbeddingTable, ReadoutMode};
pub use nn::{
    init_model, Activation, BiasMode, IsolatedPolicy, LayerParams, LinearLayer, MlpBlock, Model, ModelError, ModelSpec,
    Variant,
};
pub use scalar::{Scalar, WalkCount};
pub use walks::{normalized_walk_sums, walk_census, walk_counts, WalkError, WalkKind, WalkTable};

pub type Matrix = DenseMatrix<f64>;
pub type Matrix32 = DenseMatrix<f32>;
pub type Model64 = Model<f64>;
pub type Model32 = Model<f32>;
pub type Embeddings = EmbeddingTable<f64>;
pub type Embeddings32 = EmbeddingTable<f32>;
pub type Walks = WalkTable<f64>;
pub type Walks32 = WalkTable<f32>;
