//! Coordinate networks: the multi-head model and its two baselines.

mod checkpoint;
mod cost;
mod mlp;
mod network;
mod spec;
mod train;

pub use checkpoint::{
    load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CHECKPOINT_VERSION,
};
pub use cost::{
    count_flops, count_params, match_params, FlopsReport, FF_FEATURE_CANDIDATES, FLOPS_CONVENTION,
    MATCH_TOLERANCE,
};
pub use mlp::Mlp;
pub use network::{FourierFeatureModel, Model, MultiHeadModel, Network};
pub use spec::{
    Architecture, ModelKind, ModelSpec, DEFAULT_DEPTH, DEFAULT_EPOCHS, DEFAULT_FF_SIGMA,
    DEFAULT_OMEGA0, DEFAULT_WIDTH,
};
pub use train::{evaluate, render_raw, train, train_with, TrainConfig, TrainReport};
