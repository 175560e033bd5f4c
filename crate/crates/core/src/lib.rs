//! Multi-head implicit neural representations for grayscale images.
//!
//! A shared ReLU MLP body maps a cell-local coordinate to a feature vector,
//! and a sparse layer of single-neuron rendering heads turns that vector into
//! one pixel per image cell. One forward pass therefore renders `M` pixels.
//!
//! The crate is organised as:
//!
//! - [`nn`]: a small deterministic float64 engine (dense and sparse layers,
//!   hand-written backward passes, MSE loss, Adam, seeded RNG).
//! - [`signal`]: images, coordinate normalization, cell partitioning,
//!   box downsampling, fractal Perlin noise and PGM/PNG I/O.
//! - [`models`]: the multi-head network plus SIREN and Fourier-feature
//!   baselines, training, rendering, parameter and FLOP accounting,
//!   checkpoints.
//! - [`metrics`]: MSE, PSNR and rank-trend statistics.

pub mod error;
pub mod metrics;
pub mod models;
pub mod nn;
pub mod signal;

pub use error::{Error, Result};
