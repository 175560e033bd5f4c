//! Minimal float64 neural-network engine.
//!
//! Activations flow through the network as `features × batch` matrices: each
//! column is one sample. Layers cache what their backward pass needs during
//! `forward` and accumulate parameter gradients into the `grad` buffers of
//! their [`Tensor`]s during `backward`.

mod activation;
mod adam;
mod dense;
pub mod linalg;
mod loss;
mod rng;
mod sparse;
mod tensor;

pub use activation::Activation;
pub use adam::{Adam, AdamConfig};
pub use dense::DenseLayer;
pub use loss::mse_loss;
pub use rng::Rng;
pub use sparse::SparseHeadLayer;
pub use tensor::{init_uniform, Tensor};

use crate::{Error, Result};

/// Fails with [`Error::NonFinite`] if any value is NaN or infinite.
pub(crate) fn ensure_finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}
