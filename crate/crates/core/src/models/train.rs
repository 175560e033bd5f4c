//! Full-batch fitting and resolution-independent rendering.

use serde::{Deserialize, Serialize};

use super::network::Model;
use crate::metrics::{psnr, PsnrResult};
use crate::nn::{mse_loss, Adam, AdamConfig, Tensor};
use crate::signal::{CellGrid, Image};
use crate::{Error, Result};

/// Columns rendered per inference call.
const RENDER_CHUNK: usize = 8192;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub adam: AdamConfig,
}

impl TrainConfig {
    pub fn epochs(epochs: usize) -> Self {
        TrainConfig {
            epochs,
            adam: AdamConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Loss before each epoch's update.
    pub losses: Vec<f64>,
    /// Clamped render at the training resolution against the target.
    pub train_psnr: PsnrResult,
}

/// Fits `model` to `img` with full-batch Adam.
///
/// Each epoch runs the `N̂_x N̂_y` cell-local coordinates through the model
/// once; every column drives all heads against their own cells' pixels.
pub fn train(model: &mut Model, img: &Image, config: &TrainConfig) -> Result<TrainReport> {
    train_with(model, img, config, |_, _| {})
}

/// [`train`] with a per-epoch callback receiving `(epoch, loss)`.
pub fn train_with(
    model: &mut Model,
    img: &Image,
    config: &TrainConfig,
    mut on_epoch: impl FnMut(usize, f64),
) -> Result<TrainReport> {
    let grid = model.spec().head_grid().cells(img.height(), img.width())?;
    let coords = grid.local_coordinates();
    let targets = grid.targets(img)?;
    let mut adam = Adam::new(config.adam);
    let mut losses = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let diagnose = |e: Error| match e {
            Error::NonFinite(what) => Error::NonFinite(format!("{what} at epoch {epoch}")),
            other => other,
        };
        model.zero_grad();
        let pred = model.forward(&coords).map_err(diagnose)?;
        let (loss, grad) = mse_loss(&pred, &targets).map_err(diagnose)?;
        model.backward(&grad).map_err(diagnose)?;
        adam.step(&mut model.params_mut())?;
        losses.push(loss);
        on_epoch(epoch, loss);
    }
    let render = render_grid(model, &grid)?;
    Ok(TrainReport {
        losses,
        train_psnr: psnr(&render, img)?,
    })
}

/// Raw (unclamped) model outputs for every pixel of `grid`, in image layout.
pub fn render_raw(model: &Model, grid: &CellGrid) -> Result<Vec<f64>> {
    if grid.heads() != model.spec().head_grid() {
        return Err(Error::InvalidArgument(format!(
            "grid {} does not match the model's head layout {}",
            grid.heads(),
            model.spec().head_grid()
        )));
    }
    let coords = grid.local_coordinates();
    let n = coords.cols();
    let heads = grid.head_count();
    let mut out = Tensor::zeros(heads, n);
    for start in (0..n).step_by(RENDER_CHUNK) {
        let end = (start + RENDER_CHUNK).min(n);
        let part = model.infer(&coords.columns(start, end))?;
        let width = end - start;
        for m in 0..heads {
            out.values_mut()[m * n + start..m * n + end]
                .copy_from_slice(&part.values()[m * width..(m + 1) * width]);
        }
    }
    grid.scatter_outputs(&out)
}

fn render_grid(model: &Model, grid: &CellGrid) -> Result<Image> {
    Image::from_clamped(
        grid.image_height(),
        grid.image_width(),
        render_raw(model, grid)?,
    )
}

/// Renders the model at `height × width`, clamped into `[0, 1]`.
///
/// Each head is sampled on a finer or coarser cell-local lattice, so any size
/// divisible by the head grid works.
pub fn evaluate(model: &Model, height: usize, width: usize) -> Result<Image> {
    let grid = model.spec().head_grid().cells(height, width)?;
    render_grid(model, &grid)
}
