use super::{ensure_finite, Tensor};
use crate::{Error, Result};

/// Mean squared error over all elements, plus `∂L/∂pred`.
pub fn mse_loss(pred: &Tensor, target: &Tensor) -> Result<(f64, Tensor)> {
    if pred.shape() != target.shape() {
        return Err(Error::shape(
            "mse_loss",
            format!("{:?}", target.shape()),
            format!("{:?}", pred.shape()),
        ));
    }
    let n = pred.len().max(1) as f64;
    let mut sum = 0.0;
    let grad: Vec<f64> = pred
        .values()
        .iter()
        .zip(target.values())
        .map(|(&p, &t)| {
            let d = p - t;
            sum += d * d;
            2.0 * d / n
        })
        .collect();
    let loss = sum / n;
    ensure_finite(&[loss], "mse_loss")?;
    Ok((loss, Tensor::from_vec(pred.rows(), pred.cols(), grad)?))
}
