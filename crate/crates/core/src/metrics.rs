//! Image-quality and trend metrics.

use serde::{Deserialize, Serialize};

use crate::signal::Image;
use crate::{Error, Result};

/// Reported PSNR for an exact match.
pub const PSNR_CAP_DB: f64 = 100.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsnrResult {
    pub mse: f64,
    pub psnr_db: f64,
    pub capped: bool,
}

impl PsnrResult {
    /// PSNR for pixels in `[0, 1]` (peak 1).
    pub fn from_mse(mse: f64) -> Self {
        if mse > 0.0 {
            let db = -10.0 * mse.log10();
            PsnrResult {
                mse,
                psnr_db: db.min(PSNR_CAP_DB),
                capped: db >= PSNR_CAP_DB,
            }
        } else {
            PsnrResult {
                mse: 0.0,
                psnr_db: PSNR_CAP_DB,
                capped: true,
            }
        }
    }
}

pub fn mse(a: &Image, b: &Image) -> Result<f64> {
    if a.dims() != b.dims() {
        return Err(Error::shape(
            "mse",
            format!("{}x{}", a.height(), a.width()),
            format!("{}x{}", b.height(), b.width()),
        ));
    }
    let sum: f64 = a
        .pixels()
        .iter()
        .zip(b.pixels())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(sum / a.pixels().len().max(1) as f64)
}

pub fn psnr(a: &Image, b: &Image) -> Result<PsnrResult> {
    Ok(PsnrResult::from_mse(mse(a, b)?))
}

/// Ranks with ties sharing their average rank (1-based).
fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation between position in `xs` and value.
///
/// A constant sequence has no trend and yields 0.
pub fn spearman_trend(xs: &[f64]) -> Result<f64> {
    if xs.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "trend needs at least 3 values, got {}",
            xs.len()
        )));
    }
    if xs.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("spearman_trend input".into()));
    }
    let n = xs.len() as f64;
    let ranks = average_ranks(xs);
    let mean = (n + 1.0) / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (i, &r) in ranks.iter().enumerate() {
        let dx = i as f64 + 1.0 - mean;
        let dy = r - mean;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if syy == 0.0 {
        return Ok(0.0);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Mean absolute horizontal finite difference, a simple roughness measure.
pub fn mean_abs_dx(img: &Image) -> f64 {
    let (h, w) = img.dims();
    if w < 2 {
        return 0.0;
    }
    let mut s = 0.0;
    for r in 0..h {
        for c in 0..w - 1 {
            s += (img.get(r, c + 1) - img.get(r, c)).abs();
        }
    }
    s / (h * (w - 1)) as f64
}
