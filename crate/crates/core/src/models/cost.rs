//! Closed-form parameter and FLOP accounting, and parameter matching.

use serde::{Deserialize, Serialize};

use super::spec::{Architecture, ModelKind, ModelSpec, DEFAULT_DEPTH};
use crate::{Error, Result};

/// Cost model used by [`count_flops`].
pub const FLOPS_CONVENTION: &str = "evaluation only; multiply-accumulate = 2 FLOPs; \
bias add = 1 FLOP per output; ReLU/sine = 1 FLOP per element, identity = 0; \
Fourier encoding = 2*2*features MACs + 1 FLOP per sin/cos";

/// Relative tolerance accepted by [`match_params`].
pub const MATCH_TOLERANCE: f64 = 0.005;

fn dense_params(fan_in: usize, width: usize) -> usize {
    fan_in * width + width
}

fn input_width(spec: &ModelSpec) -> usize {
    match spec.architecture {
        Architecture::FourierFeature { features, .. } => 2 * features,
        _ => 2,
    }
}

/// Exact trainable parameter count, biases included.
///
/// The Fourier projection matrix is fixed and not counted.
pub fn count_params(spec: &ModelSpec) -> Result<usize> {
    spec.validate()?;
    let mut fan_in = input_width(spec);
    let mut total = 0;
    for &w in &spec.hidden {
        total += dense_params(fan_in, w);
        fan_in = w;
    }
    total += match spec.architecture {
        Architecture::MultiHead { heads, alpha } => heads.count() * (alpha + 1),
        _ => dense_params(fan_in, 1),
    };
    Ok(total)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlopsReport {
    pub flops_per_forward: u64,
    pub forwards_per_image: u64,
    pub flops_per_image: u64,
    pub convention: String,
}

fn dense_flops(fan_in: usize, width: usize, activation_cost: u64) -> u64 {
    let (fan_in, width) = (fan_in as u64, width as u64);
    2 * fan_in * width + width + activation_cost * width
}

/// FLOPs needed to render an `height × width` image once.
pub fn count_flops(spec: &ModelSpec, height: usize, width: usize) -> Result<FlopsReport> {
    spec.validate()?;
    let cells = spec.head_grid().cells(height, width)?;
    let mut per_forward = 0u64;
    let mut fan_in = input_width(spec);
    if let Architecture::FourierFeature { features, .. } = spec.architecture {
        let f = features as u64;
        per_forward += 2 * (2 * 2 * f) + 2 * f;
    }
    for &w in &spec.hidden {
        per_forward += dense_flops(fan_in, w, 1);
        fan_in = w;
    }
    per_forward += match spec.architecture {
        Architecture::MultiHead { heads, alpha } => {
            let m = heads.count() as u64;
            2 * m * alpha as u64 + m
        }
        _ => dense_flops(fan_in, 1, 0),
    };
    let forwards = cells.cell_len() as u64;
    Ok(FlopsReport {
        flops_per_forward: per_forward,
        forwards_per_image: forwards,
        flops_per_image: per_forward * forwards,
        convention: FLOPS_CONVENTION.to_string(),
    })
}

fn nearest_width(mut count: impl FnMut(usize) -> usize, target: usize) -> (usize, usize) {
    // count is strictly increasing in width
    let mut w = 1;
    while count(w) < target && w < 1 << 20 {
        w += 1;
    }
    let above = (w, count(w));
    if w > 1 {
        let below = (w - 1, count(w - 1));
        if target - below.1 <= above.1 - target {
            return below;
        }
    }
    above
}

fn relative_error(count: usize, target: usize) -> f64 {
    (count as f64 - target as f64).abs() / target as f64
}

/// Fourier feature counts considered by [`match_params`].
pub const FF_FEATURE_CANDIDATES: [usize; 16] = [
    16, 32, 48, 64, 80, 96, 112, 128, 144, 160, 176, 192, 208, 224, 240, 256,
];

/// Four-hidden-layer baseline whose parameter count is nearest `target`.
///
/// SIREN searches the width; Fourier features search width for each
/// candidate feature count and keep the closest (larger feature count on ties).
pub fn match_params(kind: ModelKind, target: usize) -> Result<ModelSpec> {
    if target == 0 {
        return Err(Error::InvalidArgument(
            "target parameter count must be positive".into(),
        ));
    }
    let spec = match kind {
        ModelKind::MultiHead => {
            return Err(Error::InvalidArgument(
                "parameter matching applies to baselines only".into(),
            ))
        }
        ModelKind::Siren => {
            let count = |w| count_params(&ModelSpec::siren(w)).expect("valid siren spec");
            ModelSpec::siren(nearest_width(count, target).0)
        }
        ModelKind::FourierFeature => {
            let mut best: Option<(usize, usize, usize)> = None;
            for &f in &FF_FEATURE_CANDIDATES {
                let count =
                    |w| count_params(&ModelSpec::fourier_feature(w, f)).expect("valid ff spec");
                let (w, c) = nearest_width(count, target);
                let better = match best {
                    None => true,
                    Some((_, _, bc)) => c.abs_diff(target) <= bc.abs_diff(target),
                };
                if better {
                    best = Some((w, f, c));
                }
            }
            let (w, f, _) = best.expect("candidate list is non-empty");
            ModelSpec::fourier_feature(w, f)
        }
    };
    let count = count_params(&spec)?;
    let err = relative_error(count, target);
    if err > MATCH_TOLERANCE {
        return Err(Error::InvalidSpec(format!(
            "no {kind} configuration within {:.1}% of {target} parameters (best {count})",
            MATCH_TOLERANCE * 100.0
        )));
    }
    debug_assert_eq!(spec.hidden.len(), DEFAULT_DEPTH);
    Ok(spec)
}
