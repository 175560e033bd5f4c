use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::signal::HeadGrid;
use crate::{Error, Result};

pub const DEFAULT_WIDTH: usize = 256;
pub const DEFAULT_DEPTH: usize = 4;
pub const DEFAULT_EPOCHS: usize = 2000;
pub const DEFAULT_OMEGA0: f64 = 30.0;
pub const DEFAULT_FF_SIGMA: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    MultiHead,
    Siren,
    FourierFeature,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::MultiHead => "multi-head",
            ModelKind::Siren => "siren",
            ModelKind::FourierFeature => "fourier-feature",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "multi-head" | "multihead" | "mh" => Ok(ModelKind::MultiHead),
            "siren" => Ok(ModelKind::Siren),
            "fourier-feature" | "fourier" | "ff" => Ok(ModelKind::FourierFeature),
            other => Err(Error::InvalidArgument(format!(
                "unknown model kind {other:?}"
            ))),
        }
    }
}

/// Architecture-specific settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Architecture {
    /// ReLU body feeding `heads.count()` sparse single-neuron heads.
    MultiHead { heads: HeadGrid, alpha: usize },
    /// Sine-activated MLP with one output.
    Siren { omega0: f64 },
    /// Fixed Gaussian Fourier-feature encoding followed by a ReLU MLP.
    FourierFeature { features: usize, sigma: f64 },
}

/// Everything needed to build, size and cost a network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub architecture: Architecture,
    /// Widths of the hidden layers (the body, for the multi-head model).
    pub hidden: Vec<usize>,
    pub seed: u64,
    pub epochs: usize,
}

impl ModelSpec {
    pub fn multi_head(heads: HeadGrid, alpha: usize) -> Self {
        ModelSpec {
            architecture: Architecture::MultiHead { heads, alpha },
            hidden: vec![DEFAULT_WIDTH; DEFAULT_DEPTH],
            seed: 0,
            epochs: DEFAULT_EPOCHS,
        }
    }

    pub fn siren(width: usize) -> Self {
        ModelSpec {
            architecture: Architecture::Siren {
                omega0: DEFAULT_OMEGA0,
            },
            hidden: vec![width; DEFAULT_DEPTH],
            seed: 0,
            epochs: DEFAULT_EPOCHS,
        }
    }

    pub fn fourier_feature(width: usize, features: usize) -> Self {
        ModelSpec {
            architecture: Architecture::FourierFeature {
                features,
                sigma: DEFAULT_FF_SIGMA,
            },
            hidden: vec![width; DEFAULT_DEPTH],
            seed: 0,
            epochs: DEFAULT_EPOCHS,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_epochs(mut self, epochs: usize) -> Self {
        self.epochs = epochs;
        self
    }

    pub fn with_hidden(mut self, hidden: Vec<usize>) -> Self {
        self.hidden = hidden;
        self
    }

    pub fn kind(&self) -> ModelKind {
        match self.architecture {
            Architecture::MultiHead { .. } => ModelKind::MultiHead,
            Architecture::Siren { .. } => ModelKind::Siren,
            Architecture::FourierFeature { .. } => ModelKind::FourierFeature,
        }
    }

    /// Head layout; baselines render the whole image from a single "head".
    pub fn head_grid(&self) -> HeadGrid {
        match self.architecture {
            Architecture::MultiHead { heads, .. } => heads,
            _ => HeadGrid::single(),
        }
    }

    pub fn last_width(&self) -> usize {
        *self.hidden.last().unwrap_or(&0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(Error::InvalidSpec(format!(
                "hidden widths must be non-empty and positive, got {:?}",
                self.hidden
            )));
        }
        match self.architecture {
            Architecture::MultiHead { heads, alpha } => {
                if heads.count() == 0 {
                    return Err(Error::InvalidSpec("head grid must be non-empty".into()));
                }
                if alpha == 0 || alpha > self.last_width() {
                    return Err(Error::InvalidSpec(format!(
                        "alpha must lie in [1, {}], got {alpha}",
                        self.last_width()
                    )));
                }
            }
            Architecture::Siren { omega0 } => {
                if !(omega0 > 0.0 && omega0.is_finite()) {
                    return Err(Error::InvalidSpec(format!(
                        "omega0 must be positive, got {omega0}"
                    )));
                }
            }
            Architecture::FourierFeature { features, sigma } => {
                if features == 0 {
                    return Err(Error::InvalidSpec(
                        "Fourier features must be positive".into(),
                    ));
                }
                if !(sigma > 0.0 && sigma.is_finite()) {
                    return Err(Error::InvalidSpec(format!(
                        "sigma must be positive, got {sigma}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Validates the spec against a target image size.
    pub fn validate_for(&self, height: usize, width: usize) -> Result<()> {
        self.validate()?;
        self.head_grid().cells(height, width).map(|_| ())
    }
}
