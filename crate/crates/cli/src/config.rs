//! Experiment configuration.
//!
//! Settings come from three layers, highest precedence first: command-line
//! flags, an optional TOML file (`--config`), and per-command defaults
//! (desk scale, or paper scale with `--paper-scale`). Every TOML key is the
//! long flag name without the leading dashes, for example:
//!
//! ```toml
//! seed = 7
//! epochs = 2000
//! alpha = 32
//! heads = ["1", "8x8", "64x64"]
//! octaves = [1, 2, 3, 4, 5]
//! out-dir = "runs/octaves"
//! ```

use std::path::{Path, PathBuf};

use clap::Args;
use mhinr_core::models::ModelKind;
use mhinr_core::signal::{HeadGrid, PerlinSpec};
use serde::{Deserialize, Serialize};

use crate::{CliError, Result};

/// Raw, optional settings shared by the TOML file and the flags.
#[derive(Clone, Debug, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Overrides {
    /// TOML file with default values for any of these flags
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    #[arg(long)]
    pub seed: Option<u64>,

    #[arg(long)]
    pub epochs: Option<usize>,

    /// Adam learning rate
    #[arg(long)]
    pub lr: Option<f64>,

    /// Connections per rendering head
    #[arg(long)]
    pub alpha: Option<usize>,

    /// Head grids as HxW (or S for SxS), comma separated
    #[arg(long, value_delimiter = ',')]
    pub heads: Option<Vec<String>>,

    /// Input grayscale image (PGM or PNG)
    #[arg(long)]
    pub image: Option<PathBuf>,

    #[arg(long)]
    pub out_dir: Option<PathBuf>,

    /// Use the full-size experiment defaults (slow)
    #[arg(long)]
    #[serde(default)]
    pub paper_scale: bool,

    /// Target side length in pixels (images are box-downsampled to it)
    #[arg(long)]
    pub size: Option<usize>,

    /// Perlin octave counts, comma separated
    #[arg(long, value_delimiter = ',')]
    pub octaves: Option<Vec<u32>>,

    #[arg(long)]
    pub base_frequency: Option<f64>,

    #[arg(long)]
    pub persistence: Option<f64>,

    #[arg(long)]
    pub lacunarity: Option<f64>,

    /// Model kind for `fit`: multi-head, siren or fourier-feature
    #[arg(long)]
    pub model: Option<String>,

    /// Hidden width for baseline models in `fit`
    #[arg(long)]
    pub width: Option<usize>,

    /// Fourier feature count for `fit --model fourier-feature`
    #[arg(long)]
    pub features: Option<usize>,

    /// Multi-head alphas defining the compared parameter budgets
    #[arg(long, value_delimiter = ',')]
    pub alphas: Option<Vec<usize>>,

    /// Side length used for rendering cost in `compare`
    #[arg(long)]
    pub eval_size: Option<usize>,

    /// Also write PNG copies of reconstructions
    #[arg(long)]
    #[serde(default)]
    pub png: bool,

    /// Output file for `perlin`
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Overrides {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Overrides::from_toml(&text)
    }

    /// Field-wise `self` if set, else `file`.
    pub fn or(self, file: Overrides) -> Overrides {
        Overrides {
            config: self.config.or(file.config),
            seed: self.seed.or(file.seed),
            epochs: self.epochs.or(file.epochs),
            lr: self.lr.or(file.lr),
            alpha: self.alpha.or(file.alpha),
            heads: self.heads.or(file.heads),
            image: self.image.or(file.image),
            out_dir: self.out_dir.or(file.out_dir),
            paper_scale: self.paper_scale || file.paper_scale,
            size: self.size.or(file.size),
            octaves: self.octaves.or(file.octaves),
            base_frequency: self.base_frequency.or(file.base_frequency),
            persistence: self.persistence.or(file.persistence),
            lacunarity: self.lacunarity.or(file.lacunarity),
            model: self.model.or(file.model),
            width: self.width.or(file.width),
            features: self.features.or(file.features),
            alphas: self.alphas.or(file.alphas),
            eval_size: self.eval_size.or(file.eval_size),
            png: self.png || file.png,
            out: self.out.or(file.out),
        }
    }

    /// Merges in the `--config` file, if one was named.
    pub fn with_config_file(self) -> Result<Overrides> {
        match &self.config {
            Some(path) => {
                let file = Overrides::from_file(path)?;
                Ok(self.or(file))
            }
            None => Ok(self),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    Fit,
    SweepOctaves,
    SweepHeads,
    Compare,
    Perlin,
}

/// Fully resolved, validated settings for one subcommand.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub epochs: usize,
    pub lr: f64,
    pub alpha: usize,
    pub heads: Vec<HeadGrid>,
    pub image: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub paper_scale: bool,
    /// Target side length; `None` keeps an input image at its own size.
    pub size: Option<usize>,
    pub octaves: Vec<u32>,
    /// Noise settings; `octaves` is overwritten per run.
    pub perlin: PerlinSpec,
    pub model: ModelKind,
    pub width: usize,
    pub features: usize,
    pub alphas: Vec<usize>,
    pub eval_size: usize,
    pub png: bool,
    pub out: Option<PathBuf>,
}

fn squares(sides: &[usize]) -> Vec<HeadGrid> {
    sides.iter().map(|&s| HeadGrid::square(s)).collect()
}

impl ExperimentConfig {
    pub fn resolve(kind: ExperimentKind, o: Overrides) -> Result<Self> {
        use ExperimentKind::*;
        let paper = o.paper_scale;
        let (size, heads, octaves, epochs): (Option<usize>, Vec<HeadGrid>, Vec<u32>, usize) =
            match (kind, paper) {
                (Fit, false) => (None, squares(&[8]), vec![1], 2000),
                (Fit, true) => (None, squares(&[64]), vec![1], 2000),
                (SweepOctaves, false) => (Some(64), squares(&[1, 8, 64]), (1..=5).collect(), 2000),
                (SweepOctaves, true) => (
                    Some(256),
                    squares(&[1, 4, 16, 64, 256]),
                    (1..=8).collect(),
                    2000,
                ),
                (SweepHeads, false) => (Some(256), squares(&[1, 4, 16, 32, 64, 128]), vec![], 2000),
                (SweepHeads, true) => (
                    Some(512),
                    squares(&[1, 2, 4, 8, 16, 32, 64, 128, 256]),
                    vec![],
                    2000,
                ),
                (Compare, false) => (Some(128), squares(&[64]), vec![1], 300),
                (Compare, true) => (Some(512), squares(&[64]), vec![1], 2000),
                (Perlin, _) => (Some(if paper { 256 } else { 64 }), vec![], vec![1], 0),
            };
        // a Perlin target needs a size even for `fit`
        let size = o.size.or(size).or(if o.image.is_none() {
            Some(if paper { 256 } else { 64 })
        } else {
            None
        });
        let heads = match o.heads {
            Some(list) => list
                .iter()
                .map(|s| s.parse::<HeadGrid>())
                .collect::<std::result::Result<Vec<_>, _>>()?,
            None => heads,
        };
        let defaults = PerlinSpec::default();
        let cfg = ExperimentConfig {
            kind,
            seed: o.seed.unwrap_or(0),
            epochs: o.epochs.unwrap_or(epochs),
            lr: o.lr.unwrap_or(1e-3),
            alpha: o.alpha.unwrap_or(32),
            heads,
            image: o.image,
            out_dir: o.out_dir.unwrap_or_else(|| PathBuf::from("out")),
            paper_scale: paper,
            size,
            octaves: o.octaves.unwrap_or(octaves),
            perlin: PerlinSpec {
                octaves: 1,
                base_frequency: o.base_frequency.unwrap_or(defaults.base_frequency),
                persistence: o.persistence.unwrap_or(defaults.persistence),
                lacunarity: o.lacunarity.unwrap_or(defaults.lacunarity),
                seed: o.seed.unwrap_or(0),
            },
            model: o.model.as_deref().unwrap_or("multi-head").parse()?,
            width: o.width.unwrap_or(256),
            features: o.features.unwrap_or(256),
            alphas: o.alphas.unwrap_or_else(|| vec![64, 256]),
            eval_size: o.eval_size.unwrap_or(512),
            png: o.png,
            out: o.out,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks everything that can be checked before any compute starts.
    pub fn validate(&self) -> Result<()> {
        use ExperimentKind::*;
        let fail = |msg: String| Err(CliError::Config(msg));
        if self.kind != Perlin && self.epochs == 0 {
            return fail("epochs must be positive".into());
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return fail(format!("learning rate must be positive, got {}", self.lr));
        }
        if self.size == Some(0) {
            return fail("size must be positive".into());
        }
        if matches!(self.kind, SweepHeads | Compare) && self.image.is_none() {
            return fail("this experiment needs --image".into());
        }
        let uses_perlin = matches!(self.kind, SweepOctaves | Perlin)
            || (self.kind == Fit && self.image.is_none());
        if uses_perlin {
            if self.octaves.is_empty() {
                return fail("at least one octave is required".into());
            }
            for &o in &self.octaves {
                PerlinSpec {
                    octaves: o,
                    ..self.perlin
                }
                .validate()?;
            }
        }
        if matches!(self.kind, Fit | SweepOctaves | SweepHeads | Compare) && self.heads.is_empty() {
            return fail("at least one head grid is required".into());
        }
        if self.kind == Fit && self.heads.len() != 1 {
            return fail("fit trains a single model; give exactly one --heads grid".into());
        }
        if self.alpha == 0 || self.alpha > 256 {
            return fail(format!("alpha must lie in [1, 256], got {}", self.alpha));
        }
        if self.kind == Compare {
            if self.alphas.is_empty() || self.alphas.iter().any(|&a| a == 0 || a > 256) {
                return fail(format!(
                    "alphas must lie in [1, 256], got {:?}",
                    self.alphas
                ));
            }
            for grid in &self.heads {
                grid.cells(self.eval_size, self.eval_size)?;
            }
        }
        if let Some(size) = self.size {
            if self.kind != Perlin {
                // sweep-heads trains at half the original size
                let train = if self.kind == SweepHeads {
                    size / 2
                } else {
                    size
                };
                if self.kind == SweepHeads && size % 2 != 0 {
                    return fail(format!("original size {size} must be even"));
                }
                for grid in &self.heads {
                    grid.cells(train, train)?;
                    if self.kind == SweepHeads {
                        grid.cells(size, size)?;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn perlin_spec(&self, octaves: u32) -> PerlinSpec {
        PerlinSpec {
            octaves,
            ..self.perlin
        }
    }
}
