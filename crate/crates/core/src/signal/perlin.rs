//! Improved Perlin gradient noise and its fractal (multi-octave) sum.
//!
//! Each octave has its own 256-entry permutation, shuffled from a ChaCha8
//! stream seeded with `PerlinSpec::seed`. Pixel `(r, c)` of an `h × w` image
//! samples octave `o` at `((c + 0.5) / w, (r + 0.5) / h) * f_o`, where
//! `f_o = base_frequency * lacunarity^o` lattice cells span the image side.

use serde::{Deserialize, Serialize};

use super::Image;
use crate::nn::Rng;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerlinSpec {
    pub octaves: u32,
    /// Lattice cells across the image side for the first octave.
    pub base_frequency: f64,
    pub persistence: f64,
    pub lacunarity: f64,
    pub seed: u64,
}

impl Default for PerlinSpec {
    fn default() -> Self {
        PerlinSpec {
            octaves: 1,
            base_frequency: 2.0,
            persistence: 0.5,
            lacunarity: 2.0,
            seed: 0,
        }
    }
}

impl PerlinSpec {
    pub fn with_octaves(octaves: u32, seed: u64) -> Self {
        PerlinSpec {
            octaves,
            seed,
            ..PerlinSpec::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.octaves < 1 {
            return Err(Error::InvalidArgument("octaves must be >= 1".into()));
        }
        if !(self.persistence > 0.0 && self.persistence <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "persistence must lie in (0, 1], got {}",
                self.persistence
            )));
        }
        if !self.lacunarity.is_finite() || self.lacunarity <= 1.0 {
            return Err(Error::InvalidArgument(format!(
                "lacunarity must exceed 1, got {}",
                self.lacunarity
            )));
        }
        if !self.base_frequency.is_finite() || self.base_frequency <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "base frequency must be positive, got {}",
                self.base_frequency
            )));
        }
        Ok(())
    }
}

/// Quintic fade curve `6t^5 - 15t^4 + 10t^3`.
#[inline]
pub fn fade(t: f64) -> f64 {
    t * t * t * (t * (t * 6.0 - 15.0) + 10.0)
}

#[inline]
fn lerp(t: f64, a: f64, b: f64) -> f64 {
    a + t * (b - a)
}

#[inline]
fn gradient(hash: u8, x: f64, y: f64) -> f64 {
    match hash & 7 {
        0 => x + y,
        1 => -x + y,
        2 => x - y,
        3 => -x - y,
        4 => x,
        5 => -x,
        6 => y,
        _ => -y,
    }
}

/// Single-octave 2-D gradient noise over a 256-periodic lattice.
#[derive(Clone, Debug)]
pub struct PerlinNoise {
    perm: [u8; 512],
}

impl PerlinNoise {
    /// Fisher-Yates shuffle of `0..256` driven by `rng`.
    pub fn new(rng: &mut Rng) -> Self {
        let mut table: Vec<u8> = (0..=255u8).collect();
        for i in (1..256).rev() {
            let j = rng.below(i + 1);
            table.swap(i, j);
        }
        let mut perm = [0u8; 512];
        for i in 0..512 {
            perm[i] = table[i & 255];
        }
        PerlinNoise { perm }
    }

    /// Noise value at `(x, y)`; exactly 0 on integer lattice points.
    pub fn noise(&self, x: f64, y: f64) -> f64 {
        let (x0, y0) = (x.floor(), y.floor());
        let xi = (x0 as i64).rem_euclid(256) as usize;
        let yi = (y0 as i64).rem_euclid(256) as usize;
        let (xf, yf) = (x - x0, y - y0);
        let (u, v) = (fade(xf), fade(yf));
        let p = &self.perm;
        let a = p[xi] as usize + yi;
        let b = p[xi + 1] as usize + yi;
        let (aa, ab, ba, bb) = (p[a], p[a + 1], p[b], p[b + 1]);
        lerp(
            v,
            lerp(u, gradient(aa, xf, yf), gradient(ba, xf - 1.0, yf)),
            lerp(
                u,
                gradient(ab, xf, yf - 1.0),
                gradient(bb, xf - 1.0, yf - 1.0),
            ),
        )
    }
}

/// Octave sum before rescaling, row-major `height × width`.
pub fn fractal_raw(spec: &PerlinSpec, height: usize, width: usize) -> Result<Vec<f64>> {
    spec.validate()?;
    let mut rng = Rng::new(spec.seed);
    let octaves: Vec<PerlinNoise> = (0..spec.octaves)
        .map(|_| PerlinNoise::new(&mut rng))
        .collect();
    let mut out = vec![0.0; height * width];
    let mut amplitude = 1.0;
    let mut frequency = spec.base_frequency;
    for noise in &octaves {
        for r in 0..height {
            let y = (r as f64 + 0.5) / height as f64 * frequency;
            for c in 0..width {
                let x = (c as f64 + 0.5) / width as f64 * frequency;
                out[r * width + c] += amplitude * noise.noise(x, y);
            }
        }
        amplitude *= spec.persistence;
        frequency *= spec.lacunarity;
    }
    Ok(out)
}

/// Fractal Perlin image, min-max rescaled into `[0, 1]`.
///
/// A constant field (possible only in degenerate cases) maps to 0.5.
pub fn perlin2d(spec: &PerlinSpec, height: usize, width: usize) -> Result<Image> {
    let raw = fractal_raw(spec, height, width)?;
    let (lo, hi) = raw
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    let span = hi - lo;
    let pixels = if span > 0.0 {
        raw.iter()
            .map(|&v| ((v - lo) / span).clamp(0.0, 1.0))
            .collect()
    } else {
        vec![0.5; raw.len()]
    };
    Image::new(height, width, pixels)
}
