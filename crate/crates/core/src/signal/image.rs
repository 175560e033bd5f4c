use crate::{Error, Result};

/// Dense grayscale raster, row-major, pixel values in `[0, 1]`.
///
/// `height` is the number of rows (`N_x`), `width` the number of columns (`N_y`).
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    height: usize,
    width: usize,
    pixels: Vec<f64>,
}

impl Image {
    pub fn new(height: usize, width: usize, pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != height * width {
            return Err(Error::shape(
                "Image::new",
                format!("{height}x{width} = {} pixels", height * width),
                format!("{} pixels", pixels.len()),
            ));
        }
        if let Some(bad) = pixels.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidArgument(format!(
                "pixel value {bad} outside [0, 1]"
            )));
        }
        Ok(Image {
            height,
            width,
            pixels,
        })
    }

    /// Builds an image, clamping every value into `[0, 1]`.
    ///
    /// Non-finite input is still rejected.
    pub fn from_clamped(height: usize, width: usize, mut pixels: Vec<f64>) -> Result<Self> {
        if pixels.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("Image::from_clamped".into()));
        }
        pixels.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
        Image::new(height, width, pixels)
    }

    pub fn constant(height: usize, width: usize, value: f64) -> Result<Self> {
        Image::new(height, width, vec![value; height * width])
    }

    /// `f(r, c)` with 0-based row and column.
    pub fn from_fn(
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut pixels = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                pixels.push(f(r, c));
            }
        }
        Image::new(height, width, pixels)
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    /// 0-based access.
    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.pixels[r * self.width + c]
    }

    /// 1-based access, `I[r, c]`.
    pub fn at(&self, r: usize, c: usize) -> Result<f64> {
        if r == 0 || c == 0 || r > self.height || c > self.width {
            return Err(Error::InvalidArgument(format!(
                "pixel ({r}, {c}) outside 1..={} x 1..={}",
                self.height, self.width
            )));
        }
        Ok(self.get(r - 1, c - 1))
    }

    pub fn mean(&self) -> f64 {
        self.pixels.iter().sum::<f64>() / self.pixels.len().max(1) as f64
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.pixels
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// Nearest-neighbour enlargement by an integer factor.
    pub fn upsample_constant(&self, factor: usize) -> Result<Image> {
        if factor == 0 {
            return Err(Error::InvalidArgument(
                "upsample factor must be positive".into(),
            ));
        }
        Image::from_fn(self.height * factor, self.width * factor, |r, c| {
            self.get(r / factor, c / factor)
        })
    }
}

/// Averages each `factor × factor` block into one pixel.
pub fn box_downsample(img: &Image, factor: usize) -> Result<Image> {
    if factor == 0 || !img.height.is_multiple_of(factor) || !img.width.is_multiple_of(factor) {
        return Err(Error::Divisibility {
            dims: format!("{}x{}", img.height, img.width),
            by: factor.to_string(),
        });
    }
    let (h, w) = (img.height / factor, img.width / factor);
    let norm = (factor * factor) as f64;
    let mut out = Vec::with_capacity(h * w);
    for r in 0..h {
        for c in 0..w {
            let mut acc = 0.0;
            for dr in 0..factor {
                let row = &img.pixels[(r * factor + dr) * img.width + c * factor..][..factor];
                acc += row.iter().sum::<f64>();
            }
            out.push((acc / norm).clamp(0.0, 1.0));
        }
    }
    Image::new(h, w, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Rng;

    fn random_image(h: usize, w: usize, seed: u64) -> Image {
        let mut rng = Rng::new(seed);
        Image::from_fn(h, w, |_, _| rng.uniform(0.0, 1.0)).unwrap()
    }

    #[test]
    fn rejects_out_of_range_pixels() {
        assert!(Image::new(1, 2, vec![0.0, 1.5]).is_err());
        assert!(Image::new(1, 2, vec![0.0]).is_err());
        assert_eq!(
            Image::from_clamped(1, 2, vec![-0.5, 1.5]).unwrap().pixels(),
            &[0.0, 1.0]
        );
    }

    #[test]
    fn downsample_constant() {
        let img = Image::constant(8, 6, 0.3).unwrap();
        let d = box_downsample(&img, 2).unwrap();
        assert_eq!(d.dims(), (4, 3));
        assert!(d.pixels().iter().all(|&v| (v - 0.3).abs() < 1e-15));
    }

    #[test]
    fn downsample_checkerboard() {
        let img = Image::new(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        assert_eq!(box_downsample(&img, 2).unwrap().pixels(), &[0.5]);
    }

    #[test]
    fn downsample_matches_double_loop() {
        let img = random_image(8, 8, 3);
        let d = box_downsample(&img, 2).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                let mut s = 0.0;
                for i in 0..2 {
                    for j in 0..2 {
                        s += img.get(2 * r + i, 2 * c + j);
                    }
                }
                assert!((d.get(r, c) - s / 4.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn downsample_requires_divisibility() {
        let img = Image::constant(6, 5, 0.0).unwrap();
        assert!(matches!(
            box_downsample(&img, 2),
            Err(Error::Divisibility { .. })
        ));
    }

    #[test]
    fn downsample_then_upsample_preserves_mean() {
        let img = random_image(16, 12, 9);
        let round = box_downsample(&img, 4)
            .unwrap()
            .upsample_constant(4)
            .unwrap();
        assert!((round.mean() - img.mean()).abs() < 1e-12);
    }
}
