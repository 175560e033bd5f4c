//! Coordinate normalization and the cell decomposition binding heads to tiles.
//!
//! Rows and columns are 1-based in the public cell API so that
//! `I_{l,k}[r̂, ĉ] = I[N̂_x (l - 1) + r̂, N̂_y (k - 1) + ĉ]` reads literally.
//! Heads are numbered row-major over cells: head `m = (l - 1) H_y + (k - 1)`
//! (0-based).

use serde::{Deserialize, Serialize};

use super::Image;
use crate::nn::Tensor;
use crate::{Error, Result};

/// Maps pixel index `r ∈ 1..=n` onto `[-1, 1]` with both ends hit exactly.
pub fn normalize_global(r: usize, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "global coordinates need at least 2 samples, got {n}"
        )));
    }
    if r == 0 || r > n {
        return Err(Error::InvalidArgument(format!("index {r} outside 1..={n}")));
    }
    Ok(2.0 * (r - 1) as f64 / (n - 1) as f64 - 1.0)
}

/// Cell-local coordinate of `r̂ ∈ 1..=n̂` over the cell's own extent.
///
/// A single-pixel cell sits at the center, 0.
pub fn normalize_local(r: usize, n: usize) -> f64 {
    assert!(r >= 1 && r <= n, "local index {r} outside 1..={n}");
    if n == 1 {
        0.0
    } else {
        2.0 * (r - 1) as f64 / (n - 1) as f64 - 1.0
    }
}

/// Head layout `H_x × H_y` independent of any image size.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HeadGrid {
    pub rows: usize,
    pub cols: usize,
}

impl HeadGrid {
    pub fn new(rows: usize, cols: usize) -> Self {
        HeadGrid { rows, cols }
    }

    pub fn square(side: usize) -> Self {
        HeadGrid::new(side, side)
    }

    pub fn single() -> Self {
        HeadGrid::new(1, 1)
    }

    pub fn count(&self) -> usize {
        self.rows * self.cols
    }

    /// Binds the layout to an image of `height × width` pixels.
    pub fn cells(&self, height: usize, width: usize) -> Result<CellGrid> {
        CellGrid::new(*self, height, width)
    }
}

impl std::fmt::Display for HeadGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.rows, self.cols)
    }
}

impl std::str::FromStr for HeadGrid {
    type Err = Error;

    /// Accepts `"HxW"` or a single side length `"S"` meaning `S×S`.
    fn from_str(s: &str) -> Result<Self> {
        let parse = |t: &str| {
            t.trim()
                .parse::<usize>()
                .ok()
                .filter(|&v| v > 0)
                .ok_or_else(|| Error::InvalidArgument(format!("bad head grid {s:?}")))
        };
        match s.split_once(['x', 'X']) {
            Some((a, b)) => Ok(HeadGrid::new(parse(a)?, parse(b)?)),
            None => Ok(HeadGrid::square(parse(s)?)),
        }
    }
}

/// Partition of an `N_x × N_y` image into `H_x × H_y` equal cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CellGrid {
    heads: HeadGrid,
    cell_h: usize,
    cell_w: usize,
}

impl CellGrid {
    pub fn new(heads: HeadGrid, height: usize, width: usize) -> Result<Self> {
        if heads.rows == 0 || heads.cols == 0 {
            return Err(Error::InvalidArgument("head grid must be non-empty".into()));
        }
        if height == 0
            || width == 0
            || !height.is_multiple_of(heads.rows)
            || !width.is_multiple_of(heads.cols)
        {
            return Err(Error::Divisibility {
                dims: format!("{height}x{width}"),
                by: heads.to_string(),
            });
        }
        Ok(CellGrid {
            heads,
            cell_h: height / heads.rows,
            cell_w: width / heads.cols,
        })
    }

    pub fn heads(&self) -> HeadGrid {
        self.heads
    }

    pub fn head_count(&self) -> usize {
        self.heads.count()
    }

    /// `N̂_x`.
    pub fn cell_height(&self) -> usize {
        self.cell_h
    }

    /// `N̂_y`.
    pub fn cell_width(&self) -> usize {
        self.cell_w
    }

    /// Pixels per cell, i.e. forward passes needed per image.
    pub fn cell_len(&self) -> usize {
        self.cell_h * self.cell_w
    }

    pub fn image_height(&self) -> usize {
        self.cell_h * self.heads.rows
    }

    pub fn image_width(&self) -> usize {
        self.cell_w * self.heads.cols
    }

    /// 0-based head index of cell `(l, k)` (1-based).
    pub fn head_index(&self, l: usize, k: usize) -> usize {
        (l - 1) * self.heads.cols + (k - 1)
    }

    /// Global 1-based pixel `(r, c)` of cell `(l, k)`, local pixel `(r̂, ĉ)`.
    pub fn global(&self, l: usize, k: usize, r: usize, c: usize) -> Result<(usize, usize)> {
        if l == 0 || k == 0 || l > self.heads.rows || k > self.heads.cols {
            return Err(Error::InvalidArgument(format!(
                "cell ({l}, {k}) outside {}",
                self.heads
            )));
        }
        if r == 0 || c == 0 || r > self.cell_h || c > self.cell_w {
            return Err(Error::InvalidArgument(format!(
                "local pixel ({r}, {c}) outside 1..={} x 1..={}",
                self.cell_h, self.cell_w
            )));
        }
        Ok((self.cell_h * (l - 1) + r, self.cell_w * (k - 1) + c))
    }

    /// `I_{l,k}[r̂, ĉ]`.
    pub fn cell_pixel(&self, img: &Image, l: usize, k: usize, r: usize, c: usize) -> Result<f64> {
        self.check_image(img)?;
        let (gr, gc) = self.global(l, k, r, c)?;
        img.at(gr, gc)
    }

    fn check_image(&self, img: &Image) -> Result<()> {
        if img.dims() != (self.image_height(), self.image_width()) {
            return Err(Error::shape(
                "CellGrid",
                format!("{}x{} image", self.image_height(), self.image_width()),
                format!("{}x{} image", img.height(), img.width()),
            ));
        }
        Ok(())
    }

    /// All cells as separate images, in head order.
    pub fn partition(&self, img: &Image) -> Result<Vec<Image>> {
        self.check_image(img)?;
        let mut cells = Vec::with_capacity(self.head_count());
        for l in 0..self.heads.rows {
            for k in 0..self.heads.cols {
                let cell = Image::from_fn(self.cell_h, self.cell_w, |r, c| {
                    img.get(l * self.cell_h + r, k * self.cell_w + c)
                })?;
                cells.push(cell);
            }
        }
        Ok(cells)
    }

    /// Inverse of [`partition`](Self::partition).
    pub fn assemble(&self, cells: &[Image]) -> Result<Image> {
        if cells.len() != self.head_count() {
            return Err(Error::shape(
                "CellGrid::assemble",
                self.head_count(),
                cells.len(),
            ));
        }
        let mut pixels = vec![0.0; self.image_height() * self.image_width()];
        self.scatter(&mut pixels, |m, r, c| {
            let cell = &cells[m];
            if cell.dims() != (self.cell_h, self.cell_w) {
                return Err(Error::shape(
                    "CellGrid::assemble",
                    format!("{}x{} cell", self.cell_h, self.cell_w),
                    format!("{}x{} cell {m}", cell.height(), cell.width()),
                ));
            }
            Ok(cell.get(r, c))
        })?;
        Image::new(self.image_height(), self.image_width(), pixels)
    }

    fn scatter(
        &self,
        pixels: &mut [f64],
        mut value: impl FnMut(usize, usize, usize) -> Result<f64>,
    ) -> Result<()> {
        let width = self.image_width();
        for l in 0..self.heads.rows {
            for k in 0..self.heads.cols {
                let m = l * self.heads.cols + k;
                for r in 0..self.cell_h {
                    for c in 0..self.cell_w {
                        pixels[(l * self.cell_h + r) * width + k * self.cell_w + c] =
                            value(m, r, c)?;
                    }
                }
            }
        }
        Ok(())
    }

    /// Cell-local input coordinates as a `2 × (N̂_x N̂_y)` batch.
    ///
    /// Column `b = (r̂ - 1) N̂_y + (ĉ - 1)` holds `(x̂(r̂), ŷ(ĉ))`.
    pub fn local_coordinates(&self) -> Tensor {
        let n = self.cell_len();
        let mut values = vec![0.0; 2 * n];
        for r in 0..self.cell_h {
            let x = normalize_local(r + 1, self.cell_h);
            for c in 0..self.cell_w {
                values[r * self.cell_w + c] = x;
                values[n + r * self.cell_w + c] = normalize_local(c + 1, self.cell_w);
            }
        }
        Tensor::from_vec(2, n, values).expect("2 x n coordinate batch")
    }

    /// Training targets as an `M × (N̂_x N̂_y)` matrix aligned with
    /// [`local_coordinates`](Self::local_coordinates).
    pub fn targets(&self, img: &Image) -> Result<Tensor> {
        self.check_image(img)?;
        let n = self.cell_len();
        let mut values = vec![0.0; self.head_count() * n];
        for l in 0..self.heads.rows {
            for k in 0..self.heads.cols {
                let m = l * self.heads.cols + k;
                for r in 0..self.cell_h {
                    for c in 0..self.cell_w {
                        values[m * n + r * self.cell_w + c] =
                            img.get(l * self.cell_h + r, k * self.cell_w + c);
                    }
                }
            }
        }
        Tensor::from_vec(self.head_count(), n, values)
    }

    /// Places an `M × (N̂_x N̂_y)` head-output matrix back into image layout.
    ///
    /// Values are returned unclamped.
    pub fn scatter_outputs(&self, outputs: &Tensor) -> Result<Vec<f64>> {
        outputs.expect_shape(
            "CellGrid::scatter_outputs",
            self.head_count(),
            self.cell_len(),
        )?;
        let n = self.cell_len();
        let mut pixels = vec![0.0; self.image_height() * self.image_width()];
        let v = outputs.values();
        self.scatter(&mut pixels, |m, r, c| Ok(v[m * n + r * self.cell_w + c]))?;
        Ok(pixels)
    }
}
