//! Grayscale images, coordinate grids, cell partitioning and test signals.

mod grid;
mod image;
mod io;
mod perlin;

pub use grid::{normalize_global, normalize_local, CellGrid, HeadGrid};
pub use image::{box_downsample, Image};
pub use io::{decode_pgm, encode_pgm, load_image, quantize, save_image};
pub use perlin::{fade, fractal_raw, perlin2d, PerlinNoise, PerlinSpec};
