//! Grayscale image files.
//!
//! Binary PGM (`P5`, maxval ≤ 255) is the primary format; 8-bit grayscale
//! PNG is also supported. Stored byte `p` becomes `p / maxval`; saving
//! quantizes with round-half-up, `floor(255 v + 0.5)`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use super::Image;
use crate::{Error, Result};

/// Round-half-up 8-bit quantization of a `[0, 1]` value.
#[inline]
pub fn quantize(v: f64) -> u8 {
    (v * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Bit-exact `P5` encoding: `"P5\n{width} {height}\n255\n"` then one byte per pixel.
pub fn encode_pgm(img: &Image) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(img.pixels().iter().map(|&v| quantize(v)));
    out
}

struct HeaderCursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.data.get(self.pos) {
            if b == b'#' {
                while self.pos < self.data.len() && self.data[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.data.len() && self.data[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.data[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Format(format!("PGM header: missing or invalid {what}")))
    }
}

pub fn decode_pgm(data: &[u8]) -> Result<Image> {
    if data.len() < 2 || &data[..2] != b"P5" {
        return Err(Error::Format("not a binary PGM (expected P5 magic)".into()));
    }
    let mut cur = HeaderCursor { data, pos: 2 };
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    let maxval = cur.number("maxval")?;
    if maxval == 0 {
        return Err(Error::Format("PGM maxval must be positive".into()));
    }
    if maxval > 255 {
        return Err(Error::Unsupported(format!(
            "PGM maxval {maxval} (only 8-bit samples are supported)"
        )));
    }
    match data.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ => {
            return Err(Error::Format(
                "PGM header must end with one whitespace byte".into(),
            ))
        }
    }
    let payload = &data[cur.pos..];
    let n = width * height;
    if payload.len() < n {
        return Err(Error::Format(format!(
            "PGM payload truncated: {} of {n} bytes",
            payload.len()
        )));
    }
    let scale = maxval as f64;
    let pixels = payload[..n]
        .iter()
        .map(|&p| (p as f64 / scale).min(1.0))
        .collect();
    Image::new(height, width, pixels)
}

fn decode_png(path: &Path) -> Result<Image> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut decoder = png::Decoder::new(BufReader::new(file));
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::Format(format!("PNG: {e}")))?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::Format("PNG: image too large".into()))?;
    let mut buf = vec![0; size];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::Format(format!("PNG: {e}")))?;
    if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Eight {
        return Err(Error::Unsupported(format!(
            "PNG {:?} at {:?} (only 8-bit grayscale is supported)",
            info.color_type, info.bit_depth
        )));
    }
    let (w, h) = (info.width as usize, info.height as usize);
    let mut pixels = Vec::with_capacity(w * h);
    for row in buf.chunks(info.line_size).take(h) {
        pixels.extend(row[..w].iter().map(|&p| p as f64 / 255.0));
    }
    Image::new(h, w, pixels)
}

fn encode_png(img: &Image, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut encoder = png::Encoder::new(
        BufWriter::new(file),
        img.width() as u32,
        img.height() as u32,
    );
    encoder.set_color(png::ColorType::Grayscale);
    encoder.set_depth(png::BitDepth::Eight);
    let bytes: Vec<u8> = img.pixels().iter().map(|&v| quantize(v)).collect();
    encoder
        .write_header()
        .and_then(|mut w| w.write_image_data(&bytes))
        .map_err(|e| Error::Format(format!("PNG: {e}")))
}

fn is_png(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("png"))
}

/// Loads a PGM or PNG file, detected from its leading bytes.
pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let data = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if data.starts_with(b"\x89PNG") {
        decode_png(path)
    } else {
        decode_pgm(&data)
    }
}

/// Writes PNG when the extension is `.png`, binary PGM otherwise.
pub fn save_image(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if is_png(path) {
        return encode_png(img, path);
    }
    let mut file = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    file.write_all(&encode_pgm(img))
        .and_then(|_| file.flush())
        .map_err(|e| Error::io(path, e))
}
