//! Binary PGM (`P5`, maxval 255) and grayscale PFM (`Pf`) codecs.
//!
//! PGM rows are stored top-to-bottom. PFM rows are stored bottom-to-top as the
//! format requires; the writer always emits little-endian samples with scale
//! `-1.0`, the reader accepts either byte order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{FloatField, GrayImage, ImageError};

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderCursor<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn token(&mut self, what: &str) -> Result<&'a str, ImageError> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(ImageError::BadHeader(format!("missing {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .map_err(|_| ImageError::BadHeader(format!("non-ascii {what}")))
    }

    fn dimension(&mut self, what: &str) -> Result<usize, ImageError> {
        let tok = self.token(what)?;
        let value: usize = tok
            .parse()
            .map_err(|_| ImageError::BadHeader(format!("{what} {tok:?} is not a number")))?;
        if value == 0 {
            return Err(ImageError::BadHeader(format!("{what} must be positive")));
        }
        Ok(value)
    }

    /// Consumes the single whitespace byte separating the header from the payload.
    fn end_of_header(&mut self) -> Result<usize, ImageError> {
        match self.bytes.get(self.pos) {
            Some(c) if c.is_ascii_whitespace() => Ok(self.pos + 1),
            _ => Err(ImageError::BadHeader("missing separator before payload".into())),
        }
    }
}

fn check_magic(bytes: &[u8], expected: &'static str) -> Result<(), ImageError> {
    let found = &bytes[..bytes.len().min(2)];
    if found != expected.as_bytes() {
        return Err(ImageError::BadMagic {
            expected,
            found: String::from_utf8_lossy(found).into_owned(),
        });
    }
    Ok(())
}

/// Decodes a binary PGM from an in-memory buffer.
pub fn read_pgm(bytes: &[u8]) -> Result<GrayImage, ImageError> {
    check_magic(bytes, "P5")?;
    let mut cur = HeaderCursor::new(bytes);
    cur.pos = 2;
    let width = cur.dimension("width")?;
    let height = cur.dimension("height")?;
    let maxval = cur.dimension("maxval")?;
    if maxval != 255 {
        return Err(ImageError::BadHeader(format!("unsupported maxval {maxval} (only 255)")));
    }
    let start = cur.end_of_header()?;
    let expected = width * height;
    let payload = &bytes[start..];
    if payload.len() < expected {
        return Err(ImageError::Truncated {
            expected,
            got: payload.len(),
        });
    }
    GrayImage::new(width, height, payload[..expected].to_vec())
}

pub fn write_pgm<W: Write>(img: &GrayImage, mut out: W) -> Result<(), ImageError> {
    write!(out, "P5\n{} {}\n255\n", img.width(), img.height())?;
    out.write_all(img.data())?;
    out.flush()?;
    Ok(())
}

pub fn load_pgm(path: impl AsRef<Path>) -> Result<GrayImage, ImageError> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    read_pgm(&bytes)
}

pub fn save_pgm(img: &GrayImage, path: impl AsRef<Path>) -> Result<(), ImageError> {
    write_pgm(img, BufWriter::new(File::create(path)?))
}

/// Decodes a grayscale PFM from an in-memory buffer.
pub fn read_pfm(bytes: &[u8]) -> Result<FloatField, ImageError> {
    check_magic(bytes, "Pf")?;
    let mut cur = HeaderCursor::new(bytes);
    cur.pos = 2;
    let width = cur.dimension("width")?;
    let height = cur.dimension("height")?;
    let scale_tok = cur.token("scale")?;
    let scale: f64 = scale_tok
        .parse()
        .map_err(|_| ImageError::BadHeader(format!("scale {scale_tok:?} is not a number")))?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(ImageError::BadHeader(format!("invalid scale {scale}")));
    }
    let little_endian = scale < 0.0;
    let start = cur.end_of_header()?;
    let expected = width * height * 4;
    let payload = &bytes[start..];
    if payload.len() < expected {
        return Err(ImageError::Truncated {
            expected,
            got: payload.len(),
        });
    }
    let mut data = vec![0f32; width * height];
    for (file_row, chunk) in payload[..expected].chunks_exact(width * 4).enumerate() {
        let row = height - 1 - file_row;
        for (col, sample) in chunk.chunks_exact(4).enumerate() {
            let raw = [sample[0], sample[1], sample[2], sample[3]];
            data[row * width + col] = if little_endian {
                f32::from_le_bytes(raw)
            } else {
                f32::from_be_bytes(raw)
            };
        }
    }
    FloatField::new(width, height, data)
}

pub fn write_pfm<W: Write>(field: &FloatField, mut out: W) -> Result<(), ImageError> {
    let (width, height) = (field.width(), field.height());
    write!(out, "Pf\n{width} {height}\n-1.0\n")?;
    let mut row_bytes = Vec::with_capacity(width * 4);
    for row in (0..height).rev() {
        row_bytes.clear();
        for v in &field.data()[row * width..(row + 1) * width] {
            row_bytes.extend_from_slice(&v.to_le_bytes());
        }
        out.write_all(&row_bytes)?;
    }
    out.flush()?;
    Ok(())
}

pub fn load_pfm(path: impl AsRef<Path>) -> Result<FloatField, ImageError> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    read_pfm(&bytes)
}

pub fn save_pfm(field: &FloatField, path: impl AsRef<Path>) -> Result<(), ImageError> {
    write_pfm(field, BufWriter::new(File::create(path)?))
}
