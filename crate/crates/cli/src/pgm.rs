//! Binary PGM (P5) grayscale images, 8- or 16-bit.
//!
//! Pixels are read into `[0, 1]` by dividing by the header's maxval. Writing
//! always produces 16-bit big-endian samples with maxval 65535 after clipping
//! to `[0, 1]`.

use std::fs;
use std::path::Path;

use onred_core::ImageGrid;

use crate::error::{CliError, CliResult};

const MAX_16: f64 = 65535.0;

pub fn decode(bytes: &[u8]) -> Result<ImageGrid, String> {
    let mut pos = 0;
    let mut token = || -> Result<String, String> {
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(_) => break,
                None => return Err("unexpected end of header".into()),
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    if token()? != "P5" {
        return Err("not a binary PGM (P5) file".into());
    }
    let mut number = |what: &str| -> Result<usize, String> {
        token()?.parse::<usize>().map_err(|_| format!("bad {what} in header"))
    };
    let width = number("width")?;
    let height = number("height")?;
    let maxval = number("maxval")?;
    if width == 0 || height == 0 {
        return Err(format!("bad dimensions {width}x{height}"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(format!("maxval {maxval} out of range"));
    }
    // Exactly one whitespace byte separates the header from the raster.
    let data = &bytes[pos + 1..];
    let n = width * height;
    let sample_bytes = if maxval < 256 { 1 } else { 2 };
    if data.len() != n * sample_bytes {
        return Err(format!(
            "raster has {} bytes, expected {}",
            data.len(),
            n * sample_bytes
        ));
    }
    let scale = 1.0 / maxval as f64;
    let pixels = if sample_bytes == 1 {
        data.iter().map(|&b| b as f64 * scale).collect()
    } else {
        data.chunks_exact(2)
            .map(|b| u16::from_be_bytes([b[0], b[1]]) as f64 * scale)
            .collect()
    };
    ImageGrid::new(height, width, pixels).map_err(|e| e.to_string())
}

/// Quantizes a value to the 16-bit grid after clipping to `[0, 1]`.
pub fn quantize(v: f64) -> u16 {
    (v.clamp(0.0, 1.0) * MAX_16).round() as u16
}

pub fn encode(image: &ImageGrid) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n65535\n", image.width(), image.height()).into_bytes();
    out.reserve(image.len() * 2);
    for &v in image.data() {
        out.extend_from_slice(&quantize(v).to_be_bytes());
    }
    out
}

pub fn read(path: &Path) -> CliResult<ImageGrid> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path.display(), e))?;
    decode(&bytes).map_err(|e| CliError::io(path.display(), e))
}

pub fn write(path: &Path, image: &ImageGrid) -> CliResult<()> {
    fs::write(path, encode(image)).map_err(|e| CliError::io(path.display(), e))
}
