//! Binary PGM (P5, maxval 255) encoder/decoder — the on-disk image format.
//!
//! In-memory pixels are scalars in `[0, 1]`; the file boundary quantizes to
//! 8 bits, so a written image re-reads to values on the `k/255` grid.

use std::path::Path;

use super::{ImageBuffer, RenderError};

/// Encode as binary PGM. Pixels are clamped and rounded to `0..=255`.
pub fn encode_pgm(image: &ImageBuffer) -> Vec<u8> {
    let header = format!("P5\n{} {}\n255\n", image.width(), image.height());
    let mut out = Vec::with_capacity(header.len() + image.pixels().len());
    out.extend_from_slice(header.as_bytes());
    out.extend(
        image
            .pixels()
            .iter()
            .map(|&p| (p.clamp(0.0, 1.0) * 255.0).round() as u8),
    );
    out
}

pub fn decode_pgm(bytes: &[u8]) -> Result<ImageBuffer, RenderError> {
    let mut cursor = 0usize;
    let magic = next_token(bytes, &mut cursor)
        .ok_or_else(|| RenderError::PgmFormat("missing magic number".into()))?;
    if magic != b"P5" {
        return Err(RenderError::PgmFormat(format!(
            "expected P5 magic, got {:?}",
            String::from_utf8_lossy(magic)
        )));
    }
    let width = parse_dim(bytes, &mut cursor, "width")?;
    let height = parse_dim(bytes, &mut cursor, "height")?;
    let maxval = parse_dim(bytes, &mut cursor, "maxval")?;
    if maxval != 255 {
        return Err(RenderError::PgmFormat(format!(
            "only maxval 255 is supported, got {maxval}"
        )));
    }
    // Exactly one whitespace byte separates the header from raster data.
    cursor += 1;
    let expected = width * height;
    let data = bytes
        .get(cursor..cursor + expected)
        .ok_or_else(|| RenderError::PgmFormat("truncated raster data".into()))?;
    let pixels = data.iter().map(|&b| b as f64 / 255.0).collect();
    ImageBuffer::from_pixels(width, height, pixels)
}

pub fn write_pgm(image: &ImageBuffer, path: &Path) -> Result<(), RenderError> {
    std::fs::write(path, encode_pgm(image)).map_err(|e| RenderError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

pub fn read_pgm(path: &Path) -> Result<ImageBuffer, RenderError> {
    let bytes = std::fs::read(path).map_err(|e| RenderError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    decode_pgm(&bytes)
}

/// Next whitespace-delimited token, skipping `#` comment lines.
fn next_token<'a>(bytes: &'a [u8], cursor: &mut usize) -> Option<&'a [u8]> {
    loop {
        while *cursor < bytes.len() && bytes[*cursor].is_ascii_whitespace() {
            *cursor += 1;
        }
        if *cursor < bytes.len() && bytes[*cursor] == b'#' {
            while *cursor < bytes.len() && bytes[*cursor] != b'\n' {
                *cursor += 1;
            }
            continue;
        }
        break;
    }
    let start = *cursor;
    while *cursor < bytes.len() && !bytes[*cursor].is_ascii_whitespace() {
        *cursor += 1;
    }
    (*cursor > start).then(|| &bytes[start..*cursor])
}

fn parse_dim(bytes: &[u8], cursor: &mut usize, what: &str) -> Result<usize, RenderError> {
    let token = next_token(bytes, cursor)
        .ok_or_else(|| RenderError::PgmFormat(format!("missing {what}")))?;
    std::str::from_utf8(token)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| {
            RenderError::PgmFormat(format!(
                "invalid {what}: {:?}",
                String::from_utf8_lossy(token)
            ))
        })
}
