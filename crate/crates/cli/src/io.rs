//! Image file I/O.
//!
//! PGM (`P2` ASCII and `P5` binary, maxval 255) is the interchange format.
//! 8-bit PNG is read and written through the `image` crate; color PNGs are
//! either reduced to BT.601 luma or split into channels.
//!
//! Reading maps bytes to reals exactly. Writing rounds half away from zero
//! and clamps to `[0, 255]`.

use std::fs;
use std::path::Path;

use latfilter::Image;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed PGM header: {0}")]
    MalformedHeader(String),
    #[error("unsupported maxval {0} (only 255 is supported)")]
    UnsupportedMaxval(u64),
    #[error("truncated payload: expected {expected} samples, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("malformed PGM payload: {0}")]
    MalformedPayload(String),
    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),
    #[error("invalid image: {0}")]
    InvalidImage(String),
}

/// How to turn a color PNG into single-channel images.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum ColorMode {
    /// BT.601 luma: `0.299 R + 0.587 G + 0.114 B`.
    #[default]
    Luma,
    /// Each of R, G, B filtered independently; alpha is dropped.
    PerChannel,
}

/// Encoding used when writing `.pgm` files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PgmEncoding {
    #[default]
    Binary,
    Ascii,
}

/// Quantizes one sample for 8-bit output.
pub fn quantize(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Reads a file into one image per channel (one channel unless a color PNG is
/// read in per-channel mode).
pub fn read_image(path: &Path, color: ColorMode) -> Result<Vec<Image>, IoError> {
    let bytes = fs::read(path).map_err(|source| IoError::Io {
        path: path.display().to_string(),
        source,
    })?;
    if bytes.starts_with(b"P2") || bytes.starts_with(b"P5") {
        return decode_pgm(&bytes).map(|im| vec![im]);
    }
    if bytes.starts_with(b"\x89PNG\r\n\x1a\n") {
        return decode_png(&bytes, color);
    }
    Err(IoError::UnsupportedFormat(format!(
        "{}: not a PGM (P2/P5) or PNG file",
        path.display()
    )))
}

/// Reads a single-channel image, reducing color input to luma.
pub fn read_gray(path: &Path) -> Result<Image, IoError> {
    Ok(read_image(path, ColorMode::Luma)?.remove(0))
}

/// Writes one channel as PGM or gray PNG, or three channels as RGB PNG,
/// chosen by the file extension.
pub fn write_image(channels: &[Image], path: &Path, encoding: PgmEncoding) -> Result<(), IoError> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .unwrap_or_default();
    let bytes = match (ext.as_str(), channels) {
        ("pgm", [img]) => encode_pgm(img, encoding),
        ("pgm", _) => {
            return Err(IoError::UnsupportedFormat(format!(
                "PGM holds one channel, got {}",
                channels.len()
            )))
        }
        ("png", [img]) => encode_png(&[img])?,
        ("png", [r, g, b]) => encode_png(&[r, g, b])?,
        ("png", _) => {
            return Err(IoError::UnsupportedFormat(format!(
                "PNG output needs 1 or 3 channels, got {}",
                channels.len()
            )))
        }
        _ => {
            return Err(IoError::UnsupportedFormat(format!(
                "{}: output extension must be .pgm or .png",
                path.display()
            )))
        }
    };
    fs::write(path, bytes).map_err(|source| IoError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn encode_pgm(img: &Image, encoding: PgmEncoding) -> Vec<u8> {
    let (h, w) = img.dims();
    let mut out = Vec::with_capacity(h * w + 32);
    match encoding {
        PgmEncoding::Binary => {
            out.extend_from_slice(format!("P5\n{w} {h}\n255\n").as_bytes());
            out.extend(img.data().iter().map(|&v| quantize(v)));
        }
        PgmEncoding::Ascii => {
            out.extend_from_slice(format!("P2\n{w} {h}\n255\n").as_bytes());
            for row in img.data().chunks(w) {
                let line: Vec<String> = row.iter().map(|&v| quantize(v).to_string()).collect();
                out.extend_from_slice(line.join(" ").as_bytes());
                out.push(b'\n');
            }
        }
    }
    out
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderCursor<'a> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b if b.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u64, IoError> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(IoError::MalformedHeader(format!("missing {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| IoError::MalformedHeader(format!("{what} out of range")))
    }
}

pub fn decode_pgm(bytes: &[u8]) -> Result<Image, IoError> {
    let binary = match bytes.get(..2) {
        Some(b"P5") => true,
        Some(b"P2") => false,
        _ => return Err(IoError::MalformedHeader("expected magic P2 or P5".into())),
    };
    let mut cur = HeaderCursor { bytes, pos: 2 };
    if !bytes.get(2).is_some_and(|b| b.is_ascii_whitespace() || *b == b'#') {
        return Err(IoError::MalformedHeader("magic must be followed by whitespace".into()));
    }
    let width = cur.number("width")? as usize;
    let height = cur.number("height")? as usize;
    let maxval = cur.number("maxval")?;
    if maxval != 255 {
        return Err(IoError::UnsupportedMaxval(maxval));
    }
    let n = width
        .checked_mul(height)
        .ok_or_else(|| IoError::MalformedHeader("dimensions overflow".into()))?;

    let data: Vec<f64> = if binary {
        if !bytes.get(cur.pos).is_some_and(|b| b.is_ascii_whitespace()) {
            return Err(IoError::MalformedHeader("maxval must be followed by one whitespace byte".into()));
        }
        let payload = &bytes[cur.pos + 1..];
        if payload.len() < n {
            return Err(IoError::Truncated {
                expected: n,
                found: payload.len(),
            });
        }
        payload[..n].iter().map(|&b| b as f64).collect()
    } else {
        let text = std::str::from_utf8(&bytes[cur.pos..])
            .map_err(|_| IoError::MalformedPayload("non-UTF-8 bytes in ASCII payload".into()))?;
        let mut values = Vec::with_capacity(n);
        for tok in text
            .lines()
            .map(|l| l.split('#').next().unwrap_or(""))
            .flat_map(str::split_ascii_whitespace)
            .take(n)
        {
            let v: u64 = tok
                .parse()
                .map_err(|_| IoError::MalformedPayload(format!("'{tok}' is not a sample")))?;
            if v > maxval {
                return Err(IoError::MalformedPayload(format!("sample {v} exceeds maxval {maxval}")));
            }
            values.push(v as f64);
        }
        if values.len() < n {
            return Err(IoError::Truncated {
                expected: n,
                found: values.len(),
            });
        }
        values
    };
    Image::new(height, width, data).map_err(|e| IoError::InvalidImage(e.to_string()))
}

fn decode_png(bytes: &[u8], color: ColorMode) -> Result<Vec<Image>, IoError> {
    use image::DynamicImage;

    let decoded = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
        .map_err(|e| IoError::UnsupportedFormat(format!("PNG decode failed: {e}")))?;
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    let build = |data: Vec<f64>| Image::new(h, w, data).map_err(|e| IoError::InvalidImage(e.to_string()));
    match decoded {
        DynamicImage::ImageLuma8(g) => build(g.into_raw().into_iter().map(f64::from).collect()).map(|i| vec![i]),
        DynamicImage::ImageLumaA8(g) => build(g.pixels().map(|p| p.0[0] as f64).collect()).map(|i| vec![i]),
        DynamicImage::ImageRgb8(_) | DynamicImage::ImageRgba8(_) => {
            let rgb = decoded.to_rgb8();
            match color {
                ColorMode::Luma => build(
                    rgb.pixels()
                        .map(|p| 0.299 * p.0[0] as f64 + 0.587 * p.0[1] as f64 + 0.114 * p.0[2] as f64)
                        .collect(),
                )
                .map(|i| vec![i]),
                ColorMode::PerChannel => (0..3)
                    .map(|ch| build(rgb.pixels().map(|p| p.0[ch] as f64).collect()))
                    .collect(),
            }
        }
        other => Err(IoError::UnsupportedFormat(format!(
            "only 8-bit PNG is supported, got {:?}",
            other.color()
        ))),
    }
}

fn encode_png(channels: &[&Image]) -> Result<Vec<u8>, IoError> {
    let (h, w) = channels[0].dims();
    if channels.iter().any(|c| c.dims() != (h, w)) {
        return Err(IoError::InvalidImage("channel dimensions differ".into()));
    }
    let color = if channels.len() == 1 {
        image::ExtendedColorType::L8
    } else {
        image::ExtendedColorType::Rgb8
    };
    let mut raw = Vec::with_capacity(h * w * channels.len());
    for i in 0..h * w {
        for ch in channels {
            raw.push(quantize(ch.data()[i]));
        }
    }
    let mut out = Vec::new();
    image::codecs::png::PngEncoder::new(&mut out)
        .write_image(&raw, w as u32, h as u32, color)
        .map_err(|e| IoError::UnsupportedFormat(format!("PNG encode failed: {e}")))?;
    Ok(out)
}

use image::ImageEncoder;
