//! ASCII netpbm frames: P2 (gray) and P3 (RGB). Values are scaled to `[0, 1]`.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Location, Result};
use crate::superpixel::Image;

pub fn parse_pnm(text: &str) -> Result<Image> {
    // Tokens with line numbers; `#` starts a comment that runs to end of line.
    let mut tokens = text.lines().enumerate().flat_map(|(i, line)| {
        let line = line.split('#').next().unwrap_or("");
        line.split_whitespace().map(move |t| (i + 1, t))
    });
    let mut next = |what: &str| {
        tokens
            .next()
            .ok_or_else(|| Error::parse(Location::Line(text.lines().count().max(1)), format!("missing {what}")))
    };
    let (line, magic) = next("magic")?;
    let channels = match magic {
        "P2" => 1,
        "P3" => 3,
        other => {
            return Err(Error::parse(
                Location::Line(line),
                format!("unsupported netpbm magic {other:?}, expected P2 or P3"),
            ))
        }
    };
    let mut header = [0usize; 3];
    for (slot, what) in header.iter_mut().zip(["width", "height", "maxval"]) {
        let (line, tok) = next(what)?;
        *slot = tok
            .parse()
            .map_err(|_| Error::parse(Location::Line(line), format!("bad {what} {tok:?}")))?;
    }
    let [width, height, maxval] = header;
    if width == 0 || height == 0 || maxval == 0 || maxval > 65535 {
        return Err(Error::parse(Location::Line(line), "invalid netpbm header"));
    }
    let count = width
        .checked_mul(height)
        .and_then(|c| c.checked_mul(channels))
        .ok_or_else(|| Error::parse(Location::Line(line), "dimensions overflow"))?;
    let mut data = Vec::with_capacity(count.min(1 << 24));
    for _ in 0..count {
        let (line, tok) = next("pixel value")?;
        let v: usize = tok
            .parse()
            .map_err(|_| Error::parse(Location::Line(line), format!("bad pixel value {tok:?}")))?;
        if v > maxval {
            return Err(Error::parse(
                Location::Line(line),
                format!("pixel value {v} exceeds maxval {maxval}"),
            ));
        }
        data.push(v as f32 / maxval as f32);
    }
    Image::new(width, height, channels, data)
}

/// Encode with maxval 255 (P2 for gray, P3 for RGB).
pub fn to_pnm_text(img: &Image) -> String {
    let magic = if img.channels() == 1 { "P2" } else { "P3" };
    let mut out = format!("{magic}\n{} {}\n255\n", img.width(), img.height());
    let row_len = img.width() * img.channels();
    for row in img.data().chunks(row_len) {
        let mut first = true;
        for &v in row {
            if !first {
                out.push(' ');
            }
            first = false;
            write!(out, "{}", (v.clamp(0.0, 1.0) * 255.0).round() as u32).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn read_pnm(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_pnm(&text)
}

pub fn write_pnm(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_pnm_text(img)).map_err(|e| Error::io(path, e))
}
