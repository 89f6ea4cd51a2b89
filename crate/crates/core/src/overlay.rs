//! Class-colored overlays of segmentation masks.

use crate::error::{Error, Result};
use crate::io::ClassMask;
use crate::superpixel::Image;

/// Blend weight of the class color.
pub const OVERLAY_ALPHA: f32 = 0.5;

/// Colors for mask values 1..=20; larger values wrap around.
pub const PALETTE: [[u8; 3]; 20] = [
    [128, 0, 0],
    [0, 128, 0],
    [128, 128, 0],
    [0, 0, 128],
    [128, 0, 128],
    [0, 128, 128],
    [128, 128, 128],
    [64, 0, 0],
    [192, 0, 0],
    [64, 128, 0],
    [192, 128, 0],
    [64, 0, 128],
    [192, 0, 128],
    [64, 128, 128],
    [192, 128, 128],
    [0, 64, 0],
    [128, 64, 0],
    [0, 192, 0],
    [128, 192, 0],
    [0, 64, 128],
];

/// Color of a nonzero mask value.
pub fn palette_color(value: u32) -> [u8; 3] {
    assert!(value > 0, "background has no overlay color");
    PALETTE[(value as usize - 1) % PALETTE.len()]
}

/// RGB rendering of `frame` with every non-background pixel blended towards
/// its class color. Grayscale frames are replicated into three channels.
pub fn emit_overlay(frame: &Image, mask: &ClassMask) -> Result<Image> {
    if (frame.width(), frame.height()) != (mask.width(), mask.height()) {
        return Err(Error::validation(format!(
            "frame is {}x{} but mask is {}x{}",
            frame.width(),
            frame.height(),
            mask.width(),
            mask.height()
        )));
    }
    let mut data = Vec::with_capacity(frame.width() * frame.height() * 3);
    for (k, &v) in mask.values().iter().enumerate() {
        let (x, y) = (k % frame.width(), k / frame.width());
        let px = frame.pixel(x, y);
        let rgb = if px.len() == 1 { [px[0]; 3] } else { [px[0], px[1], px[2]] };
        if v == 0 {
            data.extend_from_slice(&rgb);
        } else {
            let color = palette_color(v);
            for ch in 0..3 {
                let c = color[ch] as f32 / 255.0;
                data.push((1.0 - OVERLAY_ALPHA) * rgb[ch] + OVERLAY_ALPHA * c);
            }
        }
    }
    Image::new(frame.width(), frame.height(), 3, data)
}
