//! Classical visual obfuscators: Gaussian blur, pixelation, and solid
//! masking.

use serde::{Deserialize, Serialize};

use super::{Image, ImageError};

/// Gaussian blur with an odd `kernel_size` x `kernel_size` kernel of spread
/// `sigma`. Samples outside the image clamp to the nearest edge pixel;
/// results round half away from zero.
pub fn blur(image: &Image, sigma: f64, kernel_size: usize) -> Result<Image, ImageError> {
    if sigma <= 0.0 || sigma.is_nan() {
        return Err(ImageError::BadSigma(sigma));
    }
    if kernel_size == 0 || kernel_size.is_multiple_of(2) {
        return Err(ImageError::BadKernel(kernel_size));
    }
    let half = (kernel_size / 2) as isize;
    let mut weights = Vec::with_capacity(kernel_size * kernel_size);
    for dy in -half..=half {
        for dx in -half..=half {
            weights.push((-((dx * dx + dy * dy) as f64) / (2.0 * sigma * sigma)).exp());
        }
    }
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }

    let (w, h) = (image.width() as isize, image.height() as isize);
    let mut out = image.clone();
    for y in 0..image.height() {
        for x in 0..image.width() {
            for c in 0..image.channels() {
                let mut acc = 0.0;
                let mut wi = 0;
                for dy in -half..=half {
                    for dx in -half..=half {
                        let sx = (x as isize + dx).clamp(0, w - 1) as usize;
                        let sy = (y as isize + dy).clamp(0, h - 1) as usize;
                        acc += weights[wi] * f64::from(image.get(sx, sy, c));
                        wi += 1;
                    }
                }
                out.set(x, y, c, acc.round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    Ok(out)
}

/// Replaces each `block` x `block` tile with its per-channel mean (rounded
/// half away from zero). Tiles are anchored at the top-left corner; edge
/// tiles may be smaller.
pub fn pixelate(image: &Image, block: usize) -> Result<Image, ImageError> {
    if block == 0 {
        return Err(ImageError::BadBlock);
    }
    let mut out = image.clone();
    for by in (0..image.height()).step_by(block) {
        for bx in (0..image.width()).step_by(block) {
            let x_end = (bx + block).min(image.width());
            let y_end = (by + block).min(image.height());
            let count = ((x_end - bx) * (y_end - by)) as f64;
            for c in 0..image.channels() {
                let mut acc = 0.0;
                for y in by..y_end {
                    for x in bx..x_end {
                        acc += f64::from(image.get(x, y, c));
                    }
                }
                let value = (acc / count).round().clamp(0.0, 255.0) as u8;
                for y in by..y_end {
                    for x in bx..x_end {
                        out.set(x, y, c, value);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Axis-aligned rectangle in pixel coordinates; `x, y` is the top-left
/// corner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskRect {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

/// Paints `rect` with a solid `color` (one component per channel).
pub fn mask(image: &Image, rect: MaskRect, color: &[u8]) -> Result<Image, ImageError> {
    if color.len() != image.channels() {
        return Err(ImageError::BadMaskColor {
            got: color.len(),
            want: image.channels(),
        });
    }
    if rect.width == 0
        || rect.height == 0
        || rect.x + rect.width > image.width()
        || rect.y + rect.height > image.height()
    {
        return Err(ImageError::BadMaskRect);
    }
    let mut out = image.clone();
    for y in rect.y..rect.y + rect.height {
        for x in rect.x..rect.x + rect.width {
            for (c, &value) in color.iter().enumerate() {
                out.set(x, y, c, value);
            }
        }
    }
    Ok(out)
}
