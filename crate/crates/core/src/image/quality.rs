//! Fidelity metrics between an original image and its obfuscated version:
//! PSNR, single-scale SSIM, and multi-scale SSIM.
//!
//! All three treat pixel bytes as values on a 0..=255 dynamic range. SSIM
//! uses a uniform (unweighted) sliding window and population statistics;
//! multi-channel images average the per-channel results.

use serde::{Serialize, Serializer};

use super::{Image, ImageError};

/// Peak signal-to-noise ratio. Identical images have infinite ratio, kept
/// as a separate case so serialization stays finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Psnr {
    Identical,
    Decibels(f64),
}

impl Psnr {
    pub fn as_db(&self) -> Option<f64> {
        match self {
            Psnr::Identical => None,
            Psnr::Decibels(db) => Some(*db),
        }
    }
}

impl Serialize for Psnr {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Psnr::Identical => serializer.serialize_str("identical"),
            Psnr::Decibels(db) => serializer.serialize_f64(*db),
        }
    }
}

/// `10 * log10(255^2 / mse)` over all samples of both images.
pub fn psnr(a: &Image, b: &Image) -> Result<Psnr, ImageError> {
    a.same_shape(b)?;
    let n = a.data().len() as f64;
    let sum_sq: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| {
            let d = f64::from(x) - f64::from(y);
            d * d
        })
        .sum();
    if sum_sq == 0.0 {
        return Ok(Psnr::Identical);
    }
    let mse = sum_sq / n;
    Ok(Psnr::Decibels(10.0 * (255.0 * 255.0 / mse).log10()))
}

/// SSIM window size and stabilizing constants. `k1`/`k2` scale with the
/// dynamic range: the constants are `(k * 255)^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsimParams {
    pub window: usize,
    pub k1: f64,
    pub k2: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        SsimParams {
            window: 8,
            k1: 0.01,
            k2: 0.03,
        }
    }
}

/// Mean luminance-contrast-structure product over all windows of one
/// channel plane, plus the mean of the contrast-structure factor alone
/// (needed by the multi-scale variant).
fn channel_ssim(
    pa: &[f64],
    pb: &[f64],
    width: usize,
    height: usize,
    params: &SsimParams,
) -> (f64, f64) {
    let win = params.window;
    let n = (win * win) as f64;
    let c1 = (params.k1 * 255.0) * (params.k1 * 255.0);
    let c2 = (params.k2 * 255.0) * (params.k2 * 255.0);
    let mut ssim_sum = 0.0;
    let mut cs_sum = 0.0;
    let mut windows = 0usize;
    for y0 in 0..=(height - win) {
        for x0 in 0..=(width - win) {
            let (mut sa, mut sb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for y in y0..y0 + win {
                let row = y * width;
                for x in x0..x0 + win {
                    let a = pa[row + x];
                    let b = pb[row + x];
                    sa += a;
                    sb += b;
                    saa += a * a;
                    sbb += b * b;
                    sab += a * b;
                }
            }
            let ma = sa / n;
            let mb = sb / n;
            let va = saa / n - ma * ma;
            let vb = sbb / n - mb * mb;
            let cov = sab / n - ma * mb;
            let luminance = (2.0 * ma * mb + c1) / (ma * ma + mb * mb + c1);
            let contrast_structure = (2.0 * cov + c2) / (va + vb + c2);
            ssim_sum += luminance * contrast_structure;
            cs_sum += contrast_structure;
            windows += 1;
        }
    }
    (ssim_sum / windows as f64, cs_sum / windows as f64)
}

fn check_window(image: &Image, window: usize) -> Result<(), ImageError> {
    if window == 0 || window > image.width() || window > image.height() {
        return Err(ImageError::WindowTooLarge(
            window,
            image.width(),
            image.height(),
        ));
    }
    Ok(())
}

fn mean_over_channels(
    width: usize,
    height: usize,
    params: &SsimParams,
    planes_a: &[Vec<f64>],
    planes_b: &[Vec<f64>],
) -> (f64, f64) {
    let mut ssim_total = 0.0;
    let mut cs_total = 0.0;
    for (pa, pb) in planes_a.iter().zip(planes_b) {
        let (s, cs) = channel_ssim(pa, pb, width, height, params);
        ssim_total += s;
        cs_total += cs;
    }
    let channels = planes_a.len() as f64;
    (ssim_total / channels, cs_total / channels)
}

/// Structural similarity between two images of identical shape; 1.0 exactly
/// for identical images.
pub fn ssim(a: &Image, b: &Image, params: &SsimParams) -> Result<f64, ImageError> {
    a.same_shape(b)?;
    check_window(a, params.window)?;
    let (value, _) = mean_over_channels(a.width(), a.height(), params, &a.planes(), &b.planes());
    Ok(value)
}

/// The conventional five-scale weight vector for [`ms_ssim`].
pub const MS_SSIM_WEIGHTS: [f64; 5] = [0.0448, 0.2856, 0.3001, 0.2363, 0.1333];

fn downsample(plane: &[f64], width: usize, height: usize) -> (Vec<f64>, usize, usize) {
    let nw = width / 2;
    let nh = height / 2;
    let mut out = Vec::with_capacity(nw * nh);
    for y in 0..nh {
        for x in 0..nw {
            let i = 2 * y * width + 2 * x;
            out.push((plane[i] + plane[i + 1] + plane[i + width] + plane[i + width + 1]) * 0.25);
        }
    }
    (out, nw, nh)
}

/// Multi-scale SSIM: contrast-structure means at every scale but the last
/// (progressively 2x2-mean downsampled), the full SSIM mean at the coarsest
/// scale, combined as a weighted geometric mean. With `levels = 1` and
/// weight `[1.0]` this reduces to [`ssim`]. Negative factors are clamped to
/// zero so the geometric mean stays real.
pub fn ms_ssim(
    a: &Image,
    b: &Image,
    levels: usize,
    weights: &[f64],
    params: &SsimParams,
) -> Result<f64, ImageError> {
    a.same_shape(b)?;
    if weights.len() != levels || levels == 0 {
        return Err(ImageError::WeightCountMismatch {
            weights: weights.len(),
            levels,
        });
    }
    check_window(a, params.window)?;
    let mut planes_a = a.planes();
    let mut planes_b = b.planes();
    let (mut width, mut height) = (a.width(), a.height());
    let mut result = 1.0;
    for (scale, &weight) in weights.iter().enumerate() {
        if width < params.window || height < params.window {
            return Err(ImageError::TooManyLevels {
                levels,
                min: params.window << (levels - 1),
                width: a.width(),
                height: a.height(),
            });
        }
        let (ssim_mean, cs_mean) =
            mean_over_channels(width, height, params, &planes_a, &planes_b);
        let factor = if scale == levels - 1 { ssim_mean } else { cs_mean };
        result *= factor.max(0.0).powf(weight);
        if scale < levels - 1 {
            for plane in planes_a.iter_mut().chain(planes_b.iter_mut()) {
                let (smaller, _, _) = downsample(plane, width, height);
                *plane = smaller;
            }
            width /= 2;
            height /= 2;
        }
    }
    Ok(result)
}
