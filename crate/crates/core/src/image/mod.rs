//! Byte-pixel raster images, classical obfuscation filters, and perceptual
//! quality metrics.

mod obfuscate;
mod pnm;
mod quality;

pub use obfuscate::{blur, mask, pixelate, MaskRect};
pub use pnm::{read_pnm, write_pnm};
pub use quality::{ms_ssim, psnr, ssim, Psnr, SsimParams, MS_SSIM_WEIGHTS};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ImageError {
    #[error("channels must be 1 (grayscale) or 3 (rgb), got {0}")]
    BadChannels(usize),
    #[error("image dimensions must be positive")]
    EmptyImage,
    #[error("pixel buffer holds {got} bytes; {width}x{height}x{channels} needs {want}")]
    BadBufferSize {
        got: usize,
        want: usize,
        width: usize,
        height: usize,
        channels: usize,
    },
    #[error("images differ in shape: {0}x{1}x{2} vs {3}x{4}x{5}")]
    ShapeMismatch(usize, usize, usize, usize, usize, usize),
    #[error("kernel size must be odd and positive (got {0})")]
    BadKernel(usize),
    #[error("sigma must be positive (got {0})")]
    BadSigma(f64),
    #[error("block size must be positive")]
    BadBlock,
    #[error("mask color has {got} components; image has {want} channels")]
    BadMaskColor { got: usize, want: usize },
    #[error("mask rectangle must have positive size and stay inside the image")]
    BadMaskRect,
    #[error("an {0}x{0} window does not fit a {1}x{2} image")]
    WindowTooLarge(usize, usize, usize),
    #[error("{levels} scales need at least a {min}x{min} image (got {width}x{height})")]
    TooManyLevels {
        levels: usize,
        min: usize,
        width: usize,
        height: usize,
    },
    #[error("need one weight per scale: {weights} weights for {levels} scales")]
    WeightCountMismatch { weights: usize, levels: usize },
    #[error("not a supported image file: {0}")]
    Pnm(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for ImageError {
    fn from(e: std::io::Error) -> Self {
        ImageError::Io(e.to_string())
    }
}

/// An 8-bit raster image, grayscale or RGB, stored row-major with
/// interleaved channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<u8>,
}

impl Image {
    pub fn new(
        width: usize,
        height: usize,
        channels: usize,
        data: Vec<u8>,
    ) -> Result<Self, ImageError> {
        if channels != 1 && channels != 3 {
            return Err(ImageError::BadChannels(channels));
        }
        if width == 0 || height == 0 {
            return Err(ImageError::EmptyImage);
        }
        let want = width * height * channels;
        if data.len() != want {
            return Err(ImageError::BadBufferSize {
                got: data.len(),
                want,
                width,
                height,
                channels,
            });
        }
        Ok(Image {
            width,
            height,
            channels,
            data,
        })
    }

    /// Image with every sample set to `value`.
    pub fn filled(
        width: usize,
        height: usize,
        channels: usize,
        value: u8,
    ) -> Result<Self, ImageError> {
        Image::new(width, height, channels, vec![value; width * height * channels])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    fn index(&self, x: usize, y: usize, c: usize) -> usize {
        (y * self.width + x) * self.channels + c
    }

    pub fn get(&self, x: usize, y: usize, c: usize) -> u8 {
        self.data[self.index(x, y, c)]
    }

    pub(crate) fn set(&mut self, x: usize, y: usize, c: usize, value: u8) {
        let i = self.index(x, y, c);
        self.data[i] = value;
    }

    /// One `f64` plane per channel, row-major.
    pub(crate) fn planes(&self) -> Vec<Vec<f64>> {
        (0..self.channels)
            .map(|c| {
                self.data
                    .chunks_exact(self.channels)
                    .map(|px| f64::from(px[c]))
                    .collect()
            })
            .collect()
    }

    pub(crate) fn same_shape(&self, other: &Image) -> Result<(), ImageError> {
        if self.width != other.width
            || self.height != other.height
            || self.channels != other.channels
        {
            return Err(ImageError::ShapeMismatch(
                self.width,
                self.height,
                self.channels,
                other.width,
                other.height,
                other.channels,
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructor_checks_shape() {
        assert_eq!(
            Image::new(2, 2, 2, vec![0; 8]).unwrap_err(),
            ImageError::BadChannels(2)
        );
        assert_eq!(
            Image::new(0, 2, 1, vec![]).unwrap_err(),
            ImageError::EmptyImage
        );
        assert!(matches!(
            Image::new(2, 2, 3, vec![0; 11]).unwrap_err(),
            ImageError::BadBufferSize { got: 11, want: 12, .. }
        ));
        assert!(Image::new(2, 2, 3, vec![0; 12]).is_ok());
    }

    #[test]
    fn indexing_is_row_major_interleaved() {
        let mut img = Image::filled(2, 2, 3, 0).unwrap();
        img.set(1, 0, 2, 9);
        assert_eq!(img.get(1, 0, 2), 9);
        assert_eq!(img.data()[5], 9);
        let planes = img.planes();
        assert_eq!(planes.len(), 3);
        assert_eq!(planes[2][1], 9.0);
        assert_eq!(planes[0][1], 0.0);
    }
}
