//! Pixel-level front end: grayscale frames, binary masks and the low
//! threshold feeding the labeling step.
//!
//! Only the low-threshold half of the hysteresis segmentation happens
//! here; the high-threshold decision is completed in [`crate::ccl`] on
//! per-component peak intensity, which is equivalent to classical
//! hysteresis without a second image pass.

use thiserror::Error;

/// One timestamped grayscale image in a stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayFrame {
    pub width: u32,
    pub height: u32,
    /// 0-based frame index, strictly increasing along a stream.
    pub t: u64,
    /// Row-major 8-bit intensities, `width * height` bytes.
    pub data: Vec<u8>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FrameError {
    #[error("frame data length {got} does not match {width}x{height}={want}")]
    BadLength {
        width: u32,
        height: u32,
        want: usize,
        got: usize,
    },
    #[error("frame dimensions {0}x{1} below the 2x2 minimum")]
    TooSmall(u32, u32),
}

impl GrayFrame {
    /// Checked constructor: data length must equal `width * height` and
    /// both dimensions must be at least 2.
    pub fn new(width: u32, height: u32, t: u64, data: Vec<u8>) -> Result<Self, FrameError> {
        if width < 2 || height < 2 {
            return Err(FrameError::TooSmall(width, height));
        }
        let want = width as usize * height as usize;
        if data.len() != want {
            return Err(FrameError::BadLength {
                width,
                height,
                want,
                got: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            t,
            data,
        })
    }

    /// Frame filled with a constant intensity.
    pub fn filled(width: u32, height: u32, t: u64, value: u8) -> Self {
        Self {
            width,
            height,
            t,
            data: vec![value; width as usize * height as usize],
        }
    }

    #[inline]
    pub fn idx(&self, x: u32, y: u32) -> usize {
        y as usize * self.width as usize + x as usize
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.data[self.idx(x, y)]
    }

    pub fn validate(&self) -> Result<(), FrameError> {
        if self.width < 2 || self.height < 2 {
            return Err(FrameError::TooSmall(self.width, self.height));
        }
        let want = self.width as usize * self.height as usize;
        if self.data.len() != want {
            return Err(FrameError::BadLength {
                width: self.width,
                height: self.height,
                want,
                got: self.data.len(),
            });
        }
        Ok(())
    }
}

/// Row-major boolean foreground mask with the geometry of its source frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    pub width: u32,
    pub height: u32,
    pub bits: Vec<bool>,
}

impl BinaryMask {
    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[y as usize * self.width as usize + x as usize]
    }

    /// Number of foreground pixels.
    pub fn count_true(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// Low/high intensity thresholds of the hysteresis segmentation.
///
/// Comparison is inclusive on both thresholds: a pixel equal to the
/// threshold survives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ThresholdParams {
    pub low: u8,
    pub high: u8,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("low threshold {low} exceeds high threshold {high}")]
pub struct ThresholdOrder {
    pub low: u8,
    pub high: u8,
}

impl ThresholdParams {
    pub fn new(low: u8, high: u8) -> Result<Self, ThresholdOrder> {
        if low > high {
            return Err(ThresholdOrder { low, high });
        }
        Ok(Self { low, high })
    }
}

/// Mark every pixel with intensity >= `low` as foreground.
///
/// Total on valid frames; geometry is preserved.
pub fn binarize(frame: &GrayFrame, low: u8) -> BinaryMask {
    BinaryMask {
        width: frame.width,
        height: frame.height,
        bits: frame.data.iter().map(|&v| v >= low).collect(),
    }
}
