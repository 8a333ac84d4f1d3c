use crate::error::{Error, Result};

/// A `(row, col)` pixel coordinate.
pub type Pixel = (usize, usize);

/// Floating-point image with values in `[0, 1]`, stored row-major with
/// interleaved channels.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f32>,
}

impl Image {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if channels == 0 {
            return Err(Error::param("image needs at least one channel"));
        }
        if data.len() != height * width * channels {
            return Err(Error::shape(format!(
                "{} values for a {height}x{width}x{channels} image",
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::param(format!("image value {v} outside [0, 1]")));
        }
        Ok(Image {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn zeros(height: usize, width: usize, channels: usize) -> Self {
        Image {
            height,
            width,
            channels,
            data: vec![0.0; height * width * channels],
        }
    }

    /// Converts raw 8-bit samples by dividing by 255.
    pub fn from_u8(height: usize, width: usize, channels: usize, raw: &[u8]) -> Result<Self> {
        Image::new(
            height,
            width,
            channels,
            raw.iter().map(|&b| b as f32 / 255.0).collect(),
        )
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize, channel: usize) -> f32 {
        self.data[(row * self.width + col) * self.channels + channel]
    }

    /// Sets a value, clamping it into `[0, 1]`.
    #[inline]
    pub fn set(&mut self, row: usize, col: usize, channel: usize, value: f32) {
        self.data[(row * self.width + col) * self.channels + channel] = value.clamp(0.0, 1.0);
    }

    /// Quantizes back to 8-bit samples (round to nearest).
    pub fn to_u8(&self) -> Vec<u8> {
        self.data
            .iter()
            .map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8)
            .collect()
    }

    pub fn contains(&self, (row, col): Pixel) -> bool {
        row < self.height && col < self.width
    }

    pub(crate) fn check_bounds(&self, (row, col): Pixel) -> Result<()> {
        if row < self.height && col < self.width {
            Ok(())
        } else {
            Err(Error::Bounds {
                row,
                col,
                height: self.height,
                width: self.width,
            })
        }
    }
}

/// Binary raster. Holds segmentations, ground truth and regions of interest.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Mask {
    height: usize,
    width: usize,
    data: Vec<u8>,
}

impl Mask {
    pub fn new(height: usize, width: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::shape(format!(
                "{} values for a {height}x{width} mask",
                data.len()
            )));
        }
        if data.iter().any(|&v| v > 1) {
            return Err(Error::param("mask values must be 0 or 1"));
        }
        Ok(Mask {
            height,
            width,
            data,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Mask {
            height,
            width,
            data: vec![0; height * width],
        }
    }

    pub fn ones(height: usize, width: usize) -> Self {
        Mask {
            height,
            width,
            data: vec![1; height * width],
        }
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c) as u8);
            }
        }
        Mask {
            height,
            width,
            data,
        }
    }

    pub fn from_pixels(height: usize, width: usize, pixels: &[Pixel]) -> Result<Self> {
        let mut mask = Mask::zeros(height, width);
        for &(r, c) in pixels {
            if r >= height || c >= width {
                return Err(Error::Bounds {
                    row: r,
                    col: c,
                    height,
                    width,
                });
            }
            mask.set(r, c, true);
        }
        Ok(mask)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.data[row * self.width + col] != 0
    }

    /// Like [`Mask::get`] but treats out-of-range signed coordinates as background.
    #[inline]
    pub fn get_signed(&self, row: isize, col: isize) -> bool {
        row >= 0
            && col >= 0
            && (row as usize) < self.height
            && (col as usize) < self.width
            && self.get(row as usize, col as usize)
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, on: bool) {
        self.data[row * self.width + col] = on as u8;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v != 0).count()
    }

    pub fn is_empty(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    /// Foreground pixels in row-major order.
    pub fn ones_iter(&self) -> impl Iterator<Item = Pixel> + '_ {
        let w = self.width;
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0)
            .map(move |(i, _)| (i / w, i % w))
    }

    pub fn check_same_dims(&self, other: &Mask, what: &str) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::shape(format!(
                "{what}: {}x{} vs {}x{}",
                self.height, self.width, other.height, other.width
            )));
        }
        Ok(())
    }

    pub fn and(&self, other: &Mask) -> Result<Mask> {
        self.check_same_dims(other, "mask intersection")?;
        Ok(self.zip_with(other, |a, b| a & b))
    }

    pub fn or(&self, other: &Mask) -> Result<Mask> {
        self.check_same_dims(other, "mask union")?;
        Ok(self.zip_with(other, |a, b| a | b))
    }

    pub fn intersection_count(&self, other: &Mask) -> Result<usize> {
        self.check_same_dims(other, "mask intersection")?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .filter(|(&a, &b)| a & b != 0)
            .count())
    }

    /// True when every foreground pixel of `self` is foreground in `other`.
    pub fn is_subset_of(&self, other: &Mask) -> bool {
        self.dims() == other.dims() && self.data.iter().zip(&other.data).all(|(&a, &b)| a <= b)
    }

    fn zip_with(&self, other: &Mask, f: impl Fn(u8, u8) -> u8) -> Mask {
        Mask {
            height: self.height,
            width: self.width,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }
}

/// Dense per-pixel foreground probability map (the PMAP raster).
#[derive(Clone, Debug, PartialEq)]
pub struct ProbMap {
    height: usize,
    width: usize,
    data: Vec<f32>,
}

impl ProbMap {
    pub fn new(height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::shape(format!(
                "{} values for a {height}x{width} probability map",
                data.len()
            )));
        }
        Ok(ProbMap {
            height,
            width,
            data,
        })
    }

    pub fn constant(height: usize, width: usize, value: f32) -> Self {
        ProbMap {
            height,
            width,
            data: vec![value; height * width],
        }
    }

    pub fn from_mask(mask: &Mask) -> Self {
        ProbMap {
            height: mask.height(),
            width: mask.width(),
            data: mask.data().iter().map(|&v| v as f32).collect(),
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f32) {
        self.data[row * self.width + col] = value;
    }

    /// Errors unless every value is a probability.
    pub fn check_probabilities(&self) -> Result<()> {
        match self.data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            Some(v) => Err(Error::param(format!("probability {v} outside [0, 1]"))),
            None => Ok(()),
        }
    }
}
