//! Patch features for the reference classifier.
//!
//! Layout of a feature vector:
//! 1. mean-pooled intensities, `pool_grid × pool_grid` cells per channel;
//! 2. per-channel mean gradient magnitude (forward differences);
//! 3. optionally, raw intensities of a `center_window²` window around the
//!    tile centre, per channel.
//!
//! [`feature_extract`] works on an explicit tile. [`ImageFeatures`] computes
//! the same vector for any centre of a whole image from summed-area tables.

use crate::error::{Error, Result};
use crate::imgdata::{Image, Pixel};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FeatureSpec {
    pub tile_size: usize,
    pub channels: usize,
    pub pool_grid: usize,
    /// Side of the raw centre window; 0 disables it.
    pub center_window: usize,
}

impl Default for FeatureSpec {
    fn default() -> Self {
        FeatureSpec {
            tile_size: 80,
            channels: 3,
            pool_grid: 8,
            center_window: 5,
        }
    }
}

impl FeatureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.tile_size < 2 || !self.tile_size.is_multiple_of(2) {
            return Err(Error::param("feature tile_size must be even and at least 2"));
        }
        if self.channels == 0 {
            return Err(Error::param("feature channels must be positive"));
        }
        if self.pool_grid == 0 || self.pool_grid > self.tile_size {
            return Err(Error::param("pool_grid must lie in 1..=tile_size"));
        }
        if self.center_window > 0
            && (self.center_window.is_multiple_of(2) || self.center_window > self.tile_size - 1)
        {
            return Err(Error::param("center_window must be odd and smaller than the tile"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.channels
            * (self.pool_grid * self.pool_grid + 1 + self.center_window * self.center_window)
    }

    /// Tile-coordinate range `[start, end)` of pooling cell `i`.
    fn cell(&self, i: usize) -> (usize, usize) {
        (
            i * self.tile_size / self.pool_grid,
            (i + 1) * self.tile_size / self.pool_grid,
        )
    }
}

pub fn feature_extract(tile: &Image, spec: &FeatureSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let t = spec.tile_size;
    if tile.dims() != (t, t) || tile.channels() != spec.channels {
        return Err(Error::shape(format!(
            "tile is {}x{}x{}, features expect {t}x{t}x{}",
            tile.height(),
            tile.width(),
            tile.channels(),
            spec.channels
        )));
    }
    let mut out = Vec::with_capacity(spec.dim());
    let v = |r: usize, c: usize, ch: usize| tile.get(r, c, ch) as f64;
    for ch in 0..spec.channels {
        for gi in 0..spec.pool_grid {
            let (r0, r1) = spec.cell(gi);
            for gj in 0..spec.pool_grid {
                let (c0, c1) = spec.cell(gj);
                let mut sum = 0.0;
                for r in r0..r1 {
                    for c in c0..c1 {
                        sum += v(r, c, ch);
                    }
                }
                out.push(sum / ((r1 - r0) * (c1 - c0)) as f64);
            }
        }
    }
    for ch in 0..spec.channels {
        let mut sum = 0.0;
        for r in 0..t - 1 {
            for c in 0..t - 1 {
                let gx = v(r, c + 1, ch) - v(r, c, ch);
                let gy = v(r + 1, c, ch) - v(r, c, ch);
                sum += (gx * gx + gy * gy).sqrt();
            }
        }
        out.push(sum / ((t - 1) * (t - 1)) as f64);
    }
    let half = spec.center_window / 2;
    for ch in 0..spec.channels {
        for r in t / 2 - half..=t / 2 + half {
            for c in t / 2 - half..=t / 2 + half {
                if spec.center_window > 0 {
                    out.push(v(r, c, ch));
                }
            }
        }
    }
    Ok(out)
}

/// Summed-area tables of one image, answering feature queries for any centre
/// in `O(pool_grid² + center_window²)` per channel.
pub struct ImageFeatures<'a> {
    img: &'a Image,
    spec: FeatureSpec,
    /// Per channel, `(H + 1) × (W + 1)` prefix sums of intensity.
    intensity: Vec<Vec<f64>>,
    /// Per channel, prefix sums of gradient magnitude over the zero-padded
    /// domain rows `-1..H`, cols `-1..W`, shape `(H + 2) × (W + 2)`.
    gradient: Vec<Vec<f64>>,
}

impl<'a> ImageFeatures<'a> {
    pub fn new(img: &'a Image, spec: FeatureSpec) -> Result<Self> {
        spec.validate()?;
        if img.channels() != spec.channels {
            return Err(Error::shape(format!(
                "image has {} channels, features expect {}",
                img.channels(),
                spec.channels
            )));
        }
        let (h, w) = img.dims();
        let value = |r: isize, c: isize, ch: usize| -> f64 {
            if r < 0 || c < 0 || r >= h as isize || c >= w as isize {
                0.0
            } else {
                img.get(r as usize, c as usize, ch) as f64
            }
        };
        let mut intensity = Vec::with_capacity(spec.channels);
        let mut gradient = Vec::with_capacity(spec.channels);
        for ch in 0..spec.channels {
            intensity.push(prefix_sums(h, w, |r, c| value(r as isize, c as isize, ch)));
            gradient.push(prefix_sums(h + 1, w + 1, |r, c| {
                let (r, c) = (r as isize - 1, c as isize - 1);
                let base = value(r, c, ch);
                let gx = value(r, c + 1, ch) - base;
                let gy = value(r + 1, c, ch) - base;
                (gx * gx + gy * gy).sqrt()
            }));
        }
        Ok(ImageFeatures {
            img,
            spec,
            intensity,
            gradient,
        })
    }

    pub fn image(&self) -> &'a Image {
        self.img
    }

    pub fn spec(&self) -> &FeatureSpec {
        &self.spec
    }

    /// Same vector as `feature_extract(extract_tile(img, center, T))`, up to
    /// floating-point summation order.
    pub fn features_at(&self, center: Pixel, out: &mut Vec<f64>) {
        let spec = &self.spec;
        let (h, w) = (self.img.height() as isize, self.img.width() as isize);
        let t = spec.tile_size as isize;
        let (row0, col0) = (center.0 as isize - t / 2, center.1 as isize - t / 2);
        out.clear();
        for table in &self.intensity {
            for gi in 0..spec.pool_grid {
                let (r0, r1) = spec.cell(gi);
                for gj in 0..spec.pool_grid {
                    let (c0, c1) = spec.cell(gj);
                    let sum = rect_sum(
                        table,
                        w as usize + 1,
                        (row0 + r0 as isize, row0 + r1 as isize),
                        (col0 + c0 as isize, col0 + c1 as isize),
                        (0, h),
                        (0, w),
                    );
                    out.push(sum / ((r1 - r0) * (c1 - c0)) as f64);
                }
            }
        }
        for table in &self.gradient {
            // Table index i corresponds to absolute coordinate i - 1.
            let sum = rect_sum(
                table,
                w as usize + 2,
                (row0 + 1, row0 + t),
                (col0 + 1, col0 + t),
                (0, h + 1),
                (0, w + 1),
            );
            out.push(sum / ((t - 1) * (t - 1)) as f64);
        }
        if spec.center_window > 0 {
            let half = (spec.center_window / 2) as isize;
            for ch in 0..spec.channels {
                for dr in -half..=half {
                    for dc in -half..=half {
                        let (r, c) = (center.0 as isize + dr, center.1 as isize + dc);
                        let inside = r >= 0 && c >= 0 && r < h && c < w;
                        out.push(if inside {
                            self.img.get(r as usize, c as usize, ch) as f64
                        } else {
                            0.0
                        });
                    }
                }
            }
        }
    }
}

/// `(rows + 1) × (cols + 1)` inclusive prefix sums of `f`.
fn prefix_sums(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Vec<f64> {
    let stride = cols + 1;
    let mut table = vec![0.0; (rows + 1) * stride];
    for r in 0..rows {
        let mut row_sum = 0.0;
        for c in 0..cols {
            row_sum += f(r, c);
            table[(r + 1) * stride + c + 1] = table[r * stride + c + 1] + row_sum;
        }
    }
    table
}

/// Sum over table coordinates `[r0, r1) × [c0, c1)` clipped to the table's
/// valid range `[lo, hi)` on each axis.
fn rect_sum(
    table: &[f64],
    stride: usize,
    (r0, r1): (isize, isize),
    (c0, c1): (isize, isize),
    (rlo, rhi): (isize, isize),
    (clo, chi): (isize, isize),
) -> f64 {
    let (r0, r1) = (r0.clamp(rlo, rhi) as usize, r1.clamp(rlo, rhi) as usize);
    let (c0, c1) = (c0.clamp(clo, chi) as usize, c1.clamp(clo, chi) as usize);
    if r0 >= r1 || c0 >= c1 {
        return 0.0;
    }
    table[r1 * stride + c1] - table[r0 * stride + c1] - table[r1 * stride + c0]
        + table[r0 * stride + c0]
}
