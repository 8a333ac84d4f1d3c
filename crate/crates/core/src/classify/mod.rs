//! The neighborhood classifier contract.
//!
//! A classifier looks at a square tile centred on a pixel and returns
//! foreground probabilities for the `out_size × out_size` neighborhood around
//! that pixel. Backends are bound to one image at a time ([`Classifier::bind`])
//! so they can precompute per-image state; a bound classifier is pure and can
//! be queried from many threads.

mod features;
mod model;
mod oracle;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imgdata::{Image, Pixel};

pub use features::{feature_extract, FeatureSpec, ImageFeatures};
pub use model::{
    load_model, predict_model, save_model, ClassifierModel, ModelClassifier, MODEL_MAGIC,
    MODEL_VERSION,
};
pub use oracle::{OracleClassifier, ProbMapClassifier};

/// Below this many centres a batch is evaluated serially.
const PARALLEL_MIN_BATCH: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClassifierConfig {
    /// Side of the (even) input tile.
    pub tile_size: usize,
    /// Side of the (odd) output neighborhood.
    pub out_size: usize,
    pub n_classes: usize,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            tile_size: 80,
            out_size: 3,
            n_classes: 2,
        }
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tile_size < 2 || !self.tile_size.is_multiple_of(2) {
            return Err(Error::param("tile_size must be even and at least 2"));
        }
        if self.out_size.is_multiple_of(2) || self.out_size > self.tile_size {
            return Err(Error::param("out_size must be odd and no larger than tile_size"));
        }
        if self.n_classes < 2 {
            return Err(Error::param("n_classes must be at least 2"));
        }
        Ok(())
    }

    /// Number of pixels in one output neighborhood.
    pub fn out_len(&self) -> usize {
        self.out_size * self.out_size
    }
}

/// Foreground probabilities for the neighborhood around `center`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct NeighborhoodPrediction {
    pub center: Pixel,
    pub out_size: usize,
    pub probs: Vec<f64>,
}

impl NeighborhoodPrediction {
    /// Probability at offset `(i, j)` of the output grid; `(out_size / 2, out_size / 2)` is the centre.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.probs[i * self.out_size + j]
    }

    /// Absolute pixels covered by the prediction paired with their
    /// probabilities. Positions outside a `height × width` image are skipped.
    pub fn votes(
        &self,
        height: usize,
        width: usize,
    ) -> impl Iterator<Item = (Pixel, f64)> + '_ {
        let half = (self.out_size / 2) as isize;
        let (r0, c0) = (self.center.0 as isize - half, self.center.1 as isize - half);
        self.probs.iter().enumerate().filter_map(move |(k, &p)| {
            let r = r0 + (k / self.out_size) as isize;
            let c = c0 + (k % self.out_size) as isize;
            (r >= 0 && c >= 0 && (r as usize) < height && (c as usize) < width)
                .then_some(((r as usize, c as usize), p))
        })
    }
}

pub trait Classifier: Sync {
    fn config(&self) -> &ClassifierConfig;

    /// Prepares the classifier for queries on `img`.
    fn bind<'a>(&'a self, img: &'a Image) -> Result<Box<dyn BoundClassifier + 'a>>;
}

/// A classifier bound to one image.
pub trait BoundClassifier: Sync {
    fn out_size(&self) -> usize;

    /// `(height, width)` of the bound image.
    fn dims(&self) -> (usize, usize);

    /// Writes the `out_size²` foreground probabilities for `center` into
    /// `out`. Callers guarantee `center` is in bounds.
    fn predict_into(&self, center: Pixel, out: &mut [f64]) -> Result<()>;

    fn predict(&self, center: Pixel) -> Result<NeighborhoodPrediction> {
        check_center(self.dims(), center)?;
        let mut probs = vec![0.0; self.out_size() * self.out_size()];
        self.predict_into(center, &mut probs)?;
        Ok(NeighborhoodPrediction {
            center,
            out_size: self.out_size(),
            probs,
        })
    }

    /// One prediction per centre, in input order. Large batches are evaluated
    /// in parallel; the result does not depend on how they are split.
    fn classify_batch(&self, centers: &[Pixel]) -> Result<Vec<NeighborhoodPrediction>> {
        for &center in centers {
            check_center(self.dims(), center)?;
        }
        if centers.len() < PARALLEL_MIN_BATCH {
            centers.iter().map(|&c| self.predict(c)).collect()
        } else {
            centers.par_iter().map(|&c| self.predict(c)).collect()
        }
    }
}

/// Binds `classifier` to `img` and classifies every centre.
pub fn classify_batch<C: Classifier + ?Sized>(
    classifier: &C,
    img: &Image,
    centers: &[Pixel],
) -> Result<Vec<NeighborhoodPrediction>> {
    classifier.bind(img)?.classify_batch(centers)
}

fn check_center((height, width): (usize, usize), (row, col): Pixel) -> Result<()> {
    if row < height && col < width {
        Ok(())
    } else {
        Err(Error::Bounds {
            row,
            col,
            height,
            width,
        })
    }
}

#[inline]
pub(crate) fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(ClassifierConfig::default().validate().is_ok());
        let bad = [
            ClassifierConfig { tile_size: 81, ..Default::default() },
            ClassifierConfig { out_size: 4, ..Default::default() },
            ClassifierConfig { tile_size: 2, out_size: 3, n_classes: 2 },
            ClassifierConfig { n_classes: 1, ..Default::default() },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn votes_skip_off_image_positions() {
        let pred = NeighborhoodPrediction {
            center: (0, 0),
            out_size: 3,
            probs: (0..9).map(|k| k as f64 / 10.0).collect(),
        };
        let votes: Vec<_> = pred.votes(5, 5).collect();
        assert_eq!(
            votes,
            vec![((0, 0), 0.4), ((0, 1), 0.5), ((1, 0), 0.7), ((1, 1), 0.8)]
        );
    }

    #[test]
    fn logistic_is_stable() {
        assert_eq!(logistic(0.0), 0.5);
        assert!((1.0 - logistic(50.0)).abs() < 1e-9);
        assert!(logistic(-800.0) >= 0.0);
        assert!(logistic(800.0) <= 1.0);
    }
}
