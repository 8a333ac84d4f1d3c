//! Training data pipeline and fitting of the reference classifier.
//!
//! Tiles are drawn evenly over the foreground count of each pixel's 3×3
//! neighborhood (0..=9), which keeps thin-structure edges well represented
//! and gives roughly half foreground centres. Loss terms on the ground-truth
//! contour and its adjacent background are up-weighted.

mod augment;
mod fit;
mod loss;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::imgdata::{Mask, Pixel, Sample};

pub use augment::{augment, rotate_grid, Augmentation};
pub use fit::{fit, EpochLoss, TrainConfig, TrainHistory};
pub use loss::{loss_and_gradient, weighted_cross_entropy, Example, PROB_EPS};

/// Number of neighborhood-count buckets (counts 0 through 9).
pub const N_BUCKETS: usize = 10;

/// Per-pixel loss weights for one ground-truth mask.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightMap {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl WeightMap {
    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    /// Off-image positions weigh 1.
    pub fn get_signed(&self, row: isize, col: isize) -> f64 {
        if row < 0 || col < 0 || row as usize >= self.height || col as usize >= self.width {
            1.0
        } else {
            self.get(row as usize, col as usize)
        }
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// One training tile: the centre pixel of image `image` in its pool, with
/// the `out_size²` label and weight grids around it (row-major).
#[derive(Clone, Debug, PartialEq)]
pub struct TrainSample {
    pub image: usize,
    pub center: Pixel,
    pub label: Vec<u8>,
    pub weight: Vec<f64>,
}

/// Foreground pixels in the 3×3 window around `pixel`; off-image counts as
/// background.
pub fn neighborhood_count(gt: &Mask, (row, col): Pixel) -> Result<u8> {
    if row >= gt.height() || col >= gt.width() {
        return Err(Error::Bounds {
            row,
            col,
            height: gt.height(),
            width: gt.width(),
        });
    }
    let (r, c) = (row as isize, col as isize);
    let mut n = 0;
    for dr in -1..=1 {
        for dc in -1..=1 {
            n += gt.get_signed(r + dr, c + dc) as u8;
        }
    }
    Ok(n)
}

/// Weight `boundary_weight` on contour pixels (foreground with a background
/// 8-neighbor, off-image included) and on background pixels 8-adjacent to
/// them; 1 elsewhere.
pub fn boundary_weight_map(gt: &Mask, boundary_weight: f64) -> WeightMap {
    let (h, w) = gt.dims();
    let mut data = vec![1.0; h * w];
    for (r, c) in gt.ones_iter() {
        let (ri, ci) = (r as isize, c as isize);
        let contour = (-1..=1)
            .flat_map(|dr| (-1..=1).map(move |dc| (dr, dc)))
            .any(|(dr, dc)| !gt.get_signed(ri + dr, ci + dc));
        if !contour {
            continue;
        }
        data[r * w + c] = boundary_weight;
        for dr in -1..=1 {
            for dc in -1..=1 {
                let (nr, nc) = (ri + dr, ci + dc);
                if nr >= 0 && nc >= 0 && (nr as usize) < h && (nc as usize) < w {
                    let (nr, nc) = (nr as usize, nc as usize);
                    if !gt.get(nr, nc) {
                        data[nr * w + nc] = boundary_weight;
                    }
                }
            }
        }
    }
    WeightMap {
        height: h,
        width: w,
        data,
    }
}

/// Candidate centres of a set of images, indexed by neighborhood count and by
/// centre class. Only RoI pixels are candidates.
#[derive(Clone, Debug)]
pub struct TrainPool<'a> {
    samples: &'a [Sample],
    weights: Vec<WeightMap>,
    out_size: usize,
    buckets: Vec<Vec<(u32, u32)>>,
    foreground: Vec<(u32, u32)>,
    background: Vec<(u32, u32)>,
}

impl<'a> TrainPool<'a> {
    pub fn new(samples: &'a [Sample], boundary_weight: f64, out_size: usize) -> Result<Self> {
        if !(boundary_weight >= 1.0 && boundary_weight.is_finite()) {
            return Err(Error::param(format!(
                "boundary_weight must be at least 1, got {boundary_weight}"
            )));
        }
        if out_size.is_multiple_of(2) {
            return Err(Error::param("out_size must be odd"));
        }
        let mut buckets = vec![Vec::new(); N_BUCKETS];
        let mut foreground = Vec::new();
        let mut background = Vec::new();
        for (i, s) in samples.iter().enumerate() {
            let w = s.gt.width();
            for (r, c) in s.roi.ones_iter() {
                let entry = (i as u32, (r * w + c) as u32);
                buckets[neighborhood_count(&s.gt, (r, c))? as usize].push(entry);
                if s.gt.get(r, c) {
                    foreground.push(entry);
                } else {
                    background.push(entry);
                }
            }
        }
        Ok(TrainPool {
            samples,
            weights: samples
                .iter()
                .map(|s| boundary_weight_map(&s.gt, boundary_weight))
                .collect(),
            out_size,
            buckets,
            foreground,
            background,
        })
    }

    pub fn samples(&self) -> &'a [Sample] {
        self.samples
    }

    /// Population of each neighborhood-count bucket.
    pub fn bucket_sizes(&self) -> Vec<usize> {
        self.buckets.iter().map(Vec::len).collect()
    }

    /// Builds the sample for one centre, reading labels and weights from the
    /// ground truth around it.
    pub fn make_sample(&self, image: usize, center: Pixel) -> TrainSample {
        let s = &self.samples[image];
        let wm = &self.weights[image];
        let half = (self.out_size / 2) as isize;
        let n = self.out_size * self.out_size;
        let mut label = Vec::with_capacity(n);
        let mut weight = Vec::with_capacity(n);
        for dr in -half..=half {
            for dc in -half..=half {
                let (r, c) = (center.0 as isize + dr, center.1 as isize + dc);
                label.push(s.gt.get_signed(r, c) as u8);
                weight.push(wm.get_signed(r, c));
            }
        }
        TrainSample {
            image,
            center,
            label,
            weight,
        }
    }

    fn entry_sample(&self, (image, flat): (u32, u32)) -> TrainSample {
        let w = self.samples[image as usize].gt.width();
        let flat = flat as usize;
        self.make_sample(image as usize, (flat / w, flat % w))
    }

    /// `min(samples_per_count, bucket size)` centres per bucket, drawn
    /// without replacement; bucket order, then draw order.
    pub fn balanced_sample<R: Rng + ?Sized>(
        &self,
        samples_per_count: usize,
        rng: &mut R,
    ) -> Result<Vec<TrainSample>> {
        if self.buckets.iter().all(Vec::is_empty) {
            return Err(Error::Data("no RoI pixels to sample from".into()));
        }
        let mut out = Vec::with_capacity(samples_per_count * N_BUCKETS);
        for bucket in &self.buckets {
            let k = samples_per_count.min(bucket.len());
            for i in index::sample(rng, bucket.len(), k) {
                out.push(self.entry_sample(bucket[i]));
            }
        }
        Ok(out)
    }

    /// `ceil(n/2)` foreground and `floor(n/2)` background centres, uniform
    /// within each class.
    pub fn pretrain_sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<TrainSample>> {
        if self.foreground.is_empty() || self.background.is_empty() {
            return Err(Error::Data(
                "pre-training needs both foreground and background RoI pixels".into(),
            ));
        }
        let mut out = Vec::with_capacity(n);
        for (class, k) in [(&self.foreground, n.div_ceil(2)), (&self.background, n / 2)] {
            if k <= class.len() {
                for i in index::sample(rng, class.len(), k) {
                    out.push(self.entry_sample(class[i]));
                }
            } else {
                for _ in 0..k {
                    out.push(self.entry_sample(class[rng.random_range(0..class.len())]));
                }
            }
        }
        Ok(out)
    }
}

/// Balanced sampling over `samples` with a fresh RNG.
pub fn balanced_sample(
    samples: &[Sample],
    samples_per_count: usize,
    boundary_weight: f64,
    out_size: usize,
    rng_seed: u64,
) -> Result<Vec<TrainSample>> {
    TrainPool::new(samples, boundary_weight, out_size)?
        .balanced_sample(samples_per_count, &mut ChaCha8Rng::seed_from_u64(rng_seed))
}

/// Class-balanced pre-training sample over `samples` with a fresh RNG.
pub fn pretrain_sample(
    samples: &[Sample],
    n: usize,
    boundary_weight: f64,
    out_size: usize,
    rng_seed: u64,
) -> Result<Vec<TrainSample>> {
    TrainPool::new(samples, boundary_weight, out_size)?
        .pretrain_sample(n, &mut ChaCha8Rng::seed_from_u64(rng_seed))
}
