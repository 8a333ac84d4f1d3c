//! Region growing engine.
//!
//! Each iteration evaluates every pixel of the frontier: its neighborhood
//! prediction adds one vote to each covered pixel. Once all votes of the
//! iteration have landed, every RoI pixel not yet in the mask whose running
//! average vote (over the whole run) exceeds the threshold is admitted, and
//! the newly admitted pixels become the next frontier. The loop stops when
//! nothing new is admitted.
//!
//! Votes are accumulated in frontier order regardless of how the frontier is
//! split into classifier batches, so results do not depend on `batch_size`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::classify::{BoundClassifier, Classifier};
use crate::error::{Error, Result};
use crate::imgdata::{Image, Mask, Pixel, ProbMap};

#[derive(Clone, Debug, PartialEq)]
pub struct GrowConfig {
    /// Admission requires an average vote strictly above this value.
    pub threshold: f64,
    pub n_seeds: usize,
    /// Centres per classifier call.
    pub batch_size: usize,
    pub rng_seed: u64,
    /// Defaults to the pixel count of the image.
    pub max_iterations: Option<usize>,
}

impl Default for GrowConfig {
    fn default() -> Self {
        GrowConfig {
            threshold: 0.5,
            n_seeds: 10_000,
            batch_size: 100,
            rng_seed: 0,
            max_iterations: None,
        }
    }
}

impl GrowConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::param(format!(
                "threshold must lie in (0, 1), got {}",
                self.threshold
            )));
        }
        if self.n_seeds == 0 {
            return Err(Error::param("n_seeds must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::param("batch_size must be at least 1"));
        }
        if self.max_iterations == Some(0) {
            return Err(Error::param("max_iterations must be at least 1"));
        }
        Ok(())
    }
}

/// Pixels pending classification, kept sorted in row-major order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Frontier {
    pixels: Vec<Pixel>,
}

impl Frontier {
    /// Builds a frontier from arbitrary pixels; duplicates are dropped.
    /// Every pixel must lie inside `roi`.
    pub fn new(roi: &Mask, mut pixels: Vec<Pixel>) -> Result<Self> {
        for &(row, col) in &pixels {
            if row >= roi.height() || col >= roi.width() {
                return Err(Error::Bounds {
                    row,
                    col,
                    height: roi.height(),
                    width: roi.width(),
                });
            }
            if !roi.get(row, col) {
                return Err(Error::param(format!(
                    "frontier pixel ({row}, {col}) lies outside the RoI"
                )));
            }
        }
        pixels.sort_unstable();
        pixels.dedup();
        Ok(Frontier { pixels })
    }

    pub fn pixels(&self) -> &[Pixel] {
        &self.pixels
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }
}

/// Running per-pixel sum and count of foreground votes.
#[derive(Clone, Debug, PartialEq)]
pub struct VoteAccumulator {
    height: usize,
    width: usize,
    sum: Vec<f64>,
    count: Vec<u32>,
}

impl VoteAccumulator {
    pub fn new(height: usize, width: usize) -> Self {
        VoteAccumulator {
            height,
            width,
            sum: vec![0.0; height * width],
            count: vec![0; height * width],
        }
    }

    #[inline]
    pub fn add(&mut self, (row, col): Pixel, prob: f64) {
        let i = row * self.width + col;
        self.sum[i] += prob;
        self.count[i] += 1;
    }

    pub fn count(&self, (row, col): Pixel) -> u32 {
        self.count[row * self.width + col]
    }

    pub fn sum(&self, (row, col): Pixel) -> f64 {
        self.sum[row * self.width + col]
    }

    /// Mean vote, or `None` for a pixel that never received one.
    pub fn average(&self, (row, col): Pixel) -> Option<f64> {
        let i = row * self.width + col;
        (self.count[i] > 0).then(|| self.sum[i] / self.count[i] as f64)
    }

    /// Mean votes as a probability map; unvoted pixels read 0.
    pub fn average_map(&self) -> ProbMap {
        let data = self
            .sum
            .iter()
            .zip(&self.count)
            .map(|(&s, &n)| if n > 0 { (s / n as f64) as f32 } else { 0.0 })
            .collect();
        ProbMap::new(self.height, self.width, data).expect("accumulator dimensions")
    }
}

#[derive(Clone, Debug)]
pub struct GrowResult {
    pub mask: Mask,
    pub iterations: usize,
    pub votes: VoteAccumulator,
    /// Number of tile evaluations performed.
    pub pixels_evaluated: usize,
    pub seeds: Frontier,
    /// Per pixel, the 1-based iteration at which it was admitted; 0 if never.
    pub admitted_at: Vec<u32>,
}

impl GrowResult {
    /// The mask as it stood after `iteration` iterations.
    pub fn mask_after(&self, iteration: usize) -> Mask {
        let (h, w) = self.mask.dims();
        let data = self
            .admitted_at
            .iter()
            .map(|&k| (k != 0 && k as usize <= iteration) as u8)
            .collect();
        Mask::new(h, w, data).expect("snapshot dimensions")
    }
}

/// Draws `min(n_seeds, |RoI|)` distinct RoI pixels uniformly at random.
pub fn sample_seeds(roi: &Mask, n_seeds: usize, rng_seed: u64) -> Result<Frontier> {
    let candidates: Vec<Pixel> = roi.ones_iter().collect();
    if candidates.is_empty() {
        return Err(Error::param("cannot sample seeds from an empty RoI"));
    }
    let pixels = if n_seeds >= candidates.len() {
        candidates
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        rand::seq::index::sample(&mut rng, candidates.len(), n_seeds)
            .into_iter()
            .map(|i| candidates[i])
            .collect()
    };
    Frontier::new(roi, pixels)
}

/// Samples seeds from `roi` and grows a segmentation of `img`.
pub fn grow_region<C: Classifier + ?Sized>(
    img: &Image,
    roi: &Mask,
    classifier: &C,
    config: &GrowConfig,
) -> Result<GrowResult> {
    config.validate()?;
    if img.dims() != roi.dims() {
        return Err(Error::shape(format!(
            "image is {:?}, RoI is {:?}",
            img.dims(),
            roi.dims()
        )));
    }
    let bound = classifier.bind(img)?;
    let seeds = sample_seeds(roi, config.n_seeds, config.rng_seed)?;
    grow_region_from(bound.as_ref(), roi, seeds, config)
}

/// Grows from an explicit frontier with an already bound classifier.
/// `config.n_seeds` and `config.rng_seed` are not used.
pub fn grow_region_from(
    classifier: &dyn BoundClassifier,
    roi: &Mask,
    seeds: Frontier,
    config: &GrowConfig,
) -> Result<GrowResult> {
    config.validate()?;
    let (h, w) = roi.dims();
    if classifier.dims() != (h, w) {
        return Err(Error::shape(format!(
            "classifier is bound to a {:?} image, RoI is {:?}",
            classifier.dims(),
            roi.dims()
        )));
    }
    let max_iterations = config.max_iterations.unwrap_or(h * w).max(1);
    let mut votes = VoteAccumulator::new(h, w);
    let mut mask = Mask::zeros(h, w);
    let mut admitted_at = vec![0u32; h * w];
    let mut touched_flag = vec![false; h * w];
    let mut touched: Vec<Pixel> = Vec::new();
    let mut frontier: Vec<Pixel> = seeds.pixels().to_vec();
    let mut iterations = 0;
    let mut pixels_evaluated = 0;

    while !frontier.is_empty() && iterations < max_iterations {
        iterations += 1;
        for batch in frontier.chunks(config.batch_size) {
            for pred in classifier.classify_batch(batch)? {
                for (p, prob) in pred.votes(h, w) {
                    votes.add(p, prob);
                    let i = p.0 * w + p.1;
                    if !touched_flag[i] {
                        touched_flag[i] = true;
                        touched.push(p);
                    }
                }
            }
        }
        pixels_evaluated += frontier.len();

        // Only pixels that received a vote this iteration can change status.
        let mut next = Vec::new();
        for p in touched.drain(..) {
            let i = p.0 * w + p.1;
            touched_flag[i] = false;
            if admitted_at[i] != 0 || !roi.get(p.0, p.1) {
                continue;
            }
            if votes.average(p).is_some_and(|avg| avg > config.threshold) {
                admitted_at[i] = iterations as u32;
                mask.set(p.0, p.1, true);
                next.push(p);
            }
        }
        next.sort_unstable();
        frontier = next;
    }

    Ok(GrowResult {
        mask,
        iterations,
        votes,
        pixels_evaluated,
        seeds,
        admitted_at,
    })
}

/// Dense baseline: every RoI pixel whose probability exceeds `threshold`.
pub fn dense_threshold_segment(map: &ProbMap, roi: &Mask, threshold: f64) -> Result<Mask> {
    if map.dims() != roi.dims() {
        return Err(Error::shape(format!(
            "probability map is {:?}, RoI is {:?}",
            map.dims(),
            roi.dims()
        )));
    }
    Ok(Mask::from_fn(map.height(), map.width(), |r, c| {
        roi.get(r, c) && map.get(r, c) as f64 > threshold
    }))
}
