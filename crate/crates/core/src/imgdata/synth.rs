//! Synthetic vessel-like images for desk-scale experiments.
//!
//! Each tree is a branching random walk stamped with discs of jittered
//! width. Trees never touch each other, so the ground truth has exactly one
//! 8-connected component per tree that could be placed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::imgdata::{Image, Mask};

/// Walkers spawned per tree, trunk included.
const MAX_WALKERS_PER_TREE: usize = 48;
const START_ATTEMPTS: usize = 200;
const BACKGROUND_LEVEL: f32 = 0.25;
const VESSEL_CONTRAST: f32 = 0.45;
const CHANNEL_GAINS: [f32; 3] = [1.0, 0.85, 0.7];

#[derive(Clone, Debug, PartialEq)]
pub struct SynthParams {
    pub height: usize,
    pub width: usize,
    pub n_trees: usize,
    /// Probability of spawning a branch at each walk step.
    pub branch_prob: f64,
    /// Vessel width bounds in pixels, `min >= 1`.
    pub width_range: (f64, f64),
    pub noise_sigma: f64,
    pub rng_seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            height: 512,
            width: 512,
            n_trees: 1,
            branch_prob: 0.04,
            width_range: (1.0, 4.0),
            noise_sigma: 0.05,
            rng_seed: 0,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        if self.height == 0 || self.width == 0 {
            return Err(Error::param("synthetic image must have nonzero area"));
        }
        if !(0.0..=1.0).contains(&self.branch_prob) {
            return Err(Error::param("branch_prob must lie in [0, 1]"));
        }
        let (lo, hi) = self.width_range;
        if !(lo >= 1.0 && hi >= lo && hi.is_finite()) {
            return Err(Error::param("width_range needs 1 <= min <= max"));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::param("noise_sigma must be non-negative"));
        }
        Ok(())
    }
}

struct Walker {
    y: f64,
    x: f64,
    heading: f64,
    width: f64,
    steps: usize,
}

/// Returns `(image, ground_truth, roi)`. The image has three channels.
pub fn generate_synthetic(params: &SynthParams) -> Result<(Image, Mask, Mask)> {
    params.validate()?;
    let (h, w) = (params.height, params.width);
    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
    let roi = elliptical_roi(h, w);
    let roi_pixels: Vec<_> = roi.ones_iter().collect();

    // 0 = background, k + 1 = tree k.
    let mut owner = vec![0u32; h * w];
    for tree in 1..=params.n_trees as u32 {
        grow_tree(params, &roi, &roi_pixels, &mut owner, tree, &mut rng);
    }
    let gt = Mask::new(h, w, owner.iter().map(|&o| (o != 0) as u8).collect())?;
    let image = render(&gt, &roi, params.noise_sigma, &mut rng)?;
    Ok((image, gt, roi))
}

/// Field-of-view ellipse covering most of the frame.
pub fn elliptical_roi(height: usize, width: usize) -> Mask {
    let (cy, cx) = (height as f64 / 2.0, width as f64 / 2.0);
    let (ay, ax) = (0.48 * height as f64, 0.48 * width as f64);
    Mask::from_fn(height, width, |r, c| {
        let dy = (r as f64 + 0.5 - cy) / ay.max(0.5);
        let dx = (c as f64 + 0.5 - cx) / ax.max(0.5);
        dy * dy + dx * dx <= 1.0
    })
}

fn grow_tree(
    params: &SynthParams,
    roi: &Mask,
    roi_pixels: &[(usize, usize)],
    owner: &mut [u32],
    tree: u32,
    rng: &mut ChaCha8Rng,
) {
    if roi_pixels.is_empty() {
        return;
    }
    let (min_w, max_w) = params.width_range;
    let turn = Normal::new(0.0, 0.12).unwrap();
    let mut walkers = Vec::new();
    for _ in 0..START_ATTEMPTS {
        let (r, c) = roi_pixels[rng.random_range(0..roi_pixels.len())];
        let walker = Walker {
            y: r as f64,
            x: c as f64,
            heading: rng.random_range(0.0..std::f64::consts::TAU),
            width: max_w,
            steps: (0.75 * params.height.max(params.width) as f64) as usize,
        };
        if stamp(params, roi, owner, tree, walker.y, walker.x, walker.width) {
            walkers.push(walker);
            break;
        }
    }

    let mut spawned = walkers.len();
    while let Some(mut walker) = walkers.pop() {
        while walker.steps > 0 {
            walker.steps -= 1;
            walker.heading += turn.sample(rng);
            walker.width = (walker.width + rng.random_range(-0.15..=0.15)).clamp(min_w, max_w);
            walker.y += walker.heading.sin();
            walker.x += walker.heading.cos();
            if !stamp(params, roi, owner, tree, walker.y, walker.x, walker.width) {
                break;
            }
            if spawned < MAX_WALKERS_PER_TREE && rng.random_bool(params.branch_prob) {
                let side = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                walkers.push(Walker {
                    y: walker.y,
                    x: walker.x,
                    heading: walker.heading + side * rng.random_range(0.35..1.0),
                    width: (walker.width * 0.75).max(min_w),
                    steps: walker.steps * 3 / 5,
                });
                spawned += 1;
            }
        }
    }
}

/// Stamps a disc at `(y, x)` for `tree`. Returns false, leaving `owner`
/// untouched, when the disc centre leaves the RoI or the disc would touch
/// another tree.
fn stamp(
    params: &SynthParams,
    roi: &Mask,
    owner: &mut [u32],
    tree: u32,
    y: f64,
    x: f64,
    width: f64,
) -> bool {
    let (h, w) = (params.height as isize, params.width as isize);
    let (pr, pc) = ((y + 0.5).floor() as isize, (x + 0.5).floor() as isize);
    if !roi.get_signed(pr, pc) {
        return false;
    }
    let radius = width / 2.0;
    let reach = radius.ceil() as isize + 1;
    let side = (2 * reach + 1) as usize;
    // Candidate disc pixels within the RoI, then keep the part 8-connected to the centre.
    let mut local = vec![false; side * side];
    for dr in -reach..=reach {
        for dc in -reach..=reach {
            let (r, c) = (pr + dr, pc + dc);
            let (fy, fx) = (r as f64 - y, c as f64 - x);
            let in_disc = (dr == 0 && dc == 0) || fy * fy + fx * fx <= radius * radius;
            if in_disc && roi.get_signed(r, c) {
                local[((dr + reach) as usize) * side + (dc + reach) as usize] = true;
            }
        }
    }
    let mut keep = vec![false; side * side];
    let start = reach as usize * side + reach as usize;
    keep[start] = true;
    let mut stack = vec![start];
    while let Some(i) = stack.pop() {
        let (lr, lc) = ((i / side) as isize, (i % side) as isize);
        for (dr, dc) in NEIGHBORS_8 {
            let (nr, nc) = (lr + dr, lc + dc);
            if nr < 0 || nc < 0 || nr >= side as isize || nc >= side as isize {
                continue;
            }
            let j = nr as usize * side + nc as usize;
            if local[j] && !keep[j] {
                keep[j] = true;
                stack.push(j);
            }
        }
    }

    let pixels: Vec<(usize, usize)> = keep
        .iter()
        .enumerate()
        .filter(|(_, &k)| k)
        .map(|(i, _)| {
            let r = pr + (i / side) as isize - reach;
            let c = pc + (i % side) as isize - reach;
            (r as usize, c as usize)
        })
        .collect();
    let touches_other = pixels.iter().any(|&(r, c)| {
        (-1..=1).any(|dr| {
            (-1..=1).any(|dc| {
                let (nr, nc) = (r as isize + dr, c as isize + dc);
                if nr < 0 || nc < 0 || nr >= h || nc >= w {
                    return false;
                }
                let o = owner[nr as usize * w as usize + nc as usize];
                o != 0 && o != tree
            })
        })
    });
    if touches_other {
        return false;
    }
    for (r, c) in pixels {
        owner[r * w as usize + c] = tree;
    }
    true
}

const NEIGHBORS_8: [(isize, isize); 8] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, -1),
    (0, 1),
    (1, -1),
    (1, 0),
    (1, 1),
];

/// Smoothed vessel rendering over a flat RoI background, plus Gaussian noise.
fn render(gt: &Mask, roi: &Mask, noise_sigma: f64, rng: &mut ChaCha8Rng) -> Result<Image> {
    const KERNEL: [[f32; 3]; 3] = [[1.0, 2.0, 1.0], [2.0, 4.0, 2.0], [1.0, 2.0, 1.0]];
    let (h, w) = gt.dims();
    let noise = Normal::new(0.0, noise_sigma).map_err(|e| Error::param(e.to_string()))?;
    let mut img = Image::zeros(h, w, CHANNEL_GAINS.len());
    for r in 0..h {
        for c in 0..w {
            if !roi.get(r, c) {
                continue;
            }
            let mut smooth = 0.0;
            for (i, row) in KERNEL.iter().enumerate() {
                for (j, k) in row.iter().enumerate() {
                    if gt.get_signed(r as isize + i as isize - 1, c as isize + j as isize - 1) {
                        smooth += k;
                    }
                }
            }
            let level = BACKGROUND_LEVEL + VESSEL_CONTRAST * smooth / 16.0;
            for (ch, gain) in CHANNEL_GAINS.iter().enumerate() {
                let n = if noise_sigma > 0.0 {
                    noise.sample(rng) as f32
                } else {
                    0.0
                };
                img.set(r, c, ch, gain * level + n);
            }
        }
    }
    Ok(img)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{label_components, Connectivity};

    fn small(seed: u64) -> SynthParams {
        SynthParams {
            height: 96,
            width: 96,
            rng_seed: seed,
            ..SynthParams::default()
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let a = generate_synthetic(&small(3)).unwrap();
        let b = generate_synthetic(&small(3)).unwrap();
        assert_eq!(a, b);
        let c = generate_synthetic(&small(4)).unwrap();
        assert_ne!(a.1, c.1);
    }

    #[test]
    fn single_unbranched_tree_is_one_component() {
        for seed in 0..20 {
            let params = SynthParams {
                branch_prob: 0.0,
                ..small(seed)
            };
            let (_, gt, _) = generate_synthetic(&params).unwrap();
            let labels = label_components(&gt, Connectivity::Eight);
            assert_eq!(labels.count(), 1, "seed {seed}");
        }
    }

    #[test]
    fn component_count_matches_tree_count() {
        for seed in 0..20 {
            let params = SynthParams {
                n_trees: 1 + (seed as usize % 4),
                branch_prob: 0.05,
                ..small(seed)
            };
            let (_, gt, _) = generate_synthetic(&params).unwrap();
            let labels = label_components(&gt, Connectivity::Eight);
            assert_eq!(labels.count(), params.n_trees, "seed {seed}");
        }
    }

    #[test]
    fn vessels_are_brighter_than_background_without_noise() {
        let params = SynthParams {
            width_range: (3.0, 3.0),
            noise_sigma: 0.0,
            ..small(11)
        };
        let (img, gt, _) = generate_synthetic(&params).unwrap();
        for ch in 0..img.channels() {
            let (mut sum, mut n) = (0.0f64, 0usize);
            for r in 0..gt.height() {
                for c in 0..gt.width() {
                    if !gt.get(r, c) {
                        sum += img.get(r, c, ch) as f64;
                        n += 1;
                    }
                }
            }
            let background_mean = sum / n as f64;
            for (r, c) in gt.ones_iter() {
                assert!(img.get(r, c, ch) as f64 > background_mean);
            }
        }
    }

    #[test]
    fn ground_truth_stays_inside_roi() {
        let (_, gt, roi) = generate_synthetic(&small(5)).unwrap();
        assert!(gt.is_subset_of(&roi));
        assert!(gt.count() > 0);
    }

    #[test]
    fn invalid_params_rejected() {
        let zero = SynthParams { height: 0, ..small(0) };
        assert!(matches!(generate_synthetic(&zero), Err(Error::Param(_))));
        let bad_prob = SynthParams { branch_prob: 1.5, ..small(0) };
        assert!(bad_prob.validate().is_err());
        let thin = SynthParams { width_range: (0.5, 2.0), ..small(0) };
        assert!(thin.validate().is_err());
        let noisy = SynthParams { noise_sigma: -1.0, ..small(0) };
        assert!(noisy.validate().is_err());
    }
}
