//! Shared fixtures for the engine benchmarks.

use regrow_core::imgdata::generate_synthetic;
use regrow_core::{Image, Mask, ProbMap, SynthParams};

/// A synthetic vessel image with its truth, RoI and a probability map that
/// puts 0.9 on the truth and 0.1 elsewhere, so votes are not all 0 or 1.
pub struct Fixture {
    pub image: Image,
    pub gt: Mask,
    pub roi: Mask,
    pub map: ProbMap,
}

pub fn fixture(height: usize, width: usize, seed: u64) -> Fixture {
    let params = SynthParams {
        height,
        width,
        n_trees: 3,
        rng_seed: seed,
        ..SynthParams::default()
    };
    let (image, gt, roi) = generate_synthetic(&params).expect("valid synthetic parameters");
    let mut map = ProbMap::constant(height, width, 0.1);
    for (r, c) in gt.ones_iter() {
        map.set(r, c, 0.9);
    }
    Fixture { image, gt, roi, map }
}
