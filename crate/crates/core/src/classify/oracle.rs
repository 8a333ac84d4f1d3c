use crate::classify::{BoundClassifier, Classifier, ClassifierConfig};
use crate::error::{Error, Result};
use crate::imgdata::{Image, Mask, Pixel, ProbMap};

/// Reports the ground truth itself: 1.0 on foreground, 0.0 elsewhere and off-image.
#[derive(Clone, Debug)]
pub struct OracleClassifier {
    gt: Mask,
    config: ClassifierConfig,
}

impl OracleClassifier {
    pub fn new(gt: Mask, config: ClassifierConfig) -> Result<Self> {
        config.validate()?;
        Ok(OracleClassifier { gt, config })
    }

    pub fn ground_truth(&self) -> &Mask {
        &self.gt
    }
}

impl Classifier for OracleClassifier {
    fn config(&self) -> &ClassifierConfig {
        &self.config
    }

    fn bind<'a>(&'a self, img: &'a Image) -> Result<Box<dyn BoundClassifier + 'a>> {
        if img.dims() != self.gt.dims() {
            return Err(Error::shape(format!(
                "oracle ground truth is {:?}, image is {:?}",
                self.gt.dims(),
                img.dims()
            )));
        }
        Ok(Box::new(BoundLookup {
            dims: img.dims(),
            out_size: self.config.out_size,
            value: |r, c| self.gt.get(r, c) as u8 as f64,
        }))
    }
}

/// Looks up an externally produced dense probability map.
#[derive(Clone, Debug)]
pub struct ProbMapClassifier {
    map: ProbMap,
    config: ClassifierConfig,
}

impl ProbMapClassifier {
    pub fn new(map: ProbMap, config: ClassifierConfig) -> Result<Self> {
        config.validate()?;
        map.check_probabilities()?;
        Ok(ProbMapClassifier { map, config })
    }

    pub fn map(&self) -> &ProbMap {
        &self.map
    }
}

impl Classifier for ProbMapClassifier {
    fn config(&self) -> &ClassifierConfig {
        &self.config
    }

    fn bind<'a>(&'a self, img: &'a Image) -> Result<Box<dyn BoundClassifier + 'a>> {
        if img.dims() != self.map.dims() {
            return Err(Error::shape(format!(
                "probability map is {:?}, image is {:?}",
                self.map.dims(),
                img.dims()
            )));
        }
        Ok(Box::new(BoundLookup {
            dims: img.dims(),
            out_size: self.config.out_size,
            value: |r, c| self.map.get(r, c) as f64,
        }))
    }
}

struct BoundLookup<F> {
    dims: (usize, usize),
    out_size: usize,
    value: F,
}

impl<F: Fn(usize, usize) -> f64 + Sync> BoundClassifier for BoundLookup<F> {
    fn out_size(&self) -> usize {
        self.out_size
    }

    fn dims(&self) -> (usize, usize) {
        self.dims
    }

    fn predict_into(&self, (row, col): Pixel, out: &mut [f64]) -> Result<()> {
        let half = (self.out_size / 2) as isize;
        let (h, w) = (self.dims.0 as isize, self.dims.1 as isize);
        for (k, slot) in out.iter_mut().enumerate() {
            let r = row as isize - half + (k / self.out_size) as isize;
            let c = col as isize - half + (k % self.out_size) as isize;
            *slot = if r >= 0 && c >= 0 && r < h && c < w {
                (self.value)(r as usize, c as usize)
            } else {
                0.0
            };
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::classify_batch;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg() -> ClassifierConfig {
        ClassifierConfig::default()
    }

    #[test]
    fn saturated_masks() {
        let img = Image::zeros(6, 7, 3);
        for (gt, expected) in [(Mask::ones(6, 7), 1.0), (Mask::zeros(6, 7), 0.0)] {
            let oracle = OracleClassifier::new(gt, cfg()).unwrap();
            let preds = classify_batch(&oracle, &img, &[(3, 3), (2, 4)]).unwrap();
            for p in preds {
                assert!(p.probs.iter().all(|&v| v == expected));
            }
        }
    }

    #[test]
    fn checkerboard_is_reproduced() {
        let gt = Mask::from_fn(9, 9, |r, c| (r + c) % 2 == 0);
        let oracle = OracleClassifier::new(gt.clone(), cfg()).unwrap();
        let img = Image::zeros(9, 9, 1);
        for center in [(4, 4), (3, 6), (1, 1)] {
            let p = classify_batch(&oracle, &img, &[center]).unwrap().remove(0);
            for i in 0..3 {
                for j in 0..3 {
                    let (r, c) = (center.0 + i - 1, center.1 + j - 1);
                    assert_eq!(p.get(i, j), gt.get(r, c) as u8 as f64);
                }
            }
        }
    }

    #[test]
    fn oracle_matches_lookup_on_random_masks() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10 {
            let (h, w) = (rng.random_range(1..40), rng.random_range(1..40));
            let gt = Mask::from_fn(h, w, |_, _| rng.random_bool(0.4));
            let oracle = OracleClassifier::new(gt.clone(), cfg()).unwrap();
            let img = Image::zeros(h, w, 1);
            let centers: Vec<_> = (0..100)
                .map(|_| (rng.random_range(0..h), rng.random_range(0..w)))
                .collect();
            for p in classify_batch(&oracle, &img, &centers).unwrap() {
                for k in 0..9 {
                    let r = p.center.0 as isize + (k / 3) as isize - 1;
                    let c = p.center.1 as isize + (k % 3) as isize - 1;
                    assert_eq!(p.probs[k], gt.get_signed(r, c) as u8 as f64);
                }
            }
        }
    }

    #[test]
    fn constant_map_and_corner_padding() {
        let map = ProbMapClassifier::new(ProbMap::constant(5, 5, 0.7), cfg()).unwrap();
        let img = Image::zeros(5, 5, 3);
        let p = classify_batch(&map, &img, &[(2, 2)]).unwrap().remove(0);
        assert!(p.probs.iter().all(|&v| v == 0.7f32 as f64));

        let corner = classify_batch(&map, &img, &[(0, 0)]).unwrap().remove(0);
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == 0 || j == 0 { 0.0 } else { 0.7f32 as f64 };
                assert_eq!(corner.get(i, j), expected, "({i},{j})");
            }
        }
    }

    #[test]
    fn binary_map_behaves_like_oracle() {
        let gt = Mask::from_fn(12, 10, |r, c| (r * 3 + c * 5) % 7 < 3);
        let img = Image::zeros(12, 10, 1);
        let oracle = OracleClassifier::new(gt.clone(), cfg()).unwrap();
        let map = ProbMapClassifier::new(ProbMap::from_mask(&gt), cfg()).unwrap();
        let centers: Vec<_> = (0..12).flat_map(|r| (0..10).map(move |c| (r, c))).collect();
        assert_eq!(
            classify_batch(&oracle, &img, &centers).unwrap(),
            classify_batch(&map, &img, &centers).unwrap()
        );
    }

    #[test]
    fn errors() {
        let map = ProbMapClassifier::new(ProbMap::constant(5, 5, 0.2), cfg()).unwrap();
        assert!(matches!(
            classify_batch(&map, &Image::zeros(4, 5, 1), &[]),
            Err(Error::Shape(_))
        ));
        assert!(matches!(
            classify_batch(&map, &Image::zeros(5, 5, 1), &[(0, 5)]),
            Err(Error::Bounds { .. })
        ));
        assert!(ProbMapClassifier::new(ProbMap::constant(2, 2, 1.5), cfg()).is_err());
        assert!(classify_batch(&map, &Image::zeros(5, 5, 1), &[]).unwrap().is_empty());
    }
}
