//! The trainable reference classifier: one linear-logistic model per output
//! position over [`FeatureSpec`] features.
//!
//! Weights are laid out position-major: for each of the `out_size²` output
//! positions and each non-reference class `1..C`, `dim` feature weights
//! followed by a bias. Class 0 (background) is the reference with logit 0, so
//! for two classes the foreground probability is `logistic(w·x + b)`.
//!
//! File format (`RGMODELv1`), all integers and floats little-endian:
//!
//! ```text
//! magic      9 bytes  "RGMODELv1"
//! version    u32
//! config     u32 count (= 3), then tile_size, out_size, n_classes as u32
//! features   u32 count (= 4), then tile_size, channels, pool_grid, center_window as u32
//! weights    u32 count, then that many f32
//! ```

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::classify::features::{feature_extract, FeatureSpec, ImageFeatures};
use crate::classify::{logistic, BoundClassifier, Classifier, ClassifierConfig};
use crate::error::{Error, Result};
use crate::imgdata::{Image, Pixel};

pub const MODEL_MAGIC: &[u8; 9] = b"RGMODELv1";
pub const MODEL_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct ClassifierModel {
    pub config: ClassifierConfig,
    pub features: FeatureSpec,
    pub weights: Vec<f32>,
    pub version: u32,
}

impl ClassifierModel {
    /// All-zero model; predicts 0.5 everywhere for two classes.
    pub fn zeros(config: ClassifierConfig, features: FeatureSpec) -> Result<Self> {
        let len = expected_len(&config, &features)?;
        Ok(ClassifierModel {
            config,
            features,
            weights: vec![0.0; len],
            version: MODEL_VERSION,
        })
    }

    /// Weights per (position, class) block: feature weights plus bias.
    pub fn block_len(&self) -> usize {
        self.features.dim() + 1
    }

    pub fn validate(&self) -> Result<()> {
        let expected = expected_len(&self.config, &self.features)?;
        if self.weights.len() != expected {
            return Err(Error::Invariant(format!(
                "model has {} weights, configuration requires {expected}",
                self.weights.len()
            )));
        }
        Ok(())
    }

    /// Foreground probabilities for one feature vector, one per output position.
    pub fn predict_features(&self, features: &[f64], out: &mut [f64]) {
        let block = self.block_len();
        let classes = self.config.n_classes - 1;
        let dim = block - 1;
        for (pos, slot) in out.iter_mut().enumerate() {
            let logit = |class: usize| {
                let w = &self.weights[(pos * classes + class) * block..][..block];
                w[..dim]
                    .iter()
                    .zip(features)
                    .map(|(&wi, &xi)| wi as f64 * xi)
                    .sum::<f64>()
                    + w[dim] as f64
            };
            *slot = if classes == 1 {
                logistic(logit(0))
            } else {
                // Softmax with the background logit fixed at 0.
                let logits: Vec<f64> = (0..classes).map(logit).collect();
                let max = logits.iter().cloned().fold(0.0, f64::max);
                let denom = (-max).exp() + logits.iter().map(|z| (z - max).exp()).sum::<f64>();
                (logits[0] - max).exp() / denom
            };
        }
    }
}

fn expected_len(config: &ClassifierConfig, features: &FeatureSpec) -> Result<usize> {
    config.validate()?;
    features.validate()?;
    if features.tile_size != config.tile_size {
        return Err(Error::param(format!(
            "feature tile size {} differs from classifier tile size {}",
            features.tile_size, config.tile_size
        )));
    }
    Ok(config.out_len() * (config.n_classes - 1) * (features.dim() + 1))
}

/// Predicts the neighborhood probabilities for one tile.
pub fn predict_model(model: &ClassifierModel, tile: &Image) -> Result<Vec<f64>> {
    model.validate()?;
    let features = feature_extract(tile, &model.features)?;
    let mut out = vec![0.0; model.config.out_len()];
    model.predict_features(&features, &mut out);
    Ok(out)
}

/// [`ClassifierModel`] behind the [`Classifier`] contract.
#[derive(Clone, Debug)]
pub struct ModelClassifier {
    model: ClassifierModel,
}

impl ModelClassifier {
    pub fn new(model: ClassifierModel) -> Result<Self> {
        model.validate()?;
        Ok(ModelClassifier { model })
    }

    pub fn model(&self) -> &ClassifierModel {
        &self.model
    }
}

impl Classifier for ModelClassifier {
    fn config(&self) -> &ClassifierConfig {
        &self.model.config
    }

    fn bind<'a>(&'a self, img: &'a Image) -> Result<Box<dyn BoundClassifier + 'a>> {
        Ok(Box::new(BoundModel {
            model: &self.model,
            features: ImageFeatures::new(img, self.model.features)?,
        }))
    }
}

struct BoundModel<'a> {
    model: &'a ClassifierModel,
    features: ImageFeatures<'a>,
}

impl BoundClassifier for BoundModel<'_> {
    fn out_size(&self) -> usize {
        self.model.config.out_size
    }

    fn dims(&self) -> (usize, usize) {
        self.features.image().dims()
    }

    fn predict_into(&self, center: Pixel, out: &mut [f64]) -> Result<()> {
        let mut x = Vec::with_capacity(self.model.features.dim());
        self.features.features_at(center, &mut x);
        self.model.predict_features(&x, out);
        Ok(())
    }
}

pub fn save_model(model: &ClassifierModel, path: impl AsRef<Path>) -> Result<()> {
    if model.weights.is_empty() {
        return Err(Error::Invariant("refusing to save a model without weights".into()));
    }
    model.validate()?;
    let mut out = BufWriter::new(fs::File::create(path.as_ref())?);
    out.write_all(&encode_model(model))?;
    out.flush()?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ClassifierModel> {
    let mut file = fs::File::open(path.as_ref())?;
    decode_model(&mut file)
}

fn encode_model(model: &ClassifierModel) -> Vec<u8> {
    let mut bytes = MODEL_MAGIC.to_vec();
    let mut put = |v: u32| bytes.extend_from_slice(&v.to_le_bytes());
    put(model.version);
    put(3);
    put(model.config.tile_size as u32);
    put(model.config.out_size as u32);
    put(model.config.n_classes as u32);
    put(4);
    put(model.features.tile_size as u32);
    put(model.features.channels as u32);
    put(model.features.pool_grid as u32);
    put(model.features.center_window as u32);
    put(model.weights.len() as u32);
    for w in &model.weights {
        bytes.extend_from_slice(&w.to_le_bytes());
    }
    bytes
}

fn decode_model(reader: &mut impl Read) -> Result<ClassifierModel> {
    let mut magic = [0u8; 9];
    reader.read_exact(&mut magic)?;
    if &magic != MODEL_MAGIC {
        return Err(Error::format("not an RGMODELv1 model file"));
    }
    let mut word = || -> Result<u32> {
        let mut b = [0u8; 4];
        reader.read_exact(&mut b)?;
        Ok(u32::from_le_bytes(b))
    };
    let version = word()?;
    if version != MODEL_VERSION {
        return Err(Error::format(format!(
            "model version {version}, expected {MODEL_VERSION}"
        )));
    }
    if word()? != 3 {
        return Err(Error::format("unexpected classifier config length"));
    }
    let config = ClassifierConfig {
        tile_size: word()? as usize,
        out_size: word()? as usize,
        n_classes: word()? as usize,
    };
    if word()? != 4 {
        return Err(Error::format("unexpected feature spec length"));
    }
    let features = FeatureSpec {
        tile_size: word()? as usize,
        channels: word()? as usize,
        pool_grid: word()? as usize,
        center_window: word()? as usize,
    };
    let n = word()? as usize;
    let expected = expected_len(&config, &features).map_err(|e| Error::format(e.to_string()))?;
    if n != expected {
        return Err(Error::format(format!(
            "model stores {n} weights, configuration requires {expected}"
        )));
    }
    let mut raw = vec![0u8; 4 * n];
    reader.read_exact(&mut raw)?;
    let weights = raw
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok(ClassifierModel {
        config,
        features,
        weights,
        version,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::classify_batch;
    use crate::imgdata::extract_tile;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small_model(seed: u64) -> ClassifierModel {
        let config = ClassifierConfig {
            tile_size: 8,
            out_size: 3,
            n_classes: 2,
        };
        let features = FeatureSpec {
            tile_size: 8,
            channels: 3,
            pool_grid: 2,
            center_window: 3,
        };
        let mut model = ClassifierModel::zeros(config, features).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for w in &mut model.weights {
            *w = rng.random_range(-1.0..1.0);
        }
        model
    }

    fn random_image(h: usize, w: usize, seed: u64) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Image::new(h, w, 3, (0..h * w * 3).map(|_| rng.random::<f32>()).collect()).unwrap()
    }

    #[test]
    fn zero_model_predicts_one_half() {
        let model = ClassifierModel::zeros(ClassifierConfig::default(), FeatureSpec::default()).unwrap();
        let probs = predict_model(&model, &random_image(80, 80, 1)).unwrap();
        assert_eq!(probs, vec![0.5; 9]);
    }

    #[test]
    fn large_bias_saturates() {
        let mut model = ClassifierModel::zeros(ClassifierConfig::default(), FeatureSpec::default()).unwrap();
        let block = model.block_len();
        for pos in 0..9 {
            model.weights[pos * block + block - 1] = 50.0;
        }
        let probs = predict_model(&model, &random_image(80, 80, 2)).unwrap();
        assert!(probs.iter().all(|&p| (1.0 - p).abs() < 1e-9));
    }

    #[test]
    fn identical_tiles_identical_probs() {
        let model = small_model(3);
        let tile = random_image(8, 8, 4);
        assert_eq!(
            predict_model(&model, &tile).unwrap(),
            predict_model(&model, &tile.clone()).unwrap()
        );
        assert!(matches!(
            predict_model(&model, &random_image(6, 6, 4)),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn multiclass_reduces_to_logistic_when_extra_logits_vanish() {
        let mut model = small_model(5);
        let two_class = predict_model(&model, &random_image(8, 8, 6)).unwrap();
        model.config.n_classes = 3;
        let block = model.block_len();
        let mut weights = Vec::new();
        for pos in 0..9 {
            weights.extend_from_slice(&model.weights[pos * block..(pos + 1) * block]);
            weights.extend(std::iter::repeat_n(-1e4f32, block - 1));
            weights.push(-1e4);
        }
        model.weights = weights;
        // Features are non-negative, so the extra class logit stays below -1e4.
        let three_class = predict_model(&model, &random_image(8, 8, 6)).unwrap();
        for (a, b) in two_class.iter().zip(&three_class) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn bound_model_agrees_with_tile_prediction() {
        let model = small_model(7);
        let img = random_image(20, 17, 8);
        let classifier = ModelClassifier::new(model.clone()).unwrap();
        let centers = [(0, 0), (19, 16), (10, 3), (5, 12)];
        for pred in classify_batch(&classifier, &img, &centers).unwrap() {
            let tile = extract_tile(&img, pred.center, 8).unwrap();
            let direct = predict_model(&model, &tile).unwrap();
            for (a, b) in pred.probs.iter().zip(&direct) {
                assert!((a - b).abs() < 1e-9);
                assert!((0.0..=1.0).contains(a));
            }
        }
    }

    #[test]
    fn channel_mismatch_is_shape_error() {
        let classifier = ModelClassifier::new(small_model(1)).unwrap();
        let gray = Image::zeros(10, 10, 1);
        assert!(matches!(classifier.bind(&gray), Err(Error::Shape(_))));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.bin");
        let model = small_model(9);
        save_model(&model, &path).unwrap();
        assert_eq!(load_model(&path).unwrap(), model);
    }

    #[test]
    fn file_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.bin");
        let model = small_model(10);
        let bytes = encode_model(&model);

        fs::write(&path, b"NOTAMODEL....").unwrap();
        assert!(matches!(load_model(&path), Err(Error::Format(_))));

        let mut wrong_version = bytes.clone();
        wrong_version[9..13].copy_from_slice(&2u32.to_le_bytes());
        fs::write(&path, &wrong_version).unwrap();
        assert!(matches!(load_model(&path), Err(Error::Format(_))));

        fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(load_model(&path), Err(Error::Io(_))));

        let mut empty = model.clone();
        empty.weights.clear();
        assert!(matches!(save_model(&empty, &path), Err(Error::Invariant(_))));
    }
}
