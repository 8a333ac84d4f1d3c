use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::augment::Augmentation;
use super::loss::{loss_and_gradient, Example};
use super::{TrainPool, TrainSample};
use crate::classify::{feature_extract, ClassifierModel, ImageFeatures};
use crate::error::{Error, Result};
use crate::imgdata::{extract_tile, DatasetSplit};

/// Mixed into the seed of the validation draw so it never shares a stream
/// with the training draws.
const VALIDATION_STREAM: u64 = 0x7661_6c69_6461_7465;
const SCALER_STREAM: u64 = 0x7363_616c_6572;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Loss multiplier on contour pixels and their adjacent background.
    pub boundary_weight: f64,
    /// Training tiles per neighborhood count, redrawn every epoch.
    pub samples_per_count: usize,
    /// Validation tiles per neighborhood count, drawn once.
    pub val_samples_per_count: usize,
    /// Run one class-balanced epoch before the balanced epochs.
    pub pretrain: bool,
    pub pretrain_samples: usize,
    /// Random quarter turns and brightness/contrast on training tiles.
    pub augment: bool,
    pub rng_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 50,
            batch_size: 64,
            learning_rate: 0.5,
            boundary_weight: 5.0,
            samples_per_count: 200,
            val_samples_per_count: 50,
            pretrain: true,
            pretrain_samples: 2000,
            augment: true,
            rng_seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::param("epochs must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::param("batch_size must be at least 1"));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::param(format!(
                "learning_rate must be a finite non-negative number, got {}",
                self.learning_rate
            )));
        }
        if !(self.boundary_weight >= 1.0 && self.boundary_weight.is_finite()) {
            return Err(Error::param(format!(
                "boundary_weight must be at least 1, got {}",
                self.boundary_weight
            )));
        }
        if self.samples_per_count == 0 {
            return Err(Error::param("samples_per_count must be at least 1"));
        }
        if self.pretrain && self.pretrain_samples == 0 {
            return Err(Error::param("pretrain_samples must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochLoss {
    /// 0 is the pre-training epoch; balanced epochs count from 1.
    pub epoch: usize,
    pub train_loss: f64,
    /// `NaN` without a validation set.
    pub val_loss: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainHistory {
    /// Validation loss of the starting model.
    pub initial_val_loss: Option<f64>,
    pub epochs: Vec<EpochLoss>,
}

impl TrainHistory {
    pub const CSV_HEADER: &'static str = "epoch,train_loss,val_loss";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for e in &self.epochs {
            out.push_str(&format!("{},{},{}\n", e.epoch, e.train_loss, e.val_loss));
        }
        out
    }
}

/// Mini-batch gradient descent on the boundary-weighted cross-entropy.
///
/// Training tiles are redrawn each epoch; the validation tiles are drawn once
/// and never augmented. Only two-class models can be fitted.
pub fn fit(
    model: &ClassifierModel,
    split: &DatasetSplit,
    config: &TrainConfig,
) -> Result<(ClassifierModel, TrainHistory)> {
    config.validate()?;
    model.validate()?;
    if model.config.n_classes != 2 {
        return Err(Error::param("only two-class models can be trained"));
    }
    if split.train.is_empty() {
        return Err(Error::Data("training split is empty".into()));
    }
    let out_size = model.config.out_size;
    let spec = model.features;
    let dim = spec.dim();

    let train_pool = TrainPool::new(&split.train, config.boundary_weight, out_size)?;
    let train_features = split
        .train
        .iter()
        .map(|s| ImageFeatures::new(&s.image, spec))
        .collect::<Result<Vec<_>>>()?;

    let validation = if split.validation.is_empty() {
        Vec::new()
    } else {
        let pool = TrainPool::new(&split.validation, config.boundary_weight, out_size)?;
        let features = split
            .validation
            .iter()
            .map(|s| ImageFeatures::new(&s.image, spec))
            .collect::<Result<Vec<_>>>()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed ^ VALIDATION_STREAM);
        let picks = pool.balanced_sample(config.val_samples_per_count.max(1), &mut rng)?;
        build_examples(&pool, &features, &picks, None, dim)?
    };

    // SGD runs on standardized features; for a linear model that is an exact
    // reparametrization, folded back into raw-feature weights at the end.
    let scaler = {
        let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed ^ SCALER_STREAM);
        let picks = train_pool.balanced_sample(config.samples_per_count, &mut rng)?;
        Scaler::fit(&build_examples(&train_pool, &train_features, &picks, None, dim)?, dim)
    };
    let validation = scaler.apply(validation);
    let mut params = scaler.to_standard(&model.weights);
    let mut grad = vec![0.0; params.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut history = TrainHistory {
        initial_val_loss: mean_loss(&params, dim, &validation),
        epochs: Vec::new(),
    };

    let first = if config.pretrain { 0 } else { 1 };
    for epoch in first..=config.epochs {
        let mut picks = if epoch == 0 {
            train_pool.pretrain_sample(config.pretrain_samples, &mut rng)?
        } else {
            train_pool.balanced_sample(config.samples_per_count, &mut rng)?
        };
        picks.shuffle(&mut rng);
        let augs: Option<Vec<Augmentation>> = config
            .augment
            .then(|| picks.iter().map(|_| Augmentation::random(&mut rng)).collect());
        let examples =
            scaler.apply(build_examples(&train_pool, &train_features, &picks, augs.as_deref(), dim)?);

        let mut total = 0.0;
        for batch in examples.chunks(config.batch_size) {
            let loss = loss_and_gradient(&params, dim, batch, &mut grad);
            if !loss.is_finite() {
                return Err(Error::Training(format!("non-finite loss in epoch {epoch}")));
            }
            total += loss * batch.len() as f64;
            for (p, g) in params.iter_mut().zip(&grad) {
                *p -= config.learning_rate * g;
            }
            // Weights are stored as f32, so anything beyond its range has diverged.
            if params.iter().any(|p| !(p.abs() <= f32::MAX as f64)) {
                return Err(Error::Training(format!("weights diverged in epoch {epoch}")));
            }
        }
        let val_loss = mean_loss(&params, dim, &validation).unwrap_or(f64::NAN);
        if val_loss.is_infinite() {
            return Err(Error::Training(format!("infinite validation loss in epoch {epoch}")));
        }
        history.epochs.push(EpochLoss {
            epoch,
            train_loss: total / examples.len().max(1) as f64,
            val_loss,
        });
    }

    let mut fitted = model.clone();
    fitted.weights = scaler.to_raw(&params);
    Ok((fitted, history))
}

/// Per-feature mean and standard deviation.
struct Scaler {
    mean: Vec<f64>,
    std: Vec<f64>,
}

impl Scaler {
    fn fit(examples: &[Example], dim: usize) -> Self {
        let n = examples.len().max(1) as f64;
        let mut mean = vec![0.0; dim];
        for ex in examples {
            for (m, x) in mean.iter_mut().zip(&ex.features) {
                *m += x / n;
            }
        }
        let mut var = vec![0.0; dim];
        for ex in examples {
            for ((v, x), m) in var.iter_mut().zip(&ex.features).zip(&mean) {
                *v += (x - m) * (x - m) / n;
            }
        }
        // Constant features are centred but not scaled.
        let std = var.iter().map(|v| if *v > 1e-12 { v.sqrt() } else { 1.0 }).collect();
        Scaler { mean, std }
    }

    fn apply(&self, mut examples: Vec<Example>) -> Vec<Example> {
        for ex in &mut examples {
            for ((x, m), s) in ex.features.iter_mut().zip(&self.mean).zip(&self.std) {
                *x = (*x - m) / s;
            }
        }
        examples
    }

    /// Raw weights `w, b` to standardized `w * s, b + w · m`, per block.
    fn to_standard(&self, weights: &[f32]) -> Vec<f64> {
        let dim = self.mean.len();
        let mut out: Vec<f64> = weights.iter().map(|&w| w as f64).collect();
        for block in out.chunks_mut(dim + 1) {
            let shift: f64 = block[..dim].iter().zip(&self.mean).map(|(w, m)| w * m).sum();
            for (w, s) in block[..dim].iter_mut().zip(&self.std) {
                *w *= s;
            }
            block[dim] += shift;
        }
        out
    }

    fn to_raw(&self, params: &[f64]) -> Vec<f32> {
        let dim = self.mean.len();
        let mut out = Vec::with_capacity(params.len());
        for block in params.chunks(dim + 1) {
            let raw: Vec<f64> = block[..dim].iter().zip(&self.std).map(|(v, s)| v / s).collect();
            let shift: f64 = raw.iter().zip(&self.mean).map(|(w, m)| w * m).sum();
            out.extend(raw.iter().map(|&w| w as f32));
            out.push((block[dim] - shift) as f32);
        }
        out
    }
}

fn mean_loss(params: &[f64], dim: usize, examples: &[Example]) -> Option<f64> {
    if examples.is_empty() {
        return None;
    }
    let mut scratch = vec![0.0; params.len()];
    Some(loss_and_gradient(params, dim, examples, &mut scratch))
}

/// Features plus target grids for each pick. Augmented tiles are cut out and
/// featurised directly; plain ones come from the summed-area tables.
fn build_examples(
    pool: &TrainPool<'_>,
    features: &[ImageFeatures<'_>],
    picks: &[TrainSample],
    augs: Option<&[Augmentation]>,
    dim: usize,
) -> Result<Vec<Example>> {
    picks
        .par_iter()
        .enumerate()
        .map(|(i, pick)| {
            let spec = features[pick.image].spec();
            match augs {
                Some(augs) => {
                    let aug = augs[i];
                    let img = &pool.samples()[pick.image].image;
                    let tile = aug.apply_tile(&extract_tile(img, pick.center, spec.tile_size)?);
                    Ok(Example {
                        features: feature_extract(&tile, spec)?,
                        label: aug.apply_grid(&pick.label),
                        weight: aug.apply_grid(&pick.weight),
                    })
                }
                None => {
                    let mut x = Vec::with_capacity(dim);
                    features[pick.image].features_at(pick.center, &mut x);
                    Ok(Example {
                        features: x,
                        label: pick.label.clone(),
                        weight: pick.weight.clone(),
                    })
                }
            }
        })
        .collect()
}
