//! Dataset triples, on-disk layout and train/validation splitting.
//!
//! A dataset directory holds `images/`, `masks/` and `roi/`; files are paired
//! by their shared stem (`images/01.png`, `masks/01.pgm`, `roi/01.pgm`).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::imgdata::io::{load_image, load_mask, save_image, save_mask};
use crate::imgdata::{Image, Mask};

pub const IMAGES_DIR: &str = "images";
pub const MASKS_DIR: &str = "masks";
pub const ROI_DIR: &str = "roi";

/// One image with its ground truth and region of interest.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub id: String,
    pub image: Image,
    pub gt: Mask,
    pub roi: Mask,
}

impl Sample {
    pub fn new(id: impl Into<String>, image: Image, gt: Mask, roi: Mask) -> Result<Self> {
        let id = id.into();
        if image.dims() != gt.dims() || gt.dims() != roi.dims() {
            return Err(Error::shape(format!(
                "sample {id}: image {:?}, mask {:?}, roi {:?}",
                image.dims(),
                gt.dims(),
                roi.dims()
            )));
        }
        Ok(Sample { id, image, gt, roi })
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DatasetSplit {
    pub train: Vec<Sample>,
    pub validation: Vec<Sample>,
    pub excluded_ids: Vec<String>,
}

/// Drops the `exclude` ids, then moves `n_val` randomly chosen samples into
/// validation. Both sides keep the input order.
pub fn split_dataset(
    samples: Vec<Sample>,
    n_val: usize,
    exclude: &[String],
    rng_seed: u64,
) -> Result<DatasetSplit> {
    let (excluded, kept): (Vec<_>, Vec<_>) =
        samples.into_iter().partition(|s| exclude.contains(&s.id));
    if n_val > 0 && n_val >= kept.len() {
        return Err(Error::param(format!(
            "{n_val} validation images requested from {} usable images",
            kept.len()
        )));
    }
    let mut order: Vec<usize> = (0..kept.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(rng_seed));
    let mut is_val = vec![false; kept.len()];
    for &i in &order[..n_val] {
        is_val[i] = true;
    }
    let mut split = DatasetSplit {
        excluded_ids: excluded.into_iter().map(|s| s.id).collect(),
        ..DatasetSplit::default()
    };
    for (sample, val) in kept.into_iter().zip(is_val) {
        if val {
            split.validation.push(sample);
        } else {
            split.train.push(sample);
        }
    }
    Ok(split)
}

/// Lists `stem -> path` for the files of one layout subdirectory.
pub fn stems(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if !path.is_file() {
            continue;
        }
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            if let Some(previous) = out.insert(stem.to_string(), path.clone()) {
                return Err(Error::Data(format!(
                    "duplicate stem {stem}: {} and {}",
                    previous.display(),
                    path.display()
                )));
            }
        }
    }
    Ok(out)
}

/// Loads every triple of a dataset directory, sorted by stem.
pub fn load_dataset(dir: impl AsRef<Path>) -> Result<Vec<Sample>> {
    let dir = dir.as_ref();
    let images = stems(&dir.join(IMAGES_DIR))?;
    let masks = stems(&dir.join(MASKS_DIR))?;
    let rois = stems(&dir.join(ROI_DIR))?;
    for stem in masks.keys().chain(rois.keys()) {
        if !images.contains_key(stem) {
            return Err(Error::Data(format!("no image for stem {stem}")));
        }
    }
    images
        .iter()
        .map(|(stem, image_path)| {
            let lookup = |m: &BTreeMap<String, PathBuf>, what: &str| {
                m.get(stem)
                    .cloned()
                    .ok_or_else(|| Error::Data(format!("no {what} for stem {stem}")))
            };
            let gt = load_mask(lookup(&masks, "mask")?)?;
            let roi = load_mask(lookup(&rois, "roi")?)?;
            Sample::new(stem.clone(), load_image(image_path)?, gt, roi)
        })
        .collect()
}

/// Writes one triple as `images/<id>.png`, `masks/<id>.pgm`, `roi/<id>.pgm`.
pub fn save_sample(dir: impl AsRef<Path>, sample: &Sample) -> Result<()> {
    let dir = dir.as_ref();
    for sub in [IMAGES_DIR, MASKS_DIR, ROI_DIR] {
        fs::create_dir_all(dir.join(sub))?;
    }
    save_image(
        &sample.image,
        dir.join(IMAGES_DIR).join(format!("{}.png", sample.id)),
    )?;
    save_mask(&sample.gt, dir.join(MASKS_DIR).join(format!("{}.pgm", sample.id)))?;
    save_mask(&sample.roi, dir.join(ROI_DIR).join(format!("{}.pgm", sample.id)))?;
    Ok(())
}
