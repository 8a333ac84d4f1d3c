//! Rasters, file formats, tiling and datasets.

mod dataset;
pub mod io;
mod raster;
mod synth;
mod tile;

pub use dataset::{
    load_dataset, save_sample, split_dataset, stems, DatasetSplit, Sample, IMAGES_DIR, MASKS_DIR,
    ROI_DIR,
};
pub use io::{load_image, load_mask, load_pmap, save_image, save_mask, save_pmap};
pub use raster::{Image, Mask, Pixel, ProbMap};
pub use synth::{elliptical_roi, generate_synthetic, SynthParams};
pub use tile::extract_tile;
